#include "defectcast/forecast/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace defectcast::forecast {

namespace {

double evaluate(const Objective &f, const std::vector<double> &x) {
	const double v = f(x);
	return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

} // namespace

OptimResult nelder_mead(const Objective &objective, std::vector<double> start, const NelderMeadOptions &options) {
	const std::size_t n = start.size();
	OptimResult result;
	if (n == 0) {
		result.x = start;
		result.value = evaluate(objective, start);
		result.converged = true;
		return result;
	}

	constexpr double alpha = 1.0; // reflection
	constexpr double gamma = 2.0; // expansion
	constexpr double rho = 0.5;   // contraction
	constexpr double sigma = 0.5; // shrink

	std::vector<std::vector<double>> simplex(n + 1, start);
	for (std::size_t i = 0; i < n; ++i) {
		const double step = start[i] != 0.0 ? options.initial_step * std::max(1.0, std::abs(start[i])) : options.initial_step;
		simplex[i + 1][i] += step;
	}
	std::vector<double> values(n + 1);
	for (std::size_t i = 0; i <= n; ++i) {
		values[i] = evaluate(objective, simplex[i]);
	}

	std::vector<std::size_t> order(n + 1);
	std::vector<double> centroid(n), trial(n), trial2(n);
	int iter = 0;
	for (; iter < options.max_iterations; ++iter) {
		std::iota(order.begin(), order.end(), 0);
		std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
		const std::size_t best = order.front();
		const std::size_t worst = order.back();
		const std::size_t second_worst = order[n - 1];

		double spread = 0.0;
		for (std::size_t i = 0; i <= n; ++i) {
			for (std::size_t j = 0; j < n; ++j) {
				spread = std::max(spread, std::abs(simplex[i][j] - simplex[best][j]));
			}
		}
		const bool f_flat = std::isfinite(values[worst]) &&
		                    std::abs(values[worst] - values[best]) <= options.f_tolerance * (1.0 + std::abs(values[best]));
		if (spread <= options.x_tolerance || (f_flat && spread <= 1e3 * options.x_tolerance)) {
			result.converged = true;
			break;
		}

		std::fill(centroid.begin(), centroid.end(), 0.0);
		for (std::size_t k = 0; k < n; ++k) {
			const auto &v = simplex[order[k]];
			for (std::size_t j = 0; j < n; ++j) {
				centroid[j] += v[j];
			}
		}
		for (auto &c : centroid) {
			c /= static_cast<double>(n);
		}

		for (std::size_t j = 0; j < n; ++j) {
			trial[j] = centroid[j] + alpha * (centroid[j] - simplex[worst][j]);
		}
		const double f_reflect = evaluate(objective, trial);
		if (f_reflect < values[best]) {
			for (std::size_t j = 0; j < n; ++j) {
				trial2[j] = centroid[j] + gamma * (trial[j] - centroid[j]);
			}
			const double f_expand = evaluate(objective, trial2);
			if (f_expand < f_reflect) {
				simplex[worst] = trial2;
				values[worst] = f_expand;
			} else {
				simplex[worst] = trial;
				values[worst] = f_reflect;
			}
			continue;
		}
		if (f_reflect < values[second_worst]) {
			simplex[worst] = trial;
			values[worst] = f_reflect;
			continue;
		}
		const bool outside = f_reflect < values[worst];
		for (std::size_t j = 0; j < n; ++j) {
			trial2[j] = outside ? centroid[j] + rho * (trial[j] - centroid[j])
			                    : centroid[j] + rho * (simplex[worst][j] - centroid[j]);
		}
		const double f_contract = evaluate(objective, trial2);
		if (f_contract < (outside ? f_reflect : values[worst])) {
			simplex[worst] = trial2;
			values[worst] = f_contract;
			continue;
		}
		for (std::size_t i = 0; i <= n; ++i) {
			if (i == best) {
				continue;
			}
			for (std::size_t j = 0; j < n; ++j) {
				simplex[i][j] = simplex[best][j] + sigma * (simplex[i][j] - simplex[best][j]);
			}
			values[i] = evaluate(objective, simplex[i]);
		}
	}

	const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
	result.x = simplex[best];
	result.value = values[best];
	result.iterations = iter;
	return result;
}

} // namespace defectcast::forecast
