#include "defectcast/forecast/difference.hpp"

#include "defectcast/common.hpp"

namespace defectcast::forecast {

namespace {

std::vector<double> lag_difference(const std::vector<double> &x, std::size_t lag) {
	std::vector<double> out;
	if (x.size() <= lag) {
		return out;
	}
	out.reserve(x.size() - lag);
	for (std::size_t t = lag; t < x.size(); ++t) {
		out.push_back(x[t] - x[t - lag]);
	}
	return out;
}

/// Lags applied by difference(), in application order.
std::vector<std::size_t> lag_chain(int d, std::optional<SeasonalDifferencing> seasonal) {
	std::vector<std::size_t> lags;
	if (seasonal) {
		for (int i = 0; i < seasonal->D; ++i) {
			lags.push_back(static_cast<std::size_t>(seasonal->s));
		}
	}
	for (int i = 0; i < d; ++i) {
		lags.push_back(1);
	}
	return lags;
}

} // namespace

std::vector<double> difference(std::span<const double> series, int d, std::optional<SeasonalDifferencing> seasonal) {
	if (d < 0 || (seasonal && (seasonal->D < 0 || seasonal->s < 1))) {
		throw PreconditionError("differencing orders must be non-negative");
	}
	const std::size_t loss = static_cast<std::size_t>(d) + (seasonal ? static_cast<std::size_t>(seasonal->D * seasonal->s) : 0);
	if (series.size() <= loss) {
		throw PreconditionError("series of length " + std::to_string(series.size()) + " too short to difference (needs > " +
		                        std::to_string(loss) + ")");
	}
	std::vector<double> x(series.begin(), series.end());
	for (auto lag : lag_chain(d, seasonal)) {
		x = lag_difference(x, lag);
	}
	return x;
}

std::vector<double> integrate(std::span<const double> future_diffs, std::span<const double> history, int d,
                              std::optional<SeasonalDifferencing> seasonal) {
	const auto lags = lag_chain(d, seasonal);
	// levels[k] is the history after applying the first k lags.
	std::vector<std::vector<double>> levels;
	levels.emplace_back(history.begin(), history.end());
	for (auto lag : lags) {
		levels.push_back(lag_difference(levels.back(), lag));
	}
	std::vector<double> current(future_diffs.begin(), future_diffs.end());
	for (std::size_t k = lags.size(); k-- > 0;) {
		const std::size_t lag = lags[k];
		std::vector<double> extended = levels[k];
		if (extended.size() < lag) {
			throw PreconditionError("history too short to integrate");
		}
		for (double v : current) {
			extended.push_back(v + extended[extended.size() - lag]);
		}
		current.assign(extended.end() - static_cast<std::ptrdiff_t>(current.size()), extended.end());
	}
	return current;
}

} // namespace defectcast::forecast
