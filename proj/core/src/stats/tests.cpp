#include "defectcast/stats/tests.hpp"

#include "defectcast/stats/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace defectcast::stats {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

TestResult finish(TestResult r) {
	r.p_value = std::clamp(r.p_value, 0.0, 1.0);
	r.reject_null = r.p_value < r.alpha;
	return r;
}

double mean_of(std::span<const double> v) {
	double s = 0.0;
	for (double x : v) {
		s += x;
	}
	return s / static_cast<double>(v.size());
}

std::vector<std::string> default_labels(std::vector<std::string> labels, std::size_t k) {
	if (labels.empty()) {
		for (std::size_t i = 0; i < k; ++i) {
			labels.push_back("g" + std::to_string(i + 1));
		}
	}
	if (labels.size() != k) {
		throw PreconditionError("label count does not match group count");
	}
	return labels;
}

PairwiseMatrix empty_matrix(std::vector<std::string> labels, std::string method, double alpha) {
	const std::size_t k = labels.size();
	PairwiseMatrix m;
	m.labels = std::move(labels);
	m.method = std::move(method);
	m.alpha = alpha;
	m.statistic.assign(k, std::vector<double>(k, kNaN));
	m.raw_p = m.statistic;
	m.adjusted_p = m.statistic;
	return m;
}

std::vector<double> pooled(const std::vector<std::vector<double>> &groups) {
	std::vector<double> all;
	for (const auto &g : groups) {
		all.insert(all.end(), g.begin(), g.end());
	}
	return all;
}

void check_groups(const std::vector<std::vector<double>> &groups, std::size_t min_size, const char *test) {
	if (groups.size() < 2) {
		throw PreconditionError(std::string(test) + " needs at least two groups");
	}
	for (const auto &g : groups) {
		if (g.size() < min_size) {
			throw PreconditionError(std::string(test) + " needs at least " + std::to_string(min_size) +
			                        " values per group");
		}
		for (double v : g) {
			if (!std::isfinite(v)) {
				throw PreconditionError(std::string(test) + " received a non-finite value");
			}
		}
	}
}

double log_normal_cdf(double z) {
	// erfc keeps precision in the far tails where 1 - cdf would cancel
	return std::log(0.5 * std::erfc(-z / std::sqrt(2.0)));
}

} // namespace

std::vector<double> average_ranks(std::span<const double> values) {
	const std::size_t n = values.size();
	std::vector<std::size_t> order(n);
	std::iota(order.begin(), order.end(), 0);
	std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
	std::vector<double> ranks(n);
	for (std::size_t i = 0; i < n;) {
		std::size_t j = i;
		while (j + 1 < n && values[order[j + 1]] == values[order[i]]) {
			++j;
		}
		const double r = 0.5 * static_cast<double>(i + j) + 1.0;
		for (std::size_t t = i; t <= j; ++t) {
			ranks[order[t]] = r;
		}
		i = j + 1;
	}
	return ranks;
}

double tie_sum(std::span<const double> values) {
	std::vector<double> v(values.begin(), values.end());
	std::sort(v.begin(), v.end());
	double sum = 0.0;
	for (std::size_t i = 0; i < v.size();) {
		std::size_t j = i;
		while (j + 1 < v.size() && v[j + 1] == v[i]) {
			++j;
		}
		const double t = static_cast<double>(j - i + 1);
		sum += t * t * t - t;
		i = j + 1;
	}
	return sum;
}

TestResult anderson_darling(std::span<const double> sample, double alpha) {
	const std::size_t n = sample.size();
	if (n < 8) {
		throw PreconditionError("Anderson-Darling needs n >= 8, got " + std::to_string(n));
	}
	std::vector<double> x(sample.begin(), sample.end());
	std::sort(x.begin(), x.end());
	const double mu = mean_of(x);
	double ss = 0.0;
	for (double v : x) {
		ss += (v - mu) * (v - mu);
	}
	const double sd = std::sqrt(ss / static_cast<double>(n - 1));
	if (!(sd > 0.0) || !std::isfinite(sd)) {
		throw DegenerateSampleError("Anderson-Darling: degenerate sample (zero variance)");
	}
	double s = 0.0;
	for (std::size_t i = 0; i < n; ++i) {
		const double zi = (x[i] - mu) / sd;
		const double zr = (x[n - 1 - i] - mu) / sd;
		s += static_cast<double>(2 * i + 1) * (log_normal_cdf(zi) + log_normal_cdf(-zr));
	}
	const double nf = static_cast<double>(n);
	const double a2 = -nf - s / nf;
	const double a = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
	double p = 0.0;
	if (a >= 0.6) {
		p = std::exp(1.2937 - 5.709 * a + 0.0186 * a * a);
	} else if (a >= 0.34) {
		p = std::exp(0.9177 - 4.279 * a - 1.38 * a * a);
	} else if (a >= 0.2) {
		p = 1.0 - std::exp(-8.318 + 42.796 * a - 59.938 * a * a);
	} else {
		p = 1.0 - std::exp(-13.436 + 101.14 * a - 223.73 * a * a);
	}
	TestResult r;
	r.name = "anderson_darling";
	r.statistic = a;
	r.p_value = p;
	r.alpha = alpha;
	r.n = {n};
	return finish(r);
}

TestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y, double alpha,
                                WilcoxonMethod method) {
	if (x.size() != y.size()) {
		throw PreconditionError("Wilcoxon signed-rank needs paired samples of equal length");
	}
	std::vector<double> d;
	for (std::size_t i = 0; i < x.size(); ++i) {
		const double diff = x[i] - y[i];
		if (!std::isfinite(diff)) {
			throw PreconditionError("Wilcoxon signed-rank received a non-finite value");
		}
		if (diff != 0.0) {
			d.push_back(diff);
		}
	}
	if (d.empty()) {
		throw NoInformationError("Wilcoxon signed-rank: no information (all differences are zero)");
	}
	const std::size_t m = d.size();
	if (m < 6) {
		throw PreconditionError("Wilcoxon signed-rank needs at least 6 non-zero differences, got " +
		                        std::to_string(m));
	}
	std::vector<double> mag(m);
	for (std::size_t i = 0; i < m; ++i) {
		mag[i] = std::abs(d[i]);
	}
	const auto ranks = average_ranks(mag);
	double t_plus = 0.0;
	for (std::size_t i = 0; i < m; ++i) {
		if (d[i] > 0.0) {
			t_plus += ranks[i];
		}
	}
	const double mf = static_cast<double>(m);
	const double total = mf * (mf + 1.0) / 2.0;
	const double w = std::min(t_plus, total - t_plus);

	const bool exact = method == WilcoxonMethod::Exact || (method == WilcoxonMethod::Auto && m <= kWilcoxonExactLimit);
	TestResult r;
	r.name = "wilcoxon_signed_rank";
	r.statistic = w;
	r.alpha = alpha;
	r.n = {m};
	if (exact) {
		// mid-ranks are multiples of 1/2, so doubled ranks count sign assignments exactly
		std::vector<std::size_t> doubled(m);
		std::size_t sum2 = 0;
		for (std::size_t i = 0; i < m; ++i) {
			doubled[i] = static_cast<std::size_t>(std::llround(2.0 * ranks[i]));
			sum2 += doubled[i];
		}
		std::vector<double> ways(sum2 + 1, 0.0);
		ways[0] = 1.0;
		std::size_t reach = 0;
		for (std::size_t r2 : doubled) {
			reach += r2;
			for (std::size_t s = reach; s >= r2; --s) {
				ways[s] += ways[s - r2];
				if (s == r2) {
					break;
				}
			}
		}
		const auto w2 = static_cast<std::size_t>(std::llround(2.0 * w));
		double tail = 0.0;
		for (std::size_t s = 0; s <= w2; ++s) {
			tail += ways[s];
		}
		r.p_value = std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(m)));
		r.diagnostics.push_back("exact");
	} else {
		const double mu = total / 2.0;
		const double var = mf * (mf + 1.0) * (2.0 * mf + 1.0) / 24.0 - tie_sum(mag) / 48.0;
		const double dev = std::max(0.0, std::abs(t_plus - mu) - 0.5);
		const double z = var > 0.0 ? dev / std::sqrt(var) : 0.0;
		r.p_value = 2.0 * normal_sf(z);
		r.diagnostics.push_back("normal approximation");
	}
	return finish(r);
}

TestResult kruskal_wallis(const std::vector<std::vector<double>> &groups, double alpha) {
	check_groups(groups, 3, "Kruskal-Wallis");
	const auto all = pooled(groups);
	const auto ranks = average_ranks(all);
	const double N = static_cast<double>(all.size());
	double acc = 0.0;
	std::size_t pos = 0;
	TestResult r;
	r.name = "kruskal_wallis";
	r.alpha = alpha;
	for (const auto &g : groups) {
		double rs = 0.0;
		for (std::size_t i = 0; i < g.size(); ++i) {
			rs += ranks[pos++];
		}
		acc += rs * rs / static_cast<double>(g.size());
		r.n.push_back(g.size());
	}
	const double h_raw = 12.0 / (N * (N + 1.0)) * acc - 3.0 * (N + 1.0);
	const double correction = 1.0 - tie_sum(all) / (N * N * N - N);
	if (correction <= 0.0) {
		r.statistic = 0.0;
		r.p_value = 1.0;
		r.diagnostics.push_back("all values identical");
		return finish(r);
	}
	r.statistic = std::max(0.0, h_raw / correction);
	r.p_value = chi_squared_sf(r.statistic, static_cast<double>(groups.size() - 1));
	return finish(r);
}

PairwiseMatrix dunn_posthoc(const std::vector<std::vector<double>> &groups, std::vector<std::string> labels,
                            double alpha) {
	check_groups(groups, 1, "Dunn");
	const std::size_t k = groups.size();
	auto m = empty_matrix(default_labels(std::move(labels), k), "dunn-holm", alpha);
	const auto all = pooled(groups);
	const auto ranks = average_ranks(all);
	const double N = static_cast<double>(all.size());
	std::vector<double> mean_rank(k);
	std::size_t pos = 0;
	for (std::size_t i = 0; i < k; ++i) {
		double rs = 0.0;
		for (std::size_t j = 0; j < groups[i].size(); ++j) {
			rs += ranks[pos++];
		}
		mean_rank[i] = rs / static_cast<double>(groups[i].size());
	}
	const double spread = N * (N + 1.0) / 12.0 - tie_sum(all) / (12.0 * (N - 1.0));
	std::vector<double> raw;
	for (std::size_t i = 0; i < k; ++i) {
		for (std::size_t j = i + 1; j < k; ++j) {
			const double diff = mean_rank[i] - mean_rank[j];
			const double se = std::sqrt(std::max(0.0, spread) *
			                            (1.0 / static_cast<double>(groups[i].size()) +
			                             1.0 / static_cast<double>(groups[j].size())));
			double z = 0.0;
			double p = 1.0;
			if (diff != 0.0 && se > 0.0) {
				z = diff / se;
				p = std::min(1.0, 2.0 * normal_sf(std::abs(z)));
			}
			m.statistic[i][j] = z;
			m.statistic[j][i] = -z;
			m.raw_p[i][j] = m.raw_p[j][i] = p;
			raw.push_back(p);
		}
	}
	const auto adj = holm_adjust(raw);
	std::size_t idx = 0;
	for (std::size_t i = 0; i < k; ++i) {
		for (std::size_t j = i + 1; j < k; ++j) {
			m.adjusted_p[i][j] = m.adjusted_p[j][i] = adj[idx++];
		}
	}
	return m;
}

TestResult anova_oneway(const std::vector<std::vector<double>> &groups, double alpha) {
	check_groups(groups, 2, "one-way ANOVA");
	const auto all = pooled(groups);
	const double grand = mean_of(all);
	double ssb = 0.0;
	double ssw = 0.0;
	TestResult r;
	r.name = "anova_oneway";
	r.alpha = alpha;
	for (const auto &g : groups) {
		const double mu = mean_of(g);
		ssb += static_cast<double>(g.size()) * (mu - grand) * (mu - grand);
		for (double v : g) {
			ssw += (v - mu) * (v - mu);
		}
		r.n.push_back(g.size());
	}
	const double df1 = static_cast<double>(groups.size() - 1);
	const double df2 = static_cast<double>(all.size() - groups.size());
	const double msb = ssb / df1;
	const double msw = ssw / df2;
	const double scale = std::max(1.0, std::abs(grand));
	if (ssb <= 1e-24 * scale * scale) {
		r.statistic = 0.0;
		r.p_value = 1.0;
		return finish(r);
	}
	if (msw <= 0.0) {
		r.statistic = std::numeric_limits<double>::infinity();
		r.p_value = 0.0;
		r.diagnostics.push_back("zero within-group variance with unequal means");
		return finish(r);
	}
	r.statistic = msb / msw;
	r.p_value = f_sf(r.statistic, df1, df2);
	return finish(r);
}

PairwiseMatrix tukey_hsd(const std::vector<std::vector<double>> &groups, std::vector<std::string> labels,
                         double alpha) {
	check_groups(groups, 2, "Tukey HSD");
	const std::size_t k = groups.size();
	auto m = empty_matrix(default_labels(std::move(labels), k), "tukey-hsd", alpha);
	std::vector<double> means(k);
	double ssw = 0.0;
	std::size_t N = 0;
	for (std::size_t i = 0; i < k; ++i) {
		means[i] = mean_of(groups[i]);
		for (double v : groups[i]) {
			ssw += (v - means[i]) * (v - means[i]);
		}
		N += groups[i].size();
	}
	const double df = static_cast<double>(N - k);
	const double msw = ssw / df;
	for (std::size_t i = 0; i < k; ++i) {
		for (std::size_t j = i + 1; j < k; ++j) {
			const double diff = std::abs(means[i] - means[j]);
			const double se = std::sqrt(msw / 2.0 *
			                            (1.0 / static_cast<double>(groups[i].size()) +
			                             1.0 / static_cast<double>(groups[j].size())));
			double q = 0.0;
			double p = 1.0;
			if (diff > 0.0) {
				if (se > 0.0) {
					q = diff / se;
					p = studentized_range_sf(q, static_cast<int>(k), df);
				} else {
					q = std::numeric_limits<double>::infinity();
					p = 0.0;
				}
			}
			m.statistic[i][j] = m.statistic[j][i] = q;
			m.raw_p[i][j] = m.raw_p[j][i] = p;
			// the studentized range already controls the family-wise rate
			m.adjusted_p[i][j] = m.adjusted_p[j][i] = p;
		}
	}
	return m;
}

TestResult paired_t(std::span<const double> x, std::span<const double> y, double alpha) {
	if (x.size() != y.size() || x.size() < 2) {
		throw PreconditionError("paired t-test needs equal-length samples with n >= 2");
	}
	const std::size_t n = x.size();
	std::vector<double> d(n);
	for (std::size_t i = 0; i < n; ++i) {
		d[i] = x[i] - y[i];
	}
	const double mu = mean_of(d);
	double ss = 0.0;
	for (double v : d) {
		ss += (v - mu) * (v - mu);
	}
	const double sd = std::sqrt(ss / static_cast<double>(n - 1));
	if (!(sd > 0.0)) {
		throw DegenerateSampleError("paired t-test: zero variance of the differences");
	}
	TestResult r;
	r.name = "paired_t";
	r.alpha = alpha;
	r.n = {n};
	r.statistic = mu / (sd / std::sqrt(static_cast<double>(n)));
	r.p_value = 2.0 * student_t_sf(std::abs(r.statistic), static_cast<double>(n - 1));
	return finish(r);
}

std::vector<double> holm_adjust(std::span<const double> p_values) {
	const std::size_t m = p_values.size();
	std::vector<std::size_t> order(m);
	std::iota(order.begin(), order.end(), 0);
	std::stable_sort(order.begin(), order.end(),
	                 [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
	std::vector<double> out(m);
	double running = 0.0;
	for (std::size_t rank = 0; rank < m; ++rank) {
		const double p = p_values[order[rank]];
		if (!(p >= 0.0 && p <= 1.0)) {
			throw PreconditionError("Holm adjustment needs p-values in [0, 1]");
		}
		running = std::max(running, std::min(1.0, static_cast<double>(m - rank) * p));
		out[order[rank]] = running;
	}
	return out;
}

} // namespace defectcast::stats
