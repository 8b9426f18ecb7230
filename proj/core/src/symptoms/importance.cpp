#include "defectcast/symptoms/importance.hpp"

#include "defectcast/csv.hpp"
#include "defectcast/stats/tests.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

namespace defectcast::symptoms {

namespace {

ImportanceRanking make_ranking(Method method, const series::TimeSeriesPanel &panel, std::vector<double> scores) {
	ImportanceRanking r;
	r.method = method;
	r.features = panel.feature_names;
	for (auto &s : scores) {
		if (!std::isfinite(s)) {
			s = 0.0;
		}
	}
	r.ranks = rank_scores(scores);
	r.scores = std::move(scores);
	return r;
}

bool is_constant(std::span<const double> v) {
	return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

double pearson(std::span<const double> a, std::span<const double> b) {
	const auto n = static_cast<double>(a.size());
	const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
	const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
	double sab = 0.0, saa = 0.0, sbb = 0.0;
	for (std::size_t i = 0; i < a.size(); ++i) {
		sab += (a[i] - ma) * (b[i] - mb);
		saa += (a[i] - ma) * (a[i] - ma);
		sbb += (b[i] - mb) * (b[i] - mb);
	}
	if (saa <= 0.0 || sbb <= 0.0) {
		return 0.0;
	}
	return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double entropy(const std::map<int, std::size_t> &counts, double n) {
	double h = 0.0;
	for (const auto &[k, c] : counts) {
		const double p = static_cast<double>(c) / n;
		h -= p * std::log(p);
	}
	return h;
}

} // namespace

std::string_view to_string(Method method) {
	switch (method) {
	case Method::Correlation:
		return "correlation";
	case Method::Igr:
		return "igr";
	case Method::Rf:
		return "rf";
	case Method::Gbm:
		return "gbm";
	}
	return "unknown";
}

std::vector<std::string> ImportanceRanking::ordered() const {
	std::vector<std::string> out(features.size());
	for (std::size_t i = 0; i < features.size(); ++i) {
		out[static_cast<std::size_t>(ranks[i] - 1)] = features[i];
	}
	return out;
}

std::vector<int> rank_scores(std::span<const double> scores) {
	std::vector<std::size_t> order(scores.size());
	std::iota(order.begin(), order.end(), 0);
	std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
	std::vector<int> ranks(scores.size());
	for (std::size_t i = 0; i < order.size(); ++i) {
		ranks[order[i]] = static_cast<int>(i + 1);
	}
	return ranks;
}

Matrix design_matrix(const series::TimeSeriesPanel &panel) {
	Matrix x(static_cast<Eigen::Index>(panel.size()), static_cast<Eigen::Index>(panel.feature_count()));
	for (std::size_t i = 0; i < panel.size(); ++i) {
		for (std::size_t j = 0; j < panel.feature_count(); ++j) {
			x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = panel.observations[i].features[j];
		}
	}
	return x;
}

ImportanceRanking spearman_importance(const series::TimeSeriesPanel &panel) {
	if (panel.size() < 3) {
		throw PreconditionError("correlation importance needs at least 3 observations");
	}
	const auto y = panel.targets();
	const auto ry = stats::average_ranks(y);
	std::vector<double> scores(panel.feature_count(), 0.0);
	std::vector<std::string> notes;
	if (is_constant(y)) {
		notes.push_back("constant target: all correlations set to 0");
	} else {
		for (std::size_t j = 0; j < panel.feature_count(); ++j) {
			const auto col = panel.feature_column(j);
			if (is_constant(col)) {
				notes.push_back("constant feature '" + panel.feature_names[j] + "' scored 0");
				continue;
			}
			scores[j] = std::abs(pearson(stats::average_ranks(col), ry));
		}
	}
	auto r = make_ranking(Method::Correlation, panel, std::move(scores));
	r.diagnostics = std::move(notes);
	return r;
}

std::vector<int> equal_frequency_bins(std::span<const double> values, int bins) {
	const auto ranks = stats::average_ranks(values);
	const auto n = static_cast<double>(values.size());
	std::vector<int> out(values.size());
	for (std::size_t i = 0; i < values.size(); ++i) {
		const int b = static_cast<int>(std::floor((ranks[i] - 0.5) * bins / n));
		out[i] = std::clamp(b, 0, bins - 1);
	}
	return out;
}

ImportanceRanking igr_importance(const series::TimeSeriesPanel &panel) {
	const std::size_t n = panel.size();
	if (n < 20) {
		throw PreconditionError("information gain ratio needs n >= 20, got " + std::to_string(n));
	}
	const int bins = std::min(10, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)))));
	const auto t = equal_frequency_bins(panel.targets(), bins);
	const auto nf = static_cast<double>(n);
	std::map<int, std::size_t> tc;
	for (int v : t) {
		++tc[v];
	}
	const double ht = entropy(tc, nf);
	std::vector<double> scores(panel.feature_count(), 0.0);
	for (std::size_t j = 0; j < panel.feature_count(); ++j) {
		const auto f = equal_frequency_bins(panel.feature_column(j), bins);
		std::map<int, std::size_t> fc;
		std::map<std::pair<int, int>, std::size_t> joint;
		for (std::size_t i = 0; i < n; ++i) {
			++fc[f[i]];
			++joint[{f[i], t[i]}];
		}
		const double hf = entropy(fc, nf);
		if (hf <= 0.0) {
			continue;
		}
		double h_joint = 0.0;
		for (const auto &[k, c] : joint) {
			const double p = static_cast<double>(c) / nf;
			h_joint -= p * std::log(p);
		}
		const double gain = ht - (h_joint - hf);
		scores[j] = std::clamp(gain / hf, 0.0, 1.0);
	}
	return make_ranking(Method::Igr, panel, std::move(scores));
}

ImportanceRanking rf_importance(const series::TimeSeriesPanel &panel, std::uint64_t seed, const ForestOptions &options) {
	if (panel.size() < 30) {
		throw PreconditionError("random forest importance needs n >= 30, got " + std::to_string(panel.size()));
	}
	const auto forest = fit_forest(design_matrix(panel), panel.targets(), seed, options);
	return make_ranking(Method::Rf, panel, forest.permutation_importance);
}

ImportanceRanking gbm_importance(const series::TimeSeriesPanel &panel, std::uint64_t, const BoostingOptions &options) {
	if (panel.size() < 30) {
		throw PreconditionError("gradient boosting importance needs n >= 30, got " + std::to_string(panel.size()));
	}
	// no subsampling: the fit is deterministic and the seed is unused
	const auto model = fit_boosting(design_matrix(panel), panel.targets(), options);
	return make_ranking(Method::Gbm, panel, model.gain_importance);
}

std::vector<std::string> consensus_ranking(std::span<const ImportanceRanking> rankings) {
	if (rankings.empty()) {
		throw PreconditionError("consensus needs at least one ranking");
	}
	const auto &canonical = rankings.front().features;
	const std::set<std::string> expected(canonical.begin(), canonical.end());
	std::vector<double> total(canonical.size(), 0.0);
	for (const auto &r : rankings) {
		if (std::set<std::string>(r.features.begin(), r.features.end()) != expected ||
		    r.features.size() != canonical.size()) {
			throw PreconditionError("rankings are over different feature sets");
		}
		for (std::size_t i = 0; i < r.features.size(); ++i) {
			const auto pos = static_cast<std::size_t>(
			    std::find(canonical.begin(), canonical.end(), r.features[i]) - canonical.begin());
			total[pos] += r.ranks[i];
		}
	}
	std::vector<std::size_t> order(canonical.size());
	std::iota(order.begin(), order.end(), 0);
	std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return total[a] < total[b]; });
	std::vector<std::string> out;
	for (auto i : order) {
		out.push_back(canonical[i]);
	}
	return out;
}

void write_importance_csv(std::span<const ImportanceRanking> rankings, const std::filesystem::path &path) {
	std::ofstream out(path);
	if (!out) {
		throw LoadError("cannot write " + path.string());
	}
	csv::write_row(out, {"method", "feature", "score", "rank"});
	for (const auto &r : rankings) {
		for (std::size_t i = 0; i < r.features.size(); ++i) {
			csv::write_row(out, {std::string(to_string(r.method)), r.features[i], format_double(r.scores[i]),
			                     std::to_string(r.ranks[i])});
		}
	}
}

void write_consensus_csv(std::span<const std::string> consensus, std::span<const ImportanceRanking> rankings,
                         const std::filesystem::path &path) {
	std::ofstream out(path);
	if (!out) {
		throw LoadError("cannot write " + path.string());
	}
	std::vector<std::string> header{"rank", "feature", "mean_rank"};
	for (const auto &r : rankings) {
		header.push_back(std::string(to_string(r.method)) + "_rank");
	}
	csv::write_row(out, header);
	for (std::size_t i = 0; i < consensus.size(); ++i) {
		std::vector<std::string> row{std::to_string(i + 1), consensus[i]};
		double sum = 0.0;
		std::vector<std::string> per;
		for (const auto &r : rankings) {
			const auto it = std::find(r.features.begin(), r.features.end(), consensus[i]);
			const int rank = r.ranks[static_cast<std::size_t>(it - r.features.begin())];
			sum += rank;
			per.push_back(std::to_string(rank));
		}
		row.push_back(format_double(sum / static_cast<double>(rankings.size())));
		row.insert(row.end(), per.begin(), per.end());
		csv::write_row(out, row);
	}
}

} // namespace defectcast::symptoms
