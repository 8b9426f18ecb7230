#include "defectcast/symptoms/ablation.hpp"

#include "defectcast/csv.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>

namespace defectcast::symptoms {

namespace {

struct RunOutput {
	std::vector<eval::ErrorRecord> errors;
	std::vector<double> origin_errors;
	std::size_t failed = 0;
};

RunOutput evaluate(const series::TimeSeriesPanel &panel, const forecast::ModelSpec &spec,
                   const eval::WalkForwardPlan &plan, const AblationOptions &options) {
	eval::WalkForwardOptions wf;
	wf.exogenous = options.exogenous;
	const auto run = eval::run_walk_forward(panel, eval::native_forecaster(spec, options.seed), plan, wf);
	std::vector<eval::LabeledTuple> labeled;
	RunOutput out;
	const int first = plan.horizons.front();
	for (const auto &t : run.tuples) {
		labeled.push_back({"", spec.label(), panel.grid.length, t});
		if (t.horizon == first) {
			out.origin_errors.push_back(t.predicted ? std::abs(t.actual - *t.predicted)
			                                        : std::numeric_limits<double>::quiet_NaN());
		}
	}
	out.errors = eval::summarize(labeled);
	out.failed = run.failed_origins;
	return out;
}

} // namespace

SignificanceOutcome test_ablation_significance(std::span<const double> full, std::span<const double> ablated,
                                               double alpha) {
	if (full.size() != ablated.size()) {
		throw PreconditionError("ablation comparison needs errors paired by origin");
	}
	std::vector<double> a, b;
	for (std::size_t i = 0; i < full.size(); ++i) {
		if (std::isfinite(full[i]) && std::isfinite(ablated[i])) {
			a.push_back(full[i]);
			b.push_back(ablated[i]);
		}
	}
	SignificanceOutcome out;
	try {
		// identical runs carry no information whichever branch the screen would pick
		if (std::equal(a.begin(), a.end(), b.begin(), b.end())) {
			throw stats::NoInformationError("ablation comparison: no information (all differences are zero)");
		}
		const auto report = stats::route_analysis({{"full", a}, {"ablated", b}}, stats::Design::Paired, alpha);
		out.result = *report.omnibus;
		out.branch = report.branch;
		return out;
	} catch (const stats::NoInformationError &e) {
		out.result.name = "no information";
		out.result.diagnostics.push_back(e.what());
	} catch (const PreconditionError &e) {
		out.result.name = "not testable";
		out.result.diagnostics.push_back(e.what());
	}
	out.result.statistic = 0.0;
	out.result.p_value = 1.0;
	out.result.alpha = alpha;
	out.result.reject_null = false;
	out.result.n = {a.size()};
	return out;
}

std::vector<AblationResult> run_ablation(const series::TimeSeriesPanel &panel, const forecast::ModelSpec &best_spec,
                                         const eval::WalkForwardPlan &plan, std::span<const std::string> ranked_features,
                                         const AblationOptions &options) {
	if (!best_spec.uses_exogenous) {
		throw PreconditionError("ablation requires an exogenous-capable model; " + best_spec.label() +
		                        " ignores features, so run it with the best exogenous model (ARIMAX, SARIMAX, BDLM "
		                        "or BDGLM) instead");
	}
	if (options.k > kMaxAblationK) {
		throw PreconditionError("ablation k must be <= " + std::to_string(kMaxAblationK));
	}
	for (const auto &f : ranked_features) {
		if (std::find(panel.feature_names.begin(), panel.feature_names.end(), f) == panel.feature_names.end()) {
			throw PreconditionError("ranked feature '" + f + "' is not in the panel");
		}
	}
	const std::size_t k = std::min(options.k, ranked_features.size());
	const std::vector<std::string> top(ranked_features.begin(), ranked_features.begin() + static_cast<std::ptrdiff_t>(k));

	std::vector<AblationResult> results;
	const auto full = evaluate(panel, best_spec, plan, options);
	for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
		AblationResult r;
		for (std::size_t i = 0; i < k; ++i) {
			if (mask & (1u << i)) {
				r.subset.push_back(top[i]);
			}
		}
		r.leave_one_out = std::popcount(mask) == 1;
		const auto run = mask == 0 ? full : evaluate(panel.without_features(r.subset), best_spec, plan, options);
		r.errors = run.errors;
		r.origin_errors = run.origin_errors;
		r.failed_origins = run.failed;
		for (const auto &e : run.errors) {
			const auto ref = std::find_if(full.errors.begin(), full.errors.end(),
			                              [&](const eval::ErrorRecord &f) { return f.horizon == e.horizon; });
			if (ref == full.errors.end()) {
				continue;
			}
			MetricDelta d;
			d.horizon = e.horizon;
			if (e.mape && ref->mape) {
				d.mape = *e.mape - *ref->mape;
			}
			d.mae = e.mae - ref->mae;
			d.rmse = e.rmse - ref->rmse;
			r.delta_vs_full.push_back(d);
		}
		if (mask != 0) {
			auto sig = test_ablation_significance(full.origin_errors, run.origin_errors, options.alpha);
			r.significance = std::move(sig.result);
			r.branch = sig.branch ? std::string(stats::to_string(*sig.branch)) : "";
		}
		results.push_back(std::move(r));
	}
	return results;
}

void write_ablation_csv(std::span<const AblationResult> results, const std::filesystem::path &path,
                        const std::string &project) {
	std::ofstream out(path);
	if (!out) {
		throw LoadError("cannot write " + path.string());
	}
	csv::write_row(out, {"project", "subset", "leave_one_out", "horizon", "mape", "mae", "rmse", "delta_mape",
	                     "delta_mae", "delta_rmse", "test", "branch", "p_value", "reject_null"});
	for (const auto &r : results) {
		const std::string subset = r.subset.empty() ? "(none)" : join(r.subset, "+");
		for (const auto &e : r.errors) {
			const auto d = std::find_if(r.delta_vs_full.begin(), r.delta_vs_full.end(),
			                            [&](const MetricDelta &m) { return m.horizon == e.horizon; });
			const bool has_d = d != r.delta_vs_full.end();
			csv::write_row(out, {project, subset, r.leave_one_out ? "1" : "0", std::to_string(e.horizon),
			                     e.mape ? format_double(*e.mape) : "", format_double(e.mae), format_double(e.rmse),
			                     has_d && d->mape ? format_double(*d->mape) : "", has_d ? format_double(d->mae) : "",
			                     has_d ? format_double(d->rmse) : "", r.significance ? r.significance->name : "",
			                     r.branch, r.significance ? format_double(r.significance->p_value) : "",
			                     r.significance ? (r.significance->reject_null ? "1" : "0") : ""});
		}
	}
}

} // namespace defectcast::symptoms
