#pragma once

#include "defectcast/evaluation.hpp"
#include "defectcast/stats/routing.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace defectcast::symptoms {

inline constexpr std::size_t kMaxAblationK = 8;

struct AblationOptions {
	std::size_t k = kMaxAblationK;
	std::uint64_t seed = 0;
	double alpha = stats::kDefaultAlpha;
	eval::ExogenousMode exogenous = eval::ExogenousMode::Known;
};

struct MetricDelta {
	int horizon = 0;
	std::optional<double> mape;
	double mae = 0.0;
	double rmse = 0.0;
};

struct AblationResult {
	/// Features removed; empty for the full-feature reference run.
	std::vector<std::string> subset;
	bool leave_one_out = false;
	/// One record per plan horizon with at least one successful forecast.
	std::vector<eval::ErrorRecord> errors;
	/// This run minus the full run, per horizon.
	std::vector<MetricDelta> delta_vs_full;
	/// Per-origin absolute errors at the plan's shortest horizon (NaN for failed origins).
	std::vector<double> origin_errors;
	/// Paired comparison against the full run; absent for the full run itself.
	std::optional<stats::TestResult> significance;
	std::string branch;
	std::size_t failed_origins = 0;
};

/// Full run plus every non-empty subset of the top-k ranked features removed (leave-one-out
/// subsets included), with identical plan and seed. Results are ordered by subset bit mask.
std::vector<AblationResult> run_ablation(const series::TimeSeriesPanel &panel, const forecast::ModelSpec &best_spec,
                                         const eval::WalkForwardPlan &plan, std::span<const std::string> ranked_features,
                                         const AblationOptions &options = {});

struct SignificanceOutcome {
	stats::TestResult result;
	std::optional<stats::Branch> branch;
};

/// Routed paired comparison of per-origin absolute errors. Identical inputs report a
/// fail-to-reject "no information" outcome.
SignificanceOutcome test_ablation_significance(std::span<const double> full, std::span<const double> ablated,
                                               double alpha = stats::kDefaultAlpha);

void write_ablation_csv(std::span<const AblationResult> results, const std::filesystem::path &path,
                        const std::string &project = {});

} // namespace defectcast::symptoms
