#pragma once

#include "defectcast/series.hpp"
#include "defectcast/symptoms/trees.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace defectcast::symptoms {

enum class Method { Correlation, Igr, Rf, Gbm };

std::string_view to_string(Method method);

struct ImportanceRanking {
	Method method = Method::Correlation;
	/// Canonical (panel) order.
	std::vector<std::string> features;
	std::vector<double> scores;
	/// 1 = most important; ties go to the earlier feature.
	std::vector<int> ranks;
	std::vector<std::string> diagnostics;

	/// Feature names from rank 1 downwards.
	std::vector<std::string> ordered() const;
};

/// Ranks by descending score with ties broken by canonical position.
std::vector<int> rank_scores(std::span<const double> scores);

ImportanceRanking spearman_importance(const series::TimeSeriesPanel &panel);

/// Equal-frequency bin index per value (ties share a bin), b bins.
std::vector<int> equal_frequency_bins(std::span<const double> values, int bins);
ImportanceRanking igr_importance(const series::TimeSeriesPanel &panel);

ImportanceRanking rf_importance(const series::TimeSeriesPanel &panel, std::uint64_t seed,
                                const ForestOptions &options = {});
ImportanceRanking gbm_importance(const series::TimeSeriesPanel &panel, std::uint64_t seed,
                                 const BoostingOptions &options = {});

/// Features in consensus order: mean rank across methods, ties by canonical order.
std::vector<std::string> consensus_ranking(std::span<const ImportanceRanking> rankings);

Matrix design_matrix(const series::TimeSeriesPanel &panel);

void write_importance_csv(std::span<const ImportanceRanking> rankings, const std::filesystem::path &path);
void write_consensus_csv(std::span<const std::string> consensus, std::span<const ImportanceRanking> rankings,
                         const std::filesystem::path &path);

} // namespace defectcast::symptoms
