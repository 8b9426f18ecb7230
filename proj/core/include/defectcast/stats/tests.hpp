#pragma once

#include "defectcast/common.hpp"

#include <span>
#include <string>
#include <vector>

namespace defectcast::stats {

inline constexpr double kDefaultAlpha = 0.01;

/// The sample cannot support the test (zero variance, too few points).
class DegenerateSampleError : public PreconditionError {
public:
	using PreconditionError::PreconditionError;
};

/// Every paired difference is zero.
class NoInformationError : public PreconditionError {
public:
	using PreconditionError::PreconditionError;
};

struct TestResult {
	std::string name;
	double statistic = 0.0;
	double p_value = 1.0;
	double alpha = kDefaultAlpha;
	bool reject_null = false;
	std::vector<std::size_t> n;
	std::vector<std::string> diagnostics;
};

/// Symmetric matrices; diagonal entries are NaN.
struct PairwiseMatrix {
	std::vector<std::string> labels;
	std::vector<std::vector<double>> statistic;
	std::vector<std::vector<double>> raw_p;
	std::vector<std::vector<double>> adjusted_p;
	std::string method;
	double alpha = kDefaultAlpha;
};

/// Average (mid) ranks, 1-based.
std::vector<double> average_ranks(std::span<const double> values);
/// Sum over tie groups of t^3 - t.
double tie_sum(std::span<const double> values);

TestResult anderson_darling(std::span<const double> sample, double alpha = kDefaultAlpha);

enum class WilcoxonMethod { Auto, Exact, Normal };
inline constexpr std::size_t kWilcoxonExactLimit = 25;

/// Two-sided signed-rank test on x - y. Zero differences are dropped first.
TestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y, double alpha = kDefaultAlpha,
                                WilcoxonMethod method = WilcoxonMethod::Auto);

TestResult kruskal_wallis(const std::vector<std::vector<double>> &groups, double alpha = kDefaultAlpha);
PairwiseMatrix dunn_posthoc(const std::vector<std::vector<double>> &groups, std::vector<std::string> labels = {},
                            double alpha = kDefaultAlpha);
TestResult anova_oneway(const std::vector<std::vector<double>> &groups, double alpha = kDefaultAlpha);
PairwiseMatrix tukey_hsd(const std::vector<std::vector<double>> &groups, std::vector<std::string> labels = {},
                         double alpha = kDefaultAlpha);
TestResult paired_t(std::span<const double> x, std::span<const double> y, double alpha = kDefaultAlpha);

/// Step-down Holm adjustment, monotone and clipped to 1; output order matches input.
std::vector<double> holm_adjust(std::span<const double> p_values);

} // namespace defectcast::stats
