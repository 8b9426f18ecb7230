#pragma once

#include "defectcast/stats/tests.hpp"

#include <optional>
#include <string>
#include <vector>

namespace defectcast::stats {

enum class Design { Independent, Paired };

enum class Branch { Parametric, NonParametric };

std::string_view to_string(Branch branch);
std::string_view to_string(Design design);

struct NamedSample {
	std::string label;
	std::vector<double> values;
};

struct AnalysisReport {
	Design design = Design::Independent;
	Branch branch = Branch::NonParametric;
	double alpha = kDefaultAlpha;
	/// One Anderson-Darling screen per group (missing when the screen could not run).
	std::vector<std::optional<TestResult>> normality;
	/// Kruskal-Wallis / ANOVA for independent groups, Wilcoxon / paired t for two paired samples.
	std::optional<TestResult> omnibus;
	/// Dunn or Tukey, only after a rejected omnibus test with more than two groups.
	std::optional<PairwiseMatrix> pairwise;
	std::vector<std::string> notes;
};

/// Screens every group with Anderson-Darling; any non-normal group (or one the screen cannot
/// judge) sends the comparison down the rank-based branch.
AnalysisReport route_analysis(const std::vector<NamedSample> &samples, Design design, double alpha = kDefaultAlpha);

} // namespace defectcast::stats
