#include "defectcast/stats/routing.hpp"

namespace defectcast::stats {

std::string_view to_string(Branch branch) {
	return branch == Branch::Parametric ? "parametric" : "non-parametric";
}

std::string_view to_string(Design design) {
	return design == Design::Paired ? "paired" : "independent";
}

AnalysisReport route_analysis(const std::vector<NamedSample> &samples, Design design, double alpha) {
	if (samples.size() < 2) {
		throw PreconditionError("analysis needs at least two samples");
	}
	if (design == Design::Paired && samples.size() != 2) {
		throw PreconditionError("paired analysis compares exactly two samples");
	}
	AnalysisReport report;
	report.design = design;
	report.alpha = alpha;

	bool all_normal = true;
	for (const auto &s : samples) {
		try {
			auto ad = anderson_darling(s.values, alpha);
			if (ad.reject_null) {
				all_normal = false;
			}
			report.normality.emplace_back(std::move(ad));
		} catch (const PreconditionError &e) {
			all_normal = false;
			report.normality.emplace_back(std::nullopt);
			report.notes.push_back("normality screen skipped for '" + s.label + "': " + e.what());
		}
	}
	report.branch = all_normal ? Branch::Parametric : Branch::NonParametric;

	std::vector<std::vector<double>> groups;
	std::vector<std::string> labels;
	for (const auto &s : samples) {
		groups.push_back(s.values);
		labels.push_back(s.label);
	}

	if (design == Design::Paired) {
		report.omnibus = report.branch == Branch::Parametric ? paired_t(groups[0], groups[1], alpha)
		                                                     : wilcoxon_signed_rank(groups[0], groups[1], alpha);
		return report;
	}
	report.omnibus = report.branch == Branch::Parametric ? anova_oneway(groups, alpha) : kruskal_wallis(groups, alpha);
	if (groups.size() > 2) {
		if (report.omnibus->reject_null) {
			report.pairwise = report.branch == Branch::Parametric ? tukey_hsd(groups, labels, alpha)
			                                                      : dunn_posthoc(groups, labels, alpha);
		} else {
			report.notes.push_back("omnibus test did not reject; post hoc comparisons skipped");
		}
	}
	return report;
}

} // namespace defectcast::stats
