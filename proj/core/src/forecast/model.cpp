#include "defectcast/forecast/model.hpp"

#include <algorithm>
#include <cmath>

namespace defectcast::forecast {

std::vector<double> FeatureTransform::apply(std::span<const double> row) const {
	std::vector<double> out(columns.size());
	for (std::size_t j = 0; j < columns.size(); ++j) {
		if (columns[j] >= row.size()) {
			throw PreconditionError("feature row has " + std::to_string(row.size()) + " values, expected more than " +
			                        std::to_string(columns[j]));
		}
		out[j] = (row[columns[j]] - mean[j]) / scale[j];
	}
	return out;
}

FeatureTransform fit_feature_transform(const series::TimeSeriesPanel &panel, bool standardize) {
	FeatureTransform t;
	t.standardize = standardize;
	const std::size_t n = panel.size();
	for (std::size_t j = 0; j < panel.feature_count(); ++j) {
		const auto col = panel.feature_column(j);
		if (col.empty()) {
			continue;
		}
		const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
		const double magnitude = std::max({1.0, std::abs(*lo), std::abs(*hi)});
		if (*hi - *lo <= 1e-12 * magnitude) {
			continue;
		}
		t.columns.push_back(j);
		if (!standardize) {
			t.mean.push_back(0.0);
			t.scale.push_back(1.0);
			continue;
		}
		double sum = 0.0;
		for (double v : col) {
			sum += v;
		}
		const double mu = sum / static_cast<double>(n);
		double ss = 0.0;
		for (double v : col) {
			ss += (v - mu) * (v - mu);
		}
		t.mean.push_back(mu);
		t.scale.push_back(std::sqrt(ss / static_cast<double>(n)));
	}
	return t;
}

FittedModel fit(const series::TimeSeriesPanel &panel, const ModelSpec &spec, std::uint64_t seed) {
	switch (spec.family) {
	case Family::Tsa:
		return fit_tsa(panel, spec, seed);
	case Family::Bayesian:
		return spec.kind == ModelKind::Bdglm ? dglm_poisson_filter(panel, spec) : dlm_filter(panel, spec);
	case Family::Foundation:
		break;
	}
	throw PreconditionError(spec.label() + " is served by an external backend and has no native fit");
}

ForecastResult forecast(const FittedModel &model, int h, std::span<const std::vector<double>> future_exogenous) {
	if (std::holds_alternative<TsaState>(model.state)) {
		return forecast_tsa(model, h, future_exogenous);
	}
	return forecast_dlm(model, h, future_exogenous);
}

} // namespace defectcast::forecast
