#pragma once

#include "defectcast/forecast/fitted.hpp"

#include <span>

namespace defectcast::forecast {

struct DlmPrior {
	double state_variance = 1e4;
	/// Initial observation-variance estimate S_0 and its degrees of freedom n_0.
	double obs_variance = 1.0;
	double dof = 1.0;
	double variance_discount = 0.99;
};

struct FilterRun {
	DlmState state;
	double loglik = 0.0;
	/// One-step forecast errors for t = 1..n-1.
	std::vector<double> residuals;
	std::vector<std::string> diagnostics;
};

/// Discount-evolution covariance: block b of W is ((1 - delta_b) / delta_b) * (G C G')_bb.
Eigen::MatrixXd discount_evolution(const DlmStructure &structure, const Eigen::MatrixXd &propagated);

/// Gaussian filter with conjugate variance discounting. The level starts at y[0] and the
/// remaining states at zero; filtering starts at t = 1. `regressors` rows are already
/// transformed and may be empty when the structure has no regression block.
FilterRun run_gaussian_filter(const DlmStructure &structure, std::span<const double> y, const FeatureRows &regressors,
                              const DlmPrior &prior = {});

/// Structure implied by a Bayesian spec (BDLT, BETS, BDLM, BDGLM).
DlmStructure structure_for(const ModelSpec &spec, std::size_t regressors);

/// BDLT, BETS or BDLM fit on the panel targets; features are standardized on the training rows.
FittedModel dlm_filter(const series::TimeSeriesPanel &panel, const ModelSpec &spec);

/// k-step evolution with the discount W held at its one-step value; Student-t 90% intervals
/// for the Gaussian models.
ForecastResult forecast_dlm(const FittedModel &model, int h, std::span<const std::vector<double>> future_exogenous);

} // namespace defectcast::forecast
