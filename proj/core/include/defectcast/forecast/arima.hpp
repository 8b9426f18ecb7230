#pragma once

#include "defectcast/forecast/difference.hpp"
#include "defectcast/forecast/fitted.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace defectcast::forecast {

/// Minimum distance of characteristic roots from the unit circle for an accepted fit.
inline constexpr double kRootMargin = 1e-6;

/// True when every root of 1 - c_1 z - ... - c_p z^p lies outside the circle |z| = 1 + margin.
bool polynomial_is_stable(std::span<const double> coefficients, double margin = kRootMargin);

/// Conditional-sum-of-squares evaluation over an already differenced series.
struct CssEvaluation {
	double negloglik = 0.0;
	double sse = 0.0;
	std::size_t n_eff = 0;
	/// Innovations aligned with the input series; zero before the conditioning start.
	std::vector<double> innovations;
};

/// `params` is [ar(p), ma(q), seasonal ar(P), seasonal ma(Q)]. Squares are summed from
/// `evaluation_start` (clamped to at least p + P*s). Returns +infinity outside the
/// stationarity/invertibility region.
CssEvaluation css_evaluate(std::span<const double> params, std::span<const double> series, const ArimaOrder &order,
                           const std::optional<SeasonalOrder> &seasonal, std::size_t evaluation_start = 0);

/// Gaussian negative log-likelihood with the innovation variance concentrated out.
double css_negloglik(std::span<const double> params, std::span<const double> series, const ArimaOrder &order,
                     const std::optional<SeasonalOrder> &seasonal);

struct TsaFitOptions {
	int restarts = 5;
	int max_iterations = 500;
	double tolerance = 1e-6;
	double jitter = 0.1;
	/// When set, CSS squares are summed from this index of the original series.
	std::optional<std::size_t> common_evaluation_start;
};

/// Two-stage fit: OLS removes the intercept (undifferenced models) and exogenous effect
/// (ARIMAX/SARIMAX), then CSS is minimized by Nelder-Mead with jittered restarts.
FittedModel fit_tsa(const series::TimeSeriesPanel &panel, const ModelSpec &spec, std::uint64_t seed = 0,
                    const TsaFitOptions &options = {});

/// AIC grid search: p, q in 0..3, d in 0..2; seasonal kinds add P, Q, D in {0, 1} with the
/// period taken from the panel's window length. All candidates are scored over a common
/// evaluation sample.
ModelSpec select_order(const series::TimeSeriesPanel &panel, ModelKind kind, std::uint64_t seed = 0);

/// Point forecasts via the ARMA recursion on the differenced scale; 90% intervals from psi weights.
ForecastResult forecast_tsa(const FittedModel &model, int h, std::span<const std::vector<double>> future_exogenous);

} // namespace defectcast::forecast
