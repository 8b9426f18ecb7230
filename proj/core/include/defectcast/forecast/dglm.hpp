#pragma once

#include "defectcast/forecast/dlm.hpp"

namespace defectcast::forecast {

struct GammaParams {
	double shape = 1.0;
	double rate = 1.0;
};

GammaParams gamma_from_moments(double mean, double variance);
std::pair<double, double> gamma_moments(const GammaParams &g);

/// Shape/rate whose log-rate has mean f and variance q: digamma(a) - log(b) = f, trigamma(a) = q.
GammaParams gamma_from_log_moments(double f, double q);

/// Poisson observations with log link, updated by conjugate gamma moment matching.
FilterRun run_poisson_filter(const DlmStructure &structure, std::span<const double> counts,
                             const FeatureRows &regressors, double state_variance = 1e4);

/// BDGLM fit. Negative targets are rejected; non-integers are rounded with a diagnostic.
FittedModel dglm_poisson_filter(const series::TimeSeriesPanel &panel, const ModelSpec &spec);

} // namespace defectcast::forecast
