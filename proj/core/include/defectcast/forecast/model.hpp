#pragma once

#include "defectcast/forecast/arima.hpp"
#include "defectcast/forecast/dglm.hpp"
#include "defectcast/forecast/dlm.hpp"

#include <cstdint>
#include <span>

namespace defectcast::forecast {

/// Fits any native spec (TSA or Bayesian). External specs have no native fit.
FittedModel fit(const series::TimeSeriesPanel &panel, const ModelSpec &spec, std::uint64_t seed = 0);

/// `future_exogenous` holds at least h raw feature rows (panel column order) for exogenous specs.
ForecastResult forecast(const FittedModel &model, int h, std::span<const std::vector<double>> future_exogenous = {});

} // namespace defectcast::forecast
