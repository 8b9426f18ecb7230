#pragma once

#include <functional>

namespace defectcast::stats {

struct QuadratureResult {
	double value = 0.0;
	double error = 0.0;
	int evaluations = 0;
};

/// Adaptive 7/15-point Gauss-Kronrod on [a, b]: intervals are bisected until the summed
/// Kronrod-vs-Gauss error estimate falls below `abs_tolerance`. Throws defectcast::Error
/// when `max_intervals` is exhausted first.
QuadratureResult integrate(const std::function<double(double)> &f, double a, double b, double abs_tolerance = 1e-6,
                           int max_intervals = 2000);

} // namespace defectcast::stats
