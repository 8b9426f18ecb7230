#pragma once

#include <optional>
#include <span>
#include <vector>

namespace defectcast::forecast {

struct SeasonalDifferencing {
	int D = 0;
	int s = 0;
};

/// Applies D-fold lag-s differencing, then d-fold lag-1 differencing.
/// Throws PreconditionError unless series.size() > d + D*s.
std::vector<double> difference(std::span<const double> series, int d,
                               std::optional<SeasonalDifferencing> seasonal = std::nullopt);

/// Inverse of difference for values that continue `history`: returns the level-scale
/// continuation of `future_diffs`.
std::vector<double> integrate(std::span<const double> future_diffs, std::span<const double> history, int d,
                              std::optional<SeasonalDifferencing> seasonal = std::nullopt);

} // namespace defectcast::forecast
