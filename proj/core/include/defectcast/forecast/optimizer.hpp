#pragma once

#include <functional>
#include <span>
#include <vector>

namespace defectcast::forecast {

struct NelderMeadOptions {
	int max_iterations = 500;
	/// Stop once every vertex lies within this distance of the best one (per coordinate).
	double x_tolerance = 1e-6;
	double f_tolerance = 1e-12;
	double initial_step = 0.1;
};

struct OptimResult {
	std::vector<double> x;
	double value = 0.0;
	int iterations = 0;
	bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;

/// Derivative-free simplex minimization. Non-finite objective values are treated as +infinity.
OptimResult nelder_mead(const Objective &objective, std::vector<double> start, const NelderMeadOptions &options = {});

} // namespace defectcast::forecast
