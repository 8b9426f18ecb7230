#include "defectcast/forecast/dglm.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/polygamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <limits>

namespace defectcast::forecast {

GammaParams gamma_from_moments(double mean, double variance) {
	if (!(mean > 0.0) || !(variance > 0.0)) {
		throw PreconditionError("gamma moments need positive mean and variance");
	}
	return {mean * mean / variance, mean / variance};
}

std::pair<double, double> gamma_moments(const GammaParams &g) {
	return {g.shape / g.rate, g.shape / (g.rate * g.rate)};
}

GammaParams gamma_from_log_moments(double f, double q) {
	if (!(q > 0.0) || !std::isfinite(q) || !std::isfinite(f)) {
		throw PreconditionError("log-moment matching needs finite f and q > 0");
	}
	// trigamma is decreasing; trigamma(a) ~ 1/a^2 near zero and ~ 1/a for large a
	const double guess = q > 1.0 ? 1.0 / std::sqrt(q) : 1.0 / q + 0.5;
	const auto fn = [q](double a) {
		return std::make_pair(boost::math::trigamma(a) - q, boost::math::polygamma(2, a));
	};
	std::uintmax_t iterations = 200;
	const double shape = boost::math::tools::newton_raphson_iterate(
	    fn, guess, std::numeric_limits<double>::min() * 1e10, 1e300, std::numeric_limits<double>::digits - 6, iterations);
	const double rate = std::exp(boost::math::digamma(shape) - f);
	return {shape, rate};
}

FilterRun run_poisson_filter(const DlmStructure &structure, std::span<const double> counts,
                             const FeatureRows &regressors, double state_variance) {
	if (counts.size() < 2) {
		throw PreconditionError("filter needs at least two observations");
	}
	if (structure.regression_dim > 0 && regressors.size() != counts.size()) {
		throw PreconditionError("regressor rows do not match the series length");
	}
	const auto dim = static_cast<Eigen::Index>(structure.dim());
	const auto &G = structure.evolution;

	FilterRun run;
	auto &st = run.state;
	st.observation = ObservationModel::Poisson;
	st.structure = structure;
	st.mean = Eigen::VectorXd::Zero(dim);
	for (const auto &b : structure.blocks) {
		if (b.kind == BlockKind::Level) {
			st.mean(static_cast<Eigen::Index>(b.offset)) = std::log(std::max(counts[0], 0.5));
		}
	}
	st.covariance = state_variance * Eigen::MatrixXd::Identity(dim, dim);

	for (std::size_t t = 1; t < counts.size(); ++t) {
		const double y = counts[t];
		const Eigen::MatrixXd P = G * st.covariance * G.transpose();
		const Eigen::MatrixXd R = P + discount_evolution(structure, P);
		const Eigen::VectorXd a = G * st.mean;
		const Eigen::VectorXd F = structure.observation_vector(regressors.empty() ? std::span<const double>{}
		                                                                           : std::span<const double>(regressors[t]));
		const double f = F.dot(a);
		const Eigen::VectorXd RF = R * F;
		const double q = F.dot(RF);
		const auto prior = gamma_from_log_moments(f, q);

		// negative binomial one-step predictive
		const double alpha = prior.shape;
		const double rate = prior.rate;
		const double predicted = alpha / rate;
		run.loglik += std::lgamma(alpha + y) - std::lgamma(alpha) - std::lgamma(y + 1.0) +
		              alpha * std::log(rate / (rate + 1.0)) - y * std::log1p(rate);

		const double alpha_post = alpha + y;
		const double rate_post = rate + 1.0;
		const double f_post = boost::math::digamma(alpha_post) - std::log(rate_post);
		const double q_post = boost::math::trigamma(alpha_post);

		st.mean = a + RF * ((f_post - f) / q);
		const Eigen::MatrixXd C = R - RF * RF.transpose() * ((1.0 - q_post / q) / q);
		st.covariance = 0.5 * (C + C.transpose());
		if (!st.mean.allFinite() || !st.covariance.allFinite()) {
			throw FitError("non-finite filter state at step " + std::to_string(t));
		}
		Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(st.covariance, Eigen::EigenvaluesOnly);
		const double min_eig = solver.eigenvalues().minCoeff();
		if (min_eig < -1e-9) {
			throw FitError("filter covariance lost positive semi-definiteness at step " + std::to_string(t));
		}
		st.filtered_means.push_back(st.mean);
		st.predictive_means.push_back(predicted);
		st.predictive_variances.push_back(predicted + alpha / (rate * rate));
		st.min_eigenvalues.push_back(min_eig);
		run.residuals.push_back(y - predicted);
	}
	return run;
}

FittedModel dglm_poisson_filter(const series::TimeSeriesPanel &panel, const ModelSpec &spec) {
	spec.validate();
	if (spec.kind != ModelKind::Bdglm) {
		throw PreconditionError("dglm_poisson_filter expects BDGLM, got " + spec.label());
	}
	if (panel.size() < series::kMinFitLength) {
		throw PreconditionError(spec.label() + ": panel of length " + std::to_string(panel.size()) +
		                        " too short (needs " + std::to_string(series::kMinFitLength) + ")");
	}
	std::vector<double> counts = panel.targets();
	std::size_t rounded = 0;
	for (auto &c : counts) {
		if (!std::isfinite(c) || c < 0.0) {
			throw PreconditionError(spec.label() + ": targets must be non-negative counts");
		}
		const double r = std::round(c);
		if (r != c) {
			++rounded;
			c = r;
		}
	}
	FeatureTransform transform;
	FeatureRows rows;
	if (spec.uses_exogenous) {
		transform = fit_feature_transform(panel, true);
		for (const auto &obs : panel.observations) {
			rows.push_back(transform.apply(obs.features));
		}
	}
	const auto structure = structure_for(spec, transform.size());
	auto run = run_poisson_filter(structure, counts, rows, spec.prior_state_variance);
	run.state.regressors = std::move(transform);
	if (rounded > 0) {
		run.diagnostics.push_back(spec.label() + ": rounded " + std::to_string(rounded) +
		                          " non-integer targets to the nearest count");
	}

	FittedModel model;
	model.spec = spec;
	model.params.assign(run.state.mean.data(), run.state.mean.data() + run.state.mean.size());
	model.loglik = run.loglik;
	model.aic = -2.0 * run.loglik + 2.0 * static_cast<double>(structure.dim());
	model.residuals = std::move(run.residuals);
	model.training_length = panel.size();
	model.warm_up = 1;
	model.diagnostics = std::move(run.diagnostics);
	model.state = std::move(run.state);
	return model;
}

} // namespace defectcast::forecast
