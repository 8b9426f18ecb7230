#include "defectcast/forecast/dlm.hpp"

#include "defectcast/forecast/dglm.hpp"

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <numbers>

namespace defectcast::forecast {

namespace {

std::size_t level_offset(const DlmStructure &s) {
	for (const auto &b : s.blocks) {
		if (b.kind == BlockKind::Level) {
			return b.offset;
		}
	}
	throw PreconditionError("state structure has no level block");
}

double min_eigenvalue(const Eigen::MatrixXd &m) {
	if (m.rows() == 0) {
		return 0.0;
	}
	Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
	return solver.eigenvalues().minCoeff();
}

void check_state(const Eigen::VectorXd &m, const Eigen::MatrixXd &c, std::size_t step, double &min_eig) {
	if (!m.allFinite() || !c.allFinite()) {
		throw FitError("non-finite filter state at step " + std::to_string(step));
	}
	min_eig = min_eigenvalue(c);
	if (min_eig < -1e-9) {
		throw FitError("filter covariance lost positive semi-definiteness at step " + std::to_string(step) +
		               " (min eigenvalue " + format_double(min_eig) + ")");
	}
}

std::span<const double> row_or_empty(const FeatureRows &rows, std::size_t t) {
	if (rows.empty()) {
		return {};
	}
	return rows.at(t);
}

} // namespace

Eigen::VectorXd DlmStructure::observation_vector(std::span<const double> regressors) const {
	Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim()));
	for (const auto &b : blocks) {
		const auto off = static_cast<Eigen::Index>(b.offset);
		switch (b.kind) {
		case BlockKind::Level:
		case BlockKind::Seasonal:
			f(off) = 1.0;
			break;
		case BlockKind::Trend:
			break;
		case BlockKind::Regression:
			if (regressors.size() != b.dim) {
				throw PreconditionError("expected " + std::to_string(b.dim) + " regressor values, got " +
				                        std::to_string(regressors.size()));
			}
			for (std::size_t j = 0; j < b.dim; ++j) {
				f(off + static_cast<Eigen::Index>(j)) = regressors[j];
			}
			break;
		}
	}
	return f;
}

DlmStructure build_structure(const StructureSpec &spec) {
	DlmStructure s;
	std::size_t next = 0;
	s.blocks.push_back({BlockKind::Level, next++, 1, spec.discounts.level});
	if (spec.trend) {
		s.blocks.push_back({BlockKind::Trend, next++, 1, spec.discounts.trend});
	}
	if (spec.season_length > 1) {
		const auto dim = static_cast<std::size_t>(spec.season_length - 1);
		s.blocks.push_back({BlockKind::Seasonal, next, dim, spec.discounts.seasonal});
		next += dim;
	}
	if (spec.regressors > 0) {
		s.regression_offset = next;
		s.regression_dim = spec.regressors;
		s.blocks.push_back({BlockKind::Regression, next, spec.regressors, spec.discounts.regression});
		next += spec.regressors;
	}
	const auto n = static_cast<Eigen::Index>(next);
	s.evolution = Eigen::MatrixXd::Zero(n, n);
	auto &G = s.evolution;
	for (const auto &b : s.blocks) {
		const auto off = static_cast<Eigen::Index>(b.offset);
		const auto dim = static_cast<Eigen::Index>(b.dim);
		switch (b.kind) {
		case BlockKind::Level:
			G(off, off) = 1.0;
			if (spec.trend) {
				G(off, off + 1) = spec.damping;
			}
			break;
		case BlockKind::Trend:
			G(off, off) = spec.damping;
			break;
		case BlockKind::Seasonal:
			// dummy seasonal: the s effects sum to zero
			for (Eigen::Index j = 0; j < dim; ++j) {
				G(off, off + j) = -1.0;
			}
			for (Eigen::Index j = 1; j < dim; ++j) {
				G(off + j, off + j - 1) = 1.0;
			}
			break;
		case BlockKind::Regression:
			G.block(off, off, dim, dim).setIdentity();
			break;
		}
	}
	return s;
}

Eigen::MatrixXd discount_evolution(const DlmStructure &structure, const Eigen::MatrixXd &propagated) {
	const auto n = propagated.rows();
	Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
	for (const auto &b : structure.blocks) {
		const auto off = static_cast<Eigen::Index>(b.offset);
		const auto dim = static_cast<Eigen::Index>(b.dim);
		W.block(off, off, dim, dim) = ((1.0 - b.discount) / b.discount) * propagated.block(off, off, dim, dim);
	}
	return W;
}

FilterRun run_gaussian_filter(const DlmStructure &structure, std::span<const double> y, const FeatureRows &regressors,
                              const DlmPrior &prior) {
	if (y.size() < 2) {
		throw PreconditionError("filter needs at least two observations");
	}
	if (structure.regression_dim > 0 && regressors.size() != y.size()) {
		throw PreconditionError("regressor rows do not match the series length");
	}
	const auto dim = static_cast<Eigen::Index>(structure.dim());
	const auto &G = structure.evolution;

	FilterRun run;
	auto &st = run.state;
	st.observation = ObservationModel::Gaussian;
	st.structure = structure;
	st.mean = Eigen::VectorXd::Zero(dim);
	st.mean(static_cast<Eigen::Index>(level_offset(structure))) = y[0];
	st.covariance = prior.state_variance * Eigen::MatrixXd::Identity(dim, dim);
	st.obs_variance = prior.obs_variance;
	st.dof = prior.dof;
	st.variance_discount = prior.variance_discount;
	const double beta = prior.variance_discount;

	for (std::size_t t = 1; t < y.size(); ++t) {
		const Eigen::MatrixXd P = G * st.covariance * G.transpose();
		const Eigen::MatrixXd R = P + discount_evolution(structure, P);
		const Eigen::VectorXd a = G * st.mean;
		const Eigen::VectorXd F = structure.observation_vector(row_or_empty(regressors, t));
		const double f = F.dot(a);
		const Eigen::VectorXd RF = R * F;
		const double S = st.obs_variance;
		const double Q = F.dot(RF) + S;
		const double e = y[t] - f;
		const Eigen::VectorXd A = RF / Q;

		run.loglik += -0.5 * (std::log(2.0 * std::numbers::pi * Q) + e * e / Q);
		const double dof = beta * st.dof + 1.0;
		const double S_new = (beta * st.dof * S + S * e * e / Q) / dof;

		st.mean = a + A * e;
		Eigen::MatrixXd C = (S_new / S) * (R - A * A.transpose() * Q);
		st.covariance = 0.5 * (C + C.transpose());
		if (!std::isfinite(S_new) || S_new <= 0.0) {
			throw FitError("non-finite observation variance at step " + std::to_string(t));
		}
		double min_eig = 0.0;
		check_state(st.mean, st.covariance, t, min_eig);
		st.obs_variance = S_new;
		st.dof = dof;

		st.filtered_means.push_back(st.mean);
		st.predictive_means.push_back(f);
		st.predictive_variances.push_back(Q);
		st.min_eigenvalues.push_back(min_eig);
		run.residuals.push_back(e);
	}
	return run;
}

DlmStructure structure_for(const ModelSpec &spec, std::size_t regressors) {
	StructureSpec s;
	s.discounts = spec.discounts.value_or(Discounts{});
	switch (spec.kind) {
	case ModelKind::Bdlt:
		s.trend = true;
		s.damping = spec.damping.value_or(0.9);
		break;
	case ModelKind::Bets:
		s.trend = true;
		s.damping = 1.0;
		s.season_length = spec.season_length;
		break;
	case ModelKind::Bdlm:
	case ModelKind::Bdglm:
		s.regressors = regressors;
		break;
	default:
		throw PreconditionError(spec.label() + " is not a Bayesian structural model");
	}
	return build_structure(s);
}

FittedModel dlm_filter(const series::TimeSeriesPanel &panel, const ModelSpec &spec) {
	spec.validate();
	if (spec.family != Family::Bayesian || spec.kind == ModelKind::Bdglm) {
		throw PreconditionError("dlm_filter expects BDLT, BETS or BDLM, got " + spec.label());
	}
	if (panel.size() < series::kMinFitLength) {
		throw PreconditionError(spec.label() + ": panel of length " + std::to_string(panel.size()) +
		                        " too short (needs " + std::to_string(series::kMinFitLength) + ")");
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
	DlmPrior prior;
	prior.state_variance = spec.prior_state_variance;
	prior.variance_discount = spec.variance_discount;
	auto run = run_gaussian_filter(structure, panel.targets(), rows, prior);
	run.state.regressors = std::move(transform);

	FittedModel model;
	model.spec = spec;
	model.params.assign(run.state.mean.data(), run.state.mean.data() + run.state.mean.size());
	model.loglik = run.loglik;
	model.aic = -2.0 * run.loglik + 2.0 * static_cast<double>(structure.dim() + 1);
	model.residuals = std::move(run.residuals);
	model.training_length = panel.size();
	model.warm_up = 1;
	model.diagnostics = std::move(run.diagnostics);
	model.state = std::move(run.state);
	return model;
}

ForecastResult forecast_dlm(const FittedModel &model, int h, std::span<const std::vector<double>> future_exogenous) {
	if (h < 1) {
		throw PreconditionError("forecast horizon must be >= 1");
	}
	const auto &st = std::get<DlmState>(model.state);
	const auto &structure = st.structure;
	const bool needs_exog = structure.regression_dim > 0 || model.spec.uses_exogenous;
	if (needs_exog && future_exogenous.size() < static_cast<std::size_t>(h)) {
		throw PreconditionError(model.spec.label() + ": future exogenous rows missing for horizon " + std::to_string(h));
	}
	const auto &G = structure.evolution;
	const Eigen::MatrixXd W = discount_evolution(structure, G * st.covariance * G.transpose());

	ForecastResult result;
	result.origin = model.training_length;
	result.horizon = h;
	std::vector<double> lower, upper;
	Eigen::VectorXd a = st.mean;
	Eigen::MatrixXd R = st.covariance;
	const auto hs = static_cast<std::size_t>(h);
	const double dof = std::max(st.variance_discount * st.dof, 1e-6);
	const double tq = boost::math::quantile(boost::math::students_t_distribution<double>(dof), 0.5 + kIntervalLevel / 2);
	for (std::size_t k = 0; k < hs; ++k) {
		a = G * a;
		R = G * R * G.transpose() + W;
		std::vector<double> x;
		if (structure.regression_dim > 0) {
			x = st.regressors.apply(future_exogenous[k]);
		}
		const Eigen::VectorXd F = structure.observation_vector(x);
		const double f = F.dot(a);
		const double q = F.dot(R * F);
		if (st.observation == ObservationModel::Gaussian) {
			const double half = tq * std::sqrt(q + st.obs_variance);
			result.points.push_back(f);
			lower.push_back(f - half);
			upper.push_back(f + half);
		} else {
			const auto g = gamma_from_log_moments(f, q);
			const double point = g.shape / g.rate;
			const boost::math::gamma_distribution<double> dist(g.shape, 1.0 / g.rate);
			const double lo = boost::math::quantile(dist, 0.5 - kIntervalLevel / 2);
			const double hi = boost::math::quantile(dist, 0.5 + kIntervalLevel / 2);
			result.points.push_back(point);
			lower.push_back(std::min(lo, point));
			upper.push_back(std::max(hi, point));
		}
		if (!std::isfinite(result.points.back())) {
			throw FitError(model.spec.label() + ": non-finite forecast at step " + std::to_string(k + 1));
		}
	}
	result.lower = std::move(lower);
	result.upper = std::move(upper);
	return result;
}

} // namespace defectcast::forecast
