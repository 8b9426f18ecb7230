#include "defectcast/forecast/arima.hpp"

#include "defectcast/forecast/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

namespace defectcast::forecast {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kZ90 = 1.6448536269514722; // standard normal 0.95 quantile

using Poly = std::vector<double>; // coefficient of B^k at index k, [0] == 1

Poly multiply(const Poly &a, const Poly &b) {
	Poly out(a.size() + b.size() - 1, 0.0);
	for (std::size_t i = 0; i < a.size(); ++i) {
		if (a[i] == 0.0) {
			continue;
		}
		for (std::size_t j = 0; j < b.size(); ++j) {
			out[i + j] += a[i] * b[j];
		}
	}
	return out;
}

/// 1 + sign * sum c_i B^(i*lag)
Poly lag_poly(std::span<const double> c, std::size_t lag, double sign) {
	Poly out(c.size() * lag + 1, 0.0);
	out[0] = 1.0;
	for (std::size_t i = 0; i < c.size(); ++i) {
		out[(i + 1) * lag] = sign * c[i];
	}
	return out;
}

struct Lagged {
	std::vector<std::pair<std::size_t, double>> ar; // y_t = sum a_k y_{t-k} + ...
	std::vector<std::pair<std::size_t, double>> ma; // ... + e_t + sum m_k e_{t-k}
	std::size_t conditioning = 0;                   // p + P*s
};

struct Split {
	std::span<const double> ar, ma, sar, sma;
};

Split split_params(std::span<const double> params, const ArimaOrder &order, const std::optional<SeasonalOrder> &seasonal) {
	const auto p = static_cast<std::size_t>(order.p);
	const auto q = static_cast<std::size_t>(order.q);
	const auto P = seasonal ? static_cast<std::size_t>(seasonal->P) : 0;
	const auto Q = seasonal ? static_cast<std::size_t>(seasonal->Q) : 0;
	return {params.subspan(0, p), params.subspan(p, q), params.subspan(p + q, P), params.subspan(p + q + P, Q)};
}

std::size_t param_count(const ArimaOrder &order, const std::optional<SeasonalOrder> &seasonal) {
	return static_cast<std::size_t>(order.p + order.q + (seasonal ? seasonal->P + seasonal->Q : 0));
}

Lagged expand(const Split &s, const std::optional<SeasonalOrder> &seasonal) {
	const std::size_t period = seasonal ? static_cast<std::size_t>(seasonal->s) : 1;
	const Poly ar = multiply(lag_poly(s.ar, 1, -1.0), lag_poly(s.sar, period, -1.0));
	const Poly ma = multiply(lag_poly(s.ma, 1, 1.0), lag_poly(s.sma, period, 1.0));
	Lagged out;
	for (std::size_t k = 1; k < ar.size(); ++k) {
		if (ar[k] != 0.0) {
			out.ar.emplace_back(k, -ar[k]);
		}
	}
	for (std::size_t k = 1; k < ma.size(); ++k) {
		if (ma[k] != 0.0) {
			out.ma.emplace_back(k, ma[k]);
		}
	}
	out.conditioning = s.ar.size() + s.sar.size() * period;
	return out;
}

bool region_ok(const Split &s) {
	std::vector<double> neg_ma(s.ma.begin(), s.ma.end());
	std::vector<double> neg_sma(s.sma.begin(), s.sma.end());
	for (auto &v : neg_ma) {
		v = -v;
	}
	for (auto &v : neg_sma) {
		v = -v;
	}
	return polynomial_is_stable(s.ar) && polynomial_is_stable(s.sar) && polynomial_is_stable(neg_ma) &&
	       polynomial_is_stable(neg_sma);
}

bool all_finite(std::span<const double> v) {
	return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

struct StageOne {
	bool has_intercept = false;
	double intercept = 0.0;
	FeatureTransform regressors;
	std::vector<double> beta;
	std::vector<double> adjusted;
};

Eigen::VectorXd least_squares(const Eigen::MatrixXd &X, const Eigen::VectorXd &y) {
	return X.colPivHouseholderQr().solve(y);
}

StageOne regress_out(const series::TimeSeriesPanel &panel, const ModelSpec &spec) {
	StageOne out;
	const auto y = panel.targets();
	const std::size_t n = y.size();
	if (spec.uses_exogenous) {
		out.regressors = fit_feature_transform(panel, false);
	}
	const std::size_t r = out.regressors.size();
	const int d = spec.order.d;
	const int D = spec.seasonal ? spec.seasonal->D : 0;
	const std::optional<SeasonalDifferencing> sdiff =
	    spec.seasonal ? std::optional<SeasonalDifferencing>({D, spec.seasonal->s}) : std::nullopt;
	out.has_intercept = (d + D == 0);
	out.adjusted = y;

	if (out.has_intercept) {
		Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(r + 1));
		Eigen::VectorXd Y(static_cast<Eigen::Index>(n));
		for (std::size_t t = 0; t < n; ++t) {
			const auto row = static_cast<Eigen::Index>(t);
			X(row, 0) = 1.0;
			for (std::size_t j = 0; j < r; ++j) {
				X(row, static_cast<Eigen::Index>(j + 1)) = panel.observations[t].features[out.regressors.columns[j]];
			}
			Y(row) = y[t];
		}
		if (r == 0) {
			double sum = 0.0;
			for (double v : y) {
				sum += v;
			}
			out.intercept = sum / static_cast<double>(n);
		} else {
			const Eigen::VectorXd coef = least_squares(X, Y);
			out.intercept = coef(0);
			out.beta.assign(coef.data() + 1, coef.data() + coef.size());
		}
	} else if (r > 0) {
		const auto yd = difference(y, d, sdiff);
		const std::size_t m = yd.size();
		Eigen::MatrixXd X(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(r));
		for (std::size_t j = 0; j < r; ++j) {
			const auto col = difference(panel.feature_column(out.regressors.columns[j]), d, sdiff);
			for (std::size_t t = 0; t < m; ++t) {
				X(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = col[t];
			}
		}
		const Eigen::VectorXd Y = Eigen::Map<const Eigen::VectorXd>(yd.data(), static_cast<Eigen::Index>(m));
		const Eigen::VectorXd coef = least_squares(X, Y);
		out.beta.assign(coef.data(), coef.data() + coef.size());
	}

	for (std::size_t t = 0; t < n; ++t) {
		double effect = out.intercept;
		for (std::size_t j = 0; j < r; ++j) {
			effect += out.beta[j] * panel.observations[t].features[out.regressors.columns[j]];
		}
		out.adjusted[t] = y[t] - effect;
	}
	return out;
}

bool is_constant(std::span<const double> v) {
	if (v.empty()) {
		return true;
	}
	const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
	const double scale = std::max({1.0, std::abs(*lo), std::abs(*hi)});
	return (*hi - *lo) <= 1e-12 * scale;
}

std::optional<SeasonalDifferencing> seasonal_diff(const std::optional<SeasonalOrder> &seasonal) {
	if (!seasonal) {
		return std::nullopt;
	}
	return SeasonalDifferencing{seasonal->D, seasonal->s};
}

std::size_t warm_up_of(const ArimaOrder &order, const std::optional<SeasonalOrder> &seasonal) {
	std::size_t w = static_cast<std::size_t>(order.d + order.p);
	if (seasonal) {
		w += static_cast<std::size_t>((seasonal->D + seasonal->P) * seasonal->s);
	}
	return w;
}

} // namespace

bool polynomial_is_stable(std::span<const double> coefficients, double margin) {
	std::size_t p = coefficients.size();
	while (p > 0 && coefficients[p - 1] == 0.0) {
		--p;
	}
	if (p == 0) {
		return true;
	}
	if (!all_finite(coefficients.subspan(0, p))) {
		return false;
	}
	// Reciprocal roots are the roots of lambda^p - c1 lambda^(p-1) - ... - cp.
	const double limit = 1.0 / (1.0 + margin);
	if (p == 1) {
		return std::abs(coefficients[0]) < limit;
	}
	if (p == 2) {
		const std::complex<double> c1 = coefficients[0];
		const std::complex<double> c2 = coefficients[1];
		const auto disc = std::sqrt(c1 * c1 + 4.0 * c2);
		const auto l1 = (c1 + disc) / 2.0;
		const auto l2 = (c1 - disc) / 2.0;
		return std::abs(l1) < limit && std::abs(l2) < limit;
	}
	Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
	for (std::size_t i = 0; i < p; ++i) {
		companion(0, static_cast<Eigen::Index>(i)) = coefficients[i];
	}
	for (std::size_t i = 1; i < p; ++i) {
		companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
	}
	const Eigen::VectorXcd eig = companion.eigenvalues();
	for (Eigen::Index i = 0; i < eig.size(); ++i) {
		if (!(std::abs(eig(i)) < limit)) {
			return false;
		}
	}
	return true;
}

CssEvaluation css_evaluate(std::span<const double> params, std::span<const double> series, const ArimaOrder &order,
                           const std::optional<SeasonalOrder> &seasonal, std::size_t evaluation_start) {
	CssEvaluation out;
	out.negloglik = kInf;
	if (params.size() != param_count(order, seasonal)) {
		throw PreconditionError("parameter vector does not match the model order");
	}
	const auto split = split_params(params, order, seasonal);
	if (!all_finite(params) || !region_ok(split)) {
		return out;
	}
	const auto lags = expand(split, seasonal);
	const std::size_t n = series.size();
	const std::size_t t0 = lags.conditioning;
	const std::size_t start = std::max(t0, evaluation_start);
	if (n <= start) {
		return out;
	}
	out.innovations.assign(n, 0.0);
	auto &e = out.innovations;
	for (std::size_t t = t0; t < n; ++t) {
		double v = series[t];
		for (const auto &[k, a] : lags.ar) {
			v -= a * series[t - k];
		}
		for (const auto &[k, m] : lags.ma) {
			if (k <= t) {
				v -= m * e[t - k];
			}
		}
		e[t] = v;
	}
	double sse = 0.0;
	for (std::size_t t = start; t < n; ++t) {
		sse += e[t] * e[t];
	}
	out.sse = sse;
	out.n_eff = n - start;
	const double nf = static_cast<double>(out.n_eff);
	const double sigma2 = std::max(sse / nf, std::numeric_limits<double>::min());
	out.negloglik = 0.5 * nf * (std::log(2.0 * std::numbers::pi * sigma2) + 1.0);
	if (!std::isfinite(out.negloglik)) {
		out.negloglik = kInf;
	}
	return out;
}

double css_negloglik(std::span<const double> params, std::span<const double> series, const ArimaOrder &order,
                     const std::optional<SeasonalOrder> &seasonal) {
	return css_evaluate(params, series, order, seasonal).negloglik;
}

FittedModel fit_tsa(const series::TimeSeriesPanel &panel, const ModelSpec &spec, std::uint64_t seed,
                    const TsaFitOptions &options) {
	spec.validate();
	if (spec.family != Family::Tsa) {
		throw PreconditionError("fit_tsa called with a non-TSA spec " + spec.label());
	}
	const std::size_t n = panel.size();
	const std::size_t k_arma = param_count(spec.order, spec.seasonal);
	const std::size_t regressors = spec.uses_exogenous ? fit_feature_transform(panel, false).size() : 0;
	if (n < series::kMinFitLength + k_arma + regressors) {
		throw PreconditionError(spec.label() + ": panel of length " + std::to_string(n) + " too short (needs " +
		                        std::to_string(series::kMinFitLength + k_arma + regressors) + ")");
	}
	const auto y = panel.targets();
	if (is_constant(y)) {
		throw DegenerateSeriesError(spec.label() + ": degenerate series (constant target)");
	}

	auto stage = regress_out(panel, spec);
	const auto sdiff = seasonal_diff(spec.seasonal);
	const auto w = difference(stage.adjusted, spec.order.d, sdiff);
	if (std::all_of(w.begin(), w.end(), [](double v) { return std::abs(v) < 1e-300; })) {
		throw DegenerateSeriesError(spec.label() + ": degenerate series (zero variance after differencing)");
	}

	const std::size_t diff_loss = w.size() < n ? n - w.size() : 0;
	std::size_t eval_start = 0;
	if (options.common_evaluation_start) {
		eval_start = *options.common_evaluation_start > diff_loss ? *options.common_evaluation_start - diff_loss : 0;
	}
	const Objective objective = [&](std::span<const double> x) {
		return css_evaluate(x, w, spec.order, spec.seasonal, eval_start).negloglik;
	};

	NelderMeadOptions nm;
	nm.max_iterations = options.max_iterations;
	nm.x_tolerance = options.tolerance;
	Rng rng(derive_seed(seed, "tsa:" + spec.label()));
	std::optional<OptimResult> best;
	for (int r = 0; r < std::max(1, options.restarts); ++r) {
		std::vector<double> start(k_arma);
		for (auto &v : start) {
			v = rng.uniform(-options.jitter, options.jitter);
		}
		auto result = nelder_mead(objective, start, nm);
		if (std::isfinite(result.value) && (!best || result.value < best->value)) {
			best = std::move(result);
		}
	}
	if (!best) {
		throw FitError(spec.label() + ": optimizer produced no finite likelihood after " +
		               std::to_string(options.restarts) + " restarts");
	}

	auto eval = css_evaluate(best->x, w, spec.order, spec.seasonal, eval_start);
	const auto split = split_params(best->x, spec.order, spec.seasonal);
	const std::size_t t0 = expand(split, spec.seasonal).conditioning;

	TsaState state;
	state.order = spec.order;
	state.seasonal = spec.seasonal;
	state.ar.assign(split.ar.begin(), split.ar.end());
	state.ma.assign(split.ma.begin(), split.ma.end());
	state.seasonal_ar.assign(split.sar.begin(), split.sar.end());
	state.seasonal_ma.assign(split.sma.begin(), split.sma.end());
	state.has_intercept = stage.has_intercept;
	state.intercept = stage.intercept;
	state.regressors = stage.regressors;
	state.beta = stage.beta;
	state.sigma2 = eval.sse / static_cast<double>(eval.n_eff);
	state.adjusted = std::move(stage.adjusted);
	state.innovations = eval.innovations;

	FittedModel model;
	model.spec = spec;
	model.params = best->x;
	if (state.has_intercept) {
		model.params.push_back(state.intercept);
	}
	model.params.insert(model.params.end(), state.beta.begin(), state.beta.end());
	model.params.push_back(state.sigma2);
	model.loglik = -eval.negloglik;
	const std::size_t k = k_arma + 1 + (state.has_intercept ? 1 : 0) + state.beta.size();
	model.aic = 2.0 * eval.negloglik + 2.0 * static_cast<double>(k);
	model.residuals.assign(eval.innovations.begin() + static_cast<std::ptrdiff_t>(t0), eval.innovations.end());
	model.training_length = n;
	model.warm_up = diff_loss + t0;
	if (!best->converged) {
		model.diagnostics.push_back(spec.label() + ": simplex search hit the iteration limit");
	}
	model.state = std::move(state);
	return model;
}

ModelSpec select_order(const series::TimeSeriesPanel &panel, ModelKind kind, std::uint64_t seed) {
	if (family_of(kind) != Family::Tsa) {
		throw PreconditionError("select_order applies to TSA kinds only");
	}
	const std::size_t n = panel.size();
	if (is_constant(panel.targets())) {
		throw DegenerateSeriesError(std::string(to_string(kind)) + ": degenerate series (constant target)");
	}
	const bool seasonal = kind_is_seasonal_tsa(kind);
	const int period = series::seasonal_period(panel.grid.length);
	const std::size_t regressors = kind_uses_exogenous(kind) ? fit_feature_transform(panel, false).size() : 0;

	std::vector<ModelSpec> candidates;
	std::size_t common_start = 0;
	const int max_seasonal = seasonal ? 1 : 0;
	for (int p = 0; p <= 3; ++p) {
		for (int d = 0; d <= 2; ++d) {
			for (int q = 0; q <= 3; ++q) {
				for (int P = 0; P <= max_seasonal; ++P) {
					for (int D = 0; D <= max_seasonal; ++D) {
						for (int Q = 0; Q <= max_seasonal; ++Q) {
							ModelSpec spec = ModelSpec::defaults(kind, panel.grid.length);
							spec.order = {p, d, q};
							if (seasonal) {
								spec.seasonal = SeasonalOrder{P, D, Q, period};
							}
							const std::size_t k = param_count(spec.order, spec.seasonal);
							const std::size_t warm = warm_up_of(spec.order, spec.seasonal);
							const bool feasible = n >= series::kMinFitLength + k + regressors && n > warm &&
							                      n - warm >= std::max<std::size_t>(series::kMinFitLength, k + 2);
							if (!feasible) {
								continue;
							}
							common_start = std::max(common_start, warm);
							candidates.push_back(std::move(spec));
						}
					}
				}
			}
		}
	}

	TsaFitOptions options;
	options.common_evaluation_start = common_start;
	struct Scored {
		double aic;
		std::size_t k;
		const ModelSpec *spec;
	};
	std::optional<Scored> best;
	std::string last_error;
	const auto key = [](const ModelSpec &s) {
		const auto so = s.seasonal.value_or(SeasonalOrder{});
		return std::array<int, 6>{s.order.p, s.order.d, s.order.q, so.P, so.D, so.Q};
	};
	for (const auto &spec : candidates) {
		try {
			const auto fit = fit_tsa(panel, spec, seed, options);
			const std::size_t k = fit.params.size();
			const Scored current{fit.aic, k, &spec};
			if (!best) {
				best = current;
				continue;
			}
			const double tol = 1e-9 * std::max(1.0, std::abs(best->aic));
			const bool better = current.aic < best->aic - tol ||
			                    (std::abs(current.aic - best->aic) <= tol &&
			                     (current.k < best->k || (current.k == best->k && key(spec) < key(*best->spec))));
			if (better) {
				best = current;
			}
		} catch (const DegenerateSeriesError &) {
			throw;
		} catch (const Error &e) {
			last_error = e.what();
		}
	}
	if (!best) {
		throw FitError(std::string(to_string(kind)) + ": order selection failed for every candidate" +
		               (last_error.empty() ? std::string() : " (last error: " + last_error + ")"));
	}
	return *best->spec;
}

ForecastResult forecast_tsa(const FittedModel &model, int h, std::span<const std::vector<double>> future_exogenous) {
	if (h < 1) {
		throw PreconditionError("forecast horizon must be >= 1");
	}
	const auto &state = std::get<TsaState>(model.state);
	if (model.spec.uses_exogenous && future_exogenous.size() < static_cast<std::size_t>(h)) {
		throw PreconditionError(model.spec.label() + ": future exogenous rows missing for horizon " + std::to_string(h));
	}
	std::vector<double> params;
	params.insert(params.end(), state.ar.begin(), state.ar.end());
	params.insert(params.end(), state.ma.begin(), state.ma.end());
	params.insert(params.end(), state.seasonal_ar.begin(), state.seasonal_ar.end());
	params.insert(params.end(), state.seasonal_ma.begin(), state.seasonal_ma.end());
	const auto split = split_params(params, state.order, state.seasonal);
	const auto lags = expand(split, state.seasonal);
	const auto sdiff = seasonal_diff(state.seasonal);

	auto w = difference(state.adjusted, state.order.d, sdiff);
	auto e = state.innovations;
	const std::size_t hist = w.size();
	for (int j = 0; j < h; ++j) {
		const std::size_t t = w.size();
		double v = 0.0;
		for (const auto &[k, a] : lags.ar) {
			if (k <= t) {
				v += a * w[t - k];
			}
		}
		for (const auto &[k, m] : lags.ma) {
			if (k <= t) {
				v += m * e[t - k];
			}
		}
		w.push_back(v);
		e.push_back(0.0);
	}
	const std::vector<double> w_future(w.begin() + static_cast<std::ptrdiff_t>(hist), w.end());
	const auto u_future = integrate(w_future, state.adjusted, state.order.d, sdiff);

	ForecastResult result;
	result.origin = model.training_length;
	result.horizon = h;
	result.points.resize(static_cast<std::size_t>(h));
	for (int j = 0; j < h; ++j) {
		double v = u_future[static_cast<std::size_t>(j)] + state.intercept;
		for (std::size_t c = 0; c < state.beta.size(); ++c) {
			v += state.beta[c] * future_exogenous[static_cast<std::size_t>(j)].at(state.regressors.columns[c]);
		}
		result.points[static_cast<std::size_t>(j)] = v;
	}

	// psi weights of the full model, differencing included
	Poly ar_full = {1.0};
	{
		Poly ar_poly(1, 1.0);
		for (const auto &[k, a] : lags.ar) {
			if (ar_poly.size() <= k) {
				ar_poly.resize(k + 1, 0.0);
			}
			ar_poly[k] = -a;
		}
		ar_full = ar_poly;
		for (int i = 0; i < state.order.d; ++i) {
			ar_full = multiply(ar_full, {1.0, -1.0});
		}
		if (sdiff) {
			Poly seasonal_step(static_cast<std::size_t>(sdiff->s) + 1, 0.0);
			seasonal_step[0] = 1.0;
			seasonal_step.back() = -1.0;
			for (int i = 0; i < sdiff->D; ++i) {
				ar_full = multiply(ar_full, seasonal_step);
			}
		}
	}
	std::vector<double> ma_coef(static_cast<std::size_t>(h), 0.0);
	for (const auto &[k, m] : lags.ma) {
		if (k < ma_coef.size()) {
			ma_coef[k] = m;
		}
	}
	std::vector<double> psi(static_cast<std::size_t>(h), 0.0);
	psi[0] = 1.0;
	for (std::size_t j = 1; j < psi.size(); ++j) {
		double v = ma_coef[j];
		for (std::size_t k = 1; k <= j && k < ar_full.size(); ++k) {
			v += -ar_full[k] * psi[j - k];
		}
		psi[j] = v;
	}
	std::vector<double> lower(static_cast<std::size_t>(h)), upper(static_cast<std::size_t>(h));
	double cumulative = 0.0;
	for (std::size_t j = 0; j < psi.size(); ++j) {
		cumulative += psi[j] * psi[j];
		const double half = kZ90 * std::sqrt(state.sigma2 * cumulative);
		lower[j] = result.points[j] - half;
		upper[j] = result.points[j] + half;
	}
	result.lower = std::move(lower);
	result.upper = std::move(upper);
	return result;
}

} // namespace defectcast::forecast
