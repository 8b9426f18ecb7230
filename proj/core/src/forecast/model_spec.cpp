#include "defectcast/forecast/model_spec.hpp"

#include <algorithm>
#include <cctype>

namespace defectcast::forecast {

namespace {

bool discount_in_range(double d) {
	return d > 0.8 && d <= 1.0;
}

std::string upper(std::string_view text) {
	std::string out(text);
	std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::toupper(c); });
	return out;
}

} // namespace

Family family_of(ModelKind kind) {
	switch (kind) {
	case ModelKind::Arima:
	case ModelKind::Arimax:
	case ModelKind::Sarima:
	case ModelKind::Sarimax:
		return Family::Tsa;
	case ModelKind::Bdlt:
	case ModelKind::Bets:
	case ModelKind::Bdlm:
	case ModelKind::Bdglm:
		return Family::Bayesian;
	case ModelKind::External:
		return Family::Foundation;
	}
	return Family::Tsa;
}

bool kind_uses_exogenous(ModelKind kind) {
	return kind == ModelKind::Arimax || kind == ModelKind::Sarimax || kind == ModelKind::Bdlm ||
	       kind == ModelKind::Bdglm;
}

bool kind_is_seasonal_tsa(ModelKind kind) {
	return kind == ModelKind::Sarima || kind == ModelKind::Sarimax;
}

std::string_view to_string(ModelKind kind) {
	switch (kind) {
	case ModelKind::Arima:
		return "ARIMA";
	case ModelKind::Arimax:
		return "ARIMAX";
	case ModelKind::Sarima:
		return "SARIMA";
	case ModelKind::Sarimax:
		return "SARIMAX";
	case ModelKind::Bdlt:
		return "BDLT";
	case ModelKind::Bets:
		return "BETS";
	case ModelKind::Bdlm:
		return "BDLM";
	case ModelKind::Bdglm:
		return "BDGLM";
	case ModelKind::External:
		return "EXTERNAL";
	}
	return "?";
}

ModelKind parse_model_kind(std::string_view text) {
	const auto u = upper(text);
	for (auto kind : {ModelKind::Arima, ModelKind::Arimax, ModelKind::Sarima, ModelKind::Sarimax, ModelKind::Bdlt,
	                  ModelKind::Bets, ModelKind::Bdlm, ModelKind::Bdglm}) {
		if (u == to_string(kind)) {
			return kind;
		}
	}
	if (u == "NAIVE" || u.rfind("EXTERNAL:", 0) == 0) {
		return ModelKind::External;
	}
	throw ConfigError("unknown model kind '" + std::string(text) + "'");
}

void ModelSpec::validate() const {
	const auto fail = [&](const std::string &why) { throw ConfigError(label() + ": " + why); };
	if (family != family_of(kind)) {
		fail("family does not match kind");
	}
	if (order.p < 0 || order.d < 0 || order.q < 0) {
		fail("orders must be non-negative");
	}
	if (seasonal.has_value() != kind_is_seasonal_tsa(kind)) {
		fail("seasonal order present iff SARIMA/SARIMAX");
	}
	if (seasonal && (seasonal->P < 0 || seasonal->D < 0 || seasonal->Q < 0 || seasonal->s < 2)) {
		fail("seasonal orders must be non-negative with period >= 2");
	}
	if (uses_exogenous != kind_uses_exogenous(kind)) {
		fail("uses_exogenous must match the kind");
	}
	if (discounts.has_value() != (family == Family::Bayesian)) {
		fail("discounts present iff Bayesian family");
	}
	if (discounts) {
		for (double d : {discounts->level, discounts->trend, discounts->seasonal, discounts->regression}) {
			if (!discount_in_range(d)) {
				fail("discount factors must lie in (0.8, 1]");
			}
		}
	}
	if (damping && !(*damping > 0.0 && *damping <= 1.0)) {
		fail("damping must lie in (0, 1]");
	}
	if (!(variance_discount > 0.0 && variance_discount <= 1.0)) {
		fail("variance discount must lie in (0, 1]");
	}
	if (kind == ModelKind::External && external_name.empty()) {
		fail("external model needs a backend name");
	}
}

std::string ModelSpec::label() const {
	if (kind == ModelKind::External) {
		return external_name.empty() ? "EXTERNAL" : external_name;
	}
	std::string out(to_string(kind));
	if (family == Family::Tsa) {
		out += "(" + std::to_string(order.p) + "," + std::to_string(order.d) + "," + std::to_string(order.q) + ")";
		if (seasonal) {
			out += "(" + std::to_string(seasonal->P) + "," + std::to_string(seasonal->D) + "," +
			       std::to_string(seasonal->Q) + ")[" + std::to_string(seasonal->s) + "]";
		}
	}
	return out;
}

ModelSpec ModelSpec::defaults(ModelKind kind, series::WindowLength window) {
	if (kind == ModelKind::External) {
		return external("naive");
	}
	ModelSpec spec;
	spec.kind = kind;
	spec.family = family_of(kind);
	spec.uses_exogenous = kind_uses_exogenous(kind);
	if (kind_is_seasonal_tsa(kind)) {
		spec.seasonal = SeasonalOrder{0, 0, 0, series::seasonal_period(window)};
	}
	if (spec.family == Family::Bayesian) {
		spec.discounts = Discounts{};
	}
	if (kind == ModelKind::Bdlt) {
		spec.damping = 0.9;
	}
	if (kind == ModelKind::Bets) {
		spec.season_length = series::seasonal_period(window);
	}
	return spec;
}

ModelSpec ModelSpec::external(std::string name) {
	ModelSpec spec;
	spec.kind = ModelKind::External;
	spec.family = Family::Foundation;
	spec.external_name = std::move(name);
	return spec;
}

} // namespace defectcast::forecast
