#pragma once

#include "defectcast/series.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace defectcast::forecast {

enum class Family { Tsa, Bayesian, Foundation };

enum class ModelKind { Arima, Arimax, Sarima, Sarimax, Bdlt, Bets, Bdlm, Bdglm, External };

struct ArimaOrder {
	int p = 0;
	int d = 0;
	int q = 0;
	bool operator==(const ArimaOrder &) const = default;
};

struct SeasonalOrder {
	int P = 0;
	int D = 0;
	int Q = 0;
	int s = 0;
	bool operator==(const SeasonalOrder &) const = default;
};

/// Discount factors per state block, each in (0.8, 1].
struct Discounts {
	double level = 0.98;
	double trend = 0.98;
	double seasonal = 0.95;
	double regression = 0.95;
	bool operator==(const Discounts &) const = default;
};

struct ModelSpec {
	Family family = Family::Tsa;
	ModelKind kind = ModelKind::Arima;
	/// Backend model name for ModelKind::External ("naive" is built in).
	std::string external_name;
	ArimaOrder order;
	std::optional<SeasonalOrder> seasonal;
	bool uses_exogenous = false;
	std::optional<Discounts> discounts;
	/// Trend damping for BDLT, in (0, 1].
	std::optional<double> damping;
	/// Seasonal block length for BETS (0 disables the block).
	int season_length = 0;
	/// Observation-variance discount for the Gaussian DLMs (1 = static conjugate learning).
	double variance_discount = 0.99;
	double prior_state_variance = 1e4;

	/// Throws ConfigError when the field combination is inconsistent with `kind`.
	void validate() const;
	/// For example "ARIMA(1,1,0)", "SARIMAX(0,1,1)(1,0,0)[12]", "BDLT", "naive".
	std::string label() const;

	/// Defaults for `kind`: zero orders, seasonal period from the window, Bayesian priors.
	static ModelSpec defaults(ModelKind kind, series::WindowLength window = series::WindowLength::Weekly);
	static ModelSpec external(std::string name);

	bool operator==(const ModelSpec &) const = default;
};

Family family_of(ModelKind kind);
bool kind_uses_exogenous(ModelKind kind);
bool kind_is_seasonal_tsa(ModelKind kind);
std::string_view to_string(ModelKind kind);
/// Accepts the kind names case-insensitively; "naive" and "external:<name>" yield External.
ModelKind parse_model_kind(std::string_view text);

} // namespace defectcast::forecast
