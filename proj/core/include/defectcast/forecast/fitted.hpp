#pragma once

#include "defectcast/forecast/model_spec.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace defectcast::forecast {

/// Rows of exogenous features, one per future (or past) window, in panel feature order.
using FeatureRows = std::vector<std::vector<double>>;

/// Selects the non-constant panel features and stores their training mean/scale.
struct FeatureTransform {
	std::vector<std::size_t> columns;
	std::vector<double> mean;
	std::vector<double> scale;
	bool standardize = true;

	std::size_t size() const {
		return columns.size();
	}
	std::vector<double> apply(std::span<const double> row) const;
};

/// Columns with non-zero spread over the training rows.
FeatureTransform fit_feature_transform(const series::TimeSeriesPanel &panel, bool standardize);

struct TsaState {
	ArimaOrder order;
	std::optional<SeasonalOrder> seasonal;
	std::vector<double> ar;
	std::vector<double> ma;
	std::vector<double> seasonal_ar;
	std::vector<double> seasonal_ma;
	bool has_intercept = false;
	double intercept = 0.0;
	FeatureTransform regressors;
	std::vector<double> beta;
	double sigma2 = 0.0;
	/// Training target minus intercept and regression effect.
	std::vector<double> adjusted;
	/// CSS innovations aligned with difference(adjusted); zero over the conditioning prefix.
	std::vector<double> innovations;
};

enum class BlockKind { Level, Trend, Seasonal, Regression };

struct DlmBlock {
	BlockKind kind = BlockKind::Level;
	std::size_t offset = 0;
	std::size_t dim = 0;
	double discount = 1.0;
};

/// Block-structured state space: evolution matrix G and per-block discount factors.
struct DlmStructure {
	std::vector<DlmBlock> blocks;
	Eigen::MatrixXd evolution;
	std::size_t regression_offset = 0;
	std::size_t regression_dim = 0;

	std::size_t dim() const {
		return static_cast<std::size_t>(evolution.rows());
	}
	/// F_t for the given (already transformed) regressor values.
	Eigen::VectorXd observation_vector(std::span<const double> regressors) const;
};

struct StructureSpec {
	bool trend = false;
	double damping = 1.0;
	int season_length = 0;
	std::size_t regressors = 0;
	Discounts discounts;
};

DlmStructure build_structure(const StructureSpec &spec);

enum class ObservationModel { Gaussian, Poisson };

struct DlmState {
	ObservationModel observation = ObservationModel::Gaussian;
	DlmStructure structure;
	FeatureTransform regressors;
	Eigen::VectorXd mean;
	Eigen::MatrixXd covariance;
	/// Gaussian only: observation variance estimate S_t, its degrees of freedom n_t and discount.
	double obs_variance = 1.0;
	double dof = 1.0;
	double variance_discount = 1.0;
	/// Per filtered step (training index 1..n-1).
	std::vector<Eigen::VectorXd> filtered_means;
	std::vector<double> predictive_means;
	std::vector<double> predictive_variances;
	std::vector<double> min_eigenvalues;
};

struct FittedModel {
	ModelSpec spec;
	/// TSA: ar, ma, seasonal ar, seasonal ma, [intercept], regression, sigma2.
	/// Bayesian: final posterior state mean.
	std::vector<double> params;
	double loglik = 0.0;
	double aic = 0.0;
	std::vector<double> residuals;
	std::size_t training_length = 0;
	std::size_t warm_up = 0;
	std::vector<std::string> diagnostics;
	std::variant<TsaState, DlmState> state;
};

struct ForecastResult {
	std::size_t origin = 0;
	int horizon = 0;
	std::vector<double> points;
	std::optional<std::vector<double>> lower;
	std::optional<std::vector<double>> upper;
};

/// Central interval coverage emitted by every model that defines intervals.
inline constexpr double kIntervalLevel = 0.90;

} // namespace defectcast::forecast
