#pragma once

#include "defectcast/forecast/backend.hpp"
#include "defectcast/forecast/model.hpp"
#include "defectcast/series.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace defectcast::eval {

enum class TrainingWindow { Expanding, Sliding };

struct WalkForwardPlan {
	std::size_t initial_train = 0;
	std::size_t step = 1;
	std::vector<std::size_t> origins;
	std::vector<int> horizons;
	TrainingWindow window = TrainingWindow::Expanding;

	int max_horizon() const;
};

inline const std::vector<int> kDefaultHorizons{1, 2, 4, 8, 12};

/// initial_train = max(ceil(0.6 n), 8); origins initial_train .. n - max(horizons).
WalkForwardPlan plan_walk_forward(std::size_t n, std::vector<int> horizons,
                                  TrainingWindow window = TrainingWindow::Expanding);

/// Future exogenous rows: the observed ones, or the last training row repeated.
enum class ExogenousMode { Known, FreezeLast };

struct ForecastTuple {
	std::size_t origin = 0;
	int horizon = 0;
	double actual = 0.0;
	std::optional<double> predicted;
	std::string failed_reason;

	bool operator==(const ForecastTuple &) const = default;
};

/// What a forecaster was shown at one origin. Filled in by run_walk_forward.
struct AccessRecord {
	std::size_t origin = 0;
	std::size_t train_begin = 0;
	std::size_t train_end = 0;
	/// Future rows handed over carry features only; their targets are never passed.
	std::size_t exogenous_rows = 0;
};

class AccessAudit {
public:
	void record(const AccessRecord &r) {
		records_.push_back(r);
	}
	const std::vector<AccessRecord> &records() const {
		return records_;
	}
	/// True when every fit read only indices below its origin.
	bool no_lookahead() const;

private:
	std::vector<AccessRecord> records_;
};

/// Fits on `train` and forecasts `h` steps given future feature rows.
using Forecaster = std::function<forecast::ForecastResult(const series::TimeSeriesPanel &train, int h,
                                                          std::span<const std::vector<double>> future_exogenous)>;

struct WalkForwardOptions {
	ExogenousMode exogenous = ExogenousMode::Known;
	AccessAudit *audit = nullptr;
};

struct WalkForwardRun {
	std::vector<ForecastTuple> tuples;
	std::size_t origins = 0;
	std::size_t failed_origins = 0;
	bool unreliable = false;
	std::vector<std::string> diagnostics;
};

WalkForwardRun run_walk_forward(const series::TimeSeriesPanel &panel, const Forecaster &forecaster,
                                const WalkForwardPlan &plan, const WalkForwardOptions &options = {});

/// Native model refitted at each origin. Degenerate (constant) training targets fall back to
/// repeating the last value, with a note appended to `notes` when given.
Forecaster native_forecaster(forecast::ModelSpec spec, std::uint64_t seed, std::vector<std::string> *notes = nullptr);

/// Univariate series sent to a backend; features are ignored.
Forecaster backend_forecaster(forecast::ForecastBackend &backend, std::string model = {});

struct Metrics {
	std::optional<double> mape;
	double mae = 0.0;
	double rmse = 0.0;
	std::size_t n = 0;
	std::size_t mape_excluded = 0;
};

inline constexpr double kMapeZeroThreshold = 1e-9;

/// Pairs are (actual, predicted).
Metrics error_metrics(std::span<const std::pair<double, double>> pairs);

struct LabeledTuple {
	std::string project;
	std::string model;
	series::WindowLength window = series::WindowLength::Weekly;
	ForecastTuple tuple;
};

struct ErrorRecord {
	std::string model;
	series::WindowLength window = series::WindowLength::Weekly;
	int horizon = 0;
	std::optional<double> mape;
	double mae = 0.0;
	double rmse = 0.0;
	std::size_t n_forecasts = 0;
	std::size_t mape_excluded = 0;
	std::size_t failed = 0;
};

/// One record per (model, window, horizon) with at least one successful forecast, ordered by
/// model name, window length, horizon.
std::vector<ErrorRecord> summarize(std::span<const LabeledTuple> tuples);

void write_forecasts_csv(std::span<const LabeledTuple> tuples, const std::filesystem::path &path);
void write_errors_csv(std::span<const ErrorRecord> records, const std::filesystem::path &path);

} // namespace defectcast::eval
