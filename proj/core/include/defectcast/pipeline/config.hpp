#pragma once

#include "defectcast/evaluation.hpp"
#include "defectcast/forecast/model_spec.hpp"
#include "defectcast/series.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace defectcast::pipeline {

/// A configured model entry: a native kind, "naive", or "external:<backend>".
struct ModelEntry {
	std::string name;
	forecast::ModelKind kind = forecast::ModelKind::Arima;
	/// Backend key for external entries ("naive" for the built-in one).
	std::string backend;

	bool operator==(const ModelEntry &) const = default;
};

struct RunConfig {
	std::vector<std::filesystem::path> projects;
	std::vector<series::WindowLength> windows;
	std::vector<ModelEntry> models;
	std::vector<int> horizons = eval::kDefaultHorizons;
	double alpha = 0.01;
	std::uint64_t seed = 0;
	/// Backend name -> argv of the adapter process.
	std::map<std::string, std::vector<std::string>> backends;
	std::chrono::milliseconds backend_timeout{120000};
	std::filesystem::path output_dir = "out";
	std::size_t ablation_k = 8;
	std::vector<int> ablation_horizons{1};
	bool run_importance = true;
	bool run_ablation = true;
	/// Mining filter reference time; the filter is skipped when absent.
	std::optional<EpochSeconds> mining_filter_now;
	bool use_explicit_iv = true;
	eval::ExogenousMode exogenous = eval::ExogenousMode::Known;
	eval::TrainingWindow training_window = eval::TrainingWindow::Expanding;
	series::FeatureAggregation aggregation = series::FeatureAggregation::Mean;
	std::size_t workers = 1;

	/// Throws ConfigError on any inconsistency.
	void validate() const;
};

/// Parses a JSON configuration; relative paths resolve against `base_dir`.
RunConfig parse_config(std::string_view text, const std::filesystem::path &base_dir);
RunConfig load_config(const std::filesystem::path &path);

/// Canonical, key-sorted JSON form used for hashing and echoing into reports.
std::string canonical_config(const RunConfig &config);

ModelEntry parse_model_entry(std::string_view text);

} // namespace defectcast::pipeline
