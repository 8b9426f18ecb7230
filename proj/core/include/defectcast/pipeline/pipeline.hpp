#pragma once

#include "defectcast/evaluation.hpp"
#include "defectcast/pipeline/config.hpp"
#include "defectcast/stats/routing.hpp"
#include "defectcast/symptoms/ablation.hpp"
#include "defectcast/symptoms/importance.hpp"

#include <optional>
#include <string>
#include <vector>

namespace defectcast::pipeline {

inline constexpr const char *kVersion = "0.1.0";

struct ProjectSummary {
	std::string name;
	bool included = true;
	std::string exclusion_reason;
	std::size_t commits = 0;
	std::size_t defects = 0;
	std::size_t explicit_iv = 0;
	std::size_t estimated_iv = 0;
	double stable_proportion = 1.0;
	std::size_t proportion_samples = 0;
	/// (window, panel length)
	std::vector<std::pair<std::string, std::size_t>> panels;
	std::vector<std::string> notes;
};

/// One (project, model, window) walk-forward run.
struct ModelRun {
	std::string project;
	std::string model;
	std::string window;
	std::string spec_label;
	std::size_t origins = 0;
	std::size_t failed_origins = 0;
	bool unreliable = false;
	std::vector<std::string> notes;
};

/// Model comparison at one (window, horizon) on per-forecast absolute errors.
struct HorizonComparison {
	std::string window;
	int horizon = 0;
	std::vector<std::string> models;
	std::optional<stats::AnalysisReport> analysis;
	std::string skipped_reason;
};

struct ImportanceSection {
	std::string project;
	std::string window;
	std::vector<symptoms::ImportanceRanking> rankings;
	std::vector<std::string> consensus;
	std::vector<std::string> notes;
};

struct AblationSection {
	std::string project;
	std::string window;
	std::string model;
	std::string spec_label;
	std::vector<symptoms::AblationResult> results;
	/// Outcome of removing the whole top-k set.
	std::optional<bool> top_k_rejected;
	std::vector<std::string> notes;
};

struct Provenance {
	std::string config_hash;
	std::string input_hash;
	std::string run_hash;
	std::uint64_t seed = 0;
	std::string version;
};

struct StudyReport {
	Provenance provenance;
	std::string config;
	double alpha = 0.01;
	std::vector<ProjectSummary> projects;
	std::vector<ModelRun> runs;
	std::vector<eval::ErrorRecord> errors;
	std::vector<HorizonComparison> comparisons;
	std::optional<std::string> best_model;
	std::optional<std::string> best_window;
	std::vector<ImportanceSection> importance;
	std::vector<AblationSection> ablations;
	std::vector<std::string> notes;
	/// Raw walk-forward tuples; written to forecasts.csv, not embedded in report.json.
	std::vector<eval::LabeledTuple> tuples;
};

/// ingest -> label -> panels -> walk-forward -> statistics -> importance -> ablation.
/// Model failures become flagged report cells; configuration and data errors throw.
StudyReport run_pipeline(const RunConfig &config);

/// report.json, report.md, errors.csv, forecasts.csv, stats.json, importance.csv,
/// consensus.csv, ablation.csv and runs.csv.
void write_outputs(const StudyReport &report, const std::filesystem::path &dir);

/// FNV-1a over the project tables in a fixed order.
std::uint64_t hash_project_inputs(const std::filesystem::path &project_dir, std::uint64_t basis);

} // namespace defectcast::pipeline
