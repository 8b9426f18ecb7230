#pragma once

#include "defectcast/ingest.hpp"
#include "defectcast/lifecycle.hpp"
#include "defectcast/series.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace defectcast::pipeline {

struct SynthParams {
	std::string name = "synthetic";
	int days = 730;
	double commits_per_day = 2.0;
	std::size_t features = 6;
	/// Expected number of defects per day.
	double defect_rate = 0.08;
	/// Weight of the active-defect count in the planted features.
	double signal = 1.0;
	std::size_t planted_features = 2;
	int release_every_days = 30;
	/// Share of defects whose ticket carries an affected-versions list.
	double av_fraction = 0.5;
	/// Share of defects whose IV ignores the generating proportion.
	double outlier_fraction = 0.1;
	double true_proportion = 1.5;
	/// Maximum days between a ticket opening and its fix.
	int max_report_delay_days = 90;
	/// 0 = unlimited.
	std::size_t max_commits = 0;
	/// 0 = unlimited.
	std::size_t max_defects = 0;
	EpochSeconds start = 1'577'836'800; // 2020-01-01T00:00:00Z
};

struct SynthDefect {
	lifecycle::DefectRecord record;
	bool has_affected_versions = false;
	bool outlier = false;
};

struct SynthProject {
	ingest::Project project;
	std::vector<SynthDefect> truth;
	std::vector<std::string> planted;
};

/// Poisson commit arrivals, a release every `release_every_days` (the last one at or after the
/// end), defects with known IV/OV/FV, and planted features that rise with the active-defect count.
SynthProject synth_project(std::uint64_t seed, const SynthParams &params);

/// Writes the ingest tables plus truth.json into `dir`.
void write_synth_project(const SynthProject &synth, const std::filesystem::path &dir);

struct PanelSynthParams {
	std::size_t n = 200;
	std::size_t features = 10;
	/// Indices of the features that drive the target.
	std::vector<std::size_t> signal_features{0};
	double signal = 1.0;
	double noise = 0.5;
	series::WindowLength window = series::WindowLength::Weekly;
	EpochSeconds start = 1'577'836'800;
};

/// Window-level panel with iid standard-normal features named f1..fp and
/// target = signal * sum(signal features) + noise.
series::TimeSeriesPanel synth_panel(std::uint64_t seed, const PanelSynthParams &params);

} // namespace defectcast::pipeline
