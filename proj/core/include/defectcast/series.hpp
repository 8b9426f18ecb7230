#pragma once

#include "defectcast/ingest.hpp"
#include "defectcast/lifecycle.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace defectcast::series {

enum class WindowLength { Weekly, Biweekly, Monthly };

int window_days(WindowLength length);
std::string_view to_string(WindowLength length);
/// Accepts "weekly", "biweekly"/"bi-weekly", "monthly".
WindowLength parse_window_length(std::string_view text);
/// Yearly seasonality expressed in windows: 52, 26 or 12.
int seasonal_period(WindowLength length);

/// Contiguous half-open windows [start_i, end_i) of equal length.
struct WindowGrid {
	WindowLength length = WindowLength::Weekly;
	EpochSeconds start = 0;
	std::vector<std::pair<EpochSeconds, EpochSeconds>> boundaries;

	std::size_t size() const {
		return boundaries.size();
	}
	bool operator==(const WindowGrid &) const = default;
};

struct Observation {
	double target = 0.0;
	std::vector<double> features;
	bool interpolated = false;

	bool operator==(const Observation &) const = default;
};

/// Panels shorter than this cannot be fitted by any model.
inline constexpr std::size_t kMinFitLength = 8;

struct TimeSeriesPanel {
	WindowGrid grid;
	std::vector<Observation> observations;
	std::vector<std::string> feature_names;

	std::size_t size() const {
		return observations.size();
	}
	std::size_t feature_count() const {
		return feature_names.size();
	}
	std::vector<double> targets() const;
	std::vector<double> feature_column(std::size_t j) const;
	/// First `n` observations with the matching grid prefix.
	TimeSeriesPanel prefix(std::size_t n) const;
	/// Same panel restricted to the named feature columns (in canonical order).
	TimeSeriesPanel without_features(std::span<const std::string> removed) const;

	bool operator==(const TimeSeriesPanel &) const = default;
};

enum class FeatureAggregation { Mean, Sum, Last };

/// Windows anchored at midnight UTC of the first commit; the last window holds the last commit.
WindowGrid build_grid(std::span<const ingest::CommitRecord> commits, WindowLength length);

/// `density` is aligned with `commits`. Empty when the window has no commits.
std::optional<Observation> aggregate_window(std::span<const ingest::CommitRecord> commits,
                                            std::span<const lifecycle::CommitDensity> density,
                                            FeatureAggregation aggregation = FeatureAggregation::Mean);

/// Trims leading/trailing empty windows and fills interior gaps by per-coordinate linear
/// interpolation. Throws PreconditionError("insufficient activity") with fewer than two
/// non-empty windows.
TimeSeriesPanel interpolate_gaps(const std::vector<std::optional<Observation>> &raw, const WindowGrid &grid,
                                 std::vector<std::string> feature_names);

struct PanelOptions {
	FeatureAggregation aggregation = FeatureAggregation::Mean;
};

TimeSeriesPanel build_panel(const ingest::Project &project, const lifecycle::DefectDensitySeries &density,
                            WindowLength length, const PanelOptions &options = {});

/// window_start, interpolated, target, then feature columns.
void write_panel_csv(const TimeSeriesPanel &panel, const std::filesystem::path &path);

} // namespace defectcast::series
