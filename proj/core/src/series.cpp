#include "defectcast/series.hpp"

#include "defectcast/csv.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace defectcast::series {

namespace {

EpochSeconds floor_div(EpochSeconds a, EpochSeconds b) {
	EpochSeconds q = a / b;
	if ((a % b != 0) && ((a < 0) != (b < 0))) {
		--q;
	}
	return q;
}

} // namespace

int window_days(WindowLength length) {
	switch (length) {
	case WindowLength::Weekly:
		return 7;
	case WindowLength::Biweekly:
		return 14;
	case WindowLength::Monthly:
		return 30;
	}
	return 7;
}

std::string_view to_string(WindowLength length) {
	switch (length) {
	case WindowLength::Weekly:
		return "weekly";
	case WindowLength::Biweekly:
		return "biweekly";
	case WindowLength::Monthly:
		return "monthly";
	}
	return "weekly";
}

WindowLength parse_window_length(std::string_view text) {
	if (text == "weekly") {
		return WindowLength::Weekly;
	}
	if (text == "biweekly" || text == "bi-weekly") {
		return WindowLength::Biweekly;
	}
	if (text == "monthly") {
		return WindowLength::Monthly;
	}
	throw ConfigError("unknown window length '" + std::string(text) + "'");
}

int seasonal_period(WindowLength length) {
	switch (length) {
	case WindowLength::Weekly:
		return 52;
	case WindowLength::Biweekly:
		return 26;
	case WindowLength::Monthly:
		return 12;
	}
	return 52;
}

std::vector<double> TimeSeriesPanel::targets() const {
	std::vector<double> out;
	out.reserve(observations.size());
	for (const auto &o : observations) {
		out.push_back(o.target);
	}
	return out;
}

std::vector<double> TimeSeriesPanel::feature_column(std::size_t j) const {
	std::vector<double> out;
	out.reserve(observations.size());
	for (const auto &o : observations) {
		out.push_back(o.features.at(j));
	}
	return out;
}

TimeSeriesPanel TimeSeriesPanel::prefix(std::size_t n) const {
	n = std::min(n, observations.size());
	TimeSeriesPanel out;
	out.grid.length = grid.length;
	out.grid.start = grid.start;
	out.grid.boundaries.assign(grid.boundaries.begin(),
	                           grid.boundaries.begin() + static_cast<std::ptrdiff_t>(std::min(n, grid.size())));
	out.observations.assign(observations.begin(), observations.begin() + static_cast<std::ptrdiff_t>(n));
	out.feature_names = feature_names;
	return out;
}

TimeSeriesPanel TimeSeriesPanel::without_features(std::span<const std::string> removed) const {
	const std::set<std::string> drop(removed.begin(), removed.end());
	std::vector<std::size_t> keep;
	TimeSeriesPanel out;
	out.grid = grid;
	for (std::size_t j = 0; j < feature_names.size(); ++j) {
		if (!drop.contains(feature_names[j])) {
			keep.push_back(j);
			out.feature_names.push_back(feature_names[j]);
		}
	}
	out.observations.reserve(observations.size());
	for (const auto &o : observations) {
		Observation copy;
		copy.target = o.target;
		copy.interpolated = o.interpolated;
		copy.features.reserve(keep.size());
		for (auto j : keep) {
			copy.features.push_back(o.features[j]);
		}
		out.observations.push_back(std::move(copy));
	}
	return out;
}

WindowGrid build_grid(std::span<const ingest::CommitRecord> commits, WindowLength length) {
	if (commits.empty()) {
		throw PreconditionError("cannot build a window grid without commits");
	}
	const auto [lo, hi] = std::minmax_element(
	    commits.begin(), commits.end(),
	    [](const ingest::CommitRecord &a, const ingest::CommitRecord &b) { return a.timestamp < b.timestamp; });
	const EpochSeconds width = static_cast<EpochSeconds>(window_days(length)) * kSecondsPerDay;
	WindowGrid grid;
	grid.length = length;
	grid.start = floor_div(lo->timestamp, kSecondsPerDay) * kSecondsPerDay;
	const EpochSeconds count = floor_div(hi->timestamp - grid.start, width) + 1;
	grid.boundaries.reserve(static_cast<std::size_t>(count));
	for (EpochSeconds i = 0; i < count; ++i) {
		grid.boundaries.emplace_back(grid.start + i * width, grid.start + (i + 1) * width);
	}
	return grid;
}

std::optional<Observation> aggregate_window(std::span<const ingest::CommitRecord> commits,
                                            std::span<const lifecycle::CommitDensity> density,
                                            FeatureAggregation aggregation) {
	if (commits.empty()) {
		return std::nullopt;
	}
	if (density.size() != commits.size()) {
		throw PreconditionError("density series is not aligned with the window's commits");
	}
	Observation obs;
	obs.target = static_cast<double>(density.back().active_defects);
	const std::size_t p = commits.front().metrics.size();
	obs.features.assign(p, 0.0);
	switch (aggregation) {
	case FeatureAggregation::Mean:
	case FeatureAggregation::Sum:
		for (const auto &c : commits) {
			for (std::size_t j = 0; j < p; ++j) {
				obs.features[j] += c.metrics[j];
			}
		}
		if (aggregation == FeatureAggregation::Mean) {
			for (auto &f : obs.features) {
				f /= static_cast<double>(commits.size());
			}
		}
		break;
	case FeatureAggregation::Last:
		obs.features = commits.back().metrics;
		break;
	}
	return obs;
}

TimeSeriesPanel interpolate_gaps(const std::vector<std::optional<Observation>> &raw, const WindowGrid &grid,
                                 std::vector<std::string> feature_names) {
	std::vector<std::size_t> present;
	for (std::size_t i = 0; i < raw.size(); ++i) {
		if (raw[i]) {
			present.push_back(i);
		}
	}
	if (present.size() < 2) {
		throw PreconditionError("insufficient activity: fewer than two active windows");
	}
	const std::size_t first = present.front();
	const std::size_t last = present.back();

	TimeSeriesPanel panel;
	panel.feature_names = std::move(feature_names);
	panel.grid.length = grid.length;
	if (grid.size() == raw.size()) {
		panel.grid.boundaries.assign(grid.boundaries.begin() + static_cast<std::ptrdiff_t>(first),
		                             grid.boundaries.begin() + static_cast<std::ptrdiff_t>(last) + 1);
		panel.grid.start = panel.grid.boundaries.front().first;
	} else {
		panel.grid = grid;
	}

	for (std::size_t k = 0; k + 1 < present.size(); ++k) {
		const std::size_t a = present[k];
		const std::size_t b = present[k + 1];
		panel.observations.push_back(*raw[a]);
		const auto &left = *raw[a];
		const auto &right = *raw[b];
		const double span = static_cast<double>(b - a);
		for (std::size_t i = a + 1; i < b; ++i) {
			const double w = static_cast<double>(i - a) / span;
			Observation fill;
			fill.interpolated = true;
			fill.target = left.target + w * (right.target - left.target);
			fill.features.resize(left.features.size());
			for (std::size_t j = 0; j < left.features.size(); ++j) {
				fill.features[j] = left.features[j] + w * (right.features[j] - left.features[j]);
			}
			panel.observations.push_back(std::move(fill));
		}
	}
	panel.observations.push_back(*raw[last]);
	return panel;
}

TimeSeriesPanel build_panel(const ingest::Project &project, const lifecycle::DefectDensitySeries &density,
                            WindowLength length, const PanelOptions &options) {
	if (density.size() != project.commits.size()) {
		throw PreconditionError("density series length does not match commit count");
	}
	const auto grid = build_grid(project.commits, length);
	std::vector<std::optional<Observation>> raw;
	raw.reserve(grid.size());
	const std::span<const ingest::CommitRecord> commits(project.commits);
	const std::span<const lifecycle::CommitDensity> dens(density);
	std::size_t cursor = 0;
	for (const auto &[start, end] : grid.boundaries) {
		const std::size_t begin = cursor;
		while (cursor < commits.size() && commits[cursor].timestamp < end) {
			++cursor;
		}
		raw.push_back(aggregate_window(commits.subspan(begin, cursor - begin), dens.subspan(begin, cursor - begin),
		                               options.aggregation));
	}
	return interpolate_gaps(raw, grid, project.feature_names);
}

void write_panel_csv(const TimeSeriesPanel &panel, const std::filesystem::path &path) {
	std::ofstream out(path, std::ios::binary);
	if (!out) {
		throw Error("cannot write " + path.string());
	}
	std::vector<std::string> header = {"window_start", "interpolated", "target"};
	header.insert(header.end(), panel.feature_names.begin(), panel.feature_names.end());
	csv::write_row(out, header);
	for (std::size_t i = 0; i < panel.size(); ++i) {
		const auto &o = panel.observations[i];
		std::vector<std::string> row = {
		    i < panel.grid.size() ? std::to_string(panel.grid.boundaries[i].first) : std::string(),
		    o.interpolated ? "1" : "0", format_double(o.target)};
		for (double f : o.features) {
			row.push_back(format_double(f));
		}
		csv::write_row(out, row);
	}
}

} // namespace defectcast::series
