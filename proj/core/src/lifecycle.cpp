#include "defectcast/lifecycle.hpp"

#include "defectcast/csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>

namespace defectcast::lifecycle {

namespace {

void note(std::vector<std::string> *sink, std::string message) {
	if (sink != nullptr) {
		sink->push_back(std::move(message));
	}
}

const ingest::CommitRecord &find_commit(const ingest::Project &project, const std::string &id) {
	for (const auto &c : project.commits) {
		if (c.id == id) {
			return c;
		}
	}
	throw PreconditionError("unknown commit " + id);
}

const ingest::IssueTicket &find_issue(const ingest::Project &project, const std::string &key) {
	for (const auto &issue : project.issues) {
		if (issue.key == key) {
			return issue;
		}
	}
	throw PreconditionError("unknown issue " + key);
}

/// Lower bound (exclusive) of version `iv`: the release time of iv - 1, or -infinity for iv = 1.
EpochSeconds version_start(int iv, std::span<const ingest::VersionTag> tags) {
	if (iv <= 1 || tags.empty()) {
		return std::numeric_limits<EpochSeconds>::min();
	}
	const auto index = static_cast<std::size_t>(std::min<int>(iv - 1, static_cast<int>(tags.size()))) - 1;
	return tags[index].release_time;
}

} // namespace

std::string_view to_string(IvProvenance provenance) {
	return provenance == IvProvenance::Explicit ? "explicit" : "estimated";
}

PartialDefect anchor_defect(const ingest::FixLink &pair, const ingest::Project &project,
                            std::vector<std::string> *diagnostics) {
	const auto &commit = find_commit(project, pair.commit_id);
	const auto &issue = find_issue(project, pair.issue_key);
	const std::span<const ingest::VersionTag> tags(project.versions);

	PartialDefect defect;
	defect.id = issue.key;
	defect.fix_commit = commit.id;
	defect.fv = ingest::version_of(commit.timestamp, tags);
	defect.ov = ingest::version_of(issue.open_time, tags);
	if (commit.timestamp < issue.open_time) {
		note(diagnostics, issue.key + ": fixing commit " + commit.id + " precedes the ticket; ov clamped to fv");
		defect.ov = std::min(defect.ov, defect.fv);
	}

	if (issue.affected_versions) {
		std::optional<int> iv;
		for (const auto &name : *issue.affected_versions) {
			const auto it = std::find_if(tags.begin(), tags.end(),
			                             [&](const ingest::VersionTag &t) { return t.name == name; });
			if (it == tags.end()) {
				note(diagnostics, issue.key + ": affected version " + name + " is not a known release; ignored");
				continue;
			}
			if (it->ordinal > defect.fv) {
				note(diagnostics, issue.key + ": affected version " + name + " is after the fixing version; ignored");
				continue;
			}
			iv = iv ? std::min(*iv, it->ordinal) : it->ordinal;
		}
		if (iv && *iv > defect.ov) {
			note(diagnostics, issue.key + ": earliest affected version is after the opening version; iv capped at ov");
			iv = defect.ov;
		}
		defect.iv = iv;
	}
	return defect;
}

StableProportion compute_stable_proportion(std::span<const PartialDefect> defects) {
	// Sum in a fixed (sorted) order so the result is permutation-invariant bit for bit.
	std::vector<double> ratios;
	for (const auto &d : defects) {
		if (!d.iv) {
			continue;
		}
		const double denom = std::max(d.fv - d.ov, 1);
		ratios.push_back(static_cast<double>(d.fv - *d.iv) / denom);
	}
	if (ratios.empty()) {
		return {1.0, 0};
	}
	std::sort(ratios.begin(), ratios.end());
	double sum = 0.0;
	for (double r : ratios) {
		sum += r;
	}
	return {sum / static_cast<double>(ratios.size()), ratios.size()};
}

DefectRecord estimate_iv(const PartialDefect &defect, const StableProportion &sp) {
	const int span = std::max(defect.fv - defect.ov, 1);
	const auto back = static_cast<int>(std::round(sp.p * span));
	int iv = std::max(1, defect.fv - back);
	iv = std::min(iv, defect.ov);
	iv = std::max(iv, 1);
	return {defect.id, defect.fix_commit, iv, IvProvenance::Estimated, defect.ov, defect.fv};
}

DefectRecord from_explicit(const PartialDefect &defect) {
	if (!defect.iv) {
		throw PreconditionError(defect.id + ": no explicit injection version");
	}
	return {defect.id, defect.fix_commit, *defect.iv, IvProvenance::Explicit, defect.ov, defect.fv};
}

std::vector<std::string> label_affected_commits(const DefectRecord &defect,
                                                std::span<const ingest::CommitRecord> commits,
                                                std::span<const ingest::VersionTag> tags) {
	const auto fix = std::find_if(commits.begin(), commits.end(),
	                              [&](const ingest::CommitRecord &c) { return c.id == defect.fix_commit; });
	if (fix == commits.end()) {
		throw PreconditionError(defect.id + ": fixing commit " + defect.fix_commit + " not in commit list");
	}
	const EpochSeconds lower = version_start(defect.iv, tags);
	std::vector<std::string> out;
	for (const auto &c : commits) {
		if (c.timestamp > lower && c.timestamp < fix->timestamp) {
			out.push_back(c.id);
		}
	}
	return out;
}

DefectDensitySeries build_density_series(std::span<const ingest::CommitRecord> commits,
                                         std::span<const ingest::VersionTag> tags,
                                         std::span<const DefectRecord> defects) {
	// Each defect covers a contiguous run of the time-sorted commits; accumulate with a difference array.
	std::unordered_map<std::string, EpochSeconds> fix_time;
	for (const auto &c : commits) {
		fix_time.emplace(c.id, c.timestamp);
	}
	const auto by_time = [](const ingest::CommitRecord &c, EpochSeconds t) { return c.timestamp < t; };
	std::vector<int> delta(commits.size() + 1, 0);
	for (const auto &d : defects) {
		const auto it = fix_time.find(d.fix_commit);
		if (it == fix_time.end()) {
			throw PreconditionError(d.id + ": fixing commit " + d.fix_commit + " not in commit list");
		}
		const EpochSeconds lower = version_start(d.iv, tags);
		// first commit with timestamp > lower
		auto first = lower == std::numeric_limits<EpochSeconds>::min()
		                 ? commits.begin()
		                 : std::lower_bound(commits.begin(), commits.end(), lower + 1, by_time);
		// first commit with timestamp >= fix time
		auto last = std::lower_bound(commits.begin(), commits.end(), it->second, by_time);
		if (first < last) {
			++delta[static_cast<std::size_t>(first - commits.begin())];
			--delta[static_cast<std::size_t>(last - commits.begin())];
		}
	}
	DefectDensitySeries series;
	series.reserve(commits.size());
	int running = 0;
	for (std::size_t i = 0; i < commits.size(); ++i) {
		running += delta[i];
		series.push_back({commits[i].id, commits[i].timestamp, running});
	}
	return series;
}

LabelingResult label_project(const ingest::Project &project, const LabelingOptions &options) {
	LabelingResult result;
	result.matching = ingest::identify_fix_commits(project.commits, project.issues);
	for (const auto &w : result.matching.warnings) {
		result.diagnostics.push_back(w);
	}
	for (const auto &link : result.matching.ambiguous_links) {
		result.diagnostics.push_back("issue " + link.issue_key + " links commit " + link.commit_id +
		                             " which is not flagged as a fix; link not used");
	}

	std::vector<PartialDefect> partial;
	partial.reserve(result.matching.pairs.size());
	for (const auto &pair : result.matching.pairs) {
		partial.push_back(anchor_defect(pair, project, &result.diagnostics));
	}
	result.proportion = compute_stable_proportion(partial);
	if (!options.use_explicit_iv) {
		for (auto &d : partial) {
			d.iv.reset();
		}
	}
	for (const auto &d : partial) {
		result.defects.push_back(d.iv ? from_explicit(d) : estimate_iv(d, result.proportion));
	}
	result.density = build_density_series(project.commits, project.versions, result.defects);
	return result;
}

void write_defects_csv(std::span<const DefectRecord> defects, const std::filesystem::path &path) {
	std::ofstream out(path, std::ios::binary);
	if (!out) {
		throw Error("cannot write " + path.string());
	}
	csv::write_row(out, {"id", "iv", "iv_provenance", "ov", "fv", "fix_commit"});
	for (const auto &d : defects) {
		csv::write_row(out, {d.id, std::to_string(d.iv), std::string(to_string(d.provenance)), std::to_string(d.ov),
		                     std::to_string(d.fv), d.fix_commit});
	}
}

void write_density_csv(const DefectDensitySeries &density, const std::filesystem::path &path) {
	std::ofstream out(path, std::ios::binary);
	if (!out) {
		throw Error("cannot write " + path.string());
	}
	csv::write_row(out, {"commit_id", "timestamp", "active_defects"});
	for (const auto &d : density) {
		csv::write_row(out, {d.commit_id, std::to_string(d.timestamp), std::to_string(d.active_defects)});
	}
}

} // namespace defectcast::lifecycle
