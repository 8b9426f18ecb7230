#pragma once

#include "defectcast/common.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace defectcast::ingest {

/// One commit. `metrics` follows the owning project's `feature_names` order.
struct CommitRecord {
	std::string id;
	EpochSeconds timestamp = 0;
	bool is_fix = false;
	std::vector<std::string> issue_keys;
	std::vector<double> metrics;

	bool operator==(const CommitRecord &) const = default;
};

struct VersionTag {
	std::string name;
	EpochSeconds release_time = 0;
	int ordinal = 0;

	bool operator==(const VersionTag &) const = default;
};

struct IssueTicket {
	std::string key;
	EpochSeconds open_time = 0;
	std::optional<std::vector<std::string>> affected_versions;
	std::vector<std::string> fix_commit_ids;

	bool operator==(const IssueTicket &) const = default;
};

struct RepoMeta {
	bool archived = false;
	bool fork = false;
	EpochSeconds last_activity = 0;
	std::int64_t contributors = 0;
	std::int64_t stars = 0;

	bool operator==(const RepoMeta &) const = default;
};

/// A loaded project. Immutable after load; commits sorted by timestamp, versions by ordinal.
struct Project {
	std::string name;
	std::vector<std::string> feature_names;
	std::vector<CommitRecord> commits;
	std::vector<VersionTag> versions;
	std::vector<IssueTicket> issues;
	RepoMeta meta;

	/// Value of metric `feature` on `commit`; throws std::out_of_range for unknown names.
	double metric(const CommitRecord &commit, std::string_view feature) const;

	bool operator==(const Project &) const = default;
};

/// Reads commits.csv, versions.csv, issues.csv and meta.json from `dir`.
///
/// Throws LoadError for a missing file, SchemaError (listing offending commit ids) when a commit
/// lacks a metric value, and ParseError with the row number for malformed cells.
Project load_project(const std::filesystem::path &dir);

/// Writes the four tables in the format load_project reads.
void write_project(const Project &project, const std::filesystem::path &dir);

inline constexpr EpochSeconds kMaxInactivity = 180 * kSecondsPerDay;
inline constexpr std::int64_t kMinContributors = 3;
inline constexpr std::int64_t kMinStars = 50;

/// Repository selection: active (< 180 days since last activity), not archived or forked,
/// at least 3 contributors and 50 stars.
bool passes_mining_filter(const RepoMeta &meta, EpochSeconds now);

struct FixLink {
	std::string commit_id;
	std::string issue_key;

	bool operator==(const FixLink &) const = default;
};

struct FixMatching {
	/// Ordered by commit timestamp, then issue key.
	std::vector<FixLink> pairs;
	/// Commits flagged as fixes that no issue links to.
	std::vector<std::string> unmatched_fixes;
	/// Explicit issue -> commit links whose commit is not flagged as a fix (not paired).
	std::vector<FixLink> ambiguous_links;
	std::vector<std::string> warnings;
};

FixMatching identify_fix_commits(std::span<const CommitRecord> commits,
                                 std::span<const IssueTicket> issues);

/// Smallest ordinal whose release time is at or after `timestamp`; k+1 after the last release.
int version_of(EpochSeconds timestamp, std::span<const VersionTag> tags);

} // namespace defectcast::ingest
