#include "defectcast/ingest.hpp"

#include "defectcast/csv.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace defectcast::ingest {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> split_list(const std::string &cell) {
	std::vector<std::string> out;
	if (trim(cell).empty()) {
		return out;
	}
	for (auto &part : split(cell, ';')) {
		auto t = trim(part);
		if (!t.empty()) {
			out.push_back(std::move(t));
		}
	}
	return out;
}

bool parse_bool(const std::string &cell, std::size_t row) {
	const auto t = trim(cell);
	if (t == "1" || t == "true" || t == "True" || t == "TRUE") {
		return true;
	}
	if (t == "0" || t == "false" || t == "False" || t == "FALSE" || t.empty()) {
		return false;
	}
	throw ParseError("row " + std::to_string(row) + ": invalid boolean '" + t + "'", row);
}

EpochSeconds parse_time(const std::string &cell, std::size_t row, const std::string &file) {
	try {
		return parse_int(cell);
	} catch (const std::invalid_argument &) {
		throw ParseError(file + " row " + std::to_string(row) + ": invalid timestamp '" + cell + "'", row);
	}
}

void require_columns(const csv::Table &table, const std::vector<std::string> &names, const fs::path &file) {
	for (std::size_t i = 0; i < names.size(); ++i) {
		if (i >= table.header.size() || trim(table.header[i]) != names[i]) {
			throw SchemaError(file.filename().string() + ": expected column " + std::to_string(i + 1) + " to be '" +
			                  names[i] + "'");
		}
	}
}

void check_exists(const fs::path &path) {
	if (!fs::exists(path)) {
		throw LoadError("missing file: " + path.string());
	}
}

std::vector<CommitRecord> load_commits(const fs::path &path, std::vector<std::string> &feature_names) {
	const auto table = csv::read_file(path);
	static const std::vector<std::string> fixed = {"id", "timestamp", "is_fix", "issue_keys"};
	require_columns(table, fixed, path);
	feature_names.assign(table.header.begin() + static_cast<std::ptrdiff_t>(fixed.size()), table.header.end());
	for (auto &name : feature_names) {
		name = trim(name);
	}

	std::vector<CommitRecord> commits;
	std::vector<std::string> incomplete;
	std::unordered_set<std::string> seen;
	for (std::size_t r = 0; r < table.rows.size(); ++r) {
		const auto &row = table.rows[r];
		const std::size_t line = table.line_numbers[r];
		if (row.size() > table.header.size()) {
			throw ParseError("commits.csv row " + std::to_string(line) + ": too many cells", line);
		}
		if (row.empty() || trim(row[0]).empty()) {
			throw ParseError("commits.csv row " + std::to_string(line) + ": missing commit id", line);
		}
		CommitRecord commit;
		commit.id = trim(row[0]);
		if (!seen.insert(commit.id).second) {
			throw SchemaError("commits.csv: duplicate commit id " + commit.id, {commit.id});
		}
		if (row.size() < fixed.size()) {
			incomplete.push_back(commit.id);
			continue;
		}
		commit.timestamp = parse_time(row[1], line, "commits.csv");
		commit.is_fix = parse_bool(row[2], line);
		commit.issue_keys = split_list(row[3]);
		bool complete = row.size() == table.header.size();
		commit.metrics.reserve(feature_names.size());
		for (std::size_t j = fixed.size(); complete && j < row.size(); ++j) {
			if (trim(row[j]).empty()) {
				complete = false;
				break;
			}
			try {
				commit.metrics.push_back(parse_double(row[j]));
			} catch (const std::invalid_argument &) {
				throw ParseError("commits.csv row " + std::to_string(line) + ": invalid value '" + row[j] +
				                     "' for metric " + table.header[j],
				                 line);
			}
		}
		if (!complete) {
			incomplete.push_back(commit.id);
			continue;
		}
		commits.push_back(std::move(commit));
	}
	if (!incomplete.empty()) {
		throw SchemaError("commits.csv: non-uniform metric keys for commits " + join(incomplete, ", "), incomplete);
	}
	std::stable_sort(commits.begin(), commits.end(),
	                 [](const CommitRecord &a, const CommitRecord &b) { return a.timestamp < b.timestamp; });
	return commits;
}

std::vector<VersionTag> load_versions(const fs::path &path) {
	const auto table = csv::read_file(path);
	require_columns(table, {"name", "release_time"}, path);
	std::vector<VersionTag> tags;
	std::unordered_set<std::string> names;
	for (std::size_t r = 0; r < table.rows.size(); ++r) {
		const auto &row = table.rows[r];
		const std::size_t line = table.line_numbers[r];
		if (row.size() < 2) {
			throw ParseError("versions.csv row " + std::to_string(line) + ": expected 2 cells", line);
		}
		VersionTag tag;
		tag.name = trim(row[0]);
		tag.release_time = parse_time(row[1], line, "versions.csv");
		if (!names.insert(tag.name).second) {
			throw SchemaError("versions.csv: duplicate version name " + tag.name, {tag.name});
		}
		tags.push_back(std::move(tag));
	}
	std::stable_sort(tags.begin(), tags.end(),
	                 [](const VersionTag &a, const VersionTag &b) { return a.release_time < b.release_time; });
	for (std::size_t i = 0; i < tags.size(); ++i) {
		if (i > 0 && tags[i].release_time == tags[i - 1].release_time) {
			throw SchemaError("versions.csv: versions " + tags[i - 1].name + " and " + tags[i].name +
			                      " share a release time",
			                  {tags[i - 1].name, tags[i].name});
		}
		tags[i].ordinal = static_cast<int>(i) + 1;
	}
	return tags;
}

std::vector<IssueTicket> load_issues(const fs::path &path, const std::vector<VersionTag> &tags) {
	const auto table = csv::read_file(path);
	require_columns(table, {"key", "open_time", "affected_versions", "fix_commit_ids"}, path);
	std::unordered_set<std::string> version_names;
	for (const auto &tag : tags) {
		version_names.insert(tag.name);
	}
	std::vector<IssueTicket> issues;
	std::vector<std::string> unresolved;
	for (std::size_t r = 0; r < table.rows.size(); ++r) {
		const auto &row = table.rows[r];
		const std::size_t line = table.line_numbers[r];
		if (row.size() < 4) {
			throw ParseError("issues.csv row " + std::to_string(line) + ": expected 4 cells", line);
		}
		IssueTicket issue;
		issue.key = trim(row[0]);
		issue.open_time = parse_time(row[1], line, "issues.csv");
		auto versions = split_list(row[2]);
		if (!versions.empty()) {
			for (const auto &v : versions) {
				if (!version_names.contains(v)) {
					unresolved.push_back(issue.key + ":" + v);
				}
			}
			issue.affected_versions = std::move(versions);
		}
		issue.fix_commit_ids = split_list(row[3]);
		issues.push_back(std::move(issue));
	}
	if (!unresolved.empty()) {
		throw SchemaError("issues.csv: affected versions not found in versions.csv: " + join(unresolved, ", "),
		                  unresolved);
	}
	return issues;
}

RepoMeta load_meta(const fs::path &path) {
	std::ifstream in(path);
	if (!in) {
		throw LoadError("cannot open " + path.string());
	}
	nlohmann::json j;
	try {
		in >> j;
	} catch (const nlohmann::json::exception &e) {
		throw ParseError("meta.json: " + std::string(e.what()), 1);
	}
	RepoMeta meta;
	try {
		meta.archived = j.value("archived", false);
		meta.fork = j.value("fork", false);
		meta.last_activity = j.at("last_activity").get<EpochSeconds>();
		meta.contributors = j.at("contributors").get<std::int64_t>();
		meta.stars = j.at("stars").get<std::int64_t>();
	} catch (const nlohmann::json::exception &e) {
		throw SchemaError("meta.json: " + std::string(e.what()));
	}
	if (meta.contributors < 0 || meta.stars < 0) {
		throw SchemaError("meta.json: counts must be non-negative");
	}
	return meta;
}

std::string list_cell(const std::vector<std::string> &items) {
	return join(items, ";");
}

} // namespace

double Project::metric(const CommitRecord &commit, std::string_view feature) const {
	for (std::size_t i = 0; i < feature_names.size(); ++i) {
		if (feature_names[i] == feature) {
			return commit.metrics.at(i);
		}
	}
	throw std::out_of_range("unknown metric " + std::string(feature));
}

Project load_project(const fs::path &dir) {
	const fs::path commits_path = dir / "commits.csv";
	const fs::path versions_path = dir / "versions.csv";
	const fs::path issues_path = dir / "issues.csv";
	const fs::path meta_path = dir / "meta.json";
	for (const auto &p : {commits_path, versions_path, issues_path, meta_path}) {
		check_exists(p);
	}
	Project project;
	project.name = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
	project.commits = load_commits(commits_path, project.feature_names);
	project.versions = load_versions(versions_path);
	project.issues = load_issues(issues_path, project.versions);
	project.meta = load_meta(meta_path);
	return project;
}

void write_project(const Project &project, const fs::path &dir) {
	fs::create_directories(dir);
	{
		std::ofstream out(dir / "commits.csv", std::ios::binary);
		std::vector<std::string> header = {"id", "timestamp", "is_fix", "issue_keys"};
		header.insert(header.end(), project.feature_names.begin(), project.feature_names.end());
		csv::write_row(out, header);
		for (const auto &c : project.commits) {
			std::vector<std::string> row = {c.id, std::to_string(c.timestamp), c.is_fix ? "1" : "0",
			                                list_cell(c.issue_keys)};
			for (double m : c.metrics) {
				row.push_back(format_double(m));
			}
			csv::write_row(out, row);
		}
	}
	{
		std::ofstream out(dir / "versions.csv", std::ios::binary);
		csv::write_row(out, {"name", "release_time"});
		for (const auto &v : project.versions) {
			csv::write_row(out, {v.name, std::to_string(v.release_time)});
		}
	}
	{
		std::ofstream out(dir / "issues.csv", std::ios::binary);
		csv::write_row(out, {"key", "open_time", "affected_versions", "fix_commit_ids"});
		for (const auto &i : project.issues) {
			csv::write_row(out, {i.key, std::to_string(i.open_time),
			                     i.affected_versions ? list_cell(*i.affected_versions) : std::string(),
			                     list_cell(i.fix_commit_ids)});
		}
	}
	{
		nlohmann::ordered_json j;
		j["archived"] = project.meta.archived;
		j["fork"] = project.meta.fork;
		j["last_activity"] = project.meta.last_activity;
		j["contributors"] = project.meta.contributors;
		j["stars"] = project.meta.stars;
		std::ofstream out(dir / "meta.json", std::ios::binary);
		out << j.dump(2) << '\n';
	}
}

bool passes_mining_filter(const RepoMeta &meta, EpochSeconds now) {
	return !meta.archived && !meta.fork && (now - meta.last_activity) < kMaxInactivity &&
	       meta.contributors >= kMinContributors && meta.stars >= kMinStars;
}

FixMatching identify_fix_commits(std::span<const CommitRecord> commits, std::span<const IssueTicket> issues) {
	FixMatching result;
	std::unordered_map<std::string, const CommitRecord *> by_id;
	for (const auto &c : commits) {
		by_id.emplace(c.id, &c);
	}
	std::unordered_set<std::string> issue_keys;
	for (const auto &issue : issues) {
		issue_keys.insert(issue.key);
	}

	std::set<std::pair<std::string, std::string>> links; // (commit id, issue key)
	for (const auto &issue : issues) {
		for (const auto &cid : issue.fix_commit_ids) {
			auto it = by_id.find(cid);
			if (it == by_id.end()) {
				result.warnings.push_back("issue " + issue.key + " references unknown commit " + cid);
				continue;
			}
			if (!it->second->is_fix) {
				result.ambiguous_links.push_back({cid, issue.key});
				continue;
			}
			links.emplace(cid, issue.key);
		}
	}
	for (const auto &c : commits) {
		if (!c.is_fix) {
			continue;
		}
		for (const auto &key : c.issue_keys) {
			if (issue_keys.contains(key)) {
				links.emplace(c.id, key);
			} else {
				result.warnings.push_back("commit " + c.id + " references unknown issue " + key);
			}
		}
	}

	std::unordered_set<std::string> linked_commits;
	for (const auto &[cid, key] : links) {
		result.pairs.push_back({cid, key});
		linked_commits.insert(cid);
	}
	std::stable_sort(result.pairs.begin(), result.pairs.end(), [&](const FixLink &a, const FixLink &b) {
		const auto ta = by_id.at(a.commit_id)->timestamp;
		const auto tb = by_id.at(b.commit_id)->timestamp;
		if (ta != tb) {
			return ta < tb;
		}
		if (a.issue_key != b.issue_key) {
			return a.issue_key < b.issue_key;
		}
		return a.commit_id < b.commit_id;
	});
	for (const auto &c : commits) {
		if (c.is_fix && !linked_commits.contains(c.id)) {
			result.unmatched_fixes.push_back(c.id);
		}
	}
	return result;
}

int version_of(EpochSeconds timestamp, std::span<const VersionTag> tags) {
	auto it = std::lower_bound(tags.begin(), tags.end(), timestamp,
	                           [](const VersionTag &tag, EpochSeconds t) { return tag.release_time < t; });
	if (it == tags.end()) {
		return static_cast<int>(tags.size()) + 1;
	}
	return it->ordinal;
}

} // namespace defectcast::ingest
