#pragma once

#include "defectcast/ingest.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace defectcast::lifecycle {

enum class IvProvenance { Explicit, Estimated };

std::string_view to_string(IvProvenance provenance);

/// A defect before injection-version estimation: `iv` is empty when the ticket listed no usable
/// affected version.
struct PartialDefect {
	std::string id;
	std::string fix_commit;
	std::optional<int> iv;
	int ov = 0;
	int fv = 0;

	bool operator==(const PartialDefect &) const = default;
};

/// Fully anchored defect. Invariant: 1 <= iv <= ov <= fv.
struct DefectRecord {
	std::string id;
	std::string fix_commit;
	int iv = 0;
	IvProvenance provenance = IvProvenance::Explicit;
	int ov = 0;
	int fv = 0;

	bool operator==(const DefectRecord &) const = default;
};

struct StableProportion {
	double p = 1.0;
	std::size_t sample_count = 0;
};

struct CommitDensity {
	std::string commit_id;
	EpochSeconds timestamp = 0;
	int active_defects = 0;

	bool operator==(const CommitDensity &) const = default;
};

/// Active-defect count per commit, in commit timestamp order.
using DefectDensitySeries = std::vector<CommitDensity>;

/// Places a fix link on the version axis.
///
/// ov and fv come from version_of on the ticket's open time and the fixing commit's timestamp.
/// iv is the smallest listed affected version that is not after fv; listed versions after fv are
/// dropped with a diagnostic. A fix recorded before the ticket opened clamps ov to fv.
PartialDefect anchor_defect(const ingest::FixLink &pair, const ingest::Project &project,
                            std::vector<std::string> *diagnostics = nullptr);

/// Mean of (fv - iv) / max(fv - ov, 1) over defects with an explicit iv; 1.0 with no samples.
StableProportion compute_stable_proportion(std::span<const PartialDefect> defects);

/// iv = max(1, fv - round(p * max(fv - ov, 1))), then capped at ov.
DefectRecord estimate_iv(const PartialDefect &defect, const StableProportion &sp);

/// Converts a defect with an explicit iv; throws PreconditionError when iv is missing.
DefectRecord from_explicit(const PartialDefect &defect);

/// Commits strictly after the release preceding iv and strictly before the fixing commit.
/// Returned in commit order.
std::vector<std::string> label_affected_commits(const DefectRecord &defect,
                                                std::span<const ingest::CommitRecord> commits,
                                                std::span<const ingest::VersionTag> tags);

DefectDensitySeries build_density_series(std::span<const ingest::CommitRecord> commits,
                                         std::span<const ingest::VersionTag> tags,
                                         std::span<const DefectRecord> defects);

struct LabelingOptions {
	/// When false, listed affected versions only calibrate P; every iv is then estimated.
	bool use_explicit_iv = true;
};

struct LabelingResult {
	std::vector<DefectRecord> defects;
	StableProportion proportion;
	DefectDensitySeries density;
	ingest::FixMatching matching;
	std::vector<std::string> diagnostics;
};

/// identify_fix_commits -> anchor_defect -> stable proportion -> estimate_iv -> density.
LabelingResult label_project(const ingest::Project &project, const LabelingOptions &options = {});

void write_defects_csv(std::span<const DefectRecord> defects, const std::filesystem::path &path);
void write_density_csv(const DefectDensitySeries &density, const std::filesystem::path &path);

} // namespace defectcast::lifecycle
