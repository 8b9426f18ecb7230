#include "defectcast/lifecycle.hpp"
#include "defectcast/pipeline/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace dc = defectcast;
using dc::lifecycle::DefectRecord;
using dc::lifecycle::IvProvenance;
using dc::lifecycle::PartialDefect;

namespace {

/// Releases v1..v5 at day 10, 20, ..., 50; one commit per day from day 1.
dc::ingest::Project five_release_project(int commits = 60) {
	dc::ingest::Project p;
	p.name = "fixture";
	for (int v = 1; v <= 5; ++v) {
		p.versions.push_back({"v" + std::to_string(v), v * 10 * dc::kSecondsPerDay, v});
	}
	for (int d = 1; d <= commits; ++d) {
		p.commits.push_back({"c" + std::to_string(d), d * dc::kSecondsPerDay + 1, false, {}, {}});
	}
	return p;
}

dc::EpochSeconds day(int d) {
	return d * dc::kSecondsPerDay;
}

} // namespace

TEST(AnchorDefect, ExplicitAffectedVersions) {
	auto p = five_release_project();
	p.commits[34].is_fix = true; // day 35 -> v4
	p.issues.push_back({"I-1", day(15), std::vector<std::string>{"v1", "v2", "v3", "v4"}, {"c35"}});
	const auto d = dc::lifecycle::anchor_defect({"c35", "I-1"}, p);
	EXPECT_EQ(d.iv, 1);
	EXPECT_EQ(d.ov, 2);
	EXPECT_EQ(d.fv, 4);
}

TEST(AnchorDefect, NoAffectedVersions) {
	auto p = five_release_project();
	p.commits[24].is_fix = true; // day 25 -> v3
	p.issues.push_back({"I-1", day(21), std::nullopt, {"c25"}});
	const auto d = dc::lifecycle::anchor_defect({"c25", "I-1"}, p);
	EXPECT_FALSE(d.iv.has_value());
	EXPECT_EQ(d.ov, 3);
	EXPECT_EQ(d.fv, 3);
}

TEST(AnchorDefect, AffectedVersionsAfterFixAreDropped) {
	auto p = five_release_project();
	p.commits[14].is_fix = true; // v2
	p.issues.push_back({"I-1", day(12), std::vector<std::string>{"v4", "v5", "v2"}, {"c15"}});
	std::vector<std::string> diag;
	const auto d = dc::lifecycle::anchor_defect({"c15", "I-1"}, p, &diag);
	EXPECT_EQ(d.iv, 2);
	EXPECT_EQ(d.fv, 2);
	EXPECT_FALSE(diag.empty());

	p.issues[0].affected_versions = std::vector<std::string>{"v4", "v5"};
	diag.clear();
	const auto none = dc::lifecycle::anchor_defect({"c15", "I-1"}, p, &diag);
	EXPECT_FALSE(none.iv.has_value());
	EXPECT_EQ(diag.size(), 2u);
}

TEST(AnchorDefect, FixBeforeOpenClampsOv) {
	auto p = five_release_project();
	p.commits[4].is_fix = true; // v1
	p.issues.push_back({"I-1", day(45), std::nullopt, {"c5"}});
	std::vector<std::string> diag;
	const auto d = dc::lifecycle::anchor_defect({"c5", "I-1"}, p, &diag);
	EXPECT_EQ(d.ov, d.fv);
	EXPECT_FALSE(diag.empty());
}

TEST(StableProportion, Examples) {
	std::vector<PartialDefect> one = {{"a", "c", 1, 2, 4}};
	EXPECT_DOUBLE_EQ(dc::lifecycle::compute_stable_proportion(one).p, 1.5);
	EXPECT_EQ(dc::lifecycle::compute_stable_proportion(one).sample_count, 1u);

	std::vector<PartialDefect> clamped = {{"a", "c", 3, 5, 5}};
	EXPECT_DOUBLE_EQ(dc::lifecycle::compute_stable_proportion(clamped).p, 2.0);

	std::vector<PartialDefect> none = {{"a", "c", std::nullopt, 2, 4}};
	const auto cold = dc::lifecycle::compute_stable_proportion(none);
	EXPECT_DOUBLE_EQ(cold.p, 1.0);
	EXPECT_EQ(cold.sample_count, 0u);
}

TEST(EstimateIv, Examples) {
	EXPECT_EQ(dc::lifecycle::estimate_iv({"a", "c", std::nullopt, 3, 5}, {1.5, 1}).iv, 2);
	EXPECT_EQ(dc::lifecycle::estimate_iv({"a", "c", std::nullopt, 3, 3}, {1.0, 1}).iv, 2);
	EXPECT_EQ(dc::lifecycle::estimate_iv({"a", "c", std::nullopt, 1, 10}, {20.0, 1}).iv, 1);
	EXPECT_EQ(dc::lifecycle::estimate_iv({"a", "c", std::nullopt, 3, 5}, {1.5, 1}).provenance, IvProvenance::Estimated);
}

TEST(EstimateIv, ExhaustiveSmallGrid) {
	for (int ov = 1; ov <= 8; ++ov) {
		for (int fv = ov; fv <= 10; ++fv) {
			for (double p : {0.0, 0.5, 1.0, 1.25, 1.5, 2.0, 3.7}) {
				const auto r = dc::lifecycle::estimate_iv({"a", "c", std::nullopt, ov, fv}, {p, 3});
				const int gap = fv - ov > 1 ? fv - ov : 1;
				int expected = fv - static_cast<int>(std::llround(p * gap));
				expected = expected < 1 ? 1 : expected;
				expected = expected > ov ? ov : expected;
				EXPECT_EQ(r.iv, expected) << "ov=" << ov << " fv=" << fv << " p=" << p;
				EXPECT_LE(r.iv, r.ov);
				EXPECT_LE(r.ov, r.fv);
				EXPECT_GE(r.iv, 1);
			}
		}
	}
}

TEST(EstimateIv, ExplicitRequiresIv) {
	EXPECT_THROW(dc::lifecycle::from_explicit({"a", "c", std::nullopt, 1, 2}), dc::PreconditionError);
}

TEST(LabelAffectedCommits, SpanAndBounds) {
	auto p = five_release_project(30);
	// iv = 2 starts after v1 (day 10), the fix commit is c16.
	const DefectRecord d{"X", "c16", 2, IvProvenance::Explicit, 2, 2};
	const auto ids = dc::lifecycle::label_affected_commits(d, p.commits, p.versions);
	EXPECT_EQ(ids, (std::vector<std::string>{"c10", "c11", "c12", "c13", "c14", "c15"}));

	const DefectRecord first{"Y", "c4", 1, IvProvenance::Explicit, 1, 1};
	EXPECT_EQ(dc::lifecycle::label_affected_commits(first, p.commits, p.versions),
	          (std::vector<std::string>{"c1", "c2", "c3"}));

	const DefectRecord empty{"Z", "c1", 1, IvProvenance::Explicit, 1, 1};
	EXPECT_TRUE(dc::lifecycle::label_affected_commits(empty, p.commits, p.versions).empty());
}

TEST(DensitySeries, OverlapAndEmpty) {
	auto p = five_release_project(30);
	std::vector<DefectRecord> none;
	for (const auto &c : dc::lifecycle::build_density_series(p.commits, p.versions, none)) {
		EXPECT_EQ(c.active_defects, 0);
	}
	std::vector<DefectRecord> two = {{"A", "c20", 1, IvProvenance::Explicit, 1, 2},
	                                 {"B", "c25", 2, IvProvenance::Explicit, 2, 3}};
	const auto s = dc::lifecycle::build_density_series(p.commits, p.versions, two);
	EXPECT_EQ(s[14].active_defects, 2); // c15 lies inside both
	EXPECT_EQ(s[0].active_defects, 1);
	EXPECT_EQ(s[21].active_defects, 1);
	EXPECT_EQ(s[26].active_defects, 0);
}

TEST(DensitySeries, MatchesBruteForceMembership) {
	for (std::uint64_t seed = 1; seed <= 10; ++seed) {
		dc::pipeline::SynthParams params;
		params.days = 120;
		params.defect_rate = 0.05;
		params.release_every_days = 15;
		const auto synth = dc::pipeline::synth_project(seed, params);
		const auto &p = synth.project;
		std::vector<DefectRecord> defects;
		for (const auto &t : synth.truth) {
			defects.push_back(t.record);
		}
		const auto series = dc::lifecycle::build_density_series(p.commits, p.versions, defects);
		ASSERT_EQ(series.size(), p.commits.size());
		for (std::size_t i = 0; i < p.commits.size(); ++i) {
			int count = 0;
			for (const auto &d : defects) {
				const dc::EpochSeconds lower =
				    d.iv <= 1 ? std::numeric_limits<dc::EpochSeconds>::min() : p.versions[d.iv - 2].release_time;
				dc::EpochSeconds fix_time = 0;
				for (const auto &c : p.commits) {
					if (c.id == d.fix_commit) {
						fix_time = c.timestamp;
					}
				}
				count += p.commits[i].timestamp > lower && p.commits[i].timestamp < fix_time ? 1 : 0;
			}
			EXPECT_EQ(series[i].active_defects, count) << "seed " << seed << " commit " << i;
		}
	}
}

TEST(LabelProject, ExplicitLabelsReproduceTruth) {
	dc::pipeline::SynthParams params;
	params.days = 200;
	params.av_fraction = 1.0;
	const auto synth = dc::pipeline::synth_project(3, params);
	const auto result = dc::lifecycle::label_project(synth.project);
	ASSERT_EQ(result.defects.size(), synth.truth.size());
	for (const auto &t : synth.truth) {
		const auto it = std::find_if(result.defects.begin(), result.defects.end(),
		                             [&](const DefectRecord &d) { return d.id == t.record.id; });
		ASSERT_NE(it, result.defects.end());
		EXPECT_EQ(*it, t.record);
	}
}

TEST(LabelProject, SynthTruthIsOrdered) {
	for (std::uint64_t seed = 1; seed <= 20; ++seed) {
		const auto synth = dc::pipeline::synth_project(seed, {});
		for (const auto &t : synth.truth) {
			EXPECT_LE(1, t.record.iv);
			EXPECT_LE(t.record.iv, t.record.ov);
			EXPECT_LE(t.record.ov, t.record.fv);
		}
	}
}

TEST(LabelProject, ZeroDefectRateGivesZeroDensity) {
	dc::pipeline::SynthParams params;
	params.defect_rate = 0.0;
	const auto synth = dc::pipeline::synth_project(9, params);
	const auto result = dc::lifecycle::label_project(synth.project);
	EXPECT_TRUE(result.defects.empty());
	for (const auto &c : result.density) {
		EXPECT_EQ(c.active_defects, 0);
	}
}
