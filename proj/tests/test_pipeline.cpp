#include "defectcast/pipeline/config.hpp"
#include "defectcast/pipeline/pipeline.hpp"
#include "defectcast/pipeline/report.hpp"
#include "defectcast/pipeline/synth.hpp"
#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <algorithm>

namespace dc = defectcast;
namespace pl = defectcast::pipeline;
namespace fs = std::filesystem;
using fixtures::TempDir;

namespace {

fs::path make_project(const TempDir &dir, const std::string &name, std::uint64_t seed, int days = 500) {
	pl::SynthParams p;
	p.name = name;
	p.days = days;
	p.features = 4;
	const auto synth = pl::synth_project(seed, p);
	const auto path = dir / name;
	pl::write_synth_project(synth, path);
	return path;
}

std::string config_text(const std::vector<fs::path> &projects, const std::string &models, const std::string &windows,
                        const std::string &extra = "") {
	nlohmann::json j;
	j["projects"] = std::vector<std::string>();
	for (const auto &p : projects) {
		j["projects"].push_back(p.string());
	}
	auto text = j.dump();
	text.pop_back();
	return text + R"(, "models": )" + models + R"(, "windows": )" + windows + extra + "}";
}

std::size_t csv_rows(const fs::path &path) {
	const auto text = fixtures::read_file(path);
	return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) - 1;
}

} // namespace

TEST(Config, ParsesAndResolvesPaths) {
	const auto c = pl::parse_config(
	    R"({"projects": ["a", "/abs/b"], "windows": ["weekly", "monthly"], "models": ["ARIMA", "bdlm", "naive"],
	        "horizons": [1, 4], "seed": 7, "output_dir": "o", "exogenous": "freeze_last"})",
	    "/base");
	EXPECT_EQ(c.projects, (std::vector<fs::path>{"/base/a", "/abs/b"}));
	EXPECT_EQ(c.windows.size(), 2u);
	EXPECT_EQ(c.models[1].kind, dc::forecast::ModelKind::Bdlm);
	EXPECT_EQ(c.models[2].kind, dc::forecast::ModelKind::External);
	EXPECT_EQ(c.models[2].backend, "naive");
	EXPECT_EQ(c.horizons, (std::vector<int>{1, 4}));
	EXPECT_EQ(c.seed, 7u);
	EXPECT_EQ(c.output_dir, fs::path("/base/o"));
	EXPECT_EQ(c.exogenous, dc::eval::ExogenousMode::FreezeLast);
}

TEST(Config, RejectsInconsistencies) {
	const auto bad = [](const std::string &text) {
		EXPECT_THROW(pl::parse_config(text, "/"), dc::ConfigError) << text;
	};
	bad(R"({"projects": ["a"], "windows": ["weekly"], "models": []})");
	bad(R"({"projects": [], "windows": ["weekly"], "models": ["ARIMA"]})");
	bad(R"({"projects": ["a"], "windows": ["daily"], "models": ["ARIMA"]})");
	bad(R"({"projects": ["a"], "windows": ["weekly"], "models": ["LSTM"]})");
	bad(R"({"projects": ["a"], "windows": ["weekly"], "models": ["ARIMA"], "colour": 1})");
	bad(R"({"projects": ["a"], "windows": ["weekly"], "models": ["ARIMA"], "alpha": 0.9})");
	bad(R"({"projects": ["a"], "windows": ["weekly"], "models": ["ARIMA", "ARIMA"]})");
	bad(R"({"projects": ["a"], "windows": ["weekly"], "models": ["external:tsfm"]})");
	bad(R"({"projects": ["a"], "windows": ["weekly"], "models": ["ARIMA"], "horizons": [0]})");
	bad(R"({"projects": ["a"], "windows": ["weekly"], "models": ["ARIMA"], "seed": "x"})");
	bad(R"({"projects": ["a"], "windows": ["weekly"], "models": ["ARIMA"], "ablation_k": 9})");
	bad("not json");
}

TEST(Config, CanonicalFormIgnoresDirectories) {
	const auto a = pl::parse_config(R"({"projects": ["x/p"], "windows": ["weekly"], "models": ["ARIMA"]})", "/one");
	const auto b = pl::parse_config(R"({"projects": ["y/p"], "windows": ["weekly"], "models": ["ARIMA"]})", "/two");
	EXPECT_EQ(pl::canonical_config(a), pl::canonical_config(b));
	auto c = a;
	c.seed = 1;
	EXPECT_NE(pl::canonical_config(a), pl::canonical_config(c));
}

TEST(Synth, DeterministicForSeed) {
	pl::SynthParams p;
	p.days = 200;
	const auto a = pl::synth_project(5, p);
	const auto b = pl::synth_project(5, p);
	const auto c = pl::synth_project(6, p);
	EXPECT_EQ(a.project.commits, b.project.commits);
	EXPECT_EQ(a.project.issues, b.project.issues);
	EXPECT_NE(a.project.commits, c.project.commits);
	const auto panel = pl::synth_panel(3, {});
	EXPECT_EQ(panel.size(), 200u);
	EXPECT_EQ(panel.feature_names.front(), "f1");
}

TEST(Pipeline, NaiveRunFillsOneRowPerWindow) {
	TempDir dir;
	const auto project = make_project(dir, "alpha", 1);
	auto config = pl::parse_config(
	    config_text({project}, R"(["naive"])", R"(["weekly", "biweekly", "monthly"])", R"(, "horizons": [1])"),
	    dir.path());
	config.output_dir = dir / "out";
	const auto report = pl::run_pipeline(config);
	ASSERT_EQ(report.errors.size(), 3u);
	for (const auto &e : report.errors) {
		EXPECT_EQ(e.model, "naive");
		EXPECT_EQ(e.horizon, 1);
		EXPECT_GT(e.n_forecasts, 0u);
		EXPECT_EQ(e.failed, 0u);
	}
	ASSERT_EQ(report.comparisons.size(), 3u);
	for (const auto &c : report.comparisons) {
		EXPECT_FALSE(c.analysis);
		EXPECT_FALSE(c.skipped_reason.empty());
	}
	EXPECT_TRUE(fs::exists(dir / "out" / "projects" / "alpha" / "defects.csv"));
	EXPECT_TRUE(fs::exists(dir / "out" / "projects" / "alpha" / "panel_monthly.csv"));
}

TEST(Pipeline, ReportFormats) {
	TempDir dir;
	const auto p1 = make_project(dir, "p1", 2);
	const auto p2 = make_project(dir, "p2", 3);
	auto config = pl::parse_config(config_text({p1, p2}, R"(["ARIMA", "BDLM", "naive"])", R"(["weekly"])",
	                                           R"(, "horizons": [1, 2], "ablation_k": 2, "seed": 4)"),
	                               dir.path());
	config.output_dir = dir / "out";
	const auto report = pl::run_pipeline(config);
	pl::write_outputs(report, config.output_dir);

	const auto json = pl::report_to_json(report);
	const auto back = pl::report_from_json(json);
	EXPECT_EQ(pl::report_to_json(back), json);
	EXPECT_EQ(back.errors.size(), report.errors.size());

	EXPECT_EQ(csv_rows(config.output_dir / "errors.csv"), report.errors.size());
	EXPECT_EQ(csv_rows(config.output_dir / "forecasts.csv"), report.tuples.size());
	EXPECT_EQ(csv_rows(config.output_dir / "runs.csv"), report.runs.size());
	EXPECT_EQ(report.runs.size(), 6u);

	const auto md = fixtures::read_file(config.output_dir / "report.md");
	for (const char *heading : {"# Defect forecasting study report", "## Provenance", "## Forecast accuracy",
	                            "## Model comparison by horizon", "## Feature importance", "## Feature ablation"}) {
		EXPECT_NE(md.find(heading), std::string::npos) << heading;
	}
	const auto stats = nlohmann::json::parse(fixtures::read_file(config.output_dir / "stats.json"));
	EXPECT_EQ(stats["model_comparisons"].size(), 2u);
	ASSERT_EQ(report.ablations.size(), 2u);
	EXPECT_EQ(report.ablations[0].results.size(), 4u);
	EXPECT_THROW(pl::parse_report_format("xml"), dc::ConfigError);
}

TEST(Pipeline, ByteIdenticalReruns) {
	TempDir dir;
	const auto p1 = make_project(dir, "p1", 8, 400);
	const auto text = config_text({p1}, R"(["ARIMAX", "BDLT", "naive"])", R"(["weekly", "monthly"])",
	                              R"(, "horizons": [1, 3], "ablation_k": 2, "seed": 11, "workers": 2)");
	std::vector<std::string> names = {"report.json", "stats.json", "errors.csv", "forecasts.csv",
	                                  "importance.csv", "consensus.csv", "ablation.csv", "runs.csv", "report.md"};
	std::vector<std::vector<std::string>> outputs;
	for (const char *sub : {"a", "b"}) {
		auto config = pl::parse_config(text, dir.path());
		config.output_dir = dir / sub;
		pl::write_outputs(pl::run_pipeline(config), config.output_dir);
		outputs.emplace_back();
		for (const auto &n : names) {
			outputs.back().push_back(fixtures::read_file(config.output_dir / n));
		}
	}
	for (std::size_t i = 0; i < names.size(); ++i) {
		EXPECT_EQ(outputs[0][i], outputs[1][i]) << names[i];
	}
}

TEST(Pipeline, ProvenanceTracksConfigAndInputs) {
	TempDir dir;
	const auto p1 = make_project(dir, "p1", 9, 300);
	const auto run = [&](const std::string &extra) {
		auto config = pl::parse_config(config_text({p1}, R"(["naive"])", R"(["weekly"])",
		                                           R"(, "horizons": [1], "importance": false, "ablation": false)" + extra),
		                               dir.path());
		config.output_dir = dir / "out";
		return pl::run_pipeline(config).provenance;
	};
	const auto a = run("");
	const auto b = run("");
	EXPECT_EQ(a.run_hash, b.run_hash);
	EXPECT_EQ(a.input_hash, b.input_hash);
	const auto seeded = run(R"(, "seed": 1)");
	EXPECT_NE(seeded.config_hash, a.config_hash);
	EXPECT_EQ(seeded.input_hash, a.input_hash);
	EXPECT_NE(seeded.run_hash, a.run_hash);

	auto commits = fixtures::read_file(p1 / "commits.csv");
	fixtures::write_file(p1 / "commits.csv", commits + "\n");
	const auto touched = run("");
	EXPECT_NE(touched.input_hash, a.input_hash);
	EXPECT_EQ(touched.config_hash, a.config_hash);
	EXPECT_EQ(a.version, pl::kVersion);
}

TEST(Pipeline, MissingProjectIsALoadError) {
	TempDir dir;
	auto config =
	    pl::parse_config(config_text({dir / "ghost"}, R"(["naive"])", R"(["weekly"])"), dir.path());
	config.output_dir = dir / "out";
	EXPECT_THROW(pl::run_pipeline(config), dc::LoadError);
}

TEST(Pipeline, BrokenBackendFlagsRunsWithoutAborting) {
	TempDir dir;
	const auto p1 = make_project(dir, "p1", 10, 300);
	auto config = pl::parse_config(config_text({p1}, R"(["naive", "external:fm"])", R"(["weekly"])",
	                                           R"(, "horizons": [1], "importance": false, "ablation": false,
	                                               "backend_timeout_ms": 2000,
	                                               "backends": {"fm": [")" FAKE_ADAPTER_PATH R"(", "crash"]})"),
	                               dir.path());
	config.output_dir = dir / "out";
	const auto report = pl::run_pipeline(config);
	const auto fm = std::find_if(report.runs.begin(), report.runs.end(),
	                             [](const pl::ModelRun &r) { return r.model == "external:fm"; });
	ASSERT_NE(fm, report.runs.end());
	EXPECT_TRUE(fm->unreliable);
	EXPECT_EQ(fm->failed_origins, fm->origins);
}
