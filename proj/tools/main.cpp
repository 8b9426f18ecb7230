// defectcast command line: run a study, generate synthetic projects, label, forecast, re-render reports.

#include "defectcast/forecast/arima.hpp"
#include "defectcast/forecast/model.hpp"
#include "defectcast/lifecycle.hpp"
#include "defectcast/pipeline/pipeline.hpp"
#include "defectcast/pipeline/report.hpp"
#include "defectcast/pipeline/synth.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace dc = defectcast;

namespace {

std::string slurp(const std::filesystem::path &path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw dc::LoadError("cannot read " + path.string());
	}
	std::ostringstream ss;
	ss << in.rdbuf();
	return ss.str();
}

int cmd_run(const std::filesystem::path &config_path, const std::string &out_override, std::size_t workers) {
	auto config = dc::pipeline::load_config(config_path);
	if (!out_override.empty()) {
		config.output_dir = out_override;
	}
	if (workers > 0) {
		config.workers = workers;
	}
	const auto report = dc::pipeline::run_pipeline(config);
	dc::pipeline::write_outputs(report, config.output_dir);
	std::size_t unreliable = 0;
	for (const auto &r : report.runs) {
		unreliable += r.unreliable ? 1 : 0;
	}
	std::cout << "run " << report.provenance.run_hash << ": " << report.projects.size() << " projects, "
	          << report.runs.size() << " model runs (" << unreliable << " unreliable), best "
	          << report.best_model.value_or("n/a") << "/" << report.best_window.value_or("n/a") << "\n"
	          << "outputs in " << config.output_dir.string() << "\n";
	return 0;
}

int cmd_synth(std::uint64_t seed, const std::filesystem::path &out, const dc::pipeline::SynthParams &params) {
	const auto synth = dc::pipeline::synth_project(seed, params);
	dc::pipeline::write_synth_project(synth, out);
	std::cout << synth.project.commits.size() << " commits, " << synth.project.versions.size() << " versions, "
	          << synth.truth.size() << " defects written to " << out.string() << "\n";
	return 0;
}

int cmd_label(const std::filesystem::path &project_dir, const std::filesystem::path &out, bool explicit_iv) {
	const auto project = dc::ingest::load_project(project_dir);
	dc::lifecycle::LabelingOptions options;
	options.use_explicit_iv = explicit_iv;
	const auto result = dc::lifecycle::label_project(project, options);
	std::filesystem::create_directories(out);
	dc::lifecycle::write_defects_csv(result.defects, out / "defects.csv");
	dc::lifecycle::write_density_csv(result.density, out / "density.csv");
	for (const auto &d : result.diagnostics) {
		std::cerr << "note: " << d << "\n";
	}
	std::cout << result.defects.size() << " defects, P = " << dc::format_double(result.proportion.p) << " from "
	          << result.proportion.sample_count << " samples\n";
	return 0;
}

int cmd_forecast(const std::filesystem::path &project_dir, const std::string &model, const std::string &window_text,
                 int h, std::uint64_t seed) {
	const auto window = dc::series::parse_window_length(window_text);
	const auto project = dc::ingest::load_project(project_dir);
	const auto labels = dc::lifecycle::label_project(project);
	const auto panel = dc::series::build_panel(project, labels.density, window);
	const auto entry = dc::pipeline::parse_model_entry(model);

	dc::forecast::ForecastResult result;
	std::string label;
	if (entry.kind == dc::forecast::ModelKind::External) {
		if (entry.backend != "naive") {
			throw dc::ConfigError("the forecast command runs native models and 'naive' only");
		}
		dc::forecast::NaiveBackend naive;
		result = dc::forecast::external_forecast(naive, panel.targets(), h);
		label = "naive";
	} else {
		const auto spec = dc::forecast::family_of(entry.kind) == dc::forecast::Family::Tsa
		                      ? dc::forecast::select_order(panel, entry.kind, seed)
		                      : dc::forecast::ModelSpec::defaults(entry.kind, window);
		label = spec.label();
		// Future features are unknown here, so the last observed row is held.
		std::vector<std::vector<double>> future(static_cast<std::size_t>(std::max(h, 0)),
		                                        panel.observations.back().features);
		result = dc::forecast::forecast(dc::forecast::fit(panel, spec, seed), h, future);
	}
	std::cout << "# " << label << " on " << panel.size() << " " << window_text << " windows\n";
	std::cout << "step,point,lower,upper\n";
	for (std::size_t i = 0; i < result.points.size(); ++i) {
		std::cout << i + 1 << "," << dc::format_double(result.points[i]) << ","
		          << (result.lower ? dc::format_double((*result.lower)[i]) : "") << ","
		          << (result.upper ? dc::format_double((*result.upper)[i]) : "") << "\n";
	}
	return 0;
}

int cmd_report(const std::filesystem::path &in, const std::string &format, const std::filesystem::path &out) {
	const auto report = dc::pipeline::report_from_json(slurp(in));
	dc::pipeline::emit_report(report, dc::pipeline::parse_report_format(format), out);
	return 0;
}

} // namespace

int main(int argc, char **argv) {
	CLI::App app{"defectcast: defect density forecasting studies"};
	app.require_subcommand(1);
	app.set_version_flag("--version", std::string(dc::pipeline::kVersion));

	std::filesystem::path config_path;
	std::string out_override;
	std::size_t workers = 0;
	auto *run = app.add_subcommand("run", "run a study from a JSON config");
	run->add_option("--config,-c", config_path, "config file")->required();
	run->add_option("--out,-o", out_override, "override the output directory");
	run->add_option("--workers,-j", workers, "project workers");

	std::uint64_t seed = 0;
	std::filesystem::path out;
	dc::pipeline::SynthParams sp;
	auto *synth = app.add_subcommand("synth", "write a synthetic project");
	synth->add_option("--seed", seed)->required();
	synth->add_option("--out,-o", out)->required();
	synth->add_option("--name", sp.name);
	synth->add_option("--days", sp.days)->check(CLI::PositiveNumber);
	synth->add_option("--commits-per-day", sp.commits_per_day)->check(CLI::PositiveNumber);
	synth->add_option("--features", sp.features);
	synth->add_option("--planted", sp.planted_features);
	synth->add_option("--signal", sp.signal);
	synth->add_option("--defect-rate", sp.defect_rate)->check(CLI::NonNegativeNumber);
	synth->add_option("--release-every", sp.release_every_days)->check(CLI::PositiveNumber);

	std::filesystem::path project_dir;
	bool no_explicit = false;
	auto *label = app.add_subcommand("label", "label defects and write the density series");
	label->add_option("--project,-p", project_dir)->required()->check(CLI::ExistingDirectory);
	label->add_option("--out,-o", out)->required();
	label->add_flag("--estimate-all", no_explicit, "ignore listed affected versions");

	std::string model;
	std::string window = "weekly";
	int h = 4;
	auto *fc = app.add_subcommand("forecast", "fit one model on a project and forecast");
	fc->add_option("--project,-p", project_dir)->required()->check(CLI::ExistingDirectory);
	fc->add_option("--model,-m", model)->required();
	fc->add_option("--window,-w", window);
	fc->add_option("--horizon,-H", h)->check(CLI::PositiveNumber);
	fc->add_option("--seed", seed);

	std::filesystem::path in;
	std::string format = "markdown";
	auto *rep = app.add_subcommand("report", "re-render a report.json");
	rep->add_option("--in,-i", in)->required()->check(CLI::ExistingFile);
	rep->add_option("--format,-f", format, "json, csv or markdown");
	rep->add_option("--out,-o", out)->required();

	CLI11_PARSE(app, argc, argv);

	try {
		if (*run) {
			return cmd_run(config_path, out_override, workers);
		}
		if (*synth) {
			return cmd_synth(seed, out, sp);
		}
		if (*label) {
			return cmd_label(project_dir, out, !no_explicit);
		}
		if (*fc) {
			return cmd_forecast(project_dir, model, window, h, seed);
		}
		if (*rep) {
			return cmd_report(in, format, out);
		}
	} catch (const dc::ConfigError &e) {
		std::cerr << "config error: " << e.what() << "\n";
		return 2;
	} catch (const std::exception &e) {
		std::cerr << "error: " << e.what() << "\n";
		return 1;
	}
	return 0;
}
