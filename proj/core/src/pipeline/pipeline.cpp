#include "defectcast/pipeline/pipeline.hpp"

#include "defectcast/forecast/arima.hpp"
#include "defectcast/ingest.hpp"
#include "defectcast/lifecycle.hpp"
#include "defectcast/pipeline/report.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <sstream>
#include <thread>

namespace defectcast::pipeline {

namespace {

struct ResolvedModel {
	std::string label;
	/// Absent when the run fell back to a non-native forecaster.
	std::optional<forecast::ModelSpec> spec;
};

struct ProjectWork {
	ProjectSummary summary;
	std::vector<ModelRun> runs;
	std::vector<eval::LabeledTuple> tuples;
	std::map<series::WindowLength, series::TimeSeriesPanel> panels;
	std::map<std::pair<std::string, series::WindowLength>, ResolvedModel> resolved;
};

/// Collapses repeated per-origin fallback notes into one line.
std::vector<std::string> compact_notes(std::vector<std::string> notes) {
	std::vector<std::string> out;
	std::size_t substituted = 0;
	std::string first;
	for (auto &n : notes) {
		if (n.find("naive forecast substituted") != std::string::npos) {
			if (substituted++ == 0) {
				first = n;
			}
			continue;
		}
		out.push_back(std::move(n));
	}
	if (substituted == 1) {
		out.push_back(first);
	} else if (substituted > 1) {
		out.push_back(first + " (and " + std::to_string(substituted - 1) + " more origins)");
	}
	return out;
}

eval::Forecaster failing_forecaster(std::string reason) {
	return [reason = std::move(reason)](const series::TimeSeriesPanel &, int,
	                                    std::span<const std::vector<double>>) -> forecast::ForecastResult {
		throw BackendError(reason);
	};
}

class ProjectRunner {
public:
	ProjectRunner(const RunConfig &config, std::filesystem::path dir) : config_(config), dir_(std::move(dir)) {
	}

	ProjectWork run() {
		ProjectWork w;
		const auto project = ingest::load_project(dir_);
		auto &s = w.summary;
		s.name = project.name.empty() ? dir_.filename().string() : project.name;
		s.commits = project.commits.size();
		if (config_.mining_filter_now && !ingest::passes_mining_filter(project.meta, *config_.mining_filter_now)) {
			s.included = false;
			s.exclusion_reason = "mining filter";
			s.notes.push_back("excluded by the mining filter (archived, fork, stale, or too few contributors/stars)");
			return w;
		}
		lifecycle::LabelingOptions lo;
		lo.use_explicit_iv = config_.use_explicit_iv;
		const auto labels = lifecycle::label_project(project, lo);
		s.defects = labels.defects.size();
		for (const auto &d : labels.defects) {
			(d.provenance == lifecycle::IvProvenance::Explicit ? s.explicit_iv : s.estimated_iv) += 1;
		}
		s.stable_proportion = labels.proportion.p;
		s.proportion_samples = labels.proportion.sample_count;
		s.notes.insert(s.notes.end(), labels.diagnostics.begin(), labels.diagnostics.end());

		const auto out_dir = config_.output_dir / "projects" / s.name;
		std::filesystem::create_directories(out_dir);
		lifecycle::write_defects_csv(labels.defects, out_dir / "defects.csv");
		lifecycle::write_density_csv(labels.density, out_dir / "density.csv");

		series::PanelOptions po;
		po.aggregation = config_.aggregation;
		std::map<series::WindowLength, eval::WalkForwardPlan> plans;
		for (auto window : config_.windows) {
			const std::string wname(series::to_string(window));
			try {
				auto panel = series::build_panel(project, labels.density, window, po);
				s.panels.emplace_back(wname, panel.size());
				series::write_panel_csv(panel, out_dir / ("panel_" + wname + ".csv"));
				plans.emplace(window, eval::plan_walk_forward(panel.size(), config_.horizons, config_.training_window));
				w.panels.emplace(window, std::move(panel));
			} catch (const PreconditionError &e) {
				s.notes.push_back(wname + " panel not evaluated: " + e.what());
			}
		}
		if (w.panels.empty()) {
			s.included = false;
			s.exclusion_reason = "no evaluable panel";
			return w;
		}

		for (const auto &entry : config_.models) {
			for (auto window : config_.windows) {
				const auto pit = w.panels.find(window);
				if (pit == w.panels.end()) {
					continue;
				}
				run_model(w, entry, window, pit->second, plans.at(window));
			}
		}
		return w;
	}

private:
	void run_model(ProjectWork &w, const ModelEntry &entry, series::WindowLength window,
	               const series::TimeSeriesPanel &panel, const eval::WalkForwardPlan &plan) {
		const std::string wname(series::to_string(window));
		ModelRun run;
		run.project = w.summary.name;
		run.model = entry.name;
		run.window = wname;
		std::vector<std::string> notes;
		eval::Forecaster forecaster;
		ResolvedModel resolved;
		const std::string stream = w.summary.name + ":" + entry.name + ":" + wname;

		if (entry.kind == forecast::ModelKind::External) {
			resolved.label = entry.backend == "naive" ? "naive" : entry.name;
			forecaster = eval::backend_forecaster(backend_for(entry.backend), "");
		} else if (forecast::family_of(entry.kind) == forecast::Family::Tsa) {
			try {
				auto spec =
				    forecast::select_order(panel.prefix(plan.initial_train), entry.kind, derive_seed(config_.seed, "select:" + stream));
				resolved.label = spec.label();
				resolved.spec = spec;
				forecaster = eval::native_forecaster(std::move(spec), derive_seed(config_.seed, "fit:" + stream), &notes);
			} catch (const DegenerateSeriesError &e) {
				notes.push_back(std::string("order selection on a degenerate series (") + e.what() +
				                "); naive forecast used");
				resolved.label = "naive";
				forecaster = eval::backend_forecaster(naive_, "");
			} catch (const Error &e) {
				notes.push_back(std::string("order selection failed: ") + e.what());
				resolved.label = std::string(forecast::to_string(entry.kind));
				forecaster = failing_forecaster(std::string("order selection failed: ") + e.what());
			}
		} else {
			auto spec = forecast::ModelSpec::defaults(entry.kind, window);
			resolved.label = spec.label();
			resolved.spec = spec;
			forecaster = eval::native_forecaster(std::move(spec), derive_seed(config_.seed, "fit:" + stream), &notes);
		}

		eval::WalkForwardOptions options;
		options.exogenous = config_.exogenous;
		const auto result = eval::run_walk_forward(panel, forecaster, plan, options);
		run.spec_label = resolved.label;
		run.origins = result.origins;
		run.failed_origins = result.failed_origins;
		run.unreliable = result.unreliable;
		notes.insert(notes.end(), result.diagnostics.begin(), result.diagnostics.end());
		run.notes = compact_notes(std::move(notes));
		for (const auto &t : result.tuples) {
			w.tuples.push_back({w.summary.name, entry.name, window, t});
		}
		w.runs.push_back(std::move(run));
		w.resolved.emplace(std::make_pair(entry.name, window), std::move(resolved));
	}

	forecast::ForecastBackend &backend_for(const std::string &name) {
		if (name == "naive") {
			return naive_;
		}
		auto it = backends_.find(name);
		if (it == backends_.end()) {
			std::unique_ptr<forecast::ForecastBackend> backend;
			try {
				forecast::SubprocessOptions so;
				so.command = config_.backends.at(name);
				so.timeout = config_.backend_timeout;
				backend = std::make_unique<forecast::SubprocessBackend>(std::move(so));
			} catch (const std::exception &e) {
				backend = std::make_unique<BrokenBackend>(name, e.what());
			}
			it = backends_.emplace(name, std::move(backend)).first;
		}
		return *it->second;
	}

	/// Stands in for an adapter that could not be launched; every request fails.
	class BrokenBackend final : public forecast::ForecastBackend {
	public:
		BrokenBackend(std::string name, std::string reason)
		    : info_{std::move(name), "", {}}, reason_("backend failed to start: " + std::move(reason)) {
		}
		const forecast::BackendInfo &info() const override {
			return info_;
		}
		forecast::BackendResponse request(const forecast::BackendRequest &) override {
			throw BackendError(reason_);
		}

	private:
		forecast::BackendInfo info_;
		std::string reason_;
	};

	const RunConfig &config_;
	std::filesystem::path dir_;
	forecast::NaiveBackend naive_;
	std::map<std::string, std::unique_ptr<forecast::ForecastBackend>> backends_;
};

std::vector<ProjectWork> run_projects(const RunConfig &config) {
	const std::size_t n = config.projects.size();
	std::vector<std::optional<ProjectWork>> slots(n);
	std::vector<std::exception_ptr> errors(n);
	std::atomic<std::size_t> next{0};
	auto worker = [&] {
		for (std::size_t i = next++; i < n; i = next++) {
			try {
				slots[i] = ProjectRunner(config, config.projects[i]).run();
			} catch (...) {
				errors[i] = std::current_exception();
			}
		}
	};
	const std::size_t threads = std::clamp<std::size_t>(config.workers, 1, n);
	if (threads == 1) {
		worker();
	} else {
		std::vector<std::thread> pool;
		for (std::size_t t = 0; t < threads; ++t) {
			pool.emplace_back(worker);
		}
		for (auto &t : pool) {
			t.join();
		}
	}
	std::vector<ProjectWork> out;
	for (std::size_t i = 0; i < n; ++i) {
		if (errors[i]) {
			std::rethrow_exception(errors[i]);
		}
		out.push_back(std::move(*slots[i]));
	}
	return out;
}

std::vector<HorizonComparison> compare_models(const RunConfig &config, std::span<const eval::LabeledTuple> tuples) {
	std::vector<HorizonComparison> out;
	for (auto window : config.windows) {
		for (int h : config.horizons) {
			HorizonComparison c;
			c.window = std::string(series::to_string(window));
			c.horizon = h;
			std::vector<stats::NamedSample> samples;
			for (const auto &entry : config.models) {
				stats::NamedSample sample{entry.name, {}};
				for (const auto &t : tuples) {
					if (t.model == entry.name && t.window == window && t.tuple.horizon == h && t.tuple.predicted) {
						sample.values.push_back(std::abs(t.tuple.actual - *t.tuple.predicted));
					}
				}
				if (!sample.values.empty()) {
					c.models.push_back(entry.name);
					samples.push_back(std::move(sample));
				}
			}
			if (samples.size() < 2) {
				c.skipped_reason = "fewer than two models produced forecasts";
			} else {
				try {
					c.analysis = stats::route_analysis(samples, stats::Design::Independent, config.alpha);
				} catch (const PreconditionError &e) {
					c.skipped_reason = e.what();
				}
			}
			out.push_back(std::move(c));
		}
	}
	return out;
}

/// Lowest MAE at the shortest horizon; earlier records win ties.
std::optional<eval::ErrorRecord> best_record(std::span<const eval::ErrorRecord> errors, int horizon,
                                             const std::function<bool(const eval::ErrorRecord &)> &eligible) {
	std::optional<eval::ErrorRecord> best;
	for (const auto &e : errors) {
		if (e.horizon != horizon || !eligible(e) || !std::isfinite(e.mae)) {
			continue;
		}
		if (!best || e.mae < best->mae) {
			best = e;
		}
	}
	return best;
}

ImportanceSection importance_for(const RunConfig &config, const std::string &project, series::WindowLength window,
                                 const series::TimeSeriesPanel &panel) {
	ImportanceSection sec;
	sec.project = project;
	sec.window = std::string(series::to_string(window));
	const std::string stream = project + ":" + sec.window;
	using Method = symptoms::Method;
	for (auto method : {Method::Correlation, Method::Igr, Method::Rf, Method::Gbm}) {
		try {
			switch (method) {
			case Method::Correlation:
				sec.rankings.push_back(symptoms::spearman_importance(panel));
				break;
			case Method::Igr:
				sec.rankings.push_back(symptoms::igr_importance(panel));
				break;
			case Method::Rf:
				sec.rankings.push_back(symptoms::rf_importance(panel, derive_seed(config.seed, "rf:" + stream)));
				break;
			case Method::Gbm:
				sec.rankings.push_back(symptoms::gbm_importance(panel, derive_seed(config.seed, "gbm:" + stream)));
				break;
			}
		} catch (const PreconditionError &e) {
			sec.notes.push_back(std::string(symptoms::to_string(method)) + " skipped: " + e.what());
		}
	}
	if (!sec.rankings.empty()) {
		sec.consensus = symptoms::consensus_ranking(sec.rankings);
	}
	return sec;
}

std::string read_bytes(const std::filesystem::path &path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw LoadError("cannot read " + path.string());
	}
	return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

std::uint64_t hash_project_inputs(const std::filesystem::path &project_dir, std::uint64_t basis) {
	std::uint64_t h = basis;
	for (const char *name : {"commits.csv", "versions.csv", "issues.csv", "meta.json"}) {
		h = stable_hash(name, h);
		h = stable_hash(read_bytes(project_dir / name), h);
	}
	return h;
}

StudyReport run_pipeline(const RunConfig &config) {
	config.validate();
	std::error_code ec;
	std::filesystem::create_directories(config.output_dir, ec);
	if (ec || !std::filesystem::is_directory(config.output_dir)) {
		throw ConfigError("cannot create output directory " + config.output_dir.string() + ": " + ec.message());
	}

	StudyReport report;
	report.alpha = config.alpha;
	report.config = canonical_config(config);
	std::uint64_t input = stable_hash("");
	for (const auto &dir : config.projects) {
		input = hash_project_inputs(dir, input);
	}
	const auto config_hash = stable_hash(report.config);
	report.provenance.config_hash = hex64(config_hash);
	report.provenance.input_hash = hex64(input);
	report.provenance.run_hash =
	    hex64(stable_hash(std::string(kVersion), stable_hash(hex64(input), config_hash)));
	report.provenance.seed = config.seed;
	report.provenance.version = kVersion;

	auto work = run_projects(config);
	for (auto &w : work) {
		report.projects.push_back(w.summary);
		std::move(w.runs.begin(), w.runs.end(), std::back_inserter(report.runs));
		std::move(w.tuples.begin(), w.tuples.end(), std::back_inserter(report.tuples));
	}
	report.errors = eval::summarize(report.tuples);
	report.comparisons = compare_models(config, report.tuples);

	const int h0 = *std::min_element(config.horizons.begin(), config.horizons.end());
	const auto best = best_record(report.errors, h0, [](const eval::ErrorRecord &) { return true; });
	if (best) {
		report.best_model = best->model;
		report.best_window = std::string(series::to_string(best->window));
	} else {
		report.notes.push_back("no model produced a forecast; no best model");
	}
	std::map<std::string, forecast::ModelKind> kinds;
	for (const auto &m : config.models) {
		kinds.emplace(m.name, m.kind);
	}
	const auto best_exog = best_record(report.errors, h0, [&](const eval::ErrorRecord &e) {
		return forecast::kind_uses_exogenous(kinds.at(e.model));
	});
	const std::optional<series::WindowLength> symptom_window =
	    best_exog ? std::optional(best_exog->window) : (best ? std::optional(best->window) : std::nullopt);

	if (config.run_importance && symptom_window) {
		for (const auto &w : work) {
			const auto pit = w.panels.find(*symptom_window);
			if (pit == w.panels.end()) {
				continue;
			}
			report.importance.push_back(importance_for(config, w.summary.name, *symptom_window, pit->second));
		}
	}

	if (config.run_ablation) {
		if (!best_exog) {
			report.notes.push_back("ablation skipped: no exogenous-capable model produced forecasts");
		}
		for (std::size_t i = 0; best_exog && i < work.size(); ++i) {
			const auto &w = work[i];
			const auto pit = w.panels.find(best_exog->window);
			if (pit == w.panels.end()) {
				continue;
			}
			AblationSection sec;
			sec.project = w.summary.name;
			sec.window = std::string(series::to_string(best_exog->window));
			sec.model = best_exog->model;
			const auto rit = w.resolved.find({best_exog->model, best_exog->window});
			const ImportanceSection *imp = nullptr;
			for (const auto &s : report.importance) {
				if (s.project == w.summary.name) {
					imp = &s;
				}
			}
			if (rit == w.resolved.end() || !rit->second.spec) {
				sec.spec_label = rit == w.resolved.end() ? best_exog->model : rit->second.label;
				sec.notes.push_back("ablation skipped: no native fitted model for this project");
			} else if (!imp || imp->consensus.empty()) {
				sec.spec_label = rit->second.label;
				sec.notes.push_back("ablation skipped: no feature ranking for this project");
			} else {
				sec.spec_label = rit->second.label;
				symptoms::AblationOptions ao;
				ao.k = std::min(config.ablation_k, imp->consensus.size());
				ao.seed = derive_seed(config.seed, "ablation:" + w.summary.name);
				ao.alpha = config.alpha;
				ao.exogenous = config.exogenous;
				try {
					const auto plan =
					    eval::plan_walk_forward(pit->second.size(), config.ablation_horizons, config.training_window);
					sec.results = symptoms::run_ablation(pit->second, *rit->second.spec, plan, imp->consensus, ao);
					if (sec.results.size() > 1 && sec.results.back().significance) {
						sec.top_k_rejected = sec.results.back().significance->reject_null;
					}
				} catch (const PreconditionError &e) {
					sec.notes.push_back(std::string("ablation skipped: ") + e.what());
				}
			}
			report.ablations.push_back(std::move(sec));
		}
	}
	return report;
}

void write_outputs(const StudyReport &report, const std::filesystem::path &dir) {
	std::filesystem::create_directories(dir);
	emit_report(report, ReportFormat::Json, dir);
	emit_report(report, ReportFormat::Markdown, dir);
	emit_report(report, ReportFormat::Csv, dir);
	eval::write_forecasts_csv(report.tuples, dir / "forecasts.csv");
}

} // namespace defectcast::pipeline
