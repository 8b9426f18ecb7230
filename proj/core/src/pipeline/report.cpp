#include "defectcast/pipeline/report.hpp"

#include "defectcast/csv.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace defectcast::pipeline {

using nlohmann::json;

namespace {

json num(double v) {
	return std::isfinite(v) ? json(v) : json(nullptr);
}

double dbl(const json &j) {
	return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json opt(const std::optional<double> &v) {
	return v ? num(*v) : json(nullptr);
}

std::optional<double> opt_dbl(const json &j) {
	if (j.is_null()) {
		return std::nullopt;
	}
	return j.get<double>();
}

json matrix(const std::vector<std::vector<double>> &m) {
	json out = json::array();
	for (const auto &row : m) {
		json r = json::array();
		for (double v : row) {
			r.push_back(num(v));
		}
		out.push_back(r);
	}
	return out;
}

std::vector<std::vector<double>> matrix_from(const json &j) {
	std::vector<std::vector<double>> m;
	for (const auto &row : j) {
		std::vector<double> r;
		for (const auto &v : row) {
			r.push_back(dbl(v));
		}
		m.push_back(std::move(r));
	}
	return m;
}

json test_json(const stats::TestResult &t) {
	return {{"name", t.name},
	        {"statistic", num(t.statistic)},
	        {"p_value", num(t.p_value)},
	        {"alpha", t.alpha},
	        {"reject_null", t.reject_null},
	        {"n", t.n},
	        {"diagnostics", t.diagnostics}};
}

stats::TestResult test_from(const json &j) {
	stats::TestResult t;
	t.name = j.at("name").get<std::string>();
	t.statistic = dbl(j.at("statistic"));
	t.p_value = dbl(j.at("p_value"));
	t.alpha = j.at("alpha").get<double>();
	t.reject_null = j.at("reject_null").get<bool>();
	t.n = j.at("n").get<std::vector<std::size_t>>();
	t.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
	return t;
}

json pairwise_json(const stats::PairwiseMatrix &m) {
	return {{"labels", m.labels},         {"method", m.method},         {"alpha", m.alpha},
	        {"statistic", matrix(m.statistic)}, {"raw_p", matrix(m.raw_p)}, {"adjusted_p", matrix(m.adjusted_p)}};
}

stats::PairwiseMatrix pairwise_from(const json &j) {
	stats::PairwiseMatrix m;
	m.labels = j.at("labels").get<std::vector<std::string>>();
	m.method = j.at("method").get<std::string>();
	m.alpha = j.at("alpha").get<double>();
	m.statistic = matrix_from(j.at("statistic"));
	m.raw_p = matrix_from(j.at("raw_p"));
	m.adjusted_p = matrix_from(j.at("adjusted_p"));
	return m;
}

json analysis_json(const stats::AnalysisReport &a) {
	json normality = json::array();
	for (const auto &n : a.normality) {
		normality.push_back(n ? test_json(*n) : json(nullptr));
	}
	return {{"design", std::string(stats::to_string(a.design))},
	        {"branch", std::string(stats::to_string(a.branch))},
	        {"alpha", a.alpha},
	        {"normality", normality},
	        {"omnibus", a.omnibus ? test_json(*a.omnibus) : json(nullptr)},
	        {"pairwise", a.pairwise ? pairwise_json(*a.pairwise) : json(nullptr)},
	        {"notes", a.notes}};
}

stats::AnalysisReport analysis_from(const json &j) {
	stats::AnalysisReport a;
	a.design = j.at("design").get<std::string>() == "paired" ? stats::Design::Paired : stats::Design::Independent;
	a.branch = j.at("branch").get<std::string>() == "parametric" ? stats::Branch::Parametric
	                                                             : stats::Branch::NonParametric;
	a.alpha = j.at("alpha").get<double>();
	for (const auto &n : j.at("normality")) {
		a.normality.push_back(n.is_null() ? std::nullopt : std::optional(test_from(n)));
	}
	if (!j.at("omnibus").is_null()) {
		a.omnibus = test_from(j.at("omnibus"));
	}
	if (!j.at("pairwise").is_null()) {
		a.pairwise = pairwise_from(j.at("pairwise"));
	}
	a.notes = j.at("notes").get<std::vector<std::string>>();
	return a;
}

json error_json(const eval::ErrorRecord &e) {
	return {{"model", e.model},
	        {"window", std::string(series::to_string(e.window))},
	        {"horizon", e.horizon},
	        {"mape", opt(e.mape)},
	        {"mae", num(e.mae)},
	        {"rmse", num(e.rmse)},
	        {"n_forecasts", e.n_forecasts},
	        {"mape_excluded", e.mape_excluded},
	        {"failed", e.failed}};
}

eval::ErrorRecord error_from(const json &j) {
	eval::ErrorRecord e;
	e.model = j.at("model").get<std::string>();
	e.window = series::parse_window_length(j.at("window").get<std::string>());
	e.horizon = j.at("horizon").get<int>();
	e.mape = opt_dbl(j.at("mape"));
	e.mae = dbl(j.at("mae"));
	e.rmse = dbl(j.at("rmse"));
	e.n_forecasts = j.at("n_forecasts").get<std::size_t>();
	e.mape_excluded = j.at("mape_excluded").get<std::size_t>();
	e.failed = j.at("failed").get<std::size_t>();
	return e;
}

symptoms::Method method_from(const std::string &s) {
	for (auto m : {symptoms::Method::Correlation, symptoms::Method::Igr, symptoms::Method::Rf, symptoms::Method::Gbm}) {
		if (symptoms::to_string(m) == s) {
			return m;
		}
	}
	throw ConfigError("unknown importance method '" + s + "' in report");
}

json ranking_json(const symptoms::ImportanceRanking &r) {
	json scores = json::array();
	for (double s : r.scores) {
		scores.push_back(num(s));
	}
	return {{"method", std::string(symptoms::to_string(r.method))},
	        {"features", r.features},
	        {"scores", scores},
	        {"ranks", r.ranks},
	        {"diagnostics", r.diagnostics}};
}

symptoms::ImportanceRanking ranking_from(const json &j) {
	symptoms::ImportanceRanking r;
	r.method = method_from(j.at("method").get<std::string>());
	r.features = j.at("features").get<std::vector<std::string>>();
	for (const auto &s : j.at("scores")) {
		r.scores.push_back(dbl(s));
	}
	r.ranks = j.at("ranks").get<std::vector<int>>();
	r.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
	return r;
}

json ablation_json(const symptoms::AblationResult &r) {
	json errors = json::array();
	for (const auto &e : r.errors) {
		errors.push_back(error_json(e));
	}
	json deltas = json::array();
	for (const auto &d : r.delta_vs_full) {
		deltas.push_back({{"horizon", d.horizon}, {"mape", opt(d.mape)}, {"mae", num(d.mae)}, {"rmse", num(d.rmse)}});
	}
	json origin = json::array();
	for (double v : r.origin_errors) {
		origin.push_back(num(v));
	}
	return {{"subset", r.subset},
	        {"leave_one_out", r.leave_one_out},
	        {"errors", errors},
	        {"delta_vs_full", deltas},
	        {"origin_errors", origin},
	        {"significance", r.significance ? test_json(*r.significance) : json(nullptr)},
	        {"branch", r.branch},
	        {"failed_origins", r.failed_origins}};
}

symptoms::AblationResult ablation_from(const json &j) {
	symptoms::AblationResult r;
	r.subset = j.at("subset").get<std::vector<std::string>>();
	r.leave_one_out = j.at("leave_one_out").get<bool>();
	for (const auto &e : j.at("errors")) {
		r.errors.push_back(error_from(e));
	}
	for (const auto &d : j.at("delta_vs_full")) {
		r.delta_vs_full.push_back(
		    {d.at("horizon").get<int>(), opt_dbl(d.at("mape")), dbl(d.at("mae")), dbl(d.at("rmse"))});
	}
	for (const auto &v : j.at("origin_errors")) {
		r.origin_errors.push_back(dbl(v));
	}
	if (!j.at("significance").is_null()) {
		r.significance = test_from(j.at("significance"));
	}
	r.branch = j.at("branch").get<std::string>();
	r.failed_origins = j.at("failed_origins").get<std::size_t>();
	return r;
}

json comparison_json(const HorizonComparison &c) {
	return {{"window", c.window},
	        {"horizon", c.horizon},
	        {"models", c.models},
	        {"analysis", c.analysis ? analysis_json(*c.analysis) : json(nullptr)},
	        {"skipped_reason", c.skipped_reason}};
}

HorizonComparison comparison_from(const json &j) {
	HorizonComparison c;
	c.window = j.at("window").get<std::string>();
	c.horizon = j.at("horizon").get<int>();
	c.models = j.at("models").get<std::vector<std::string>>();
	if (!j.at("analysis").is_null()) {
		c.analysis = analysis_from(j.at("analysis"));
	}
	c.skipped_reason = j.at("skipped_reason").get<std::string>();
	return c;
}

json ablation_section_json(const AblationSection &a) {
	json results = json::array();
	for (const auto &r : a.results) {
		results.push_back(ablation_json(r));
	}
	return {{"project", a.project},
	        {"window", a.window},
	        {"model", a.model},
	        {"spec", a.spec_label},
	        {"results", results},
	        {"top_k_rejected", a.top_k_rejected ? json(*a.top_k_rejected) : json(nullptr)},
	        {"notes", a.notes}};
}

std::string fmt(double v, int digits = 4) {
	if (!std::isfinite(v)) {
		return "n/a";
	}
	std::ostringstream os;
	os.setf(std::ios::fixed);
	os.precision(digits);
	os << v;
	return os.str();
}

std::string fmt(const std::optional<double> &v, int digits = 4) {
	return v ? fmt(*v, digits) : "n/a";
}

std::ofstream open_out(const std::filesystem::path &path) {
	std::ofstream out(path, std::ios::binary);
	if (!out) {
		throw LoadError("cannot write " + path.string());
	}
	return out;
}

} // namespace

ReportFormat parse_report_format(std::string_view text) {
	if (text == "json") {
		return ReportFormat::Json;
	}
	if (text == "csv") {
		return ReportFormat::Csv;
	}
	if (text == "markdown" || text == "md") {
		return ReportFormat::Markdown;
	}
	throw ConfigError("unknown report format '" + std::string(text) + "' (expected json, csv or markdown)");
}

std::string report_to_json(const StudyReport &r) {
	json j;
	j["provenance"] = {{"config_hash", r.provenance.config_hash},
	                   {"input_hash", r.provenance.input_hash},
	                   {"run_hash", r.provenance.run_hash},
	                   {"seed", r.provenance.seed},
	                   {"version", r.provenance.version}};
	j["config"] = json::parse(r.config.empty() ? "{}" : r.config);
	j["alpha"] = r.alpha;
	json projects = json::array();
	for (const auto &p : r.projects) {
		json panels = json::array();
		for (const auto &[w, n] : p.panels) {
			panels.push_back({{"window", w}, {"length", n}});
		}
		projects.push_back({{"name", p.name},
		                    {"included", p.included},
		                    {"exclusion_reason", p.exclusion_reason},
		                    {"commits", p.commits},
		                    {"defects", p.defects},
		                    {"explicit_iv", p.explicit_iv},
		                    {"estimated_iv", p.estimated_iv},
		                    {"stable_proportion", num(p.stable_proportion)},
		                    {"proportion_samples", p.proportion_samples},
		                    {"panels", panels},
		                    {"notes", p.notes}});
	}
	j["projects"] = projects;
	json runs = json::array();
	for (const auto &m : r.runs) {
		runs.push_back({{"project", m.project},
		                {"model", m.model},
		                {"window", m.window},
		                {"spec", m.spec_label},
		                {"origins", m.origins},
		                {"failed_origins", m.failed_origins},
		                {"unreliable", m.unreliable},
		                {"notes", m.notes}});
	}
	j["runs"] = runs;
	json errors = json::array();
	for (const auto &e : r.errors) {
		errors.push_back(error_json(e));
	}
	j["errors"] = errors;
	json comparisons = json::array();
	for (const auto &c : r.comparisons) {
		comparisons.push_back(comparison_json(c));
	}
	j["comparisons"] = comparisons;
	j["best_model"] = r.best_model ? json(*r.best_model) : json(nullptr);
	j["best_window"] = r.best_window ? json(*r.best_window) : json(nullptr);
	json importance = json::array();
	for (const auto &s : r.importance) {
		json rankings = json::array();
		for (const auto &rk : s.rankings) {
			rankings.push_back(ranking_json(rk));
		}
		importance.push_back({{"project", s.project},
		                      {"window", s.window},
		                      {"rankings", rankings},
		                      {"consensus", s.consensus},
		                      {"notes", s.notes}});
	}
	j["importance"] = importance;
	json ablations = json::array();
	for (const auto &a : r.ablations) {
		ablations.push_back(ablation_section_json(a));
	}
	j["ablations"] = ablations;
	j["notes"] = r.notes;
	return j.dump(2) + "\n";
}

StudyReport report_from_json(std::string_view text) {
	json j;
	try {
		j = json::parse(text);
	} catch (const json::exception &e) {
		throw ConfigError(std::string("report is not valid JSON: ") + e.what());
	}
	StudyReport r;
	try {
		const auto &pv = j.at("provenance");
		r.provenance.config_hash = pv.at("config_hash").get<std::string>();
		r.provenance.input_hash = pv.at("input_hash").get<std::string>();
		r.provenance.run_hash = pv.at("run_hash").get<std::string>();
		r.provenance.seed = pv.at("seed").get<std::uint64_t>();
		r.provenance.version = pv.at("version").get<std::string>();
		r.config = j.at("config").dump();
		r.alpha = j.at("alpha").get<double>();
		for (const auto &p : j.at("projects")) {
			ProjectSummary s;
			s.name = p.at("name").get<std::string>();
			s.included = p.at("included").get<bool>();
			s.exclusion_reason = p.at("exclusion_reason").get<std::string>();
			s.commits = p.at("commits").get<std::size_t>();
			s.defects = p.at("defects").get<std::size_t>();
			s.explicit_iv = p.at("explicit_iv").get<std::size_t>();
			s.estimated_iv = p.at("estimated_iv").get<std::size_t>();
			s.stable_proportion = dbl(p.at("stable_proportion"));
			s.proportion_samples = p.at("proportion_samples").get<std::size_t>();
			for (const auto &pn : p.at("panels")) {
				s.panels.emplace_back(pn.at("window").get<std::string>(), pn.at("length").get<std::size_t>());
			}
			s.notes = p.at("notes").get<std::vector<std::string>>();
			r.projects.push_back(std::move(s));
		}
		for (const auto &m : j.at("runs")) {
			ModelRun run;
			run.project = m.at("project").get<std::string>();
			run.model = m.at("model").get<std::string>();
			run.window = m.at("window").get<std::string>();
			run.spec_label = m.at("spec").get<std::string>();
			run.origins = m.at("origins").get<std::size_t>();
			run.failed_origins = m.at("failed_origins").get<std::size_t>();
			run.unreliable = m.at("unreliable").get<bool>();
			run.notes = m.at("notes").get<std::vector<std::string>>();
			r.runs.push_back(std::move(run));
		}
		for (const auto &e : j.at("errors")) {
			r.errors.push_back(error_from(e));
		}
		for (const auto &c : j.at("comparisons")) {
			r.comparisons.push_back(comparison_from(c));
		}
		if (!j.at("best_model").is_null()) {
			r.best_model = j.at("best_model").get<std::string>();
		}
		if (!j.at("best_window").is_null()) {
			r.best_window = j.at("best_window").get<std::string>();
		}
		for (const auto &s : j.at("importance")) {
			ImportanceSection sec;
			sec.project = s.at("project").get<std::string>();
			sec.window = s.at("window").get<std::string>();
			for (const auto &rk : s.at("rankings")) {
				sec.rankings.push_back(ranking_from(rk));
			}
			sec.consensus = s.at("consensus").get<std::vector<std::string>>();
			sec.notes = s.at("notes").get<std::vector<std::string>>();
			r.importance.push_back(std::move(sec));
		}
		for (const auto &a : j.at("ablations")) {
			AblationSection sec;
			sec.project = a.at("project").get<std::string>();
			sec.window = a.at("window").get<std::string>();
			sec.model = a.at("model").get<std::string>();
			sec.spec_label = a.at("spec").get<std::string>();
			for (const auto &res : a.at("results")) {
				sec.results.push_back(ablation_from(res));
			}
			if (!a.at("top_k_rejected").is_null()) {
				sec.top_k_rejected = a.at("top_k_rejected").get<bool>();
			}
			sec.notes = a.at("notes").get<std::vector<std::string>>();
			r.ablations.push_back(std::move(sec));
		}
		r.notes = j.at("notes").get<std::vector<std::string>>();
	} catch (const json::exception &e) {
		throw ConfigError(std::string("report JSON is missing or mistypes a field: ") + e.what());
	}
	return r;
}

std::string stats_to_json(const StudyReport &r) {
	json j;
	j["alpha"] = r.alpha;
	json comparisons = json::array();
	for (const auto &c : r.comparisons) {
		comparisons.push_back(comparison_json(c));
	}
	j["model_comparisons"] = comparisons;
	json ablation = json::array();
	for (const auto &a : r.ablations) {
		for (const auto &res : a.results) {
			if (!res.significance) {
				continue;
			}
			ablation.push_back({{"project", a.project},
			                    {"window", a.window},
			                    {"model", a.model},
			                    {"subset", res.subset},
			                    {"branch", res.branch},
			                    {"test", test_json(*res.significance)}});
		}
	}
	j["ablation_tests"] = ablation;
	return j.dump(2) + "\n";
}

std::string report_to_markdown(const StudyReport &r) {
	std::ostringstream md;
	md << "# Defect forecasting study report\n\n";
	md << "## Provenance\n\n";
	md << "| field | value |\n|---|---|\n";
	md << "| config hash | `" << r.provenance.config_hash << "` |\n";
	md << "| input hash | `" << r.provenance.input_hash << "` |\n";
	md << "| run hash | `" << r.provenance.run_hash << "` |\n";
	md << "| seed | " << r.provenance.seed << " |\n";
	md << "| version | " << r.provenance.version << " |\n";
	md << "| alpha | " << format_double(r.alpha) << " |\n\n";

	md << "### Projects\n\n| project | included | commits | defects | explicit IV | estimated IV | P | panels |\n";
	md << "|---|---|---|---|---|---|---|---|\n";
	for (const auto &p : r.projects) {
		std::vector<std::string> panels;
		for (const auto &[w, n] : p.panels) {
			panels.push_back(w + ":" + std::to_string(n));
		}
		md << "| " << p.name << " | " << (p.included ? "yes" : "no (" + p.exclusion_reason + ")") << " | "
		   << p.commits << " | " << p.defects << " | " << p.explicit_iv << " | " << p.estimated_iv << " | "
		   << fmt(p.stable_proportion, 3) << " | " << join(panels, ", ") << " |\n";
	}
	md << "\n";

	md << "## Forecast accuracy\n\n";
	md << "Source: `errors.csv` (raw forecasts in `forecasts.csv`, per-run status in `runs.csv`).\n\n";
	md << "| model | window | horizon | MAPE % | MAE | RMSE | n | MAPE excluded | failed |\n";
	md << "|---|---|---|---|---|---|---|---|---|\n";
	for (const auto &e : r.errors) {
		md << "| " << e.model << " | " << series::to_string(e.window) << " | " << e.horizon << " | " << fmt(e.mape, 2)
		   << " | " << fmt(e.mae) << " | " << fmt(e.rmse) << " | " << e.n_forecasts << " | " << e.mape_excluded
		   << " | " << e.failed << " |\n";
	}
	bool flagged = false;
	for (const auto &run : r.runs) {
		if (run.unreliable) {
			if (!flagged) {
				md << "\nUnreliable runs (more than half of the origins failed):\n\n";
				flagged = true;
			}
			md << "- " << run.project << " / " << run.model << " / " << run.window << ": " << run.failed_origins << " of "
			   << run.origins << " origins failed\n";
		}
	}
	md << "\n";

	md << "## Model comparison by horizon\n\n";
	md << "Source: `stats.json` (model_comparisons), computed on per-forecast absolute errors.\n\n";
	md << "| window | horizon | models | branch | omnibus | statistic | p | decision | pairs rejected |\n";
	md << "|---|---|---|---|---|---|---|---|---|\n";
	for (const auto &c : r.comparisons) {
		md << "| " << c.window << " | " << c.horizon << " | " << c.models.size() << " | ";
		if (!c.analysis) {
			md << "skipped | " << c.skipped_reason << " | | | | |\n";
			continue;
		}
		const auto &a = *c.analysis;
		const auto &o = *a.omnibus;
		std::size_t rejected = 0;
		std::size_t pairs = 0;
		if (a.pairwise) {
			const auto &m = *a.pairwise;
			for (std::size_t i = 0; i < m.labels.size(); ++i) {
				for (std::size_t k = i + 1; k < m.labels.size(); ++k) {
					++pairs;
					rejected += m.adjusted_p[i][k] < a.alpha ? 1 : 0;
				}
			}
		}
		md << stats::to_string(a.branch) << " | " << o.name << " | " << fmt(o.statistic) << " | " << fmt(o.p_value, 6)
		   << " | " << (o.reject_null ? "rejected" : "not rejected") << " | "
		   << (a.pairwise ? std::to_string(rejected) + "/" + std::to_string(pairs) : "n/a") << " |\n";
	}
	md << "\nBest model-window pair: " << r.best_model.value_or("n/a") << " / " << r.best_window.value_or("n/a")
	   << "\n\n";

	md << "## Feature importance\n\n";
	md << "Source: `importance.csv` and `consensus.csv`.\n\n";
	for (const auto &s : r.importance) {
		md << "### " << s.project << " (" << s.window << ")\n\n";
		md << "| consensus rank | feature |";
		for (const auto &rk : s.rankings) {
			md << " " << symptoms::to_string(rk.method) << " rank |";
		}
		md << "\n|---|---|";
		for (std::size_t i = 0; i < s.rankings.size(); ++i) {
			md << "---|";
		}
		md << "\n";
		for (std::size_t i = 0; i < s.consensus.size(); ++i) {
			md << "| " << i + 1 << " | " << s.consensus[i] << " |";
			for (const auto &rk : s.rankings) {
				const auto it = std::find(rk.features.begin(), rk.features.end(), s.consensus[i]);
				md << " " << rk.ranks[static_cast<std::size_t>(it - rk.features.begin())] << " |";
			}
			md << "\n";
		}
		for (const auto &n : s.notes) {
			md << "\n- " << n;
		}
		md << "\n";
	}
	if (r.importance.empty()) {
		md << "No importance analysis was run.\n";
	}
	md << "\n";

	md << "## Feature ablation\n\n";
	md << "Source: `ablation.csv` and `stats.json` (ablation_tests).\n\n";
	for (const auto &a : r.ablations) {
		md << "### " << a.project << ": " << a.spec_label << " (" << a.window << ")\n\n";
		md << "Removing all top-k features: "
		   << (a.top_k_rejected ? (*a.top_k_rejected ? "rejected" : "not rejected") : std::string("not evaluated"))
		   << "\n\n";
		md << "| removed | horizon | RMSE | delta RMSE | delta MAE | test | p |\n|---|---|---|---|---|---|---|\n";
		for (const auto &res : a.results) {
			for (const auto &e : res.errors) {
				const auto d = std::find_if(res.delta_vs_full.begin(), res.delta_vs_full.end(),
				                            [&](const symptoms::MetricDelta &m) { return m.horizon == e.horizon; });
				md << "| " << (res.subset.empty() ? "(none)" : join(res.subset, " + ")) << " | " << e.horizon << " | "
				   << fmt(e.rmse) << " | " << (d != res.delta_vs_full.end() ? fmt(d->rmse) : "n/a") << " | "
				   << (d != res.delta_vs_full.end() ? fmt(d->mae) : "n/a") << " | "
				   << (res.significance ? res.significance->name : "") << " | "
				   << (res.significance ? fmt(res.significance->p_value, 6) : "") << " |\n";
			}
		}
		for (const auto &n : a.notes) {
			md << "\n- " << n;
		}
		md << "\n";
	}
	if (r.ablations.empty()) {
		md << "No ablation was run.\n";
	}
	if (!r.notes.empty()) {
		md << "\n## Notes\n\n";
		for (const auto &n : r.notes) {
			md << "- " << n << "\n";
		}
	}
	return md.str();
}

void write_csv_bundle(const StudyReport &r, const std::filesystem::path &dir) {
	eval::write_errors_csv(r.errors, dir / "errors.csv");
	{
		auto out = open_out(dir / "runs.csv");
		csv::write_row(out, {"project", "model", "window", "spec", "origins", "failed_origins", "unreliable", "notes"});
		for (const auto &m : r.runs) {
			csv::write_row(out, {m.project, m.model, m.window, m.spec_label, std::to_string(m.origins),
			                     std::to_string(m.failed_origins), m.unreliable ? "1" : "0", join(m.notes, " | ")});
		}
	}
	{
		auto out = open_out(dir / "importance.csv");
		csv::write_row(out, {"project", "window", "method", "feature", "score", "rank"});
		for (const auto &s : r.importance) {
			for (const auto &rk : s.rankings) {
				for (std::size_t i = 0; i < rk.features.size(); ++i) {
					csv::write_row(out, {s.project, s.window, std::string(symptoms::to_string(rk.method)),
					                     rk.features[i], format_double(rk.scores[i]), std::to_string(rk.ranks[i])});
				}
			}
		}
	}
	{
		auto out = open_out(dir / "consensus.csv");
		csv::write_row(out, {"project", "window", "rank", "feature", "mean_rank"});
		for (const auto &s : r.importance) {
			for (std::size_t i = 0; i < s.consensus.size(); ++i) {
				double sum = 0.0;
				for (const auto &rk : s.rankings) {
					const auto it = std::find(rk.features.begin(), rk.features.end(), s.consensus[i]);
					sum += rk.ranks[static_cast<std::size_t>(it - rk.features.begin())];
				}
				csv::write_row(out, {s.project, s.window, std::to_string(i + 1), s.consensus[i],
				                     format_double(sum / static_cast<double>(s.rankings.size()))});
			}
		}
	}
	{
		auto out = open_out(dir / "ablation.csv");
		csv::write_row(out, {"project", "window", "model", "subset", "leave_one_out", "horizon", "mape", "mae", "rmse",
		                     "delta_mape", "delta_mae", "delta_rmse", "test", "branch", "p_value", "reject_null"});
		for (const auto &a : r.ablations) {
			for (const auto &res : a.results) {
				const std::string subset = res.subset.empty() ? "(none)" : join(res.subset, "+");
				for (const auto &e : res.errors) {
					const auto d = std::find_if(res.delta_vs_full.begin(), res.delta_vs_full.end(),
					                            [&](const symptoms::MetricDelta &m) { return m.horizon == e.horizon; });
					const bool has_d = d != res.delta_vs_full.end();
					csv::write_row(out, {a.project, a.window, a.spec_label, subset, res.leave_one_out ? "1" : "0",
					                     std::to_string(e.horizon), e.mape ? format_double(*e.mape) : "",
					                     format_double(e.mae), format_double(e.rmse),
					                     has_d && d->mape ? format_double(*d->mape) : "",
					                     has_d ? format_double(d->mae) : "", has_d ? format_double(d->rmse) : "",
					                     res.significance ? res.significance->name : "", res.branch,
					                     res.significance ? format_double(res.significance->p_value) : "",
					                     res.significance ? (res.significance->reject_null ? "1" : "0") : ""});
				}
			}
		}
	}
}

void emit_report(const StudyReport &report, ReportFormat format, const std::filesystem::path &dir) {
	std::filesystem::create_directories(dir);
	switch (format) {
	case ReportFormat::Json: {
		auto out = open_out(dir / "report.json");
		out << report_to_json(report);
		auto st = open_out(dir / "stats.json");
		st << stats_to_json(report);
		break;
	}
	case ReportFormat::Markdown: {
		auto out = open_out(dir / "report.md");
		out << report_to_markdown(report);
		break;
	}
	case ReportFormat::Csv:
		write_csv_bundle(report, dir);
		break;
	}
}

} // namespace defectcast::pipeline
