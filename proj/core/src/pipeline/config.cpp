#include "defectcast/pipeline/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace defectcast::pipeline {

using nlohmann::json;

namespace {

template <typename T>
T get_as(const json &j, const char *key) {
	try {
		return j.at(key).get<T>();
	} catch (const json::exception &e) {
		throw ConfigError(std::string("config field '") + key + "': " + e.what());
	}
}

std::filesystem::path resolve(const std::filesystem::path &base, const std::string &p) {
	const std::filesystem::path path(p);
	return path.is_absolute() ? path : (base / path).lexically_normal();
}

const std::set<std::string> kKnownKeys{
    "projects",         "windows",        "models",         "horizons",          "alpha",
    "seed",             "backends",       "backend_timeout_ms", "output_dir",    "ablation_k",
    "ablation_horizons", "importance",    "ablation",       "mining_filter_now", "use_explicit_iv",
    "exogenous",        "training_window", "aggregation",   "workers"};

} // namespace

ModelEntry parse_model_entry(std::string_view text) {
	ModelEntry e;
	e.name = std::string(text);
	try {
		e.kind = forecast::parse_model_kind(text);
	} catch (const Error &err) {
		throw ConfigError("unknown model '" + std::string(text) + "': " + err.what());
	}
	if (e.kind == forecast::ModelKind::External) {
		if (text == "naive") {
			e.backend = "naive";
		} else {
			e.backend = std::string(text.substr(text.find(':') + 1));
			if (e.backend.empty()) {
				throw ConfigError("external model entry '" + std::string(text) + "' names no backend");
			}
		}
	} else {
		e.name = std::string(forecast::to_string(e.kind));
	}
	return e;
}

void RunConfig::validate() const {
	if (projects.empty()) {
		throw ConfigError("config lists no projects");
	}
	if (windows.empty()) {
		throw ConfigError("config lists no window lengths");
	}
	if (models.empty()) {
		throw ConfigError("config lists no models");
	}
	if (horizons.empty() || *std::min_element(horizons.begin(), horizons.end()) < 1) {
		throw ConfigError("horizons must be a non-empty list of integers >= 1");
	}
	if (ablation_horizons.empty() || *std::min_element(ablation_horizons.begin(), ablation_horizons.end()) < 1) {
		throw ConfigError("ablation_horizons must be a non-empty list of integers >= 1");
	}
	if (!(alpha > 0.0 && alpha < 0.5)) {
		throw ConfigError("alpha must lie in (0, 0.5)");
	}
	if (ablation_k > 8) {
		throw ConfigError("ablation_k must be <= 8");
	}
	if (workers < 1) {
		throw ConfigError("workers must be >= 1");
	}
	if (backend_timeout.count() <= 0) {
		throw ConfigError("backend_timeout_ms must be positive");
	}
	std::set<std::string> seen;
	for (const auto &m : models) {
		if (!seen.insert(m.name).second) {
			throw ConfigError("model '" + m.name + "' listed twice");
		}
		if (m.kind == forecast::ModelKind::External && m.backend != "naive" && !backends.contains(m.backend)) {
			throw ConfigError("model '" + m.name + "' refers to backend '" + m.backend +
			                  "' with no launch command under 'backends'");
		}
	}
	for (const auto &[name, argv] : backends) {
		if (argv.empty()) {
			throw ConfigError("backend '" + name + "' has an empty launch command");
		}
	}
	std::set<series::WindowLength> wins(windows.begin(), windows.end());
	if (wins.size() != windows.size()) {
		throw ConfigError("window lengths listed twice");
	}
}

RunConfig parse_config(std::string_view text, const std::filesystem::path &base_dir) {
	json j;
	try {
		j = json::parse(text);
	} catch (const json::exception &e) {
		throw ConfigError(std::string("config is not valid JSON: ") + e.what());
	}
	if (!j.is_object()) {
		throw ConfigError("config must be a JSON object");
	}
	for (const auto &[key, value] : j.items()) {
		if (!kKnownKeys.contains(key)) {
			throw ConfigError("unknown config key '" + key + "'");
		}
	}
	RunConfig c;
	if (j.contains("projects")) {
		for (const auto &p : get_as<std::vector<std::string>>(j, "projects")) {
			c.projects.push_back(resolve(base_dir, p));
		}
	}
	if (j.contains("windows")) {
		for (const auto &w : get_as<std::vector<std::string>>(j, "windows")) {
			try {
				c.windows.push_back(series::parse_window_length(w));
			} catch (const Error &e) {
				throw ConfigError("unknown window length '" + w + "'");
			}
		}
	} else {
		c.windows = {series::WindowLength::Weekly, series::WindowLength::Biweekly, series::WindowLength::Monthly};
	}
	if (j.contains("models")) {
		for (const auto &m : get_as<std::vector<std::string>>(j, "models")) {
			c.models.push_back(parse_model_entry(m));
		}
	}
	if (j.contains("horizons")) {
		c.horizons = get_as<std::vector<int>>(j, "horizons");
	}
	if (j.contains("alpha")) {
		c.alpha = get_as<double>(j, "alpha");
	}
	if (j.contains("seed")) {
		c.seed = get_as<std::uint64_t>(j, "seed");
	}
	if (j.contains("backends")) {
		c.backends = get_as<std::map<std::string, std::vector<std::string>>>(j, "backends");
	}
	if (j.contains("backend_timeout_ms")) {
		c.backend_timeout = std::chrono::milliseconds(get_as<std::int64_t>(j, "backend_timeout_ms"));
	}
	c.output_dir = resolve(base_dir, j.contains("output_dir") ? get_as<std::string>(j, "output_dir") : "out");
	if (j.contains("ablation_k")) {
		c.ablation_k = get_as<std::size_t>(j, "ablation_k");
	}
	if (j.contains("ablation_horizons")) {
		c.ablation_horizons = get_as<std::vector<int>>(j, "ablation_horizons");
	}
	if (j.contains("importance")) {
		c.run_importance = get_as<bool>(j, "importance");
	}
	if (j.contains("ablation")) {
		c.run_ablation = get_as<bool>(j, "ablation");
	}
	if (j.contains("mining_filter_now")) {
		c.mining_filter_now = get_as<EpochSeconds>(j, "mining_filter_now");
	}
	if (j.contains("use_explicit_iv")) {
		c.use_explicit_iv = get_as<bool>(j, "use_explicit_iv");
	}
	if (j.contains("exogenous")) {
		const auto v = get_as<std::string>(j, "exogenous");
		if (v == "known") {
			c.exogenous = eval::ExogenousMode::Known;
		} else if (v == "freeze_last") {
			c.exogenous = eval::ExogenousMode::FreezeLast;
		} else {
			throw ConfigError("exogenous must be 'known' or 'freeze_last'");
		}
	}
	if (j.contains("training_window")) {
		const auto v = get_as<std::string>(j, "training_window");
		if (v == "expanding") {
			c.training_window = eval::TrainingWindow::Expanding;
		} else if (v == "sliding") {
			c.training_window = eval::TrainingWindow::Sliding;
		} else {
			throw ConfigError("training_window must be 'expanding' or 'sliding'");
		}
	}
	if (j.contains("aggregation")) {
		const auto v = get_as<std::string>(j, "aggregation");
		if (v == "mean") {
			c.aggregation = series::FeatureAggregation::Mean;
		} else if (v == "sum") {
			c.aggregation = series::FeatureAggregation::Sum;
		} else if (v == "last") {
			c.aggregation = series::FeatureAggregation::Last;
		} else {
			throw ConfigError("aggregation must be 'mean', 'sum' or 'last'");
		}
	}
	if (j.contains("workers")) {
		c.workers = get_as<std::size_t>(j, "workers");
	}
	c.validate();
	return c;
}

RunConfig load_config(const std::filesystem::path &path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw ConfigError("cannot read config file " + path.string());
	}
	std::ostringstream buf;
	buf << in.rdbuf();
	return parse_config(buf.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

std::string canonical_config(const RunConfig &c) {
	json j;
	std::vector<std::string> projects;
	for (const auto &p : c.projects) {
		projects.push_back(p.filename().string());
	}
	j["projects"] = projects;
	std::vector<std::string> windows;
	for (auto w : c.windows) {
		windows.emplace_back(series::to_string(w));
	}
	j["windows"] = windows;
	std::vector<std::string> models;
	for (const auto &m : c.models) {
		models.push_back(m.name);
	}
	j["models"] = models;
	j["horizons"] = c.horizons;
	j["alpha"] = c.alpha;
	j["seed"] = c.seed;
	j["backends"] = c.backends;
	j["backend_timeout_ms"] = c.backend_timeout.count();
	j["ablation_k"] = c.ablation_k;
	j["ablation_horizons"] = c.ablation_horizons;
	j["importance"] = c.run_importance;
	j["ablation"] = c.run_ablation;
	j["mining_filter_now"] = c.mining_filter_now ? json(*c.mining_filter_now) : json(nullptr);
	j["use_explicit_iv"] = c.use_explicit_iv;
	j["exogenous"] = c.exogenous == eval::ExogenousMode::Known ? "known" : "freeze_last";
	j["training_window"] = c.training_window == eval::TrainingWindow::Expanding ? "expanding" : "sliding";
	j["aggregation"] = c.aggregation == series::FeatureAggregation::Mean
	                       ? "mean"
	                       : (c.aggregation == series::FeatureAggregation::Sum ? "sum" : "last");
	return j.dump();
}

} // namespace defectcast::pipeline
