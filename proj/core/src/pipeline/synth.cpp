#include "defectcast/pipeline/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace defectcast::pipeline {

using nlohmann::json;

SynthProject synth_project(std::uint64_t seed, const SynthParams &params) {
	if (params.days <= 0 || !(params.commits_per_day > 0.0) || params.release_every_days <= 0 ||
	    params.defect_rate < 0.0 || params.planted_features > params.features) {
		throw PreconditionError("synthetic project parameters must be positive (and planted <= features)");
	}
	Rng commit_rng(derive_seed(seed, "synth:commits"));
	Rng defect_rng(derive_seed(seed, "synth:defects"));
	Rng metric_rng(derive_seed(seed, "synth:metrics"));

	SynthProject out;
	auto &p = out.project;
	p.name = params.name;
	for (std::size_t j = 0; j < params.features; ++j) {
		p.feature_names.push_back("m" + std::to_string(j + 1));
	}
	for (std::size_t j = 0; j < params.planted_features; ++j) {
		out.planted.push_back(p.feature_names[j]);
	}

	const EpochSeconds end = params.start + static_cast<EpochSeconds>(params.days) * kSecondsPerDay;
	const double mean_gap = static_cast<double>(kSecondsPerDay) / params.commits_per_day;
	double t = static_cast<double>(params.start);
	std::size_t index = 0;
	while (true) {
		t += commit_rng.exponential(1.0 / mean_gap);
		if (t >= static_cast<double>(end)) {
			break;
		}
		if (params.max_commits > 0 && index >= params.max_commits) {
			break;
		}
		ingest::CommitRecord c;
		c.id = "c" + std::to_string(++index);
		c.timestamp = static_cast<EpochSeconds>(t);
		if (!p.commits.empty() && c.timestamp <= p.commits.back().timestamp) {
			c.timestamp = p.commits.back().timestamp + 1;
		}
		p.commits.push_back(std::move(c));
	}
	if (p.commits.empty()) {
		ingest::CommitRecord c;
		c.id = "c1";
		c.timestamp = params.start + kSecondsPerDay / 2;
		p.commits.push_back(std::move(c));
	}

	const EpochSeconds step = static_cast<EpochSeconds>(params.release_every_days) * kSecondsPerDay;
	int ordinal = 0;
	for (EpochSeconds r = params.start + step;; r += step) {
		p.versions.push_back({"v" + std::to_string(ordinal + 1), r, ordinal + 1});
		++ordinal;
		if (r >= end) {
			break;
		}
	}
	const std::span<const ingest::VersionTag> tags(p.versions);

	int n_defects = params.defect_rate > 0.0 ? defect_rng.poisson(params.defect_rate * params.days) : 0;
	if (params.max_defects > 0) {
		n_defects = std::min(n_defects, static_cast<int>(params.max_defects));
	}
	std::vector<lifecycle::DefectRecord> records;
	for (int d = 0; d < n_defects; ++d) {
		auto &fix = p.commits[static_cast<std::size_t>(defect_rng.below(p.commits.size()))];
		const std::string key = "DEF-" + std::to_string(d + 1);
		const double delay = defect_rng.uniform(0.0, static_cast<double>(params.max_report_delay_days)) *
		                     static_cast<double>(kSecondsPerDay);
		const EpochSeconds open = std::max(params.start, fix.timestamp - static_cast<EpochSeconds>(delay));

		SynthDefect sd;
		auto &rec = sd.record;
		rec.id = key;
		rec.fix_commit = fix.id;
		rec.fv = ingest::version_of(fix.timestamp, tags);
		rec.ov = std::min(ingest::version_of(open, tags), rec.fv);
		sd.outlier = defect_rng.bernoulli(params.outlier_fraction);
		if (sd.outlier) {
			rec.iv = 1 + static_cast<int>(defect_rng.below(static_cast<std::uint64_t>(rec.ov)));
		} else {
			const int span = std::max(rec.fv - rec.ov, 1);
			rec.iv = std::max(1, rec.fv - static_cast<int>(std::round(params.true_proportion * span)));
			rec.iv = std::min(rec.iv, rec.ov);
		}
		sd.has_affected_versions = defect_rng.bernoulli(params.av_fraction);
		rec.provenance = lifecycle::IvProvenance::Explicit;

		ingest::IssueTicket ticket;
		ticket.key = key;
		ticket.open_time = open;
		ticket.fix_commit_ids = {fix.id};
		if (sd.has_affected_versions) {
			std::vector<std::string> av;
			for (int v = rec.iv; v <= rec.fv && v <= static_cast<int>(p.versions.size()); ++v) {
				av.push_back(p.versions[static_cast<std::size_t>(v - 1)].name);
			}
			ticket.affected_versions = std::move(av);
		}
		fix.is_fix = true;
		fix.issue_keys.push_back(key);
		p.issues.push_back(std::move(ticket));
		records.push_back(rec);
		out.truth.push_back(std::move(sd));
	}

	const auto density = lifecycle::build_density_series(p.commits, p.versions, records);
	for (std::size_t i = 0; i < p.commits.size(); ++i) {
		auto &c = p.commits[i];
		const double active = static_cast<double>(density[i].active_defects);
		c.metrics.resize(params.features);
		for (std::size_t j = 0; j < params.features; ++j) {
			const double base = 10.0 * static_cast<double>(j + 1);
			const double planted = j < params.planted_features ? params.signal * active : 0.0;
			c.metrics[j] = base + planted + metric_rng.normal();
		}
	}

	p.meta.archived = false;
	p.meta.fork = false;
	p.meta.last_activity = p.commits.back().timestamp;
	p.meta.contributors = 5;
	p.meta.stars = 120;
	return out;
}

void write_synth_project(const SynthProject &synth, const std::filesystem::path &dir) {
	ingest::write_project(synth.project, dir);
	json truth = json::object();
	json defects = json::array();
	for (const auto &d : synth.truth) {
		defects.push_back({{"id", d.record.id},
		                   {"fix_commit", d.record.fix_commit},
		                   {"iv", d.record.iv},
		                   {"ov", d.record.ov},
		                   {"fv", d.record.fv},
		                   {"has_affected_versions", d.has_affected_versions},
		                   {"outlier", d.outlier}});
	}
	truth["defects"] = defects;
	truth["planted_features"] = synth.planted;
	std::ofstream out(dir / "truth.json", std::ios::binary);
	if (!out) {
		throw LoadError("cannot write " + (dir / "truth.json").string());
	}
	out << truth.dump(2) << '\n';
}

series::TimeSeriesPanel synth_panel(std::uint64_t seed, const PanelSynthParams &params) {
	Rng rng(derive_seed(seed, "synth:panel"));
	series::TimeSeriesPanel panel;
	panel.grid.length = params.window;
	panel.grid.start = params.start;
	const EpochSeconds width = series::window_days(params.window) * kSecondsPerDay;
	for (std::size_t j = 0; j < params.features; ++j) {
		panel.feature_names.push_back("f" + std::to_string(j + 1));
	}
	for (std::size_t i = 0; i < params.n; ++i) {
		const EpochSeconds a = params.start + static_cast<EpochSeconds>(i) * width;
		panel.grid.boundaries.emplace_back(a, a + width);
		series::Observation obs;
		obs.features.resize(params.features);
		for (auto &v : obs.features) {
			v = rng.normal();
		}
		double y = params.noise * rng.normal();
		for (auto j : params.signal_features) {
			y += params.signal * obs.features.at(j);
		}
		obs.target = y;
		panel.observations.push_back(std::move(obs));
	}
	return panel;
}

} // namespace defectcast::pipeline
