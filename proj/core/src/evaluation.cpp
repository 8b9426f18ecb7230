#include "defectcast/evaluation.hpp"

#include "defectcast/csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <tuple>

namespace defectcast::eval {

int WalkForwardPlan::max_horizon() const {
	return horizons.empty() ? 0 : *std::max_element(horizons.begin(), horizons.end());
}

WalkForwardPlan plan_walk_forward(std::size_t n, std::vector<int> horizons, TrainingWindow window) {
	if (horizons.empty()) {
		throw PreconditionError("walk-forward plan needs at least one horizon");
	}
	std::sort(horizons.begin(), horizons.end());
	horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());
	if (horizons.front() < 1) {
		throw PreconditionError("horizons must be >= 1");
	}
	WalkForwardPlan plan;
	plan.horizons = std::move(horizons);
	plan.window = window;
	plan.initial_train = std::max<std::size_t>((6 * n + 9) / 10, series::kMinFitLength);
	const auto hmax = static_cast<std::size_t>(plan.max_horizon());
	if (n < plan.initial_train + hmax) {
		throw PreconditionError("panel of length " + std::to_string(n) + " too short for walk-forward: needs " +
		                        std::to_string(plan.initial_train + hmax) + " (initial " +
		                        std::to_string(plan.initial_train) + " + horizon " + std::to_string(hmax) + ")");
	}
	for (std::size_t o = plan.initial_train; o + hmax <= n; o += plan.step) {
		plan.origins.push_back(o);
	}
	return plan;
}

bool AccessAudit::no_lookahead() const {
	return std::all_of(records_.begin(), records_.end(),
	                   [](const AccessRecord &r) { return r.train_end <= r.origin && r.train_begin <= r.train_end; });
}

WalkForwardRun run_walk_forward(const series::TimeSeriesPanel &panel, const Forecaster &forecaster,
                                const WalkForwardPlan &plan, const WalkForwardOptions &options) {
	const std::size_t n = panel.size();
	const int hmax = plan.max_horizon();
	WalkForwardRun run;
	for (std::size_t origin : plan.origins) {
		if (origin + static_cast<std::size_t>(hmax) > n || origin == 0) {
			throw PreconditionError("walk-forward plan does not fit a panel of length " + std::to_string(n));
		}
		const std::size_t begin =
		    plan.window == TrainingWindow::Sliding && origin > plan.initial_train ? origin - plan.initial_train : 0;
		series::TimeSeriesPanel train = panel.prefix(origin);
		if (begin > 0) {
			train.observations.erase(train.observations.begin(),
			                         train.observations.begin() + static_cast<std::ptrdiff_t>(begin));
			train.grid.boundaries.erase(train.grid.boundaries.begin(),
			                            train.grid.boundaries.begin() + static_cast<std::ptrdiff_t>(begin));
			train.grid.start = train.grid.boundaries.front().first;
		}
		std::vector<std::vector<double>> future;
		for (int k = 0; k < hmax; ++k) {
			const auto idx = options.exogenous == ExogenousMode::Known ? origin + static_cast<std::size_t>(k) : origin - 1;
			future.push_back(panel.observations[idx].features);
		}
		if (options.audit) {
			options.audit->record({origin, begin, origin, future.size()});
		}

		++run.origins;
		std::string reason;
		std::optional<forecast::ForecastResult> result;
		try {
			result = forecaster(train, hmax, future);
			if (result->points.size() < static_cast<std::size_t>(hmax)) {
				reason = "forecast returned " + std::to_string(result->points.size()) + " points";
				result.reset();
			}
		} catch (const std::exception &e) {
			reason = e.what();
		}
		if (!result) {
			++run.failed_origins;
		}
		for (int h : plan.horizons) {
			ForecastTuple t;
			t.origin = origin;
			t.horizon = h;
			t.actual = panel.observations[origin + static_cast<std::size_t>(h) - 1].target;
			if (result) {
				t.predicted = result->points[static_cast<std::size_t>(h) - 1];
			} else {
				t.failed_reason = reason;
			}
			run.tuples.push_back(std::move(t));
		}
	}
	run.unreliable = 2 * run.failed_origins > run.origins;
	return run;
}

Forecaster native_forecaster(forecast::ModelSpec spec, std::uint64_t seed, std::vector<std::string> *notes) {
	return [spec = std::move(spec), seed, notes](const series::TimeSeriesPanel &train, int h,
	                                             std::span<const std::vector<double>> future) {
		try {
			const auto model = forecast::fit(train, spec, seed);
			return forecast::forecast(model, h, future);
		} catch (const DegenerateSeriesError &e) {
			if (notes) {
				notes->push_back(std::string(e.what()) + " at origin " + std::to_string(train.size()) +
				                 "; naive forecast substituted");
			}
			forecast::NaiveBackend naive;
			return forecast::external_forecast(naive, train.targets(), h);
		}
	};
}

Forecaster backend_forecaster(forecast::ForecastBackend &backend, std::string model) {
	return [&backend, model = std::move(model)](const series::TimeSeriesPanel &train, int h,
	                                            std::span<const std::vector<double>>) {
		return forecast::external_forecast(backend, train.targets(), h, model);
	};
}

Metrics error_metrics(std::span<const std::pair<double, double>> pairs) {
	if (pairs.empty()) {
		throw PreconditionError("error metrics need at least one (actual, predicted) pair");
	}
	Metrics m;
	m.n = pairs.size();
	double abs_sum = 0.0;
	double sq_sum = 0.0;
	double pct_sum = 0.0;
	std::size_t pct_n = 0;
	for (const auto &[a, p] : pairs) {
		const double err = a - p;
		abs_sum += std::abs(err);
		sq_sum += err * err;
		if (std::abs(a) >= kMapeZeroThreshold) {
			pct_sum += std::abs(err) / std::abs(a);
			++pct_n;
		} else {
			++m.mape_excluded;
		}
	}
	const auto n = static_cast<double>(m.n);
	m.mae = abs_sum / n;
	m.rmse = std::sqrt(sq_sum / n);
	if (pct_n > 0) {
		m.mape = 100.0 * pct_sum / static_cast<double>(pct_n);
	}
	return m;
}

std::vector<ErrorRecord> summarize(std::span<const LabeledTuple> tuples) {
	using Key = std::tuple<std::string, int, int>;
	struct Group {
		std::vector<std::pair<double, double>> pairs;
		std::size_t failed = 0;
	};
	std::map<Key, Group> groups;
	for (const auto &t : tuples) {
		auto &g = groups[{t.model, series::window_days(t.window), t.tuple.horizon}];
		if (t.tuple.predicted) {
			g.pairs.emplace_back(t.tuple.actual, *t.tuple.predicted);
		} else {
			++g.failed;
		}
	}
	std::vector<ErrorRecord> out;
	for (const auto &[key, g] : groups) {
		if (g.pairs.empty()) {
			continue;
		}
		const auto m = error_metrics(g.pairs);
		ErrorRecord r;
		r.model = std::get<0>(key);
		const int days = std::get<1>(key);
		r.window = days == 7 ? series::WindowLength::Weekly
		                     : (days == 14 ? series::WindowLength::Biweekly : series::WindowLength::Monthly);
		r.horizon = std::get<2>(key);
		r.mape = m.mape;
		r.mae = m.mae;
		r.rmse = m.rmse;
		r.n_forecasts = m.n;
		r.mape_excluded = m.mape_excluded;
		r.failed = g.failed;
		out.push_back(std::move(r));
	}
	return out;
}

void write_forecasts_csv(std::span<const LabeledTuple> tuples, const std::filesystem::path &path) {
	std::ofstream out(path);
	if (!out) {
		throw LoadError("cannot write " + path.string());
	}
	csv::write_row(out, {"project", "model", "window", "origin", "horizon", "actual", "predicted", "failed_reason"});
	for (const auto &t : tuples) {
		csv::write_row(out, {t.project, t.model, std::string(series::to_string(t.window)),
		                     std::to_string(t.tuple.origin), std::to_string(t.tuple.horizon),
		                     format_double(t.tuple.actual), t.tuple.predicted ? format_double(*t.tuple.predicted) : "",
		                     t.tuple.failed_reason});
	}
}

void write_errors_csv(std::span<const ErrorRecord> records, const std::filesystem::path &path) {
	std::ofstream out(path);
	if (!out) {
		throw LoadError("cannot write " + path.string());
	}
	csv::write_row(out, {"model", "window", "horizon", "mape", "mae", "rmse", "n_forecasts", "mape_excluded", "failed"});
	for (const auto &r : records) {
		csv::write_row(out, {r.model, std::string(series::to_string(r.window)), std::to_string(r.horizon),
		                     r.mape ? format_double(*r.mape) : "", format_double(r.mae), format_double(r.rmse),
		                     std::to_string(r.n_forecasts), std::to_string(r.mape_excluded), std::to_string(r.failed)});
	}
}

} // namespace defectcast::eval
