#include "defectcast/evaluation.hpp"
#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace dc = defectcast;
namespace ev = defectcast::eval;
namespace fc = defectcast::forecast;
using fixtures::panel_from;

namespace {

ev::Forecaster naive_forecaster() {
	return [](const dc::series::TimeSeriesPanel &train, int h, std::span<const std::vector<double>>) {
		fc::ForecastResult r;
		r.points.assign(static_cast<std::size_t>(h), train.observations.back().target);
		return r;
	};
}

dc::series::TimeSeriesPanel noisy_panel(std::size_t n, std::uint64_t seed) {
	dc::Rng rng(seed);
	std::vector<double> y;
	std::vector<std::vector<double>> x;
	for (std::size_t t = 0; t < n; ++t) {
		x.push_back({rng.normal(), rng.normal()});
		y.push_back(5.0 + x.back()[0] + rng.normal());
	}
	return panel_from(y, x);
}

} // namespace

TEST(Plan, OriginArithmetic) {
	const auto one = ev::plan_walk_forward(20, {1});
	EXPECT_EQ(one.initial_train, 12u);
	EXPECT_EQ(one.origins, (std::vector<std::size_t>{12, 13, 14, 15, 16, 17, 18, 19}));
	const auto two = ev::plan_walk_forward(20, {4, 1, 4});
	EXPECT_EQ(two.origins, (std::vector<std::size_t>{12, 13, 14, 15, 16}));
	EXPECT_EQ(two.horizons, (std::vector<int>{1, 4}));
	try {
		ev::plan_walk_forward(10, {4});
		FAIL();
	} catch (const dc::PreconditionError &e) {
		EXPECT_NE(std::string(e.what()).find("12"), std::string::npos);
	}
	EXPECT_THROW(ev::plan_walk_forward(30, {}), dc::PreconditionError);
	EXPECT_THROW(ev::plan_walk_forward(30, {0}), dc::PreconditionError);
}

TEST(WalkForward, NaivePredictsPreviousActual) {
	const auto panel = noisy_panel(40, 1);
	const auto plan = ev::plan_walk_forward(panel.size(), {1});
	fc::NaiveBackend naive;
	const auto run = ev::run_walk_forward(panel, ev::backend_forecaster(naive), plan);
	ASSERT_EQ(run.tuples.size(), plan.origins.size());
	for (const auto &t : run.tuples) {
		ASSERT_TRUE(t.predicted);
		EXPECT_EQ(*t.predicted, panel.observations[t.origin - 1].target);
		EXPECT_EQ(t.actual, panel.observations[t.origin].target);
	}
	EXPECT_FALSE(run.unreliable);
}

TEST(WalkForward, TupleCardinality) {
	const auto panel = noisy_panel(30, 2);
	auto plan = ev::plan_walk_forward(panel.size(), {1, 2});
	plan.origins.resize(8);
	const auto run = ev::run_walk_forward(panel, naive_forecaster(), plan);
	EXPECT_LE(run.tuples.size(), 16u);
	EXPECT_EQ(run.origins, 8u);
}

TEST(WalkForward, DeterministicNativeModel) {
	const auto panel = noisy_panel(60, 3);
	const auto plan = ev::plan_walk_forward(panel.size(), {1, 4});
	auto spec = fc::ModelSpec::defaults(fc::ModelKind::Arimax);
	spec.order = {1, 0, 0};
	const auto a = ev::run_walk_forward(panel, ev::native_forecaster(spec, 9), plan);
	const auto b = ev::run_walk_forward(panel, ev::native_forecaster(spec, 9), plan);
	EXPECT_EQ(a.tuples, b.tuples);
}

TEST(WalkForward, FailuresAreIsolatedAndFlagged) {
	const auto panel = noisy_panel(40, 4);
	const auto plan = ev::plan_walk_forward(panel.size(), {1});
	int calls = 0;
	const ev::Forecaster flaky = [&](const dc::series::TimeSeriesPanel &train, int h,
	                                 std::span<const std::vector<double>> f) {
		if (calls++ % 3 != 0) {
			throw dc::FitError("boom");
		}
		return naive_forecaster()(train, h, f);
	};
	const auto run = ev::run_walk_forward(panel, flaky, plan);
	EXPECT_GT(run.failed_origins, run.origins / 2);
	EXPECT_TRUE(run.unreliable);
	for (const auto &t : run.tuples) {
		EXPECT_EQ(t.predicted.has_value(), t.failed_reason.empty());
	}
}

TEST(WalkForward, ForecasterSeesOnlyThePast) {
	const auto panel = noisy_panel(50, 5);
	const auto plan = ev::plan_walk_forward(panel.size(), {1, 4});
	ev::AccessAudit audit;
	ev::WalkForwardOptions options;
	options.audit = &audit;
	std::vector<std::size_t> seen;
	const ev::Forecaster spy = [&](const dc::series::TimeSeriesPanel &train, int h,
	                               std::span<const std::vector<double>> future) {
		seen.push_back(train.size());
		for (std::size_t i = 0; i < train.size(); ++i) {
			EXPECT_EQ(train.observations[i], panel.observations[i]);
		}
		EXPECT_EQ(future.size(), static_cast<std::size_t>(h));
		return naive_forecaster()(train, h, future);
	};
	ev::run_walk_forward(panel, spy, plan, options);
	EXPECT_EQ(seen, plan.origins);
	EXPECT_TRUE(audit.no_lookahead());
	EXPECT_EQ(audit.records().size(), plan.origins.size());
}

TEST(WalkForward, FutureTargetsDoNotChangePredictions) {
	auto panel = noisy_panel(60, 6);
	const auto plan = ev::plan_walk_forward(panel.size(), {1, 2});
	auto spec = fc::ModelSpec::defaults(fc::ModelKind::Bdlm);
	const auto base = ev::run_walk_forward(panel, ev::native_forecaster(spec, 1), plan);
	for (std::size_t o : {plan.origins.front(), plan.origins[plan.origins.size() / 2]}) {
		auto perturbed = panel;
		for (std::size_t i = o; i < perturbed.size(); ++i) {
			perturbed.observations[i].target += 1000.0;
		}
		const auto run = ev::run_walk_forward(perturbed, ev::native_forecaster(spec, 1), plan);
		for (std::size_t i = 0; i < run.tuples.size(); ++i) {
			if (run.tuples[i].origin <= o) {
				EXPECT_EQ(run.tuples[i].predicted, base.tuples[i].predicted);
			}
		}
	}
}

TEST(WalkForward, SlidingWindowKeepsTrainingLength) {
	const auto panel = noisy_panel(40, 7);
	const auto plan = ev::plan_walk_forward(panel.size(), {1}, ev::TrainingWindow::Sliding);
	std::vector<std::size_t> sizes;
	const ev::Forecaster spy = [&](const dc::series::TimeSeriesPanel &train, int h,
	                               std::span<const std::vector<double>> f) {
		sizes.push_back(train.size());
		return naive_forecaster()(train, h, f);
	};
	ev::AccessAudit audit;
	ev::WalkForwardOptions options;
	options.audit = &audit;
	ev::run_walk_forward(panel, spy, plan, options);
	for (auto s : sizes) {
		EXPECT_EQ(s, plan.initial_train);
	}
	EXPECT_TRUE(audit.no_lookahead());
}

TEST(WalkForward, FreezeLastRepeatsTheOriginRow) {
	const auto panel = noisy_panel(30, 8);
	const auto plan = ev::plan_walk_forward(panel.size(), {3});
	ev::WalkForwardOptions options;
	options.exogenous = ev::ExogenousMode::FreezeLast;
	const ev::Forecaster spy = [&](const dc::series::TimeSeriesPanel &train, int h,
	                               std::span<const std::vector<double>> future) {
		for (const auto &row : future) {
			EXPECT_EQ(row, train.observations.back().features);
		}
		return naive_forecaster()(train, h, future);
	};
	ev::run_walk_forward(panel, spy, plan, options);
}

TEST(Metrics, HandComputed) {
	const std::vector<std::pair<double, double>> a = {{10, 11}, {20, 18}};
	const auto m = ev::error_metrics(a);
	EXPECT_DOUBLE_EQ(m.mae, 1.5);
	EXPECT_DOUBLE_EQ(m.rmse, std::sqrt(2.5));
	ASSERT_TRUE(m.mape);
	EXPECT_DOUBLE_EQ(*m.mape, 10.0);

	const std::vector<std::pair<double, double>> perfect = {{3, 3}, {4, 4}};
	const auto p = ev::error_metrics(perfect);
	EXPECT_EQ(p.mae, 0.0);
	EXPECT_EQ(p.rmse, 0.0);
	EXPECT_EQ(*p.mape, 0.0);

	const std::vector<std::pair<double, double>> zero = {{0, 1}, {10, 10}};
	const auto z = ev::error_metrics(zero);
	EXPECT_EQ(*z.mape, 0.0);
	EXPECT_EQ(z.mape_excluded, 1u);
	EXPECT_DOUBLE_EQ(z.mae, 0.5);

	const std::vector<std::pair<double, double>> all_zero = {{0, 1}, {0, 2}};
	const auto u = ev::error_metrics(all_zero);
	EXPECT_FALSE(u.mape.has_value());
	EXPECT_DOUBLE_EQ(u.mae, 1.5);
	EXPECT_THROW(ev::error_metrics({}), dc::PreconditionError);
}

TEST(Metrics, RmseDominatesMae) {
	dc::Rng rng(77);
	for (int rep = 0; rep < 1000; ++rep) {
		std::vector<std::pair<double, double>> pairs(1 + rng.below(30));
		for (auto &p : pairs) {
			p = {rng.uniform(-50, 50), rng.uniform(-50, 50)};
		}
		const auto m = ev::error_metrics(pairs);
		EXPECT_GE(m.rmse, m.mae);
	}
}

TEST(Summarize, GroupsByModelWindowHorizon) {
	std::vector<ev::LabeledTuple> tuples;
	for (int i = 0; i < 5; ++i) {
		tuples.push_back({"p", "A", dc::series::WindowLength::Weekly, {static_cast<std::size_t>(i), 1, 1.0, 2.0, ""}});
	}
	auto one = ev::summarize(tuples);
	ASSERT_EQ(one.size(), 1u);
	EXPECT_EQ(one[0].n_forecasts, 5u);
	tuples.push_back({"p", "B", dc::series::WindowLength::Weekly, {0, 1, 1.0, 1.0, ""}});
	tuples.push_back({"p", "B", dc::series::WindowLength::Weekly, {1, 1, 1.0, std::nullopt, "fail"}});
	tuples.push_back({"p", "C", dc::series::WindowLength::Weekly, {1, 1, 1.0, std::nullopt, "fail"}});
	const auto two = ev::summarize(tuples);
	ASSERT_EQ(two.size(), 2u);
	EXPECT_EQ(two[1].model, "B");
	EXPECT_EQ(two[1].failed, 1u);
	EXPECT_EQ(two[1].n_forecasts, 1u);
}
