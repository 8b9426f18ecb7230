#include "defectcast/forecast/arima.hpp"
#include "defectcast/forecast/dlm.hpp"
#include "defectcast/forecast/model.hpp"
#include "defectcast/pipeline/synth.hpp"
#include "defectcast/stats/distributions.hpp"
#include "defectcast/stats/tests.hpp"
#include "defectcast/symptoms/importance.hpp"
#include "defectcast/symptoms/trees.hpp"

#include <benchmark/benchmark.h>

namespace dc = defectcast;

namespace {

dc::series::TimeSeriesPanel ar1_panel(std::size_t n, std::uint64_t seed) {
	dc::pipeline::PanelSynthParams p;
	p.n = n;
	p.features = 3;
	auto panel = dc::pipeline::synth_panel(seed, p);
	dc::Rng rng(seed ^ 0x5bd1e995);
	double prev = 0.0;
	for (auto &o : panel.observations) {
		prev = 0.6 * prev + rng.normal();
		o.target = 5.0 + prev;
	}
	return panel;
}

} // namespace

static void BM_CssFitArima(benchmark::State &state) {
	const auto panel = ar1_panel(static_cast<std::size_t>(state.range(0)), 3);
	auto spec = dc::forecast::ModelSpec::defaults(dc::forecast::ModelKind::Arima);
	spec.order = {1, 0, 1};
	for (auto _ : state) {
		benchmark::DoNotOptimize(dc::forecast::fit_tsa(panel, spec, 1));
	}
}
BENCHMARK(BM_CssFitArima)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

static void BM_SelectOrder(benchmark::State &state) {
	const auto panel = ar1_panel(150, 4);
	for (auto _ : state) {
		benchmark::DoNotOptimize(dc::forecast::select_order(panel, dc::forecast::ModelKind::Arima, 1));
	}
}
BENCHMARK(BM_SelectOrder)->Unit(benchmark::kMillisecond);

static void BM_DlmFilter(benchmark::State &state) {
	const auto panel = ar1_panel(static_cast<std::size_t>(state.range(0)), 5);
	const auto spec = dc::forecast::ModelSpec::defaults(dc::forecast::ModelKind::Bdlm);
	for (auto _ : state) {
		benchmark::DoNotOptimize(dc::forecast::dlm_filter(panel, spec));
	}
	state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DlmFilter)->RangeMultiplier(4)->Range(64, 1024)->Complexity(benchmark::oN);

static void BM_ForestImportance(benchmark::State &state) {
	dc::pipeline::PanelSynthParams p;
	p.n = static_cast<std::size_t>(state.range(0));
	const auto panel = dc::pipeline::synth_panel(7, p);
	for (auto _ : state) {
		benchmark::DoNotOptimize(dc::symptoms::rf_importance(panel, 11));
	}
}
BENCHMARK(BM_ForestImportance)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

static void BM_StudentizedRangeCdf(benchmark::State &state) {
	const int k = static_cast<int>(state.range(0));
	for (auto _ : state) {
		benchmark::DoNotOptimize(dc::stats::studentized_range_cdf(3.5, k, 30.0));
	}
}
BENCHMARK(BM_StudentizedRangeCdf)->Arg(3)->Arg(8);

static void BM_WilcoxonExact(benchmark::State &state) {
	dc::Rng rng(2);
	std::vector<double> x(25), y(25);
	for (std::size_t i = 0; i < x.size(); ++i) {
		x[i] = rng.normal();
		y[i] = rng.normal(0.3, 1.0);
	}
	for (auto _ : state) {
		benchmark::DoNotOptimize(dc::stats::wilcoxon_signed_rank(x, y, 0.01, dc::stats::WilcoxonMethod::Exact));
	}
}
BENCHMARK(BM_WilcoxonExact);

BENCHMARK_MAIN();
