#include <benchmark/benchmark.h>

#include "pvlab/fuzzy.hpp"
#include "pvlab/simulation.hpp"

using namespace pvlab;

static void BM_SolveModuleCurrent(benchmark::State& state) {
  const auto& m = default_module();
  double v = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_module_current(m, {0.6, 25.0}, v));
    v = v > 32.0 ? 0.0 : v + 0.37;
  }
}
BENCHMARK(BM_SolveModuleCurrent);

static void BM_StringCurve(benchmark::State& state) {
  const auto g = find_builtin("Case2")->steps[0].g;
  for (auto _ : state) benchmark::DoNotOptimize(string_curve(default_module(), g, state.range(0)));
}
BENCHMARK(BM_StringCurve)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_GmppOracle(benchmark::State& state) {
  const auto curve = string_curve(default_module(), find_builtin("Case4")->steps[0].g);
  for (auto _ : state) benchmark::DoNotOptimize(gmpp_oracle(curve));
}
BENCHMARK(BM_GmppOracle)->Unit(benchmark::kMicrosecond);

static void BM_FuzzyInfer(benchmark::State& state) {
  const auto rb = fuzzy::default_mppt_rule_base();
  const fuzzy::InferenceOptions opts{static_cast<std::size_t>(state.range(0))};
  double x = -1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fuzzy::infer(rb, x, 0.3 * x, opts));
    x = x > 1.0 ? -1.0 : x + 0.013;
  }
}
BENCHMARK(BM_FuzzyInfer)->Arg(201)->Arg(2001);

static void BM_OperatingPoint(benchmark::State& state) {
  PvString s(default_module(), find_builtin("Case3")->steps[0].g);
  double r = 5.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(s.operating_point(r));
    r = r > 40.0 ? 5.0 : r + 0.7;
  }
}
BENCHMARK(BM_OperatingPoint)->Unit(benchmark::kMicrosecond);

static void BM_ClosedLoopRun(benchmark::State& state) {
  static const char* ids[] = {"po", "flc", "dzflc", "pso", "dsapso", "hybrid"};
  auto c = SimConfig::defaults();
  c.scenario = *find_builtin("Case2");
  c.controller = ids[state.range(0)];
  for (auto _ : state) benchmark::DoNotOptimize(run(c));
  state.SetLabel(c.controller);
}
BENCHMARK(BM_ClosedLoopRun)->DenseRange(0, 5)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
