#include <vector>

#include <benchmark/benchmark.h>

#include "shiftdiag/feature_select.hpp"
#include "shiftdiag/forest.hpp"
#include "shiftdiag/grid.hpp"
#include "shiftdiag/indicator_matrix.hpp"
#include "shiftdiag/indicators.hpp"
#include "shiftdiag/rng.hpp"
#include "shiftdiag/signal_sim.hpp"
#include "shiftdiag/stat_tests.hpp"

namespace {

using namespace shiftdiag;

void BM_TwoSampleTest(benchmark::State& state) {
  const auto test = static_cast<TestKind>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  Rng rng(1);
  std::vector<double> x(n), y(n);
  for (double& v : x) v = rng.normal();
  for (double& v : y) v = rng.normal(0.3, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(run_test(test, x, y).p_value);
  state.SetLabel(std::string(test_code(test)));
}
BENCHMARK(BM_TwoSampleTest)->ArgsProduct({{0, 1, 2}, {15, 50}});

void BM_IndicatorVector(benchmark::State& state) {
  const Grid grid = build_grid(default_manifest());
  Rng rng(2);
  const LabeledSignal signal = gen_signal_a(AnomalyKind::kMeanShift, rng);
  for (auto _ : state) benchmark::DoNotOptimize(compute_indicator_vector(signal, grid).bits);
  state.counters["length"] = static_cast<double>(signal.length());
}
BENCHMARK(BM_IndicatorVector)->Unit(benchmark::kMillisecond);

IndicatorMatrix bench_matrix(std::size_t signals) {
  DatasetSpec spec = DatasetSpec::defaults(Family::kA, 3);
  spec.counts = {signals / 2, 0, signals / 6, signals / 6, signals - signals / 2 - 2 * (signals / 6)};
  return compute_matrix(gen_dataset(spec), build_grid(default_manifest())).matrix;
}

void BM_TrainForest(benchmark::State& state) {
  static const IndicatorMatrix matrix = bench_matrix(1000);
  ForestParams params;
  params.n_trees = static_cast<std::size_t>(state.range(0));
  params.seed = 4;
  for (auto _ : state) benchmark::DoNotOptimize(train_forest(matrix, params).trees.size());
}
BENCHMARK(BM_TrainForest)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_MrmrRank(benchmark::State& state) {
  static const IndicatorMatrix matrix = bench_matrix(1000);
  for (auto _ : state) benchmark::DoNotOptimize(mrmr_rank(matrix, matrix.cols()).entries.size());
}
BENCHMARK(BM_MrmrRank)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
