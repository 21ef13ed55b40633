#include <benchmark/benchmark.h>

#include "quadopt/layout.hpp"
#include "quadopt/oracle.hpp"
#include "quadopt/predictor.hpp"
#include "quadopt/sampling.hpp"
#include "quadopt/search.hpp"
#include "quadopt/selection.hpp"

namespace {

using namespace quadopt;

Dataset simulated(const Oracle& oracle, std::size_t n) {
  Dataset data;
  BudgetLedger ledger(static_cast<std::int64_t>(2 * n));
  Rng rng(1);
  while (data.size() < n) evaluate(oracle, sample_pixel_uniform(oracle.dims(), rng), ledger, data);
  return data;
}

void BM_Reconstruct(benchmark::State& state) {
  Rng rng(2);
  const auto stack = sample_tree_growth({15, 20, 1}, static_cast<std::size_t>(state.range(0)), rng);
  DesignMatrix out(stack.dims());
  for (auto _ : state) {
    reconstruct_into(stack, out);
    benchmark::DoNotOptimize(out.cells().data());
  }
}
BENCHMARK(BM_Reconstruct)->Arg(8)->Arg(32)->Arg(128);

void BM_KendallTau(benchmark::State& state) {
  Rng rng(3);
  std::normal_distribution<double> n01;
  std::vector<double> a(static_cast<std::size_t>(state.range(0))), b(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = n01(rng);
    b[i] = a[i] + n01(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(kendall_tau(a, b).tau);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KendallTau)->RangeMultiplier(4)->Range(16, 4096)->Complexity(benchmark::oNLogN);

void BM_TrainRidge(benchmark::State& state) {
  const auto oracle = make_oracle("synth-hga");
  const Dataset data = simulated(*oracle, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(train_ridge(data, TrainConfig{}).intercepts().data());
}
BENCHMARK(BM_TrainRidge)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_TreeSearch(benchmark::State& state) {
  const auto oracle = make_oracle("synth-hga");
  const auto model = train_ridge(simulated(*oracle, 300), TrainConfig{});
  SearchConfig cfg;
  cfg.leaf_cap = static_cast<std::size_t>(state.range(0));
  cfg.max_steps = 10000;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tree_search(model, cfg, oracle->dims()).top.size());
  }
  state.SetItemsProcessed(state.iterations() * cfg.max_steps);
}
BENCHMARK(BM_TreeSearch)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_OracleEvaluate(benchmark::State& state) {
  const auto oracle = make_oracle("synth-hga");
  Rng rng(4);
  const DesignMatrix d = sample_pixel_uniform(oracle->dims(), rng);
  for (auto _ : state) benchmark::DoNotOptimize(oracle->criteria(d).data());
}
BENCHMARK(BM_OracleEvaluate);

}  // namespace

BENCHMARK_MAIN();
