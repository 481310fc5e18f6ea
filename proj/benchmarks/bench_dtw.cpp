#include <benchmark/benchmark.h>

#include "ipred/dtw.hpp"
#include "ipred/rng.hpp"

namespace {

std::vector<ipred::Point2> random_track(std::size_t n, ipred::Rng& rng) {
  std::vector<ipred::Point2> out(n);
  for (auto& p : out) p = {rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0)};
  return out;
}

void BM_DtwDistance(benchmark::State& state) {
  ipred::Rng rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_track(n, rng), b = random_track(n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(ipred::dtw_distance(a, b).cost);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DtwDistance)->RangeMultiplier(2)->Range(8, 256)->Complexity(benchmark::oNSquared);

void BM_DtwCost(benchmark::State& state) {
  ipred::Rng rng(2);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_track(n, rng), b = random_track(n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(ipred::dtw_cost(a, b));
}
BENCHMARK(BM_DtwCost)->RangeMultiplier(2)->Range(8, 256);

}  // namespace
BENCHMARK_MAIN();
