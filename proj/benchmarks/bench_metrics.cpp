#include <benchmark/benchmark.h>

#include "smoothcal/metrics.hpp"
#include "smoothcal/rng.hpp"

namespace {

using namespace smoothcal;

PredictionSet random_predictions(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  PredictionSet set;
  set.probs.reserve(n);
  set.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    set.probs.push_back(rng.uniform());
    set.labels.push_back(rng.bernoulli(0.5) ? 1 : 0);
  }
  set.labels[0] = 1;
  set.labels[1] = 0;
  return set;
}

void BM_Auc(benchmark::State& state) {
  const auto set = random_predictions(static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(auc(set));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Auc)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_Ece15(benchmark::State& state) {
  const auto set = random_predictions(static_cast<std::size_t>(state.range(0)), 6);
  for (auto _ : state) {
    auto result = ece(set, 15);
    benchmark::DoNotOptimize(result.first);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Ece15)->Arg(1000)->Arg(10000)->Arg(100000);

}  // namespace
