#include <benchmark/benchmark.h>

#include "smoothcal/dataset.hpp"
#include "smoothcal/smoothing.hpp"

namespace {

using namespace smoothcal;

void BM_AgreementNonlinear(benchmark::State& state) {
  double sum = 0.0;
  for (auto _ : state) {
    for (int n_k = 0; n_k <= 7; ++n_k) {
      sum += smooth_agreement_nonlinear({n_k, 7}, 7.5);
    }
  }
  benchmark::DoNotOptimize(sum);
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_AgreementNonlinear);

void BM_AgreementPiecewise(benchmark::State& state) {
  double sum = 0.0;
  for (auto _ : state) {
    for (int n_k = 0; n_k <= 7; ++n_k) {
      sum += smooth_agreement_piecewise({n_k, 7}, 0.3);
    }
  }
  benchmark::DoNotOptimize(sum);
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_AgreementPiecewise);

void BM_ConfidenceLinear(benchmark::State& state) {
  double sum = 0.0;
  for (auto _ : state) {
    for (int i = 0; i <= 100; ++i) {
      sum += smooth_confidence_linear(i / 100.0, 0.2);
    }
  }
  benchmark::DoNotOptimize(sum);
  state.SetItemsProcessed(state.iterations() * 101);
}
BENCHMARK(BM_ConfidenceLinear);

void BM_ComputeTargets(benchmark::State& state) {
  GeneratorConfig config;
  config.n_train = static_cast<int>(state.range(0));
  config.n_test = 1;
  config.feature_dim = 4;
  const Dataset dataset = generate(config);
  const SmoothingSpec spec{SmoothingMethod::AgreementNonlinear, 7.5};
  for (auto _ : state) {
    auto targets = compute_targets(spec, dataset.train);
    benchmark::DoNotOptimize(targets.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ComputeTargets)->Arg(1000)->Arg(10000);

}  // namespace
