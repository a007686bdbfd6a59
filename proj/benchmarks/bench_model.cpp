#include <benchmark/benchmark.h>

#include "smoothcal/dataset.hpp"
#include "smoothcal/model.hpp"
#include "smoothcal/smoothing.hpp"

namespace {

using namespace smoothcal;

struct Fixture {
  TrainingSet training;
  ClassifierParams params;
};

Fixture make_fixture(int n, int d, int hidden) {
  GeneratorConfig config;
  config.n_train = n;
  config.n_test = 1;
  config.feature_dim = d;
  const Dataset dataset = generate(config);
  Fixture fixture;
  for (const auto& e : dataset.train) {
    fixture.training.features.push_back(e.features);
    fixture.training.targets.push_back(static_cast<double>(e.gold));
  }
  fixture.params = init_params(1, d, Architecture::OneHidden, hidden);
  return fixture;
}

void BM_Forward(benchmark::State& state) {
  const auto fixture = make_fixture(1000, 20, 16);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        forward(fixture.params, fixture.training.features[i % 1000]));
    ++i;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Forward);

void BM_BatchGradient(benchmark::State& state) {
  const auto fixture = make_fixture(static_cast<int>(state.range(0)), 20, 16);
  for (auto _ : state) {
    auto grads = gradient(fixture.params, fixture.training.features,
                          fixture.training.targets, 1e-4);
    benchmark::DoNotOptimize(grads.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BatchGradient)->Arg(32)->Arg(256);

void BM_FitEpoch(benchmark::State& state) {
  const auto fixture = make_fixture(2000, 20, 16);
  TrainConfig config;
  config.epochs = 1;
  for (auto _ : state) {
    auto params = fit(fixture.training, config);
    benchmark::DoNotOptimize(params.values.data());
  }
  state.SetItemsProcessed(state.iterations() * 2000);
}
BENCHMARK(BM_FitEpoch);

void BM_Generate(benchmark::State& state) {
  GeneratorConfig config;
  config.n_train = static_cast<int>(state.range(0));
  config.n_test = 1;
  config.feature_dim = 20;
  for (auto _ : state) {
    auto dataset = generate(config);
    benchmark::DoNotOptimize(dataset.train.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Generate)->Arg(1000)->Arg(10000);

}  // namespace
