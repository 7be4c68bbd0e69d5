#include <benchmark/benchmark.h>

#include "tmar/distributions.hpp"
#include "tmar/evidence.hpp"
#include "tmar/model.hpp"
#include "tmar/sampler.hpp"

namespace {

using namespace tmar;

TMarSpec example_spec() {
  return TMarSpec({0.4, 0.4, 0.2}, {0.0, 0.0, 0.0}, {{-0.5, 0.5}, {1.1}, {-0.4}}, {5.0, 3.0, 1.0},
                  {4.0, 14.0, 10.0});
}

std::vector<double> example_series(std::size_t n) {
  Rng rng(1);
  return simulate_series(example_spec(), n, 500, rng).values;
}

void BM_StandardizedTDraw(benchmark::State& state) {
  Rng rng(2);
  const StandardizedT dist(0.0, 25.0, 4.0);
  for (auto _ : state) benchmark::DoNotOptimize(sample_standardized_t(dist, rng));
}
BENCHMARK(BM_StandardizedTDraw);

void BM_StabilityCheck(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  std::vector<std::vector<double>> ar(3, std::vector<double>(p, 0.1));
  const TMarSpec spec({0.3, 0.3, 0.4}, {0.0, 0.0, 0.0}, ar, {1.0, 1.0, 1.0}, {5.0, 5.0, 5.0});
  for (auto _ : state) benchmark::DoNotOptimize(is_stable(spec));
}
BENCHMARK(BM_StabilityCheck)->DenseRange(1, 4);

void BM_LogLikelihood(benchmark::State& state) {
  const auto y = example_series(static_cast<std::size_t>(state.range(0)));
  const TMarSpec spec = example_spec();
  for (auto _ : state) benchmark::DoNotOptimize(log_likelihood(spec, {y, 2}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LogLikelihood)->Arg(500)->Arg(5000);

void BM_GibbsSweep(benchmark::State& state) {
  const auto y = example_series(static_cast<std::size_t>(state.range(0)));
  const SeriesWindow window{y, 2};
  const std::vector<double> center{10.0};
  const PriorConfig priors = default_priors(y, 3, center, 25.0);
  const std::vector<std::size_t> orders{2, 1, 1};
  Rng rng(3);
  SamplerState s = initial_state(window, orders, priors, rng);
  const UpdatePlan plan = UpdatePlan::all(3);
  const std::vector<double> gamma(3, 0.01);
  SweepCounters counters(3);
  for (auto _ : state) gibbs_sweep(s, window, priors, plan, gamma, counters, rng);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_GibbsSweep)->Arg(500)->Arg(2000)->Unit(benchmark::kMicrosecond);

void BM_LogPriorDensity(benchmark::State& state) {
  const auto y = example_series(500);
  const std::vector<double> center{10.0};
  const PriorConfig priors = default_priors(y, 3, center, 25.0);
  const TMarSpec spec = example_spec();
  for (auto _ : state) benchmark::DoNotOptimize(log_prior_density(spec, priors));
}
BENCHMARK(BM_LogPriorDensity);

}  // namespace

BENCHMARK_MAIN();
