#include <benchmark/benchmark.h>

#include <vector>

#include "ema/aggregators.hpp"
#include "ema/normality.hpp"
#include "ema/rng.hpp"

namespace {

std::vector<ema::CoordinateSample> make_samples(std::size_t n_clients, std::size_t dims,
                                                double outlier_fraction) {
  ema::Rng rng(17);
  std::vector<ema::CoordinateSample> samples(dims);
  for (std::size_t j = 0; j < dims; ++j) {
    samples[j].coordinate_index = j;
    samples[j].values.resize(n_clients);
    for (auto& x : samples[j].values) {
      x = rng.normal(0.0, 1.0);
      if (rng.uniform() < outlier_fraction) x *= 1e6;
    }
  }
  return samples;
}

std::vector<ema::ClientUpdate> make_updates(std::size_t n_clients, std::size_t dims) {
  ema::Rng rng(23);
  std::vector<ema::ClientUpdate> updates;
  for (std::uint32_t i = 0; i < n_clients; ++i) {
    std::vector<double> v(dims);
    for (auto& x : v) x = rng.normal(0.0, 1.0);
    updates.push_back({i, 0, ema::GradientVector::flat(std::move(v)), ""});
  }
  return updates;
}

void BM_AggregateEma(benchmark::State& state) {
  const auto samples = make_samples(static_cast<std::size_t>(state.range(0)),
                                    static_cast<std::size_t>(state.range(1)), 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(ema::aggregate_ema(samples, 1.5));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}
BENCHMARK(BM_AggregateEma)->Args({50, 1000})->Args({50, 10000})->Args({200, 1000});

void BM_AggregateMean(benchmark::State& state) {
  const auto samples = make_samples(static_cast<std::size_t>(state.range(0)),
                                    static_cast<std::size_t>(state.range(1)), 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(ema::aggregate_mean(samples));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}
BENCHMARK(BM_AggregateMean)->Args({50, 1000})->Args({50, 10000});

void BM_AggregateMedian(benchmark::State& state) {
  const auto samples = make_samples(static_cast<std::size_t>(state.range(0)),
                                    static_cast<std::size_t>(state.range(1)), 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(ema::aggregate_median(samples));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}
BENCHMARK(BM_AggregateMedian)->Args({50, 1000});

void BM_AggregateTrimmedMean(benchmark::State& state) {
  const auto samples = make_samples(static_cast<std::size_t>(state.range(0)),
                                    static_cast<std::size_t>(state.range(1)), 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(ema::aggregate_trimmed_mean(samples, 0.2));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}
BENCHMARK(BM_AggregateTrimmedMean)->Args({50, 1000});

void BM_AggregateKrum(benchmark::State& state) {
  const auto updates = make_updates(static_cast<std::size_t>(state.range(0)),
                                    static_cast<std::size_t>(state.range(1)));
  for (auto _ : state)
    benchmark::DoNotOptimize(ema::aggregate_krum(updates, static_cast<std::uint32_t>(state.range(0) / 5)));
}
BENCHMARK(BM_AggregateKrum)->Args({50, 1000})->Args({100, 1000});

void BM_ShapiroWilk(benchmark::State& state) {
  ema::Rng rng(5);
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (auto& x : v) x = rng.normal(0.0, 1.0);
  const auto sample = ema::SortedSample::from_unsorted(v);
  for (auto _ : state) benchmark::DoNotOptimize(ema::shapiro_wilk(sample, 0.05));
}
BENCHMARK(BM_ShapiroWilk)->Arg(50)->Arg(500)->Arg(5000);

void BM_AndersonDarling(benchmark::State& state) {
  ema::Rng rng(6);
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (auto& x : v) x = rng.normal(0.0, 1.0);
  const auto sample = ema::SortedSample::from_unsorted(v);
  for (auto _ : state) benchmark::DoNotOptimize(ema::anderson_darling(sample, 0.05));
}
BENCHMARK(BM_AndersonDarling)->Arg(50)->Arg(500);

}  // namespace

BENCHMARK_MAIN();
