// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "contrarank/kernels.hpp"
#include "contrarank/random.hpp"

namespace k = contrarank::kernels;

namespace {

struct Design {
  std::vector<double> features, labels, theta;
  std::size_t rows = 0, cols = 0;

  k::DesignView view() const { return {features, labels, rows, cols}; }
};

Design make_design(std::size_t rows, std::size_t cols) {
  contrarank::Rng rng(rows * 31 + cols);
  Design d;
  d.rows = rows;
  d.cols = cols;
  d.features.resize(rows * cols);
  d.labels.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    d.features[i * cols] = 1.0;
    for (std::size_t j = 1; j < cols; ++j) d.features[i * cols + j] = rng.uniform();
    d.labels[i] = rng.bernoulli(0.4) ? 1.0 : 0.0;
  }
  for (std::size_t j = 0; j < cols; ++j) d.theta.push_back(rng.normal());
  return d;
}

template <auto Fn>
void logistic_terms(benchmark::State& state) {
  const auto d = make_design(static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(d.view(), d.theta));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void tally_rejections(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  contrarank::Rng rng(n);
  std::vector<double> signal(n);
  std::vector<std::uint8_t> unanswerable(n);
  for (std::size_t i = 0; i < n; ++i) {
    signal[i] = rng.uniform();
    unanswerable[i] = rng.bernoulli(0.5);
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(Fn(signal, unanswerable, k::Comparator::kGreaterThan, 0.5));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void segment_argmax(benchmark::State& state) {
  const auto segments = static_cast<std::size_t>(state.range(0));
  contrarank::Rng rng(segments);
  std::vector<double> values;
  std::vector<std::size_t> offsets{0};
  for (std::size_t s = 0; s < segments; ++s) {
    const auto len = 2 + rng.below(6);
    for (std::size_t i = 0; i < len; ++i) values.push_back(rng.uniform());
    offsets.push_back(values.size());
  }
  for (auto _ : state) benchmark::DoNotOptimize(Fn({values, offsets}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(logistic_terms<k::serial::logistic_terms>)->Name("logistic_terms/serial")->RangeMultiplier(10)->Range(1'000, 1'000'000);
BENCHMARK(logistic_terms<k::parallel::logistic_terms>)->Name("logistic_terms/parallel")->RangeMultiplier(10)->Range(1'000, 1'000'000);
BENCHMARK(tally_rejections<k::serial::tally_rejections>)->Name("tally_rejections/serial")->RangeMultiplier(10)->Range(1'000, 1'000'000);
BENCHMARK(tally_rejections<k::parallel::tally_rejections>)->Name("tally_rejections/parallel")->RangeMultiplier(10)->Range(1'000, 1'000'000);
BENCHMARK(segment_argmax<k::serial::segment_argmax>)->Name("segment_argmax/serial")->RangeMultiplier(10)->Range(1'000, 1'000'000);
BENCHMARK(segment_argmax<k::parallel::segment_argmax>)->Name("segment_argmax/parallel")->RangeMultiplier(10)->Range(1'000, 1'000'000);

BENCHMARK_MAIN();
