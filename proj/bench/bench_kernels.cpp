// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>

#include "prt/embedder.hpp"
#include "prt/kernels.hpp"
#include "prt/rng.hpp"

namespace {

std::vector<prt::PartFeatureSet> random_sets(int n, std::uint64_t seed) {
  prt::Rng rng(seed);
  std::normal_distribution<double> g;
  std::bernoulli_distribution vis(0.8);
  std::vector<prt::PartFeatureSet> out;
  for (int i = 0; i < n; ++i) {
    std::vector<prt::Vec> parts;
    std::vector<std::uint8_t> v;
    for (int k = 0; k < 5; ++k) {
      parts.push_back(prt::Vec::NullaryExpr(8, [&] { return g(rng); }));
      v.push_back(vis(rng));
    }
    out.push_back(prt::PartFeatureSet::make(prt::Vec::NullaryExpr(8, [&] { return g(rng); }), parts, v));
  }
  return out;
}

std::vector<prt::FeatureGrid> random_grids(int n, std::uint64_t seed) {
  prt::Rng rng(seed);
  std::normal_distribution<double> g;
  std::vector<prt::FeatureGrid> out(n);
  for (auto& grid : out) {
    grid.cells = prt::Mat::NullaryExpr(32, 16, [&] { return g(rng); });
    grid.part_labels.assign(32, 0);
  }
  return out;
}

void BM_DistanceSerial(benchmark::State& state) {
  const auto sets = random_sets(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(prt::distance_matrix_serial(sets, sets));
}

void BM_DistanceParallel(benchmark::State& state) {
  const auto sets = random_sets(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(prt::distance_matrix(sets, sets));
}

void BM_EmbedSerial(benchmark::State& state) {
  const auto model = prt::EmbedderModel::random({16, 5, 8, 10}, 3);
  const auto grids = random_grids(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(prt::embed_batch_serial(model, grids));
}

void BM_EmbedParallel(benchmark::State& state) {
  const auto model = prt::EmbedderModel::random({16, 5, 8, 10}, 3);
  const auto grids = random_grids(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(prt::embed_batch(model, grids));
}

}  // namespace

BENCHMARK(BM_DistanceSerial)->Arg(256)->Arg(1024);
BENCHMARK(BM_DistanceParallel)->Arg(256)->Arg(1024);
BENCHMARK(BM_EmbedSerial)->Arg(1024)->Arg(8192);
BENCHMARK(BM_EmbedParallel)->Arg(1024)->Arg(8192);

BENCHMARK_MAIN();
