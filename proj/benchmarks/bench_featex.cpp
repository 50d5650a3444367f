#include <benchmark/benchmark.h>

#include "taskpart/featex.hpp"
#include "taskpart/featproc.hpp"
#include "taskpart/pcio.hpp"
#include "taskpart/rng.hpp"

using namespace taskpart;

static void BM_extract_descriptor(benchmark::State& state) {
  pcio::PointCloud cloud;
  cloud.id = "bench";
  Rng rng(5);
  for (int i = 0; i < state.range(0); ++i) {
    cloud.points.push_back({rng.unit(), rng.unit(), rng.unit()});
  }
  for (auto _ : state) {
    auto fv = featex::extract_descriptor(cloud, {}, 3);
    benchmark::DoNotOptimize(fv.values.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_extract_descriptor)->RangeMultiplier(10)->Range(100, 100000)->Complexity();

static void BM_pca_fit(benchmark::State& state) {
  std::vector<featex::FeatureVector> rows;
  Rng rng(6);
  const auto dim = static_cast<std::size_t>(state.range(0));
  for (std::size_t i = 0; i < 60; ++i) {
    featex::FeatureVector fv;
    fv.id = "r" + std::to_string(i);
    for (std::size_t d = 0; d < dim; ++d) fv.values.push_back(rng.gaussian(1.0));
    rows.push_back(std::move(fv));
  }
  const auto matrix = featex::make_matrix(std::move(rows));
  for (auto _ : state) {
    auto model = featproc::pca_fit(matrix, 2);
    benchmark::DoNotOptimize(model.eigenvalues.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_pca_fit)->RangeMultiplier(4)->Range(16, 1024)->Complexity();
