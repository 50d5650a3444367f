#include <benchmark/benchmark.h>

#include "taskpart/cluster.hpp"
#include "taskpart/featex.hpp"
#include "taskpart/rng.hpp"

using namespace taskpart;

namespace {

featex::FeatureMatrix make_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::vector<featex::FeatureVector> rows;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    featex::FeatureVector fv;
    fv.id = "p" + std::to_string(i);
    for (std::size_t d = 0; d < dim; ++d) fv.values.push_back(rng.unit() * 10.0);
    rows.push_back(std::move(fv));
  }
  return featex::make_matrix(std::move(rows));
}

}  // namespace

static void BM_kmeans(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto matrix = make_points(n, 2, 1);
  for (auto _ : state) {
    auto result = cluster::kmeans(matrix, 8, 7);
    benchmark::DoNotOptimize(result.inertia);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_kmeans)->RangeMultiplier(4)->Range(64, 1024)->Complexity();

static void BM_assign_balanced_greedy(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto matrix = make_points(n, 2, 2);
  const auto km = cluster::kmeans(matrix, 8, 9);
  for (auto _ : state) {
    auto partition = cluster::assign_balanced_greedy(matrix, km.centroids);
    benchmark::DoNotOptimize(partition.cost);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_assign_balanced_greedy)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

static void BM_optimal_balanced_assignment(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto matrix = make_points(n, 2, 3);
  const auto km = cluster::kmeans(matrix, 4, 11);
  for (auto _ : state) {
    auto partition = cluster::optimal_balanced_assignment(matrix, km.centroids);
    benchmark::DoNotOptimize(partition.cost);
  }
}
BENCHMARK(BM_optimal_balanced_assignment)->Arg(16)->Arg(32)->Arg(64);

BENCHMARK_MAIN();
