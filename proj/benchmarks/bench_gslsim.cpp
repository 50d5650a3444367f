#include <benchmark/benchmark.h>

#include "taskpart/gslsim.hpp"
#include "taskpart/pipeline.hpp"

using namespace taskpart;

static void BM_train_episodes(benchmark::State& state) {
  gslsim::RunConfig config;
  config.n_variations = 12;
  config.g_archetypes = 4;
  const auto variations = gslsim::generate_variations(config);
  for (auto _ : state) {
    auto learner = gslsim::LearnerState::fresh(config.grid, config.hyper, config.rewards);
    learner = gslsim::train(std::move(learner), variations,
                            gslsim::TrainingBudget{static_cast<std::uint64_t>(state.range(0))}, 3);
    benchmark::DoNotOptimize(learner.q.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_train_episodes)->Arg(1000)->Arg(4000)->Arg(16000);

static void BM_full_pipeline_desk_scale(benchmark::State& state) {
  gslsim::RunConfig config;  // the 60-variation desk-scale defaults
  config.n_low = 29;
  for (auto _ : state) {
    auto result = gslsim::run_gsl_pipeline(config, cluster::Method::balanced_greedy,
                                           static_cast<unsigned>(state.range(0)));
    benchmark::DoNotOptimize(result.final_stats.average);
  }
}
BENCHMARK(BM_full_pipeline_desk_scale)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
