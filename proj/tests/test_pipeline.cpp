#include <filesystem>
#include <unistd.h>
#include <fstream>

#include "doctest.h"
#include "taskpart/errors.hpp"
#include "taskpart/evalrep.hpp"
#include "taskpart/pipeline.hpp"
#include "taskpart/text.hpp"

using namespace taskpart;
namespace fs = std::filesystem;
using gslsim::RunConfig;

namespace {

RunConfig tiny_config(std::uint64_t seed = 0) {
  RunConfig config;
  config.n_variations = 12;
  config.g_archetypes = 4;
  config.n_low = 8;
  config.n_specialists = 4;
  config.budget_phase1 = {1500};
  config.budget_specialist = {800};
  config.budget_finetune = {800};
  config.demos_per_variation = 3;
  config.eval_episodes = 40;
  config.master_seed = seed;
  return config;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / ("taskpart_test_" + name + "_" +
                                        std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("one variation per archetype forces singleton clusters") {
  RunConfig config = tiny_config();
  config.n_variations = 4;
  config.n_low = 4;
  config.budget_phase1 = {600};
  config.budget_specialist = {400};
  config.budget_finetune = {200};
  const auto result = gslsim::run_gsl_pipeline(config, cluster::Method::balanced_greedy);
  REQUIRE(result.partition.k() == 4);
  for (const auto& members : result.partition.clusters) CHECK(members.size() == 1);
  CHECK(result.selected.size() == 4);
}

TEST_CASE("rerunning a seed reproduces the artifacts byte for byte") {
  TempDir dir_a("rerun_a");
  TempDir dir_b("rerun_b");
  const auto a = gslsim::run_gsl_pipeline(tiny_config(5), cluster::Method::balanced_greedy);
  const auto b = gslsim::run_gsl_pipeline(tiny_config(5), cluster::Method::balanced_greedy);
  evalrep::persist_run(a, dir_a.path);
  evalrep::persist_run(b, dir_b.path);
  for (const char* name : {"final_rates.csv", "partition.json", "features.csv", "report.md"}) {
    CHECK(read_text_file(dir_a.path / name) == read_text_file(dir_b.path / name));
  }
}

TEST_CASE("worker count cannot change the results") {
  const auto serial = gslsim::run_gsl_pipeline(tiny_config(9), cluster::Method::balanced_greedy, 1);
  const auto parallel =
      gslsim::run_gsl_pipeline(tiny_config(9), cluster::Method::balanced_greedy, 8);
  CHECK(serial.phase1.per_variation == parallel.phase1.per_variation);
  CHECK(serial.partition.clusters == parallel.partition.clusters);
  CHECK(serial.final_stats.per_variation == parallel.final_stats.per_variation);
  CHECK(serial.demos_collected == parallel.demos_collected);
}

TEST_CASE("random and balanced share the schema but not the partition") {
  const auto balanced =
      gslsim::run_gsl_pipeline(tiny_config(3), cluster::Method::balanced_greedy);
  const auto random = gslsim::run_gsl_pipeline(tiny_config(3), cluster::Method::random);
  const auto b = cluster::partition_from_json(cluster::to_json(balanced.partition));
  const auto r = cluster::partition_from_json(cluster::to_json(random.partition));
  CHECK(b.k() == r.k());
  CHECK(b.clusters != r.clusters);
  CHECK(r.method == cluster::Method::random);
  CHECK_FALSE(r.centroids.has_value());
  CHECK(b.centroids.has_value());
}

TEST_CASE("persist writes all ten artifacts with verifiable digests") {
  TempDir dir("persist");
  const auto result = gslsim::run_gsl_pipeline(tiny_config(1), cluster::Method::balanced_greedy);
  const auto manifest = evalrep::persist_run(result, dir.path);

  const std::vector<std::string> expected = {
      "config.json",        "features.csv",   "pca_model.json", "partition.json",
      "phase1_rates.csv",   "specialist_rates.csv", "final_rates.csv", "report.md",
      "scatter.svg"};
  CHECK(manifest.digests.size() == expected.size());
  for (const auto& name : expected) {
    CHECK(fs::exists(dir.path / name));
    CHECK(manifest.digests.contains(name));
  }
  CHECK(fs::exists(dir.path / "manifest.json"));
  CHECK(evalrep::verify_manifest(dir.path).empty());

  SUBCASE("partition round-trips through its file") {
    const auto parsed =
        cluster::partition_from_json(read_text_file(dir.path / "partition.json"));
    CHECK(parsed.clusters == result.partition.clusters);
    CHECK(parsed.cost == result.partition.cost);
  }
  SUBCASE("rates round-trip through their file") {
    const auto parsed = evalrep::rates_from_csv(read_text_file(dir.path / "final_rates.csv"));
    CHECK(parsed == result.final_stats.per_variation);
  }
  SUBCASE("config round-trips through its file") {
    const auto parsed = gslsim::run_config_from_json(read_text_file(dir.path / "config.json"));
    CHECK(parsed.master_seed == result.config.master_seed);
    CHECK(parsed.n_low == result.config.n_low);
  }
  SUBCASE("corruption is detected and named") {
    std::ofstream out(dir.path / "partition.json", std::ios::app);
    out << " ";
    out.close();
    const auto bad = evalrep::verify_manifest(dir.path);
    REQUIRE(bad.size() == 1);
    CHECK(bad[0] == "partition.json");
  }
}

TEST_CASE("demo accounting adds up") {
  const auto result = gslsim::run_gsl_pipeline(tiny_config(2), cluster::Method::balanced_greedy);
  CHECK(result.demos_requested == 12 * 3);
  CHECK(result.demos_collected + result.demo_shortfall == result.demos_requested);

  // With enough phase-1 budget every demo source clears the success filter.
  RunConfig funded = tiny_config(2);
  funded.budget_phase1 = {6000};
  funded.budget_specialist = {2500};
  const auto good = gslsim::run_gsl_pipeline(funded, cluster::Method::balanced_greedy);
  CHECK(good.demos_collected == good.demos_requested);
  CHECK(good.demo_shortfall == 0);
}

TEST_CASE("specialists consume exactly their budget") {
  const auto result = gslsim::run_gsl_pipeline(tiny_config(4), cluster::Method::balanced_greedy);
  std::uint64_t total = 0;
  for (const auto& spec : result.specialists) total += spec.episodes_used;
  CHECK(total == result.config.n_specialists * result.config.budget_specialist.n_sample);
}

TEST_CASE("selection failures name the phase") {
  RunConfig config = tiny_config();
  config.n_variations = 8;
  config.n_low.reset();          // below-median
  config.budget_phase1 = {0};    // every rate equal, nothing strictly below
  config.budget_specialist = {100};
  config.budget_finetune = {100};
  try {
    gslsim::run_gsl_pipeline(config, cluster::Method::balanced_greedy);
    FAIL("expected InvalidConfig");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("selection") != std::string::npos);
  }
}

}  // TEST_SUITE
