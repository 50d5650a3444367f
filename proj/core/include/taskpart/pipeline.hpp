#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "taskpart/cluster.hpp"
#include "taskpart/evalrep.hpp"
#include "taskpart/featex.hpp"
#include "taskpart/featproc.hpp"
#include "taskpart/gslsim.hpp"

namespace taskpart::gslsim {

struct SpecialistOutcome {
  std::size_t cluster_index = 0;
  std::vector<std::string> members;
  std::map<std::string, double> rates;  // per member variation
  double mean_success = 0.0;            // 0 for an empty cluster
  std::uint64_t episodes_used = 0;
};

/// Every intermediate artifact of one three-phase run, in memory. Persisted
/// by evalrep::persist_run.
struct RunResult {
  RunConfig config;
  cluster::Method method = cluster::Method::balanced_greedy;

  std::vector<VariationSpec> variations;
  featex::FeatureMatrix features;  // descriptor features for every variation

  evalrep::EvalStats phase1;  // generalist on every variation
  std::vector<std::string> selected;
  double phase1_selected_avg = 0.0;

  featproc::PcaModel pca;
  featex::FeatureMatrix features2d;  // selected variations, projected
  cluster::Partition partition;      // over the selected ids

  std::vector<SpecialistOutcome> specialists;
  evalrep::EvalStats specialist_phase;  // selected variations under their specialists

  std::uint64_t demos_requested = 0;
  std::uint64_t demos_collected = 0;
  std::uint64_t demo_shortfall = 0;
  std::uint64_t demo_attempts = 0;

  evalrep::EvalStats final_stats;  // fine-tuned generalist on every variation
  double phase3_selected_avg = 0.0;
};

/// Executes the full loop: phase-1 generalist training and evaluation,
/// low-performer selection, feature-based (or random) partitioning, parallel
/// specialist training, demonstration collection and generalist fine-tuning,
/// then a final full evaluation. Output is bit-identical for a fixed master
/// seed regardless of worker count (0 = auto).
RunResult run_gsl_pipeline(const RunConfig& config, cluster::Method partition_method,
                           unsigned workers = 0);

}  // namespace taskpart::gslsim
