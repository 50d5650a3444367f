#include "taskpart/pipeline.hpp"

#include <algorithm>
#include <map>

#include "taskpart/errors.hpp"
#include "taskpart/featproc.hpp"
#include "taskpart/parallel.hpp"
#include "taskpart/rng.hpp"

namespace taskpart::gslsim {

namespace {

constexpr std::uint64_t kTagPhase1Train = 0x706831747261696eull;
constexpr std::uint64_t kTagPhase1Eval = 0x7068316576616c00ull;
constexpr std::uint64_t kTagCloud = 0x636c6f7564000000ull;
constexpr std::uint64_t kTagDescriptor = 0x6465736372000000ull;
constexpr std::uint64_t kTagKmeans = 0x6b6d65616e730000ull;
constexpr std::uint64_t kTagAssign = 0x61737369676e0000ull;
constexpr std::uint64_t kTagSpecialist = 0x7370656369616c00ull;
constexpr std::uint64_t kTagSpecialistEval = 0x737065636576616cull;
constexpr std::uint64_t kTagDemos = 0x64656d6f73000000ull;
constexpr std::uint64_t kTagFinetune = 0x66696e6574756e65ull;
constexpr std::uint64_t kTagFinalEval = 0x66696e6576616c00ull;

// Re-throws component failures with the failing phase named, preserving the
// validation/runtime distinction the CLI maps to exit codes.
template <typename Fn>
auto phase(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const IoError& e) {
    throw IoError(std::string("phase '") + name + "': " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("phase '") + name + "': " + e.what());
  }
}

double mean_over(const std::map<std::string, double>& rates,
                 const std::vector<std::string>& ids) {
  double sum = 0.0;
  for (const auto& id : ids) sum += rates.at(id);
  return ids.empty() ? 0.0 : sum / static_cast<double>(ids.size());
}

}  // namespace

RunResult run_gsl_pipeline(const RunConfig& config, cluster::Method partition_method,
                           unsigned workers) {
  config.validate();
  const std::uint64_t master = config.master_seed;

  RunResult result;
  result.config = config;
  result.method = partition_method;

  // Phase 1: train the generalist across all variations, then evaluate it
  // on each variation.
  result.variations = phase("generate", [&] { return generate_variations(config); });
  const std::size_t n = result.variations.size();

  LearnerState generalist = phase("phase1-train", [&] {
    LearnerState fresh = LearnerState::fresh(config.grid, config.hyper, config.rewards);
    TrainOptions options;
    if (config.phase1_plateau) options.plateau = PlateauRule{};
    return train(std::move(fresh), result.variations, config.budget_phase1,
                 derive_seed(master, kTagPhase1Train), options);
  });

  phase("phase1-eval", [&] {
    std::vector<double> rates(n, 0.0);
    parallel_for_indexed(n, workers, [&](std::size_t i) {
      rates[i] = evaluate(generalist, result.variations[i], config.eval_episodes,
                          derive_seed(master, kTagPhase1Eval, i));
    });
    std::map<std::string, double> by_id;
    for (std::size_t i = 0; i < n; ++i) by_id[result.variations[i].id] = rates[i];
    result.phase1 = evalrep::summarize(by_id);
    return 0;
  });

  // Selection: strictly below the median, or the worst n_low when set.
  phase("selection", [&] {
    const auto rule = config.n_low.has_value()
                          ? evalrep::SelectionRule::worst_n(*config.n_low)
                          : evalrep::SelectionRule::below_median();
    result.selected = evalrep::select_low_performers(result.phase1.per_variation, rule);
    if (result.selected.size() < std::max<std::size_t>(config.n_specialists, 2)) {
      throw InvalidConfig("selected " + std::to_string(result.selected.size()) +
                          " low performers, need at least max(n_specialists, 2)");
    }
    result.phase1_selected_avg = mean_over(result.phase1.per_variation, result.selected);
    return 0;
  });

  // Feature pipeline over every variation (the CSV artifact covers all of
  // them); PCA is fit on the set being partitioned unless configured
  // otherwise.
  phase("features", [&] {
    std::vector<featex::FeatureVector> rows(n);
    parallel_for_indexed(n, workers, [&](std::size_t i) {
      const auto cloud = variation_point_cloud(result.variations[i], config.feature_noise_sigma,
                                               derive_seed(master, kTagCloud, i));
      rows[i] = featex::extract_descriptor(cloud, config.descriptor,
                                           derive_seed(master, kTagDescriptor, i));
    });
    result.features = featex::make_matrix(std::move(rows));
    return 0;
  });

  phase("partition", [&] {
    std::map<std::string, std::size_t> row_of;
    for (std::size_t i = 0; i < n; ++i) row_of[result.features.rows[i].id] = i;

    std::vector<featex::FeatureVector> selected_rows;
    selected_rows.reserve(result.selected.size());
    for (const auto& id : result.selected) {
      selected_rows.push_back(result.features.rows[row_of.at(id)]);
    }
    const auto selected_matrix = featex::make_matrix(std::move(selected_rows));
    const auto normalized_selected = featproc::l2_normalize(selected_matrix).matrix;

    const std::size_t fit_rows =
        config.pca_fit_on_all ? result.features.size() : normalized_selected.size();
    const std::size_t k_proj = std::min(config.pca_k, std::min(fit_rows, result.features.dim));
    if (config.pca_fit_on_all) {
      const auto normalized_all = featproc::l2_normalize(result.features).matrix;
      result.pca = featproc::pca_fit(normalized_all, k_proj);
    } else {
      result.pca = featproc::pca_fit(normalized_selected, k_proj);
    }
    result.features2d = featproc::pca_transform(result.pca, normalized_selected);

    if (partition_method == cluster::Method::random) {
      result.partition = cluster::assign_random(result.selected, config.n_specialists,
                                                derive_seed(master, kTagAssign));
    } else {
      const auto km = cluster::kmeans(result.features2d, config.n_specialists,
                                      derive_seed(master, kTagKmeans), config.kmeans);
      if (partition_method == cluster::Method::balanced_greedy) {
        result.partition = cluster::assign_balanced_greedy(result.features2d, km.centroids,
                                                           derive_seed(master, kTagKmeans));
      } else {
        result.partition = cluster::assign_vanilla(result.features2d, km.centroids,
                                                   derive_seed(master, kTagKmeans));
      }
    }
    return 0;
  });

  // Phase 2: clone the generalist into one specialist per cluster and train
  // each on its cluster. Per-specialist streams derive from the master seed
  // and the specialist index, so parallel execution cannot change results.
  std::map<std::string, std::size_t> variation_index;
  for (std::size_t i = 0; i < n; ++i) variation_index[result.variations[i].id] = i;

  const std::size_t k = result.partition.k();
  std::vector<LearnerState> specialists(k);
  phase("phase2-specialists", [&] {
    result.specialists.assign(k, {});
    parallel_for_indexed(k, workers, [&](std::size_t c) {
      SpecialistOutcome outcome;
      outcome.cluster_index = c;
      outcome.members = result.partition.clusters[c];
      LearnerState specialist = generalist;  // clone of the phase-1 weights
      specialist.hyper.epsilon = config.hyper.epsilon;  // fresh exploration schedule
      specialist.samples_used = 0;
      if (!outcome.members.empty()) {
        std::vector<VariationSpec> cluster_vars;
        cluster_vars.reserve(outcome.members.size());
        for (const auto& id : outcome.members) {
          cluster_vars.push_back(result.variations[variation_index.at(id)]);
        }
        specialist = train(std::move(specialist), cluster_vars, config.budget_specialist,
                           derive_seed(master, kTagSpecialist, c));
        outcome.episodes_used = specialist.samples_used;
        double sum = 0.0;
        for (const auto& v : cluster_vars) {
          const double rate = evaluate(specialist, v, config.eval_episodes,
                                       derive_seed(master, kTagSpecialistEval,
                                                   variation_index.at(v.id)));
          outcome.rates[v.id] = rate;
          sum += rate;
        }
        outcome.mean_success = sum / static_cast<double>(cluster_vars.size());
      }
      specialists[c] = std::move(specialist);
      result.specialists[c] = std::move(outcome);
    });

    std::map<std::string, double> under_specialist;
    for (const auto& spec : result.specialists) {
      for (const auto& [id, rate] : spec.rates) under_specialist[id] = rate;
    }
    result.specialist_phase = evalrep::summarize(under_specialist);
    return 0;
  });

  // Phase 3: demonstrations from the specialists on their variations and
  // from the generalist on the rest, then demonstration-guided fine-tuning
  // and a final full evaluation.
  std::vector<Trajectory> demos;
  phase("phase3-demos", [&] {
    std::map<std::string, std::size_t> specialist_of;
    for (std::size_t c = 0; c < result.partition.clusters.size(); ++c) {
      for (const auto& id : result.partition.clusters[c]) specialist_of[id] = c;
    }

    std::vector<DemoBatch> batches(n);
    parallel_for_indexed(n, workers, [&](std::size_t i) {
      const auto& v = result.variations[i];
      auto it = specialist_of.find(v.id);
      const LearnerState& source =
          (it != specialist_of.end()) ? specialists[it->second] : generalist;
      batches[i] = collect_demos(source, v, config.demos_per_variation,
                                 derive_seed(master, kTagDemos, i), config.demo_success_only,
                                 config.demo_max_attempts_factor * config.demos_per_variation);
    });
    for (auto& batch : batches) {
      result.demo_attempts += batch.attempts;
      result.demo_shortfall += batch.shortfall;
      for (auto& t : batch.trajectories) demos.push_back(std::move(t));
    }
    result.demos_requested = config.demos_per_variation * n;
    result.demos_collected = demos.size();
    return 0;
  });

  phase("phase3-finetune", [&] {
    generalist = finetune_generalist(std::move(generalist), demos, result.variations,
                                     config.budget_finetune, derive_seed(master, kTagFinetune));
    return 0;
  });

  phase("final-eval", [&] {
    std::vector<double> rates(n, 0.0);
    parallel_for_indexed(n, workers, [&](std::size_t i) {
      rates[i] = evaluate(generalist, result.variations[i], config.eval_episodes,
                          derive_seed(master, kTagFinalEval, i));
    });
    std::map<std::string, double> by_id;
    for (std::size_t i = 0; i < n; ++i) by_id[result.variations[i].id] = rates[i];
    result.final_stats = evalrep::summarize(by_id);
    result.phase3_selected_avg = mean_over(result.final_stats.per_variation, result.selected);
    return 0;
  });

  return result;
}

}  // namespace taskpart::gslsim
