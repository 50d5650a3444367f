#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "taskpart/cluster.hpp"
#include "taskpart/featex.hpp"
#include "taskpart/pcio.hpp"

namespace taskpart::gslsim {

enum class Interaction { cw, ccw };

enum class Action : int { up = 0, down, left, right, interact_cw, interact_ccw };
inline constexpr int kActionCount = 6;

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// One synthetic gridworld task variation. Variations of the same archetype
/// share a handle template and interaction direction and differ only by a
/// seeded one-cell translation; archetypes differ in handle shape, grid
/// region, height profile and direction, so their optimal policies conflict.
struct VariationSpec {
  std::string id;
  int archetype = 0;
  int grid = 9;
  std::vector<Cell> handle_cells;  // template order; the height profile indexes it
  Interaction interaction = Interaction::cw;
  int max_steps = 50;
};

struct Hyper {
  double alpha = 0.1;
  double gamma = 0.75;
  double epsilon = 0.2;  // current exploration rate; decays per episode
  double epsilon_decay = 0.999;
  // Exploration never decays below this. Without a floor, conflicting
  // variations extinguish the success signal entirely and the table
  // collapses to the all-penalty fixed point.
  double epsilon_min = 0.15;
  // Optimistic initial value for fresh tables; establishes the success
  // structure before mixed-variation erosion can bury it.
  double q_init = 0.0;
  friend bool operator==(const Hyper&, const Hyper&) = default;
};

struct RewardModel {
  double step_penalty = -0.01;
  double success = 2.0;
  double wrong_interact = -0.02;
  double demo_shaping = 0.05;
  friend bool operator==(const RewardModel&, const RewardModel&) = default;
};

/// Tabular policy/value state. The observed state is the agent cell only:
/// the variation is deliberately not observable, which is what makes
/// dissimilar variations in one training set conflict.
struct LearnerState {
  int grid = 9;
  Hyper hyper;
  RewardModel rewards;
  std::vector<double> q;  // grid*grid*kActionCount, cell-major
  std::uint64_t samples_used = 0;

  static LearnerState fresh(int grid, Hyper hyper = {}, RewardModel rewards = {});

  double q_value(int cell, Action a) const {
    return q[static_cast<std::size_t>(cell) * kActionCount + static_cast<int>(a)];
  }
  double& q_ref(int cell, Action a) {
    return q[static_cast<std::size_t>(cell) * kActionCount + static_cast<int>(a)];
  }
  /// Greedy argmax with lowest-index tie-break.
  Action greedy_action(int cell) const;

  friend bool operator==(const LearnerState&, const LearnerState&) = default;
};

struct TrainingBudget {
  std::uint64_t n_sample = 0;
};

struct DemoStep {
  int cell = 0;
  Action action = Action::up;
  double reward = 0.0;
  friend bool operator==(const DemoStep&, const DemoStep&) = default;
};

struct Trajectory {
  std::string variation_id;
  std::vector<DemoStep> steps;
  bool success = false;
};

/// Optional early stop for training: compare the moving-average episode
/// success of the last `window` episodes against the previous window.
struct PlateauRule {
  std::size_t window = 200;
  double threshold = 0.005;
};

/// Per-cell demo-majority actions (kActionCount means "cell not visited").
/// Built from demonstrations and used for cloning and reward shaping.
struct DemoImprint {
  int grid = 9;
  std::vector<int> majority;  // grid*grid, action index or kActionCount

  bool visited(int cell) const { return majority[static_cast<std::size_t>(cell)] != kActionCount; }
};

DemoImprint build_demo_imprint(std::span<const Trajectory> demos, int grid);

struct TrainOptions {
  const DemoImprint* shaping = nullptr;
  std::optional<PlateauRule> plateau;
};

struct RunConfig {
  std::size_t n_variations = 60;
  int g_archetypes = 4;
  int grid = 9;
  int max_steps = 50;
  std::optional<std::size_t> n_low;  // unset: strictly-below-median selection
  std::size_t n_specialists = 4;
  TrainingBudget budget_phase1{16000};
  TrainingBudget budget_specialist{2500};
  TrainingBudget budget_finetune{8000};
  std::size_t demos_per_variation = 10;
  std::size_t eval_episodes = 100;
  std::uint64_t master_seed = 0;
  double feature_noise_sigma = 0.05;
  Hyper hyper;
  RewardModel rewards;
  featex::DescriptorSpec descriptor;
  std::size_t pca_k = 2;
  bool pca_fit_on_all = false;  // default: fit PCA on the selected subset only
  cluster::KmeansParams kmeans;
  bool demo_success_only = true;
  std::size_t demo_max_attempts_factor = 20;
  bool phase1_plateau = false;

  void validate() const;
};

RunConfig run_config_from_json(const std::string& text);
std::string to_json(const RunConfig& config);

/// Builds the variation family: round-robin archetype assignment (as even a
/// split as possible), per-variation one-cell jitter, zero jitter when an
/// archetype has a single variation.
std::vector<VariationSpec> generate_variations(const RunConfig& config);

/// One 3D point per handle cell at the archetype height profile, plus
/// Gaussian jitter of the given sigma on each coordinate.
pcio::PointCloud variation_point_cloud(const VariationSpec& v, double noise_sigma,
                                       std::uint64_t seed);

/// Tabular Q-learning for budget.n_sample episodes. Each episode samples a
/// variation uniformly, starts at a uniform random non-handle cell and runs
/// epsilon-greedy until success, a broken mechanism (three wrong
/// interactions) or max_steps; epsilon decays per episode down to
/// epsilon_min.
LearnerState train(LearnerState learner, std::span<const VariationSpec> variations,
                   TrainingBudget budget, std::uint64_t seed);
LearnerState train(LearnerState learner, std::span<const VariationSpec> variations,
                   TrainingBudget budget, std::uint64_t seed, const TrainOptions& options);

/// Greedy (epsilon = 0) success rate over seeded random starts.
double evaluate(const LearnerState& learner, const VariationSpec& v, std::size_t episodes,
                std::uint64_t seed);

struct DemoBatch {
  std::vector<Trajectory> trajectories;
  std::uint64_t attempts = 0;
  std::uint64_t shortfall = 0;  // requested minus delivered
};

/// Greedy rollouts from random starts. With success_only, failures are
/// discarded and retried up to max_attempts attempts; a shortfall is
/// reported in the result rather than thrown.
DemoBatch collect_demos(const LearnerState& learner, const VariationSpec& v, std::size_t count,
                        std::uint64_t seed, bool success_only, std::size_t max_attempts);

/// Two stages: behavior cloning (demo-majority actions become greedy at
/// visited cells), then train() over all variations with a demo-shaping
/// bonus when the agent takes the demo-majority action at a visited cell.
LearnerState finetune_generalist(LearnerState generalist, std::span<const Trajectory> demos,
                                 std::span<const VariationSpec> all_variations,
                                 TrainingBudget budget, std::uint64_t seed);

}  // namespace taskpart::gslsim
