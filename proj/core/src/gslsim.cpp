#include "taskpart/gslsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "taskpart/errors.hpp"
#include "taskpart/rng.hpp"

namespace taskpart::gslsim {

namespace {

constexpr std::uint64_t kTagJitter = 0x6a69747465720000ull;
constexpr double kCloneMargin = 0.1;

struct ArchetypeShape {
  std::vector<Cell> cells;      // origin-anchored template, extent <= 3x3, no 2x2 block
  std::vector<double> heights;  // per template cell
};

// Thin handle shapes. Templates contain no 2x2 block, so no cell is a
// handle under all four jitter offsets: a specialist covering a whole
// archetype needs more than one serving spot, and larger training sets get
// genuinely harder, the way more object variations slow a specialist down.
// Pair members are complementary shapes sharing a three-cell spine (the T
// stem or the T crossbar), so one policy can serve much of a pair, while
// different pairs share nothing. Height profiles come in per-pair families
// (low-rise, then tall) so an archetype sits closest to its pair partner in
// descriptor space and a clustering spill lands on the compatible
// archetype.
const std::array<ArchetypeShape, 4>& base_shapes() {
  static const std::array<ArchetypeShape, 4> shapes = {{
      {{{0, 0}, {1, 0}, {2, 0}, {1, 1}, {1, 2}}, {0.0, 0.0, 0.0, 0.0, 0.0}},   // T down, flat
      {{{1, 0}, {1, 1}, {0, 2}, {1, 2}, {2, 2}}, {0.0, 1.5, 0.0, 1.5, 0.0}},   // T up, low comb
      {{{0, 0}, {0, 1}, {0, 2}, {1, 1}, {2, 1}}, {0.0, 1.0, 2.0, 3.0, 4.0}},   // T right, tall ramp
      {{{2, 0}, {0, 1}, {1, 1}, {2, 1}, {2, 2}}, {0.0, 3.2, 0.0, 3.2, 0.0}},   // T left, tall comb
  }};
  return shapes;
}

const ArchetypeShape& shape_of(int archetype) {
  return base_shapes()[static_cast<std::size_t>(archetype % 4)];
}

double height_of(int archetype, std::size_t cell_index) {
  const auto& shape = shape_of(archetype);
  const double scale = 1.0 + 0.5 * static_cast<double>(archetype / 4);
  return shape.heights[cell_index % shape.heights.size()] * scale;
}

// Archetypes come in same-direction pairs sharing a home box, while
// different pairs live in disjoint regions and half of them turn the other
// way. Even pairs are tightly fused (co-located shapes, one policy serves
// both members); odd pairs interlock with a one-cell shift and looser
// jitter, so they are genuinely harder to cover. Conflict is graded, the
// way visually similar faucets are easier to share a specialist than
// dissimilar ones; the asymmetry pins which half of the family a phase-1
// generalist masters first.
Cell archetype_base(int archetype, int g_archetypes, int grid) {
  const int pair = archetype / 2;
  const int pair_count = (g_archetypes + 1) / 2;
  const double cx = (grid - 1) / 2.0;
  const double cy = (grid - 1) / 2.0;
  const double radius = std::max(2.0, grid * 0.28);
  const double theta = 2.0 * 3.14159265358979323846 * pair / static_cast<double>(pair_count);
  int bx = static_cast<int>(std::lround(cx + radius * std::cos(theta))) - 2;
  int by = static_cast<int>(std::lround(cy + radius * std::sin(theta))) - 2;
  const int max_base = grid - 4;  // extent 3 plus one cell of jitter
  bx = std::clamp(bx, 0, max_base);
  by = std::clamp(by, 0, max_base);
  return {bx, by};
}

struct Board {
  int grid = 9;
  int max_steps = 50;
  Interaction interaction = Interaction::cw;
  std::vector<std::uint8_t> handle;
  std::vector<int> free_cells;

  static Board from(const VariationSpec& v) {
    Board b;
    b.grid = v.grid;
    b.max_steps = v.max_steps;
    b.interaction = v.interaction;
    b.handle.assign(static_cast<std::size_t>(v.grid) * v.grid, 0);
    if (v.handle_cells.empty()) throw InvalidConfig("variation '" + v.id + "' has no handle cells");
    for (const Cell& c : v.handle_cells) {
      if (c.x < 0 || c.y < 0 || c.x >= v.grid || c.y >= v.grid) {
        throw InvalidConfig("variation '" + v.id + "' has a handle cell outside the grid");
      }
      b.handle[static_cast<std::size_t>(c.y) * v.grid + c.x] = 1;
    }
    for (int cell = 0; cell < v.grid * v.grid; ++cell) {
      if (!b.handle[static_cast<std::size_t>(cell)]) b.free_cells.push_back(cell);
    }
    if (b.free_cells.empty()) throw InvalidConfig("variation '" + v.id + "' has no free cells");
    return b;
  }
};

// Forcing the mechanism the wrong way this many times breaks it and ends
// the episode as a failure. Without the cap a deterministic policy
// re-interacts until truncation and the pile-up of penalties swamps the
// success signal for any mixed training set.
constexpr int kWrongInteractBreak = 3;

struct StepOutcome {
  int next_cell = 0;
  double reward = 0.0;
  bool success = false;
  bool wrong_interact = false;
};

StepOutcome env_step(const Board& board, const RewardModel& rewards, int cell, Action action) {
  StepOutcome out;
  out.next_cell = cell;
  out.reward = rewards.step_penalty;
  const int g = board.grid;
  const int x = cell % g;
  const int y = cell / g;
  switch (action) {
    case Action::up:
      if (y > 0) out.next_cell = cell - g;
      break;
    case Action::down:
      if (y < g - 1) out.next_cell = cell + g;
      break;
    case Action::left:
      if (x > 0) out.next_cell = cell - 1;
      break;
    case Action::right:
      if (x < g - 1) out.next_cell = cell + 1;
      break;
    case Action::interact_cw:
    case Action::interact_ccw: {
      const bool on_handle = board.handle[static_cast<std::size_t>(cell)] != 0;
      const bool matches = (action == Action::interact_cw && board.interaction == Interaction::cw) ||
                           (action == Action::interact_ccw && board.interaction == Interaction::ccw);
      if (on_handle && matches) {
        out.reward += rewards.success;
        out.success = true;
      } else {
        // A wrong turn jars the mechanism and shoves the agent to the
        // mirrored cell across the room; a rollout gets at most
        // kWrongInteractBreak probes before the mechanism breaks.
        out.reward += rewards.wrong_interact;
        out.next_cell = (g - 1 - y) * g + (g - 1 - x);
        out.wrong_interact = true;
      }
      break;
    }
  }
  return out;
}

double max_q(const LearnerState& learner, int cell) {
  double best = learner.q_value(cell, Action::up);
  for (int a = 1; a < kActionCount; ++a) {
    best = std::max(best, learner.q_value(cell, static_cast<Action>(a)));
  }
  return best;
}

// One rollout. With learn=true applies Q-learning updates (and the optional
// demo-shaping bonus); with epsilon=0 consumes randomness only for the start
// cell, so greedy rollouts are a pure function of (q, start).
struct Transition {
  int cell;
  Action action;
  double reward;
  int next_cell;
  bool terminal;
};

void td_update(LearnerState& learner, const Transition& t, const DemoImprint* shaping) {
  double target = t.reward;
  if (shaping && shaping->visited(t.cell) &&
      shaping->majority[static_cast<std::size_t>(t.cell)] == static_cast<int>(t.action)) {
    target += learner.rewards.demo_shaping;
  }
  if (!t.terminal) target += learner.hyper.gamma * max_q(learner, t.next_cell);
  double& q = learner.q_ref(t.cell, t.action);
  q += learner.hyper.alpha * (target - q);
}

bool rollout(const Board& board, LearnerState& learner, bool learn, double epsilon, Rng& rng,
             const DemoImprint* shaping, std::vector<DemoStep>* record) {
  int cell = board.free_cells[static_cast<std::size_t>(rng.below(board.free_cells.size()))];
  int wrong_interacts = 0;
  std::vector<Transition> episode;
  if (learn) episode.reserve(static_cast<std::size_t>(board.max_steps));
  bool succeeded = false;
  for (int step = 0; step < board.max_steps; ++step) {
    Action action;
    if (epsilon > 0.0 && rng.unit() < epsilon) {
      action = static_cast<Action>(rng.below(kActionCount));
    } else {
      action = learner.greedy_action(cell);
    }
    const StepOutcome out = env_step(board, learner.rewards, cell, action);
    if (out.wrong_interact) ++wrong_interacts;
    const bool broke = wrong_interacts >= kWrongInteractBreak;
    if (record) record->push_back({cell, action, out.reward});
    if (learn) {
      const Transition t{cell, action, out.reward, out.next_cell, out.success || broke};
      td_update(learner, t, shaping);
      episode.push_back(t);
    }
    if (out.success) {
      succeeded = true;
      break;
    }
    if (broke) break;  // the mechanism is broken; the episode is over
    cell = out.next_cell;
  }
  // Backward sweep over the episode: one success propagates its value along
  // the whole path at once instead of one cell per episode, which keeps the
  // value field coherent under conflicting training sets.
  if (learn) {
    for (auto it = episode.rbegin(); it != episode.rend(); ++it) {
      td_update(learner, *it, shaping);
    }
  }
  return succeeded;
}

}  // namespace

LearnerState LearnerState::fresh(int grid, Hyper hyper, RewardModel rewards) {
  if (grid < 2) throw InvalidConfig("grid side must be at least 2");
  if (hyper.epsilon < 0.0 || hyper.epsilon > 1.0) {
    throw InvalidConfig("epsilon must lie in [0, 1]");
  }
  LearnerState s;
  s.grid = grid;
  s.hyper = hyper;
  s.rewards = rewards;
  s.q.assign(static_cast<std::size_t>(grid) * grid * kActionCount, hyper.q_init);
  return s;
}

Action LearnerState::greedy_action(int cell) const {
  int best = 0;
  double best_q = q_value(cell, Action::up);
  for (int a = 1; a < kActionCount; ++a) {
    const double v = q_value(cell, static_cast<Action>(a));
    if (v > best_q) {
      best_q = v;
      best = a;
    }
  }
  return static_cast<Action>(best);
}

void RunConfig::validate() const {
  if (g_archetypes < 2) throw InvalidConfig("g_archetypes must be at least 2");
  if (n_variations < static_cast<std::size_t>(g_archetypes)) {
    throw InvalidConfig("n_variations must be at least g_archetypes");
  }
  if (grid < 7) throw InvalidConfig("grid must be at least 7");
  if (max_steps < 1) throw InvalidConfig("max_steps must be positive");
  if (n_specialists == 0) throw InvalidConfig("n_specialists must be positive");
  if (n_low.has_value()) {
    if (*n_low > n_variations) throw InvalidConfig("n_low exceeds n_variations");
    if (n_specialists > *n_low) throw InvalidConfig("n_specialists exceeds n_low");
  }
  if (eval_episodes == 0) throw InvalidConfig("eval_episodes must be positive");
  if (feature_noise_sigma < 0.0) throw InvalidConfig("feature_noise_sigma must be non-negative");
  if (hyper.epsilon < 0.0 || hyper.epsilon > 1.0) throw InvalidConfig("epsilon must lie in [0, 1]");
  if (hyper.epsilon_min < 0.0 || hyper.epsilon_min > 1.0) {
    throw InvalidConfig("epsilon_min must lie in [0, 1]");
  }
  if (hyper.epsilon_decay <= 0.0 || hyper.epsilon_decay > 1.0) {
    throw InvalidConfig("epsilon_decay must lie in (0, 1]");
  }
  if (pca_k == 0) throw InvalidConfig("pca_k must be positive");
}

std::vector<VariationSpec> generate_variations(const RunConfig& config) {
  config.validate();
  const std::size_t n = config.n_variations;
  const int g_count = config.g_archetypes;

  std::vector<std::size_t> per_archetype(static_cast<std::size_t>(g_count), 0);
  for (std::size_t i = 0; i < n; ++i) ++per_archetype[i % static_cast<std::size_t>(g_count)];

  int width = 3;
  for (std::size_t v = n; v > 1000; v /= 10) ++width;

  std::vector<VariationSpec> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int archetype = static_cast<int>(i % static_cast<std::size_t>(g_count));
    VariationSpec v;
    std::string index = std::to_string(i);
    v.id = "var" + std::string(static_cast<std::size_t>(width) - index.size(), '0') + index;
    v.archetype = archetype;
    v.grid = config.grid;
    v.max_steps = config.max_steps;
    // Direction is shared within a pair and alternates between pairs.
    v.interaction = ((archetype / 2) % 2 == 0) ? Interaction::cw : Interaction::ccw;

    // One-cell jitter across all four offsets; with the thin templates any
    // two offsets overlap only partially, so an archetype is a family of
    // related-but-distinct tasks rather than one task in disguise.
    static constexpr Cell kOffsets[4] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    Cell offset{0, 0};
    if (per_archetype[static_cast<std::size_t>(archetype)] > 1) {
      Rng rng(derive_seed(config.master_seed, kTagJitter, i));
      offset = kOffsets[rng.below(4)];
    }
    const Cell base = archetype_base(archetype, g_count, config.grid);
    for (const Cell& c : shape_of(archetype).cells) {
      v.handle_cells.push_back({base.x + offset.x + c.x, base.y + offset.y + c.y});
    }
    out.push_back(std::move(v));
  }
  return out;
}

// Physical pitch of one grid cell in cloud units. Keeping the geometry a
// few units wide makes small absolute sensor noise small relative to the
// shape, as it is for real object scans.
constexpr double kCellPitch = 4.0;

pcio::PointCloud variation_point_cloud(const VariationSpec& v, double noise_sigma,
                                       std::uint64_t seed) {
  pcio::PointCloud cloud;
  cloud.id = v.id;
  cloud.points.reserve(v.handle_cells.size());
  Rng rng(seed);
  for (std::size_t i = 0; i < v.handle_cells.size(); ++i) {
    const Cell& c = v.handle_cells[i];
    pcio::Vec3 p{kCellPitch * c.x, kCellPitch * c.y, kCellPitch * height_of(v.archetype, i)};
    if (noise_sigma > 0.0) {
      p.x += rng.gaussian(noise_sigma);
      p.y += rng.gaussian(noise_sigma);
      p.z += rng.gaussian(noise_sigma);
    }
    cloud.points.push_back(p);
  }
  return cloud;
}

LearnerState train(LearnerState learner, std::span<const VariationSpec> variations,
                   TrainingBudget budget, std::uint64_t seed) {
  return train(std::move(learner), variations, budget, seed, TrainOptions{});
}

LearnerState train(LearnerState learner, std::span<const VariationSpec> variations,
                   TrainingBudget budget, std::uint64_t seed, const TrainOptions& options) {
  if (variations.empty()) throw InvalidConfig("train requires a non-empty variation list");
  if (budget.n_sample == 0) return learner;

  std::vector<Board> boards;
  boards.reserve(variations.size());
  for (const auto& v : variations) {
    if (v.grid != learner.grid) {
      throw InvalidConfig("variation '" + v.id + "' grid does not match the learner grid");
    }
    boards.push_back(Board::from(v));
  }

  Rng rng(seed);
  std::vector<std::uint8_t> outcomes;
  if (options.plateau.has_value()) outcomes.reserve(budget.n_sample);

  std::uint64_t episodes_run = 0;
  for (std::uint64_t e = 0; e < budget.n_sample; ++e) {
    const std::size_t vi = static_cast<std::size_t>(rng.below(boards.size()));
    const bool success =
        rollout(boards[vi], learner, true, learner.hyper.epsilon, rng, options.shaping, nullptr);
    learner.hyper.epsilon =
        std::max(learner.hyper.epsilon_min, learner.hyper.epsilon * learner.hyper.epsilon_decay);
    ++episodes_run;
    if (options.plateau.has_value()) {
      outcomes.push_back(success ? 1 : 0);
      const std::size_t w = options.plateau->window;
      if (outcomes.size() >= 2 * w) {
        double recent = 0.0, previous = 0.0;
        for (std::size_t i = outcomes.size() - w; i < outcomes.size(); ++i) recent += outcomes[i];
        for (std::size_t i = outcomes.size() - 2 * w; i < outcomes.size() - w; ++i) {
          previous += outcomes[i];
        }
        if ((recent - previous) / static_cast<double>(w) < options.plateau->threshold) break;
      }
    }
  }
  learner.samples_used += episodes_run;
  return learner;
}

double evaluate(const LearnerState& learner, const VariationSpec& v, std::size_t episodes,
                std::uint64_t seed) {
  if (episodes == 0) throw ValidationError("evaluate needs at least one episode");
  const Board board = Board::from(v);
  LearnerState scratch = learner;  // rollout takes a mutable learner; greedy runs never write
  Rng rng(seed);
  std::size_t successes = 0;
  for (std::size_t e = 0; e < episodes; ++e) {
    if (rollout(board, scratch, false, 0.0, rng, nullptr, nullptr)) ++successes;
  }
  return static_cast<double>(successes) / static_cast<double>(episodes);
}

DemoBatch collect_demos(const LearnerState& learner, const VariationSpec& v, std::size_t count,
                        std::uint64_t seed, bool success_only, std::size_t max_attempts) {
  DemoBatch batch;
  const Board board = Board::from(v);
  LearnerState scratch = learner;
  Rng rng(seed);
  while (batch.trajectories.size() < count && batch.attempts < max_attempts) {
    ++batch.attempts;
    Trajectory t;
    t.variation_id = v.id;
    t.success = rollout(board, scratch, false, 0.0, rng, nullptr, &t.steps);
    if (t.success || !success_only) batch.trajectories.push_back(std::move(t));
  }
  batch.shortfall = count - batch.trajectories.size();
  return batch;
}

DemoImprint build_demo_imprint(std::span<const Trajectory> demos, int grid) {
  const std::size_t cells = static_cast<std::size_t>(grid) * grid;
  std::vector<std::array<std::uint64_t, kActionCount>> counts(cells);
  std::vector<std::array<std::uint64_t, kActionCount>> first_seen(cells);
  for (auto& cell : counts) cell.fill(0);
  for (auto& cell : first_seen) cell.fill(std::numeric_limits<std::uint64_t>::max());

  std::uint64_t clock = 0;
  for (const Trajectory& t : demos) {
    for (const DemoStep& s : t.steps) {
      const auto cell = static_cast<std::size_t>(s.cell);
      const auto action = static_cast<std::size_t>(s.action);
      ++counts[cell][action];
      first_seen[cell][action] = std::min(first_seen[cell][action], clock);
      ++clock;
    }
  }

  DemoImprint imprint;
  imprint.grid = grid;
  imprint.majority.assign(cells, kActionCount);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    int best = kActionCount;
    for (int a = 0; a < kActionCount; ++a) {
      if (counts[cell][static_cast<std::size_t>(a)] == 0) continue;
      if (best == kActionCount ||
          counts[cell][static_cast<std::size_t>(a)] > counts[cell][static_cast<std::size_t>(best)] ||
          (counts[cell][static_cast<std::size_t>(a)] == counts[cell][static_cast<std::size_t>(best)] &&
           first_seen[cell][static_cast<std::size_t>(a)] < first_seen[cell][static_cast<std::size_t>(best)])) {
        best = a;
      }
    }
    imprint.majority[cell] = best;
  }
  return imprint;
}

LearnerState finetune_generalist(LearnerState generalist, std::span<const Trajectory> demos,
                                 std::span<const VariationSpec> all_variations,
                                 TrainingBudget budget, std::uint64_t seed) {
  const DemoImprint imprint = build_demo_imprint(demos, generalist.grid);

  // Stage 1: behavior cloning. Replaying the demonstrations through the TD
  // update grounds demo-state values in the recorded returns (a margin bump
  // alone would be erased by the first wave of refinement updates), then
  // the demo-majority action is pinned as the greedy choice at every
  // visited cell.
  constexpr int kReplayEpochs = 3;
  for (int epoch = 0; epoch < kReplayEpochs; ++epoch) {
    for (const Trajectory& t : demos) {
      for (std::size_t i = 0; i < t.steps.size(); ++i) {
        const DemoStep& s = t.steps[i];
        const bool terminal_success = t.success && i + 1 == t.steps.size();
        double target = s.reward;
        if (!terminal_success) {
          const int next = (i + 1 < t.steps.size()) ? t.steps[i + 1].cell : s.cell;
          target += generalist.hyper.gamma * max_q(generalist, next);
        }
        double& q = generalist.q_ref(s.cell, s.action);
        q += generalist.hyper.alpha * (target - q);
      }
    }
  }

  const int cells = generalist.grid * generalist.grid;
  for (int cell = 0; cell < cells; ++cell) {
    if (!imprint.visited(cell)) continue;
    const auto majority = static_cast<Action>(imprint.majority[static_cast<std::size_t>(cell)]);
    if (generalist.greedy_action(cell) != majority) {
      generalist.q_ref(cell, majority) = max_q(generalist, cell) + kCloneMargin;
    }
  }

  // Stage 2: refinement across all variations with demo shaping.
  if (budget.n_sample > 0) {
    TrainOptions options;
    options.shaping = &imprint;
    generalist = train(std::move(generalist), all_variations, budget, seed, options);
  }
  return generalist;
}

namespace {

void expect_known_keys(const nlohmann::json& doc, const std::set<std::string>& known,
                       const std::string& context) {
  for (const auto& item : doc.items()) {
    if (!known.contains(item.key())) {
      throw InvalidConfig("unknown " + context + " key '" + item.key() + "'");
    }
  }
}

template <typename T>
void read_field(const nlohmann::json& doc, const char* key, T& into) {
  if (doc.contains(key)) into = doc.at(key).get<T>();
}

}  // namespace

RunConfig run_config_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InvalidConfig("config root must be a JSON object");

  static const std::set<std::string> known = {
      "n_variations",   "g_archetypes",  "grid",          "max_steps",
      "n_low",          "n_specialists", "budget_phase1", "budget_specialist",
      "budget_finetune", "demos_per_variation", "eval_episodes", "master_seed",
      "feature_noise_sigma", "hyper",    "rewards",       "descriptor",
      "pca_k",          "pca_fit_on_all", "kmeans",       "demo_success_only",
      "demo_max_attempts_factor", "phase1_plateau"};
  expect_known_keys(doc, known, "config");

  RunConfig config;
  try {
    read_field(doc, "n_variations", config.n_variations);
    read_field(doc, "g_archetypes", config.g_archetypes);
    read_field(doc, "grid", config.grid);
    read_field(doc, "max_steps", config.max_steps);
    if (doc.contains("n_low") && !doc.at("n_low").is_null()) {
      config.n_low = doc.at("n_low").get<std::size_t>();
    }
    read_field(doc, "n_specialists", config.n_specialists);
    read_field(doc, "budget_phase1", config.budget_phase1.n_sample);
    read_field(doc, "budget_specialist", config.budget_specialist.n_sample);
    read_field(doc, "budget_finetune", config.budget_finetune.n_sample);
    read_field(doc, "demos_per_variation", config.demos_per_variation);
    read_field(doc, "eval_episodes", config.eval_episodes);
    read_field(doc, "master_seed", config.master_seed);
    read_field(doc, "feature_noise_sigma", config.feature_noise_sigma);
    if (doc.contains("hyper")) {
      const auto& h = doc.at("hyper");
      expect_known_keys(
          h, {"alpha", "gamma", "epsilon", "epsilon_decay", "epsilon_min", "q_init"}, "hyper");
      read_field(h, "alpha", config.hyper.alpha);
      read_field(h, "gamma", config.hyper.gamma);
      read_field(h, "epsilon", config.hyper.epsilon);
      read_field(h, "epsilon_decay", config.hyper.epsilon_decay);
      read_field(h, "epsilon_min", config.hyper.epsilon_min);
      read_field(h, "q_init", config.hyper.q_init);
    }
    if (doc.contains("rewards")) {
      const auto& r = doc.at("rewards");
      expect_known_keys(r, {"step_penalty", "success", "wrong_interact", "demo_shaping"},
                        "rewards");
      read_field(r, "step_penalty", config.rewards.step_penalty);
      read_field(r, "success", config.rewards.success);
      read_field(r, "wrong_interact", config.rewards.wrong_interact);
      read_field(r, "demo_shaping", config.rewards.demo_shaping);
    }
    if (doc.contains("descriptor")) {
      const auto& d = doc.at("descriptor");
      expect_known_keys(d, {"pair_samples", "histogram_bins", "axis_bins"}, "descriptor");
      read_field(d, "pair_samples", config.descriptor.pair_samples);
      read_field(d, "histogram_bins", config.descriptor.histogram_bins);
      read_field(d, "axis_bins", config.descriptor.axis_bins);
    }
    read_field(doc, "pca_k", config.pca_k);
    read_field(doc, "pca_fit_on_all", config.pca_fit_on_all);
    if (doc.contains("kmeans")) {
      const auto& m = doc.at("kmeans");
      expect_known_keys(m, {"restarts", "max_iter", "tol"}, "kmeans");
      read_field(m, "restarts", config.kmeans.restarts);
      read_field(m, "max_iter", config.kmeans.max_iter);
      read_field(m, "tol", config.kmeans.tol);
    }
    read_field(doc, "demo_success_only", config.demo_success_only);
    read_field(doc, "demo_max_attempts_factor", config.demo_max_attempts_factor);
    read_field(doc, "phase1_plateau", config.phase1_plateau);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(std::string("bad config value: ") + e.what());
  }
  config.validate();
  return config;
}

std::string to_json(const RunConfig& config) {
  nlohmann::json doc;
  doc["n_variations"] = config.n_variations;
  doc["g_archetypes"] = config.g_archetypes;
  doc["grid"] = config.grid;
  doc["max_steps"] = config.max_steps;
  if (config.n_low.has_value()) {
    doc["n_low"] = *config.n_low;
  } else {
    doc["n_low"] = nullptr;
  }
  doc["n_specialists"] = config.n_specialists;
  doc["budget_phase1"] = config.budget_phase1.n_sample;
  doc["budget_specialist"] = config.budget_specialist.n_sample;
  doc["budget_finetune"] = config.budget_finetune.n_sample;
  doc["demos_per_variation"] = config.demos_per_variation;
  doc["eval_episodes"] = config.eval_episodes;
  doc["master_seed"] = config.master_seed;
  doc["feature_noise_sigma"] = config.feature_noise_sigma;
  doc["hyper"] = {{"alpha", config.hyper.alpha},
                  {"gamma", config.hyper.gamma},
                  {"epsilon", config.hyper.epsilon},
                  {"epsilon_decay", config.hyper.epsilon_decay},
                  {"epsilon_min", config.hyper.epsilon_min},
                  {"q_init", config.hyper.q_init}};
  doc["rewards"] = {{"step_penalty", config.rewards.step_penalty},
                    {"success", config.rewards.success},
                    {"wrong_interact", config.rewards.wrong_interact},
                    {"demo_shaping", config.rewards.demo_shaping}};
  doc["descriptor"] = {{"pair_samples", config.descriptor.pair_samples},
                       {"histogram_bins", config.descriptor.histogram_bins},
                       {"axis_bins", config.descriptor.axis_bins}};
  doc["pca_k"] = config.pca_k;
  doc["pca_fit_on_all"] = config.pca_fit_on_all;
  doc["kmeans"] = {{"restarts", config.kmeans.restarts},
                   {"max_iter", config.kmeans.max_iter},
                   {"tol", config.kmeans.tol}};
  doc["demo_success_only"] = config.demo_success_only;
  doc["demo_max_attempts_factor"] = config.demo_max_attempts_factor;
  doc["phase1_plateau"] = config.phase1_plateau;
  return doc.dump(2) + "\n";
}

}  // namespace taskpart::gslsim
