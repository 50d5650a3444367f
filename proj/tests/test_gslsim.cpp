#include <algorithm>
#include <deque>
#include <map>
#include <set>

#include "doctest.h"
#include "taskpart/errors.hpp"
#include "taskpart/gslsim.hpp"

using namespace taskpart;
using gslsim::Action;
using gslsim::Interaction;
using gslsim::LearnerState;
using gslsim::RunConfig;
using gslsim::TrainingBudget;
using gslsim::VariationSpec;

namespace {

RunConfig small_config(std::size_t n, int g, std::uint64_t seed = 0) {
  RunConfig config;
  config.n_variations = n;
  config.g_archetypes = g;
  config.master_seed = seed;
  return config;
}

// BFS distance-to-handle policy: walk toward the nearest handle cell, then
// interact in the variation's direction. Succeeds from every start.
LearnerState perfect_learner(const VariationSpec& v) {
  auto learner = LearnerState::fresh(v.grid);
  const int g = v.grid;
  std::vector<int> dist(static_cast<std::size_t>(g) * g, -1);
  std::deque<int> queue;
  for (const auto& c : v.handle_cells) {
    dist[static_cast<std::size_t>(c.y) * g + c.x] = 0;
    queue.push_back(c.y * g + c.x);
  }
  while (!queue.empty()) {
    const int cell = queue.front();
    queue.pop_front();
    const int x = cell % g, y = cell / g;
    const int neighbors[4] = {y > 0 ? cell - g : -1, y < g - 1 ? cell + g : -1,
                              x > 0 ? cell - 1 : -1, x < g - 1 ? cell + 1 : -1};
    for (int next : neighbors) {
      if (next >= 0 && dist[static_cast<std::size_t>(next)] < 0) {
        dist[static_cast<std::size_t>(next)] = dist[static_cast<std::size_t>(cell)] + 1;
        queue.push_back(next);
      }
    }
  }
  const Action interact =
      v.interaction == Interaction::cw ? Action::interact_cw : Action::interact_ccw;
  for (int cell = 0; cell < g * g; ++cell) {
    if (dist[static_cast<std::size_t>(cell)] == 0) {
      learner.q_ref(cell, interact) = 1.0;
      continue;
    }
    const int x = cell % g, y = cell / g;
    const std::pair<Action, int> moves[4] = {{Action::up, y > 0 ? cell - g : -1},
                                             {Action::down, y < g - 1 ? cell + g : -1},
                                             {Action::left, x > 0 ? cell - 1 : -1},
                                             {Action::right, x < g - 1 ? cell + 1 : -1}};
    for (const auto& [action, next] : moves) {
      if (next >= 0 && dist[static_cast<std::size_t>(next)] ==
                           dist[static_cast<std::size_t>(cell)] - 1) {
        learner.q_ref(cell, action) = 1.0;
        break;
      }
    }
  }
  return learner;
}

std::vector<VariationSpec> of_archetype(const std::vector<VariationSpec>& all, int archetype,
                                        std::size_t count) {
  std::vector<VariationSpec> out;
  for (const auto& v : all) {
    if (v.archetype == archetype && out.size() < count) out.push_back(v);
  }
  return out;
}

}  // namespace

TEST_SUITE("gslsim") {

TEST_CASE("four variations over four archetypes have no jitter") {
  const auto a = gslsim::generate_variations(small_config(4, 4, 1));
  const auto b = gslsim::generate_variations(small_config(4, 4, 99));
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(a[i].archetype == static_cast<int>(i));
    CHECK(a[i].handle_cells == b[i].handle_cells);  // jitter-free by convention
    CHECK(a[i].handle_cells.size() >= 3);
    CHECK(a[i].handle_cells.size() <= 6);
  }
}

TEST_CASE("sixty variations split evenly across four archetypes") {
  const auto variations = gslsim::generate_variations(small_config(60, 4));
  std::array<int, 4> counts{};
  for (const auto& v : variations) ++counts[static_cast<std::size_t>(v.archetype)];
  CHECK(counts == std::array<int, 4>{15, 15, 15, 15});
  std::set<std::string> ids;
  for (const auto& v : variations) ids.insert(v.id);
  CHECK(ids.size() == 60);
}

TEST_CASE("same-archetype variations differ by at most a one-cell translation") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto variations = gslsim::generate_variations(small_config(12, 4, seed));
    for (std::size_t i = 0; i < variations.size(); ++i) {
      for (std::size_t j = i + 1; j < variations.size(); ++j) {
        if (variations[i].archetype != variations[j].archetype) continue;
        const auto& a = variations[i].handle_cells;
        const auto& b = variations[j].handle_cells;
        REQUIRE(a.size() == b.size());
        const int dx = b[0].x - a[0].x;
        const int dy = b[0].y - a[0].y;
        CHECK(std::abs(dx) <= 1);
        CHECK(std::abs(dy) <= 1);
        for (std::size_t c = 0; c < a.size(); ++c) {
          CHECK(b[c].x - a[c].x == dx);
          CHECK(b[c].y - a[c].y == dy);
        }
      }
    }
  }
}

TEST_CASE("interaction is a pure function of the archetype") {
  const auto variations = gslsim::generate_variations(small_config(40, 5, 3));
  std::map<int, Interaction> seen;
  bool cw_seen = false, ccw_seen = false;
  for (const auto& v : variations) {
    auto [it, inserted] = seen.emplace(v.archetype, v.interaction);
    if (!inserted) CHECK(it->second == v.interaction);
    (v.interaction == Interaction::cw ? cw_seen : ccw_seen) = true;
  }
  CHECK(cw_seen);
  CHECK(ccw_seen);
}

TEST_CASE("config preconditions are enforced") {
  CHECK_THROWS_AS(gslsim::generate_variations(small_config(4, 1)), InvalidConfig);
  CHECK_THROWS_AS(gslsim::generate_variations(small_config(3, 4)), InvalidConfig);
}

TEST_CASE("zero-noise clouds sit exactly on the handle cells") {
  const auto variations = gslsim::generate_variations(small_config(8, 4, 5));
  const auto& v = variations[3];
  const auto cloud = gslsim::variation_point_cloud(v, 0.0, 42);
  REQUIRE(cloud.points.size() == v.handle_cells.size());
  CHECK(cloud.id == v.id);
  // Cells map to cloud coordinates through one fixed positive pitch.
  double pitch = 0.0;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (v.handle_cells[i].x != 0) pitch = cloud.points[i].x / v.handle_cells[i].x;
  }
  REQUIRE(pitch > 0.0);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    CHECK(cloud.points[i].x == pitch * v.handle_cells[i].x);
    CHECK(cloud.points[i].y == pitch * v.handle_cells[i].y);
  }
}

TEST_CASE("clouds are deterministic per seed") {
  const auto variations = gslsim::generate_variations(small_config(8, 4, 5));
  const auto a = gslsim::variation_point_cloud(variations[0], 0.05, 9);
  const auto b = gslsim::variation_point_cloud(variations[0], 0.05, 9);
  const auto c = gslsim::variation_point_cloud(variations[0], 0.05, 10);
  CHECK(a.points == b.points);
  CHECK(a.points != c.points);
}

TEST_CASE("zero budget returns the learner unchanged") {
  const auto variations = gslsim::generate_variations(small_config(4, 4));
  auto learner = LearnerState::fresh(9);
  learner.q_ref(5, Action::left) = 0.25;
  const auto after = gslsim::train(learner, variations, TrainingBudget{0}, 1);
  CHECK(after == learner);
}

TEST_CASE("training on one variation masters it") {
  const auto variations = gslsim::generate_variations(small_config(8, 4, 0));
  std::vector<double> rates;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto learner = LearnerState::fresh(9);
    learner = gslsim::train(std::move(learner), std::span(&variations[1], 1),
                            TrainingBudget{5000}, seed);
    rates.push_back(gslsim::evaluate(learner, variations[1], 100, 1234 + seed));
  }
  std::sort(rates.begin(), rates.end());
  const double median = (rates[4] + rates[5]) / 2.0;
  CHECK(median >= 0.95);
}

TEST_CASE("same-archetype pairs train better than cross-archetype pairs") {
  const auto variations = gslsim::generate_variations(small_config(16, 4, 7));
  const auto same = of_archetype(variations, 0, 2);
  std::vector<VariationSpec> diff = {of_archetype(variations, 0, 1)[0],
                                     of_archetype(variations, 2, 1)[0]};
  REQUIRE(same.size() == 2);

  // At a tight budget the conflict shows up as slower training on the
  // dissimilar pair; with generous budgets both pairs become masterable.
  int same_wins = 0;
  double same_total = 0.0, diff_total = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto train_pair = [&](const std::vector<VariationSpec>& pair) {
      auto learner = LearnerState::fresh(9);
      learner = gslsim::train(std::move(learner), pair, TrainingBudget{1000}, seed);
      double mean = 0.0;
      for (const auto& v : pair) mean += gslsim::evaluate(learner, v, 100, 555 + seed);
      return mean / 2.0;
    };
    const double s = train_pair(same);
    const double d = train_pair(diff);
    same_total += s;
    diff_total += d;
    if (s >= d) ++same_wins;
  }
  CHECK(same_wins >= 8);
  CHECK(same_total >= diff_total);
}

TEST_CASE("a hand-built perfect policy evaluates to one") {
  const auto variations = gslsim::generate_variations(small_config(4, 4));
  for (const auto& v : variations) {
    const auto learner = perfect_learner(v);
    CHECK(gslsim::evaluate(learner, v, 100, 3) == 1.0);
  }
}

TEST_CASE("an all-zero table never reaches a handle") {
  const auto variations = gslsim::generate_variations(small_config(4, 4));
  const auto learner = LearnerState::fresh(9);
  // Greedy ties resolve to 'up'; the agent only climbs and never interacts.
  CHECK(gslsim::evaluate(learner, variations[0], 200, 4) == 0.0);
}

TEST_CASE("evaluation is deterministic") {
  const auto variations = gslsim::generate_variations(small_config(8, 4, 2));
  auto learner = LearnerState::fresh(9);
  learner = gslsim::train(std::move(learner), variations, TrainingBudget{500}, 11);
  CHECK(gslsim::evaluate(learner, variations[2], 100, 77) ==
        gslsim::evaluate(learner, variations[2], 100, 77));
}

TEST_CASE("demo collection respects count, filtering and attempt limits") {
  const auto variations = gslsim::generate_variations(small_config(4, 4));
  const auto& v = variations[0];
  const auto perfect = perfect_learner(v);

  CHECK(gslsim::collect_demos(perfect, v, 0, 1, true, 0).trajectories.empty());

  const auto batch = gslsim::collect_demos(perfect, v, 10, 1, true, 200);
  CHECK(batch.trajectories.size() == 10);
  CHECK(batch.attempts == 10);
  CHECK(batch.shortfall == 0);
  for (const auto& t : batch.trajectories) {
    CHECK(t.success);
    CHECK(t.variation_id == v.id);
    CHECK(t.steps.size() <= static_cast<std::size_t>(v.max_steps));
    const auto& last = t.steps.back();
    const Action expected =
        v.interaction == Interaction::cw ? Action::interact_cw : Action::interact_ccw;
    CHECK(last.action == expected);
  }

  const auto hopeless = LearnerState::fresh(9);
  const auto empty = gslsim::collect_demos(hopeless, v, 5, 1, true, 40);
  CHECK(empty.attempts == 40);
  CHECK(empty.shortfall == 5);
  CHECK(empty.trajectories.empty());

  const auto unfiltered = gslsim::collect_demos(hopeless, v, 5, 1, false, 40);
  CHECK(unfiltered.trajectories.size() == 5);
  CHECK(unfiltered.attempts == 5);
  for (const auto& t : unfiltered.trajectories) CHECK_FALSE(t.success);
}

TEST_CASE("samples_used grows by the budget per call") {
  const auto variations = gslsim::generate_variations(small_config(4, 4));
  auto learner = LearnerState::fresh(9);
  learner = gslsim::train(std::move(learner), variations, TrainingBudget{300}, 1);
  CHECK(learner.samples_used == 300);
  learner = gslsim::train(std::move(learner), variations, TrainingBudget{200}, 2);
  CHECK(learner.samples_used == 500);
}

TEST_CASE("demo imprint majority honors counts then earliest appearance") {
  std::vector<gslsim::Trajectory> demos(1);
  demos[0].variation_id = "x";
  demos[0].steps = {{4, Action::left, 0.0},
                    {4, Action::right, 0.0},
                    {4, Action::right, 0.0},
                    {7, Action::down, 0.0},
                    {7, Action::up, 0.0}};
  const auto imprint = gslsim::build_demo_imprint(demos, 9);
  CHECK(imprint.majority[4] == static_cast<int>(Action::right));  // count wins
  CHECK(imprint.majority[7] == static_cast<int>(Action::down));   // tie, earliest wins
  CHECK_FALSE(imprint.visited(0));
}

TEST_CASE("finetuning with nothing to learn is a no-op") {
  const auto variations = gslsim::generate_variations(small_config(4, 4));
  auto learner = LearnerState::fresh(9);
  learner.q_ref(11, Action::down) = 0.5;
  const auto after =
      gslsim::finetune_generalist(learner, {}, variations, TrainingBudget{0}, 3);
  CHECK(after == learner);
}

TEST_CASE("cloning dense perfect demos transplants the policy") {
  const auto variations = gslsim::generate_variations(small_config(4, 4));
  const auto& v = variations[2];
  const auto specialist = perfect_learner(v);
  // Enough rollouts that every free cell appears as a start.
  const auto batch = gslsim::collect_demos(specialist, v, 2000, 5, true, 4000);
  REQUIRE(batch.shortfall == 0);

  auto generalist = LearnerState::fresh(9);
  const auto tuned = gslsim::finetune_generalist(std::move(generalist), batch.trajectories,
                                                 std::span(&v, 1), TrainingBudget{0}, 6);

  const auto imprint = gslsim::build_demo_imprint(batch.trajectories, 9);
  std::size_t visited = 0, matched = 0;
  for (int cell = 0; cell < 81; ++cell) {
    if (!imprint.visited(cell)) continue;
    ++visited;
    if (static_cast<int>(tuned.greedy_action(cell)) == imprint.majority[cell]) ++matched;
  }
  REQUIRE(visited > 0);
  const double match_rate = static_cast<double>(matched) / static_cast<double>(visited);
  CHECK(gslsim::evaluate(tuned, v, 200, 8) >= match_rate);
}

TEST_CASE("plateau detection can stop phase-style training early") {
  const auto variations = gslsim::generate_variations(small_config(4, 4));
  auto learner = LearnerState::fresh(9);
  gslsim::TrainOptions options;
  options.plateau = gslsim::PlateauRule{};
  learner = gslsim::train(std::move(learner), std::span(&variations[0], 1),
                          TrainingBudget{20000}, 4, options);
  CHECK(learner.samples_used < 20000);
  CHECK(gslsim::evaluate(learner, variations[0], 100, 5) > 0.5);
}

TEST_CASE("config JSON applies defaults and rejects unknown keys") {
  const auto config = gslsim::run_config_from_json(R"({"n_variations": 20, "master_seed": 7})");
  CHECK(config.n_variations == 20);
  CHECK(config.master_seed == 7);
  CHECK(config.g_archetypes == 4);
  CHECK(config.eval_episodes == 100);
  CHECK_FALSE(config.n_low.has_value());

  CHECK_THROWS_AS(gslsim::run_config_from_json(R"({"n_variatoins": 20})"), InvalidConfig);
  CHECK_THROWS_AS(gslsim::run_config_from_json("not json"), InvalidConfig);
  CHECK_THROWS_AS(gslsim::run_config_from_json(R"({"n_variations": 2, "g_archetypes": 4})"),
                  InvalidConfig);

  const auto round = gslsim::run_config_from_json(gslsim::to_json(config));
  CHECK(round.n_variations == config.n_variations);
  CHECK(round.master_seed == config.master_seed);
  CHECK(round.hyper.alpha == config.hyper.alpha);
}

}  // TEST_SUITE
