#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "support/oracles.hpp"
#include "taskpart/cluster.hpp"
#include "taskpart/errors.hpp"
#include "taskpart/rng.hpp"

using namespace taskpart;
using cluster::Centroids;
using cluster::Partition;
using featex::FeatureMatrix;
using featex::FeatureVector;

namespace {

FeatureMatrix matrix_from(const std::vector<std::vector<double>>& rows) {
  std::vector<FeatureVector> fvs;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    fvs.push_back({"p" + std::to_string(i), rows[i]});
  }
  return featex::make_matrix(std::move(fvs));
}

FeatureMatrix random_matrix(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::vector<std::vector<double>> rows(n, std::vector<double>(dim));
  Rng rng(seed);
  for (auto& row : rows) {
    for (auto& v : row) v = rng.unit() * 10.0;
  }
  return matrix_from(rows);
}

Centroids random_centroids(std::size_t k, std::size_t dim, std::uint64_t seed) {
  Centroids c;
  c.k = k;
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> pos(dim);
    for (auto& v : pos) v = rng.unit() * 10.0;
    c.positions.push_back(pos);
  }
  return c;
}

void check_covers_exactly(const Partition& partition, const FeatureMatrix& matrix) {
  std::set<std::string> seen;
  std::size_t total = 0;
  for (const auto& members : partition.clusters) {
    for (const auto& id : members) {
      CHECK(seen.insert(id).second);
      ++total;
    }
  }
  CHECK(total == matrix.size());
  for (const auto& row : matrix.rows) CHECK(seen.contains(row.id));
}

std::size_t balance_spread(const Partition& partition) {
  std::size_t lo = partition.clusters[0].size(), hi = lo;
  for (const auto& c : partition.clusters) {
    lo = std::min(lo, c.size());
    hi = std::max(hi, c.size());
  }
  return hi - lo;
}

std::vector<std::vector<double>> raw_rows(const FeatureMatrix& m) {
  std::vector<std::vector<double>> rows;
  for (const auto& r : m.rows) rows.push_back(r.values);
  return rows;
}

}  // namespace

TEST_SUITE("cluster") {

TEST_CASE("well separated blobs are recovered") {
  std::vector<std::vector<double>> rows;
  Rng rng(1);
  for (int i = 0; i < 5; ++i) {
    rows.push_back({rng.unit() * 0.1, rng.unit() * 0.1});
    rows.push_back({10.0 + rng.unit() * 0.1, 10.0 + rng.unit() * 0.1});
  }
  const auto result = cluster::kmeans(matrix_from(rows), 2, 0);
  bool near_origin = false, near_ten = false;
  for (const auto& c : result.centroids.positions) {
    const double d0 = std::hypot(c[0], c[1]);
    const double d10 = std::hypot(c[0] - 10.0, c[1] - 10.0);
    if (d0 < 0.2) near_origin = true;
    if (d10 < 0.2) near_ten = true;
  }
  CHECK(near_origin);
  CHECK(near_ten);
}

TEST_CASE("k equal to n saturates at zero inertia") {
  const auto matrix = random_matrix(6, 3, 2);
  const auto result = cluster::kmeans(matrix, 6, 0);
  CHECK(result.inertia == doctest::Approx(0.0).epsilon(1e-15));
  std::set<std::vector<double>> centroid_set(result.centroids.positions.begin(),
                                             result.centroids.positions.end());
  for (const auto& row : matrix.rows) CHECK(centroid_set.contains(row.values));
}

TEST_CASE("lloyd inertia never increases within a run") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto result = cluster::kmeans(random_matrix(40, 2, seed), 5, seed);
    for (const auto& trace : result.run_traces) {
      for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
    }
  }
}

TEST_CASE("restarted kmeans usually finds the exhaustive optimum at n=8, k=2") {
  std::size_t hits = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto matrix = random_matrix(8, 2, 100 + seed);
    const auto result = cluster::kmeans(matrix, 2, seed);
    const double best = oracles::exhaustive_two_partition_cost(raw_rows(matrix));
    CHECK(result.inertia >= best - 1e-9);
    if (result.inertia <= best + 1e-9) ++hits;
  }
  CHECK(hits >= 45);
}

TEST_CASE("invalid k is rejected") {
  const auto matrix = random_matrix(4, 2, 3);
  CHECK_THROWS_AS(cluster::kmeans(matrix, 0, 0), InvalidK);
  CHECK_THROWS_AS(cluster::kmeans(matrix, 5, 0), InvalidK);
}

TEST_CASE("vanilla assignment breaks ties toward the lowest centroid index") {
  Centroids c;
  c.k = 3;
  c.positions = {{-1.0, 0.0}, {5.0, 5.0}, {1.0, 0.0}};
  const auto partition = cluster::assign_vanilla(matrix_from({{0.0, 0.0}}), c);
  CHECK(partition.clusters[0].size() == 1);
  CHECK(partition.clusters[2].empty());
}

TEST_CASE("vanilla assignment permits extreme imbalance") {
  Centroids c;
  c.k = 3;
  c.positions = {{0.0, 0.0}, {8.0, 8.0}, {-8.0, 8.0}};
  std::vector<std::vector<double>> rows(7, {0.0, 0.0});
  const auto partition = cluster::assign_vanilla(matrix_from(rows), c);
  CHECK(partition.clusters[0].size() == 7);
  CHECK(partition.clusters[1].empty());
  CHECK(partition.clusters[2].empty());
  CHECK(partition.method == cluster::Method::kmeans_vanilla);
}

TEST_CASE("vanilla recovers planted unequal blob counts") {
  // Four tight blobs with counts (4, 6, 9, 10) at square corners.
  const std::vector<std::pair<double, double>> corners = {{0, 0}, {10, 0}, {0, 10}, {10, 10}};
  const std::vector<std::size_t> counts = {4, 6, 9, 10};
  std::vector<std::vector<double>> rows;
  Rng rng(9);
  for (std::size_t b = 0; b < 4; ++b) {
    for (std::size_t i = 0; i < counts[b]; ++i) {
      rows.push_back({corners[b].first + rng.gaussian(0.05), corners[b].second + rng.gaussian(0.05)});
    }
  }
  const auto matrix = matrix_from(rows);
  const auto km = cluster::kmeans(matrix, 4, 7);
  const auto partition = cluster::assign_vanilla(matrix, km.centroids);
  CHECK(partition.sorted_sizes() == std::vector<std::size_t>{4, 6, 9, 10});
}

TEST_CASE("balanced greedy on 29 points and 4 clusters gives sizes 7,7,7,8") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto matrix = random_matrix(29, 2, 200 + seed);
    const auto centroids = random_centroids(4, 2, 300 + seed);
    const auto partition = cluster::assign_balanced_greedy(matrix, centroids);
    CHECK(partition.sorted_sizes() == std::vector<std::size_t>{7, 7, 7, 8});
    check_covers_exactly(partition, matrix);
  }
}

TEST_CASE("balanced greedy with k equal to n forces a bijection") {
  const auto matrix = random_matrix(5, 2, 4);
  const auto partition =
      cluster::assign_balanced_greedy(matrix, random_centroids(5, 2, 44));
  for (const auto& members : partition.clusters) CHECK(members.size() == 1);
}

TEST_CASE("balanced greedy stays within one of even and never beats the flow oracle") {
  const auto matrix = random_matrix(8, 2, 5);
  const auto centroids = random_centroids(2, 2, 55);
  const auto greedy = cluster::assign_balanced_greedy(matrix, centroids);
  const auto optimal = cluster::optimal_balanced_assignment(matrix, centroids);
  CHECK(greedy.sorted_sizes() == std::vector<std::size_t>{4, 4});
  CHECK(optimal.sorted_sizes() == std::vector<std::size_t>{4, 4});
  CHECK(*greedy.cost >= *optimal.cost - 1e-9);
}

TEST_CASE("balance and coverage hold across small instances") {
  for (std::size_t n = 1; n <= 15; ++n) {
    for (std::size_t k = 1; k <= n; ++k) {
      const auto matrix = random_matrix(n, 2, n * 100 + k);
      const auto centroids = random_centroids(k, 2, n * 200 + k);
      const auto partition = cluster::assign_balanced_greedy(matrix, centroids);
      CHECK(balance_spread(partition) <= 1);
      check_covers_exactly(partition, matrix);
    }
  }
}

TEST_CASE("random assignment splits 29 ids into 7,7,7,8 and is deterministic") {
  std::vector<std::string> ids;
  for (int i = 0; i < 29; ++i) ids.push_back("id" + std::to_string(i));
  const auto a = cluster::assign_random(ids, 4, 123);
  const auto b = cluster::assign_random(ids, 4, 123);
  CHECK(a.sorted_sizes() == std::vector<std::size_t>{7, 7, 7, 8});
  CHECK(a.clusters == b.clusters);
  CHECK(a.method == cluster::Method::random);
  CHECK_FALSE(a.cost.has_value());
  CHECK_FALSE(a.centroids.has_value());

  const auto c = cluster::assign_random(ids, 4, 124);
  CHECK(a.clusters != c.clusters);

  std::vector<std::string> four = {"a", "b", "c", "d"};
  const auto singles = cluster::assign_random(four, 4, 9);
  for (const auto& members : singles.clusters) CHECK(members.size() == 1);

  CHECK_THROWS_AS(cluster::assign_random(four, 5, 0), InvalidK);
  CHECK_THROWS_AS(cluster::assign_random(four, 0, 0), InvalidK);
}

TEST_CASE("flow oracle agrees with brute force on tiny instances") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    const std::size_t n = 5 + static_cast<std::size_t>(rng.below(4));  // 5..8
    const std::size_t k = 2 + static_cast<std::size_t>(rng.below(2));  // 2..3
    const auto matrix = random_matrix(n, 2, 700 + seed);
    const auto centroids = random_centroids(k, 2, 800 + seed);
    const auto optimal = cluster::optimal_balanced_assignment(matrix, centroids);
    const double brute = oracles::brute_force_balanced_cost(
        raw_rows(matrix), centroids.positions);
    CHECK(*optimal.cost == doctest::Approx(brute).epsilon(1e-9));
    CHECK(balance_spread(optimal) <= 1);
    check_covers_exactly(optimal, matrix);
  }
}

TEST_CASE("oracle matches greedy on separated equal blobs") {
  std::vector<std::vector<double>> rows;
  Rng rng(13);
  for (int i = 0; i < 4; ++i) rows.push_back({rng.gaussian(0.05), rng.gaussian(0.05)});
  for (int i = 0; i < 4; ++i) rows.push_back({9.0 + rng.gaussian(0.05), 9.0 + rng.gaussian(0.05)});
  const auto matrix = matrix_from(rows);
  Centroids centroids;
  centroids.k = 2;
  centroids.positions = {{0.0, 0.0}, {9.0, 9.0}};
  const auto greedy = cluster::assign_balanced_greedy(matrix, centroids);
  const auto optimal = cluster::optimal_balanced_assignment(matrix, centroids);
  CHECK(*greedy.cost == doctest::Approx(*optimal.cost).epsilon(1e-12));
}

TEST_CASE("some instance makes greedy strictly suboptimal") {
  bool found_gap = false;
  for (std::uint64_t seed = 0; seed < 60 && !found_gap; ++seed) {
    const auto matrix = random_matrix(6, 2, 900 + seed);
    const auto centroids = random_centroids(2, 2, 950 + seed);
    const auto greedy = cluster::assign_balanced_greedy(matrix, centroids);
    const auto optimal = cluster::optimal_balanced_assignment(matrix, centroids);
    CHECK(*greedy.cost >= *optimal.cost - 1e-9);
    if (*greedy.cost > *optimal.cost + 1e-9) found_gap = true;
  }
  CHECK(found_gap);
}

TEST_CASE("oracle rejects oversized instances") {
  const auto matrix = random_matrix(65, 2, 6);
  CHECK_THROWS_AS(cluster::optimal_balanced_assignment(matrix, random_centroids(4, 2, 66)),
                  InstanceTooLarge);
}

TEST_CASE("ceil capacity rule exists for comparison and still covers") {
  const auto matrix = random_matrix(29, 2, 31);
  const auto centroids = random_centroids(4, 2, 32);
  const auto partition = cluster::assign_balanced_greedy(matrix, centroids, 0,
                                                         cluster::CapacityRule::ceil);
  check_covers_exactly(partition, matrix);
  for (const auto& members : partition.clusters) CHECK(members.size() <= 8);
}

TEST_CASE("adjusted rand index behaves") {
  const std::vector<int> a = {0, 0, 1, 1, 2, 2};
  CHECK(cluster::adjusted_rand_index(a, a) == doctest::Approx(1.0));
  const std::vector<int> relabeled = {5, 5, 9, 9, 7, 7};
  CHECK(cluster::adjusted_rand_index(a, relabeled) == doctest::Approx(1.0));
  const std::vector<int> shifted = {0, 0, 0, 1, 1, 1};
  CHECK(cluster::adjusted_rand_index(a, shifted) < 1.0);
  CHECK_THROWS_AS(cluster::adjusted_rand_index(a, {0, 1}), DimensionMismatch);
}

TEST_CASE("partition JSON round-trips") {
  const auto matrix = random_matrix(9, 2, 41);
  const auto centroids = random_centroids(3, 2, 42);
  const auto partition = cluster::assign_balanced_greedy(matrix, centroids, 777);
  const auto parsed = cluster::partition_from_json(cluster::to_json(partition));
  CHECK(parsed.method == partition.method);
  CHECK(parsed.seed == partition.seed);
  CHECK(parsed.clusters == partition.clusters);
  CHECK(parsed.cost == partition.cost);
  REQUIRE(parsed.centroids.has_value());
  CHECK(parsed.centroids->positions == partition.centroids->positions);

  std::vector<std::string> ids = {"x", "y", "z"};
  const auto random_part = cluster::assign_random(ids, 2, 5);
  const auto parsed_random = cluster::partition_from_json(cluster::to_json(random_part));
  CHECK_FALSE(parsed_random.centroids.has_value());
  CHECK_FALSE(parsed_random.cost.has_value());
  CHECK(parsed_random.clusters == random_part.clusters);
}

}  // TEST_SUITE
