#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "taskpart/featex.hpp"

namespace taskpart::cluster {

struct Centroids {
  std::size_t k = 0;
  std::vector<std::vector<double>> positions;  // k points in feature space
  std::size_t dim() const { return positions.empty() ? 0 : positions.front().size(); }
};

enum class Method { random, kmeans_vanilla, balanced_greedy };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

/// Assignment of variation ids to k clusters. Member lists are disjoint and
/// cover the input id set exactly; balanced methods keep cluster sizes
/// within one of each other.
struct Partition {
  Method method = Method::random;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::string>> clusters;
  std::optional<double> cost;          // sum of squared member-centroid distances
  std::optional<Centroids> centroids;  // absent for method=random

  std::size_t k() const { return clusters.size(); }
  std::vector<std::size_t> sorted_sizes() const;
};

struct KmeansParams {
  std::size_t restarts = 10;
  std::size_t max_iter = 300;
  double tol = 1e-8;
};

struct KmeansResult {
  Centroids centroids;
  double inertia = 0.0;
  /// Inertia after each Lloyd iteration, one trace per restart.
  std::vector<std::vector<double>> run_traces;
};

/// Best-of-restarts Lloyd with k-means++ seeding. Empty clusters are
/// re-seeded with the point farthest from its assigned centroid.
/// Deterministic for fixed arguments.
KmeansResult kmeans(const featex::FeatureMatrix& matrix, std::size_t k, std::uint64_t seed,
                    const KmeansParams& params = {});

/// Nearest-centroid assignment, ties to the lowest centroid index. Cluster
/// sizes are unconstrained.
Partition assign_vanilla(const featex::FeatureMatrix& matrix, const Centroids& centroids,
                         std::uint64_t seed = 0);

/// Capacity rule for the balanced greedy assignment. floor_plus_extras is
/// the contract (floor(n/k) per cluster plus a global budget of n mod k
/// single extras); ceil exists for comparison only and can produce sizes
/// like (8,8,8,5).
enum class CapacityRule { floor_plus_extras, ceil };

/// Greedy balanced assignment over the full (row, centroid) distance table,
/// scanned in ascending distance order with (row, centroid) tie-breaks.
Partition assign_balanced_greedy(const featex::FeatureMatrix& matrix, const Centroids& centroids,
                                 std::uint64_t seed = 0,
                                 CapacityRule rule = CapacityRule::floor_plus_extras);

/// Uniform random permutation split into k near-equal contiguous groups.
Partition assign_random(const std::vector<std::string>& ids, std::size_t k, std::uint64_t seed);

/// Exact minimum-cost balanced assignment (min-cost flow over capacity
/// slots). Validation oracle for assign_balanced_greedy; limited to n <= 64.
Partition optimal_balanced_assignment(const featex::FeatureMatrix& matrix,
                                      const Centroids& centroids);

/// Total squared distance from members to their cluster's centroid, summed
/// in cluster-then-member order. Shared by the greedy and the oracle so
/// equal assignments report bit-equal costs.
double partition_cost(const featex::FeatureMatrix& matrix, const Centroids& centroids,
                      const std::vector<std::vector<std::string>>& clusters);

/// Chance-corrected agreement between two labelings of the same items;
/// 1 means identical up to label names.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

std::string to_json(const Partition& partition);
Partition partition_from_json(const std::string& text);

}  // namespace taskpart::cluster
