#include "taskpart/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>

#include <nlohmann/json.hpp>

#include "taskpart/errors.hpp"
#include "taskpart/rng.hpp"

namespace taskpart::cluster {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

void check_dims(const featex::FeatureMatrix& matrix, const Centroids& centroids) {
  if (centroids.k == 0 || centroids.positions.size() != centroids.k) {
    throw InvalidK("centroids are empty or inconsistent");
  }
  if (centroids.dim() != matrix.dim) {
    throw DimensionMismatch("matrix dim " + std::to_string(matrix.dim) + " vs centroid dim " +
                            std::to_string(centroids.dim()));
  }
}

std::size_t nearest_centroid(const std::vector<double>& point, const Centroids& centroids) {
  std::size_t best = 0;
  double best_d = sq_dist(point, centroids.positions[0]);
  for (std::size_t c = 1; c < centroids.k; ++c) {
    const double d = sq_dist(point, centroids.positions[c]);
    if (d < best_d) {  // strict: ties stay at the lowest index
      best_d = d;
      best = c;
    }
  }
  return best;
}

// k-means++: first centroid uniform, then D^2-weighted draws. Falls back to
// the lowest-index unchosen point when every remaining distance is zero.
std::vector<std::size_t> kmeanspp_seed(const featex::FeatureMatrix& matrix, std::size_t k,
                                       Rng& rng) {
  const std::size_t n = matrix.size();
  std::vector<std::size_t> chosen;
  std::vector<bool> is_chosen(n, false);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());

  std::size_t first = static_cast<std::size_t>(rng.below(n));
  chosen.push_back(first);
  is_chosen[first] = true;

  while (chosen.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(matrix.rows[i].values, matrix.rows[chosen.back()].values));
      if (!is_chosen[i]) total += d2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      double target = rng.unit() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (is_chosen[i]) continue;
        acc += d2[i];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    }
    if (pick == n) {  // all remaining mass zero (duplicate points)
      for (std::size_t i = 0; i < n; ++i) {
        if (!is_chosen[i]) {
          pick = i;
          break;
        }
      }
    }
    chosen.push_back(pick);
    is_chosen[pick] = true;
  }
  return chosen;
}

struct LloydRun {
  Centroids centroids;
  double inertia = 0.0;
  std::vector<double> trace;
};

LloydRun lloyd_run(const featex::FeatureMatrix& matrix, std::size_t k, Rng& rng,
                   const KmeansParams& params) {
  const std::size_t n = matrix.size();
  LloydRun run;
  run.centroids.k = k;
  run.centroids.positions.clear();
  for (std::size_t idx : kmeanspp_seed(matrix, k, rng)) {
    run.centroids.positions.push_back(matrix.rows[idx].values);
  }

  std::vector<std::size_t> assignment(n, 0);
  double prev_inertia = std::numeric_limits<double>::infinity();
  for (std::size_t iter = 0; iter < params.max_iter; ++iter) {
    // Assignment step.
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      assignment[i] = nearest_centroid(matrix.rows[i].values, run.centroids);
      inertia += sq_dist(matrix.rows[i].values, run.centroids.positions[assignment[i]]);
    }
    run.trace.push_back(inertia);
    run.inertia = inertia;
    if (prev_inertia - inertia < params.tol) break;
    prev_inertia = inertia;

    // Update step.
    std::vector<std::vector<double>> sums(k, std::vector<double>(matrix.dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[assignment[i]];
      for (std::size_t d = 0; d < matrix.dim; ++d) {
        sums[assignment[i]][d] += matrix.rows[i].values[d];
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t d = 0; d < matrix.dim; ++d) {
        run.centroids.positions[c][d] = sums[c][d] / static_cast<double>(counts[c]);
      }
    }
    // Re-seed empty clusters with the point farthest from its centroid.
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      std::size_t farthest = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = sq_dist(matrix.rows[i].values, run.centroids.positions[assignment[i]]);
        if (d > far_d) {
          far_d = d;
          farthest = i;
        }
      }
      run.centroids.positions[c] = matrix.rows[farthest].values;
      assignment[farthest] = c;
    }
  }
  return run;
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::random: return "random";
    case Method::kmeans_vanilla: return "kmeans_vanilla";
    case Method::balanced_greedy: return "balanced_greedy";
  }
  return "unknown";
}

Method method_from_name(const std::string& name) {
  if (name == "random") return Method::random;
  if (name == "kmeans_vanilla") return Method::kmeans_vanilla;
  if (name == "balanced_greedy") return Method::balanced_greedy;
  throw ValidationError("unknown partition method '" + name + "'");
}

std::vector<std::size_t> Partition::sorted_sizes() const {
  std::vector<std::size_t> sizes;
  sizes.reserve(clusters.size());
  for (const auto& c : clusters) sizes.push_back(c.size());
  std::sort(sizes.begin(), sizes.end());
  return sizes;
}

KmeansResult kmeans(const featex::FeatureMatrix& matrix, std::size_t k, std::uint64_t seed,
                    const KmeansParams& params) {
  const std::size_t n = matrix.size();
  if (k == 0 || k > n) {
    throw InvalidK("k=" + std::to_string(k) + " must be in [1, n=" + std::to_string(n) + "]");
  }
  if (params.restarts == 0 || params.max_iter == 0) {
    throw ValidationError("kmeans needs restarts >= 1 and max_iter >= 1");
  }

  KmeansResult best;
  Rng rng(seed);
  for (std::size_t r = 0; r < params.restarts; ++r) {
    LloydRun run = lloyd_run(matrix, k, rng, params);
    best.run_traces.push_back(run.trace);
    if (r == 0 || run.inertia < best.inertia) {
      best.inertia = run.inertia;
      best.centroids = std::move(run.centroids);
    }
  }
  return best;
}

Partition assign_vanilla(const featex::FeatureMatrix& matrix, const Centroids& centroids,
                         std::uint64_t seed) {
  check_dims(matrix, centroids);
  Partition out;
  out.method = Method::kmeans_vanilla;
  out.seed = seed;
  out.centroids = centroids;
  out.clusters.assign(centroids.k, {});
  for (const auto& row : matrix.rows) {
    out.clusters[nearest_centroid(row.values, centroids)].push_back(row.id);
  }
  out.cost = partition_cost(matrix, centroids, out.clusters);
  return out;
}

Partition assign_balanced_greedy(const featex::FeatureMatrix& matrix, const Centroids& centroids,
                                 std::uint64_t seed, CapacityRule rule) {
  check_dims(matrix, centroids);
  const std::size_t n = matrix.size();
  const std::size_t k = centroids.k;
  if (k > n) throw InvalidK("k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));

  struct Entry {
    double dist;
    std::size_t row;
    std::size_t centroid;
  };
  std::vector<Entry> table;
  table.reserve(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      table.push_back({sq_dist(matrix.rows[i].values, centroids.positions[c]), i, c});
    }
  }
  std::sort(table.begin(), table.end(), [](const Entry& a, const Entry& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.row != b.row) return a.row < b.row;
    return a.centroid < b.centroid;
  });

  const std::size_t floor_cap = n / k;
  std::size_t extras_left = (rule == CapacityRule::floor_plus_extras) ? n % k : 0;
  const std::size_t hard_cap =
      (rule == CapacityRule::ceil) ? (n + k - 1) / k : floor_cap + 1;

  std::vector<std::size_t> size(k, 0);
  std::vector<bool> extra_used(k, false);
  std::vector<std::size_t> assignment(n, k);
  std::size_t assigned = 0;
  for (const Entry& e : table) {
    if (assigned == n) break;
    if (assignment[e.row] != k) continue;
    bool take = false;
    if (rule == CapacityRule::ceil) {
      take = size[e.centroid] < hard_cap;
    } else if (size[e.centroid] < floor_cap) {
      take = true;
    } else if (size[e.centroid] == floor_cap && !extra_used[e.centroid] && extras_left > 0) {
      take = true;
      extra_used[e.centroid] = true;
      --extras_left;
    }
    if (take) {
      assignment[e.row] = e.centroid;
      ++size[e.centroid];
      ++assigned;
    }
  }
  // Capacities sum to n, so the scan assigns every row; under the ceil rule
  // k*ceil >= n gives the same guarantee.
  if (assigned != n) throw ValidationError("balanced greedy scan left rows unassigned");

  Partition out;
  out.method = Method::balanced_greedy;
  out.seed = seed;
  out.centroids = centroids;
  out.clusters.assign(k, {});
  for (std::size_t i = 0; i < n; ++i) out.clusters[assignment[i]].push_back(matrix.rows[i].id);
  out.cost = partition_cost(matrix, centroids, out.clusters);
  return out;
}

Partition assign_random(const std::vector<std::string>& ids, std::size_t k, std::uint64_t seed) {
  const std::size_t n = ids.size();
  if (k == 0 || k > n) {
    throw InvalidK("k=" + std::to_string(k) + " must be in [1, n=" + std::to_string(n) + "]");
  }
  std::vector<std::string> shuffled = ids;
  Rng rng(seed);
  rng.shuffle(shuffled);

  Partition out;
  out.method = Method::random;
  out.seed = seed;
  out.clusters.assign(k, {});
  const std::size_t floor_cap = n / k;
  const std::size_t extras = n % k;
  std::size_t cursor = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t take = floor_cap + (c < extras ? 1 : 0);
    for (std::size_t i = 0; i < take; ++i) out.clusters[c].push_back(shuffled[cursor++]);
  }
  return out;
}

namespace {

// Successive-shortest-path min-cost flow on the slot graph:
//   source -> each point (cap 1), point -> cluster (cap 1, cost d^2),
//   cluster -> sink (cap floor), cluster -> extra hub (cap 1),
//   extra hub -> sink (cap n mod k).
class MinCostFlow {
 public:
  explicit MinCostFlow(std::size_t nodes) : graph_(nodes) {}

  void add_edge(std::size_t from, std::size_t to, std::size_t cap, double cost) {
    graph_[from].push_back({to, graph_[to].size(), cap, cost});
    graph_[to].push_back({from, graph_[from].size() - 1, 0, -cost});
  }

  // Sends as much flow as possible from s to t, returning total cost.
  double solve(std::size_t s, std::size_t t) {
    const double inf = std::numeric_limits<double>::infinity();
    double total_cost = 0.0;
    std::vector<double> potential(graph_.size(), 0.0);  // all costs >= 0 initially
    for (;;) {
      std::vector<double> dist(graph_.size(), inf);
      std::vector<std::size_t> prev_node(graph_.size()), prev_edge(graph_.size());
      dist[s] = 0.0;
      using Item = std::pair<double, std::size_t>;
      std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
      heap.push({0.0, s});
      while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[u]) continue;
        for (std::size_t e = 0; e < graph_[u].size(); ++e) {
          const Edge& edge = graph_[u][e];
          if (edge.cap == 0) continue;
          const double nd = d + edge.cost + potential[u] - potential[edge.to];
          if (nd < dist[edge.to]) {
            dist[edge.to] = nd;
            prev_node[edge.to] = u;
            prev_edge[edge.to] = e;
            heap.push({nd, edge.to});
          }
        }
      }
      if (dist[t] == inf) break;
      for (std::size_t v = 0; v < graph_.size(); ++v) {
        if (dist[v] < inf) potential[v] += dist[v];
      }
      // Augment one unit (all capacities here are small integers).
      std::size_t bottleneck = std::numeric_limits<std::size_t>::max();
      for (std::size_t v = t; v != s; v = prev_node[v]) {
        bottleneck = std::min(bottleneck, graph_[prev_node[v]][prev_edge[v]].cap);
      }
      for (std::size_t v = t; v != s; v = prev_node[v]) {
        Edge& edge = graph_[prev_node[v]][prev_edge[v]];
        edge.cap -= bottleneck;
        graph_[edge.to][edge.rev].cap += bottleneck;
        total_cost += edge.cost * static_cast<double>(bottleneck);
      }
    }
    return total_cost;
  }

  struct Edge {
    std::size_t to;
    std::size_t rev;
    std::size_t cap;
    double cost;
  };
  const std::vector<std::vector<Edge>>& graph() const { return graph_; }

 private:
  std::vector<std::vector<Edge>> graph_;
};

}  // namespace

Partition optimal_balanced_assignment(const featex::FeatureMatrix& matrix,
                                      const Centroids& centroids) {
  check_dims(matrix, centroids);
  const std::size_t n = matrix.size();
  const std::size_t k = centroids.k;
  if (n > 64) throw InstanceTooLarge("oracle limited to n <= 64, got n=" + std::to_string(n));
  if (k > n) throw InvalidK("k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));

  const std::size_t floor_cap = n / k;
  const std::size_t extras = n % k;

  // Node layout: source, points [1, n], clusters [n+1, n+k], extra hub, sink.
  const std::size_t source = 0;
  const std::size_t extra_hub = n + k + 1;
  const std::size_t sink = n + k + 2;
  MinCostFlow flow(n + k + 3);
  for (std::size_t i = 0; i < n; ++i) {
    flow.add_edge(source, 1 + i, 1, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
      flow.add_edge(1 + i, n + 1 + c, 1,
                    sq_dist(matrix.rows[i].values, centroids.positions[c]));
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (floor_cap > 0) flow.add_edge(n + 1 + c, sink, floor_cap, 0.0);
    flow.add_edge(n + 1 + c, extra_hub, 1, 0.0);
  }
  if (extras > 0) flow.add_edge(extra_hub, sink, extras, 0.0);
  flow.solve(source, sink);

  Partition out;
  out.method = Method::balanced_greedy;
  out.centroids = centroids;
  out.clusters.assign(k, {});
  for (std::size_t i = 0; i < n; ++i) {
    bool placed = false;
    for (const auto& edge : flow.graph()[1 + i]) {
      if (edge.to >= n + 1 && edge.to <= n + k && edge.cap == 0) {  // saturated forward edge
        out.clusters[edge.to - n - 1].push_back(matrix.rows[i].id);
        placed = true;
        break;
      }
    }
    if (!placed) throw ValidationError("min-cost flow failed to place every point");
  }
  out.cost = partition_cost(matrix, centroids, out.clusters);
  return out;
}

double partition_cost(const featex::FeatureMatrix& matrix, const Centroids& centroids,
                      const std::vector<std::vector<std::string>>& clusters) {
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < matrix.size(); ++i) row_of[matrix.rows[i].id] = i;
  double total = 0.0;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (const auto& id : clusters[c]) {
      auto it = row_of.find(id);
      if (it == row_of.end()) throw ValidationError("partition references unknown id '" + id + "'");
      total += sq_dist(matrix.rows[it->second].values, centroids.positions[c]);
    }
  }
  return total;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw DimensionMismatch("labelings have different lengths");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;

  std::map<std::pair<int, int>, std::size_t> joint;
  std::map<int, std::size_t> count_a, count_b;
  for (std::size_t i = 0; i < n; ++i) {
    ++joint[{a[i], b[i]}];
    ++count_a[a[i]];
    ++count_b[b[i]];
  }
  auto choose2 = [](std::size_t m) { return static_cast<double>(m) * (m - 1) / 2.0; };
  double sum_joint = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [key, m] : joint) sum_joint += choose2(m);
  for (const auto& [key, m] : count_a) sum_a += choose2(m);
  for (const auto& [key, m] : count_b) sum_b += choose2(m);
  const double expected = sum_a * sum_b / choose2(n);
  const double max_index = (sum_a + sum_b) / 2.0;
  if (max_index == expected) return 1.0;  // both labelings trivial
  return (sum_joint - expected) / (max_index - expected);
}

std::string to_json(const Partition& partition) {
  nlohmann::json doc;
  doc["method"] = method_name(partition.method);
  doc["seed"] = partition.seed;
  doc["k"] = partition.k();
  nlohmann::json clusters = nlohmann::json::array();
  for (std::size_t c = 0; c < partition.clusters.size(); ++c) {
    nlohmann::json entry;
    if (partition.centroids.has_value()) {
      entry["centroid"] = partition.centroids->positions[c];
    } else {
      entry["centroid"] = nullptr;
    }
    entry["members"] = partition.clusters[c];
    clusters.push_back(std::move(entry));
  }
  doc["clusters"] = std::move(clusters);
  if (partition.cost.has_value()) {
    doc["cost"] = *partition.cost;
  } else {
    doc["cost"] = nullptr;
  }
  return doc.dump(2) + "\n";
}

Partition partition_from_json(const std::string& text) {
  try {
    nlohmann::json doc = nlohmann::json::parse(text);
    Partition out;
    out.method = method_from_name(doc.at("method").get<std::string>());
    out.seed = doc.at("seed").get<std::uint64_t>();
    bool any_centroid = false;
    Centroids centroids;
    for (const auto& entry : doc.at("clusters")) {
      out.clusters.push_back(entry.at("members").get<std::vector<std::string>>());
      if (!entry.at("centroid").is_null()) {
        any_centroid = true;
        centroids.positions.push_back(entry.at("centroid").get<std::vector<double>>());
      }
    }
    if (any_centroid) {
      if (centroids.positions.size() != out.clusters.size()) {
        throw ValidationError("partition mixes null and non-null centroids");
      }
      centroids.k = centroids.positions.size();
      out.centroids = std::move(centroids);
    }
    if (out.clusters.size() != doc.at("k").get<std::size_t>()) {
      throw ValidationError("partition k does not match cluster count");
    }
    if (!doc.at("cost").is_null()) out.cost = doc.at("cost").get<double>();
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad partition JSON: ") + e.what());
  }
}

}  // namespace taskpart::cluster
