#include <fstream>
#include <memory>
#include <sstream>

#include "commands.hpp"
#include "taskpart/cluster.hpp"
#include "taskpart/errors.hpp"
#include "taskpart/evalrep.hpp"
#include "taskpart/featproc.hpp"
#include "taskpart/text.hpp"

namespace taskpart::cli {

namespace {

struct PartitionOptions {
  std::string features;
  std::size_t k = 0;
  std::string method = "balanced";
  std::uint64_t seed = 0;
  std::string out = "partition.json";
  std::string svg;
  std::size_t pca_k = 2;
};

cluster::Method parse_method(const std::string& name) {
  if (name == "balanced") return cluster::Method::balanced_greedy;
  if (name == "vanilla") return cluster::Method::kmeans_vanilla;
  if (name == "random") return cluster::Method::random;
  throw ValidationError("unknown method '" + name + "'");
}

void run_partition(const PartitionOptions& opts) {
  if (opts.k == 0) throw InvalidK("--k must be positive");

  std::ifstream in(opts.features, std::ios::binary);
  if (!in) throw IoError("cannot open feature file", opts.features);
  const auto matrix = featex::load_external_features(in);

  const auto method = parse_method(opts.method);
  cluster::Partition partition;
  featex::FeatureMatrix projected;

  const bool need_features = method != cluster::Method::random || !opts.svg.empty();
  if (need_features) {
    const auto normalized = featproc::l2_normalize(matrix).matrix;
    const std::size_t k_proj = std::min(opts.pca_k, std::min(matrix.size(), matrix.dim));
    const auto model = featproc::pca_fit(normalized, k_proj);
    projected = featproc::pca_transform(model, normalized);
  }

  if (method == cluster::Method::random) {
    partition = cluster::assign_random(matrix.ids(), opts.k, opts.seed);
  } else {
    const auto km = cluster::kmeans(projected, opts.k, opts.seed);
    partition = method == cluster::Method::balanced_greedy
                    ? cluster::assign_balanced_greedy(projected, km.centroids, opts.seed)
                    : cluster::assign_vanilla(projected, km.centroids, opts.seed);
  }

  write_text_file(opts.out, cluster::to_json(partition));
  std::cout << "partitioned " << matrix.size() << " rows into " << opts.k << " clusters (sizes";
  for (std::size_t s : partition.sorted_sizes()) std::cout << ' ' << s;
  std::cout << ") -> " << opts.out << "\n";

  if (!opts.svg.empty()) {
    std::ostringstream buf;
    evalrep::cluster_scatter_svg(projected, partition, buf);
    write_text_file(opts.svg, buf.str());
    std::cout << "scatter -> " << opts.svg << "\n";
  }
}

}  // namespace

void register_partition(CLI::App& app) {
  auto opts = std::make_shared<PartitionOptions>();
  CLI::App* cmd = app.add_subcommand(
      "partition", "Normalize features, project with PCA and assign clusters");
  cmd->add_option("--features", opts->features, "Feature CSV")->required();
  cmd->add_option("--k", opts->k, "Number of clusters")->required();
  cmd->add_option("--method", opts->method, "balanced, vanilla or random")
      ->check(CLI::IsMember({"balanced", "vanilla", "random"}));
  cmd->add_option("--seed", opts->seed, "Clustering seed");
  cmd->add_option("--out", opts->out, "Output partition JSON path");
  cmd->add_option("--svg", opts->svg, "Optional scatter SVG path");
  cmd->add_option("--pca-k", opts->pca_k, "Projection dimension (default 2)");
  cmd->callback([opts] { run_partition(*opts); });
}

}  // namespace taskpart::cli
