#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "commands.hpp"
#include "taskpart/errors.hpp"
#include "taskpart/featex.hpp"
#include "taskpart/parallel.hpp"
#include "taskpart/pcio.hpp"
#include "taskpart/rng.hpp"
#include "taskpart/text.hpp"

namespace fs = std::filesystem;

namespace taskpart::cli {

namespace {

struct ExtractOptions {
  std::string input;
  std::string format = "xyz";
  std::size_t sample = 10000;
  bool sample_given = false;
  std::string descriptor = "shape-stats-v1";
  std::string features;
  std::uint64_t seed = 0;
  std::string out = "features.csv";
};

pcio::CloudFormat parse_format(const std::string& name) {
  if (name == "xyz") return pcio::CloudFormat::xyz;
  if (name == "ply") return pcio::CloudFormat::ply_ascii;
  throw ValidationError("unknown cloud format '" + name + "' (expected xyz or ply)");
}

std::vector<fs::path> collect_inputs(const fs::path& input, const std::string& format) {
  if (!fs::exists(input)) throw IoError("input does not exist", input.string());
  if (fs::is_regular_file(input)) return {input};
  const std::string extension = format == "xyz" ? ".xyz" : ".ply";
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(input)) {
    if (entry.is_regular_file() && entry.path().extension() == extension) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw ValidationError("no " + extension + " files found in '" + input.string() + "'");
  }
  return files;
}

void run_extract(const ExtractOptions& opts) {
  if (opts.descriptor == "external") {
    // Pass-through validation of externally computed embeddings.
    std::ifstream in(opts.features, std::ios::binary);
    if (!in) throw IoError("cannot open feature file", opts.features);
    const auto matrix = featex::load_external_features(in);
    std::ostringstream buf;
    featex::write_features_csv(matrix, buf);
    write_text_file(opts.out, buf.str());
    std::cout << "validated " << matrix.size() << " external feature rows (dim " << matrix.dim
              << ") -> " << opts.out << "\n";
    return;
  }
  if (opts.descriptor != "shape-stats-v1") {
    throw ValidationError("unknown descriptor '" + opts.descriptor +
                          "' (expected shape-stats-v1 or external)");
  }

  const auto format = parse_format(opts.format);
  const auto files = collect_inputs(opts.input, opts.format);

  std::vector<featex::FeatureVector> rows(files.size());
  parallel_for_indexed(files.size(), workers_from_env(), [&](std::size_t i) {
    auto cloud = pcio::load_cloud_file(files[i], format, files[i].stem().string());
    // The default sample size targets dense scans; tiny clouds pass through
    // unless the user asked for a specific size.
    if (opts.sample_given || opts.sample < cloud.points.size()) {
      if (opts.sample > 0) {
        cloud = pcio::sample_points(cloud, opts.sample, derive_seed(opts.seed, 0x73616d70ull, i));
      }
    }
    rows[i] = featex::extract_descriptor(cloud, featex::DescriptorSpec{},
                                         derive_seed(opts.seed, 0x64657363ull, i));
  });

  const auto matrix = featex::make_matrix(std::move(rows));
  std::ostringstream buf;
  featex::write_features_csv(matrix, buf);
  write_text_file(opts.out, buf.str());
  std::cout << "extracted " << matrix.size() << " descriptors (dim " << matrix.dim << ") -> "
            << opts.out << "\n";
}

}  // namespace

void register_extract(CLI::App& app) {
  auto opts = std::make_shared<ExtractOptions>();
  CLI::App* cmd = app.add_subcommand(
      "extract", "Compute per-cloud shape descriptors (or validate external embeddings)");
  cmd->add_option("--input", opts->input, "Point cloud file or directory")->required();
  cmd->add_option("--format", opts->format, "Cloud format: xyz or ply")
      ->check(CLI::IsMember({"xyz", "ply"}));
  auto* sample = cmd->add_option("--sample", opts->sample,
                                 "Points to sample per cloud before descriptor extraction "
                                 "(default 10000, 0 disables sampling)");
  cmd->add_option("--descriptor", opts->descriptor, "shape-stats-v1 or external")
      ->check(CLI::IsMember({"shape-stats-v1", "external"}));
  cmd->add_option("--features", opts->features, "Feature CSV to validate when --descriptor external");
  cmd->add_option("--seed", opts->seed, "Sampling seed");
  cmd->add_option("--out", opts->out, "Output feature CSV path");
  cmd->callback([opts, sample] {
    opts->sample_given = sample->count() > 0;
    if (opts->descriptor == "external" && opts->features.empty()) {
      throw ValidationError("--descriptor external requires --features");
    }
    run_extract(*opts);
  });
}

}  // namespace taskpart::cli
