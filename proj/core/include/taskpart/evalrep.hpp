#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "taskpart/cluster.hpp"
#include "taskpart/featex.hpp"

namespace taskpart::gslsim {
struct RunResult;
}

namespace taskpart::evalrep {

/// Success-rate statistics over one evaluation sweep. Quartiles interpolate
/// linearly between order statistics (position 1 + (n-1)q, 1-indexed).
struct EvalStats {
  std::map<std::string, double> per_variation;
  double average = 0.0;
  double median = 0.0;
  double high = 0.0;
  double low = 0.0;
  double upper_quartile = 0.0;
  double lower_quartile = 0.0;
};

EvalStats summarize(const std::map<std::string, double>& rates);

/// below_median(): every id strictly below the median rate.
/// worst_n(n): the n lowest-rate ids, rate ties broken by id.
struct SelectionRule {
  std::optional<std::size_t> n;
  static SelectionRule below_median() { return {}; }
  static SelectionRule worst_n(std::size_t n) { return {n}; }
};

/// Returns the selected ids sorted by ascending rate, then id.
std::vector<std::string> select_low_performers(const std::map<std::string, double>& rates,
                                               const SelectionRule& rule);

struct ComparisonRow {
  std::string label;
  std::optional<std::size_t> n_specialists;
  EvalStats stats;
};

struct TableDocument {
  std::string markdown;  // percentages with one decimal place
  std::string csv;       // full-precision decimals, columns agent,n_specialists,average
};

TableDocument comparison_table(const std::vector<ComparisonRow>& rows);

/// Standalone SVG scatter of 2-D features colored by cluster (800x600
/// viewport, 5% margins, fixed 8-color palette, legend with cluster sizes).
void cluster_scatter_svg(const featex::FeatureMatrix& features2d,
                         const cluster::Partition& partition, std::ostream& out);

struct Manifest {
  std::map<std::string, std::string> digests;  // file name -> fnv1a64 hex
};

/// Writes the full run directory (config.json, features.csv, pca_model.json,
/// partition.json, phase1_rates.csv, specialist_rates.csv, final_rates.csv,
/// report.md, scatter.svg, manifest.json) and returns the manifest.
Manifest persist_run(const gslsim::RunResult& result, const std::filesystem::path& dir);

Manifest load_manifest(const std::filesystem::path& dir);

/// Re-digests every manifest entry; returns the names of mismatched or
/// missing files (empty when the directory is intact).
std::vector<std::string> verify_manifest(const std::filesystem::path& dir);

std::map<std::string, double> rates_from_csv(const std::string& text);
std::string rates_to_csv(const std::map<std::string, double>& rates);

std::uint64_t fnv1a64(std::string_view bytes);
std::string digest_hex(std::string_view bytes);

}  // namespace taskpart::evalrep
