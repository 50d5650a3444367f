#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "taskpart/pcio.hpp"

namespace taskpart::featex {

struct FeatureVector {
  std::string id;
  std::vector<double> values;
};

/// Per-variation feature vectors with a shared dimension and unique ids.
struct FeatureMatrix {
  std::vector<FeatureVector> rows;
  std::size_t dim = 0;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
  std::vector<std::string> ids() const;
};

/// Validates equal row dimensions and id uniqueness.
FeatureMatrix make_matrix(std::vector<FeatureVector> rows);

/// Parameters of the built-in "shape-stats-v1" descriptor. Output dimension
/// is 3 + histogram_bins + 3 * axis_bins (59 with defaults).
struct DescriptorSpec {
  std::size_t pair_samples = 2048;
  std::size_t histogram_bins = 32;
  std::size_t axis_bins = 8;
  std::size_t dimension() const { return 3 + histogram_bins + 3 * axis_bins; }
};

/// Classical shape descriptor: normalized second-moment eigenvalues, a D2
/// pairwise-distance histogram, and per-principal-axis projection
/// histograms. Scale- and translation-invariant; exactly permutation
/// invariant (points are canonically sorted before pair sampling).
FeatureVector extract_descriptor(const pcio::PointCloud& cloud, const DescriptorSpec& spec,
                                 std::uint64_t seed);

enum class FeatureFormat { csv };

/// Reads a feature CSV with header `id,f0,...,f{d-1}`.
FeatureMatrix load_external_features(std::istream& source,
                                     FeatureFormat format = FeatureFormat::csv);

/// Writes the matching CSV; values round-trip exactly.
void write_features_csv(const FeatureMatrix& matrix, std::ostream& out);

}  // namespace taskpart::featex
