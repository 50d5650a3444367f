#include "taskpart/featex.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "taskpart/errors.hpp"
#include "taskpart/rng.hpp"
#include "taskpart/text.hpp"

namespace taskpart::featex {

std::vector<std::string> FeatureMatrix::ids() const {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.id);
  return out;
}

FeatureMatrix make_matrix(std::vector<FeatureVector> rows) {
  FeatureMatrix m;
  m.rows = std::move(rows);
  if (!m.rows.empty()) m.dim = m.rows.front().values.size();
  std::set<std::string> seen;
  for (const auto& r : m.rows) {
    if (r.values.size() != m.dim) {
      throw DimensionMismatch("row '" + r.id + "' has " + std::to_string(r.values.size()) +
                              " values, expected " + std::to_string(m.dim));
    }
    if (!seen.insert(r.id).second) throw DuplicateId(r.id);
  }
  return m;
}

namespace {

using pcio::Vec3;

bool lex_less(const Vec3& a, const Vec3& b) {
  if (a.x != b.x) return a.x < b.x;
  if (a.y != b.y) return a.y < b.y;
  return a.z < b.z;
}

// Center at the centroid and divide by the max absolute coordinate. Keeps
// the descriptor exactly invariant under power-of-two rescaling and
// numerically invariant under any uniform scaling.
std::vector<Vec3> canonicalize(const pcio::PointCloud& cloud) {
  std::vector<Vec3> pts = cloud.points;
  std::sort(pts.begin(), pts.end(), lex_less);

  Vec3 mean;
  for (const auto& p : pts) {
    mean.x += p.x;
    mean.y += p.y;
    mean.z += p.z;
  }
  const double n = static_cast<double>(pts.size());
  mean.x /= n;
  mean.y /= n;
  mean.z /= n;

  double scale = 0.0;
  for (auto& p : pts) {
    p.x -= mean.x;
    p.y -= mean.y;
    p.z -= mean.z;
    scale = std::max({scale, std::abs(p.x), std::abs(p.y), std::abs(p.z)});
  }
  if (scale > 0.0) {
    for (auto& p : pts) {
      p.x /= scale;
      p.y /= scale;
      p.z /= scale;
    }
  }
  return pts;
}

void normalize_to_unit_sum(std::vector<double>& block) {
  double total = 0.0;
  for (double v : block) total += v;
  if (total > 0.0) {
    for (double& v : block) v /= total;
  }
}

}  // namespace

FeatureVector extract_descriptor(const pcio::PointCloud& cloud, const DescriptorSpec& spec,
                                 std::uint64_t seed) {
  if (cloud.points.empty()) throw EmptyCloud(cloud.id);

  // All points coinciding is the documented degenerate case; detect it on
  // the raw coordinates, where equality is exact.
  bool degenerate = std::all_of(cloud.points.begin(), cloud.points.end(),
                                [&](const Vec3& p) { return p == cloud.points.front(); });

  const std::vector<Vec3> pts = canonicalize(cloud);
  const std::size_t n = pts.size();

  FeatureVector out;
  out.id = cloud.id;
  out.values.reserve(spec.dimension());

  // (a) eigenvalues of the centered second-moment matrix, descending,
  // normalized to sum 1.
  Eigen::Matrix3d moment = Eigen::Matrix3d::Zero();
  for (const auto& p : pts) {
    Eigen::Vector3d v(p.x, p.y, p.z);
    moment += v * v.transpose();
  }
  moment /= static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(moment);
  Eigen::Vector3d eigenvalues = solver.eigenvalues();   // ascending
  Eigen::Matrix3d eigenvectors = solver.eigenvectors();

  std::vector<double> eig_block(3, 0.0);
  if (!degenerate) {
    for (int i = 0; i < 3; ++i) eig_block[static_cast<std::size_t>(i)] = std::max(0.0, eigenvalues(2 - i));
    normalize_to_unit_sum(eig_block);
  }
  out.values.insert(out.values.end(), eig_block.begin(), eig_block.end());

  // (b) D2 histogram over seeded random point pairs, distances normalized by
  // the max distance among the sampled pairs.
  std::vector<double> d2(spec.histogram_bins, 0.0);
  if (degenerate || n == 1) {
    d2[0] = 1.0;
  } else {
    Rng rng(seed);
    std::vector<double> dists;
    dists.reserve(spec.pair_samples);
    double max_dist = 0.0;
    for (std::size_t s = 0; s < spec.pair_samples; ++s) {
      std::size_t i = static_cast<std::size_t>(rng.below(n));
      std::size_t j = static_cast<std::size_t>(rng.below(n - 1));
      if (j >= i) ++j;
      const double dx = pts[i].x - pts[j].x;
      const double dy = pts[i].y - pts[j].y;
      const double dz = pts[i].z - pts[j].z;
      const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
      dists.push_back(d);
      max_dist = std::max(max_dist, d);
    }
    if (max_dist == 0.0) {
      d2[0] = 1.0;  // sampled pairs all coincide
    } else {
      for (double d : dists) {
        auto bin = static_cast<std::size_t>(d / max_dist * static_cast<double>(spec.histogram_bins));
        d2[std::min(bin, spec.histogram_bins - 1)] += 1.0;
      }
      normalize_to_unit_sum(d2);
    }
  }
  out.values.insert(out.values.end(), d2.begin(), d2.end());

  // (c) per-principal-axis projection histograms over each axis's min-max
  // range. Axis order follows the eigenvalue block (descending variance).
  for (int axis = 0; axis < 3; ++axis) {
    std::vector<double> hist(spec.axis_bins, 0.0);
    if (degenerate) {
      hist[0] = 1.0;
      out.values.insert(out.values.end(), hist.begin(), hist.end());
      continue;
    }
    Eigen::Vector3d dir = eigenvectors.col(2 - axis);
    // Sign convention: largest-magnitude entry positive, ties to lowest index.
    int pivot = 0;
    for (int i = 1; i < 3; ++i) {
      if (std::abs(dir(i)) > std::abs(dir(pivot))) pivot = i;
    }
    if (dir(pivot) < 0.0) dir = -dir;

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    std::vector<double> proj;
    proj.reserve(n);
    for (const auto& p : pts) {
      const double t = dir(0) * p.x + dir(1) * p.y + dir(2) * p.z;
      proj.push_back(t);
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
    if (hi == lo) {
      hist[0] = 1.0;
    } else {
      for (double t : proj) {
        auto bin = static_cast<std::size_t>((t - lo) / (hi - lo) * static_cast<double>(spec.axis_bins));
        hist[std::min(bin, spec.axis_bins - 1)] += 1.0;
      }
      normalize_to_unit_sum(hist);
    }
    out.values.insert(out.values.end(), hist.begin(), hist.end());
  }

  return out;
}

FeatureMatrix load_external_features(std::istream& source, FeatureFormat format) {
  (void)format;  // csv is the only format
  std::string line;
  if (!std::getline(source, line)) throw EmptyInput("feature CSV is empty");
  auto header = split(trim(line), ',');
  if (header.size() < 2 || trim(header[0]) != "id") {
    throw ValidationError("feature CSV header must be 'id,f0,...'");
  }
  const std::size_t dim = header.size() - 1;

  std::vector<FeatureVector> rows;
  std::set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(source, line)) {
    ++line_no;
    std::string_view stripped = trim(line);
    if (stripped.empty()) continue;
    auto fields = split(stripped, ',');
    if (fields.size() != dim + 1) {
      throw DimensionMismatch("line " + std::to_string(line_no) + " has " +
                                  std::to_string(fields.size() - 1) + " values, header declares " +
                                  std::to_string(dim),
                              line_no);
    }
    FeatureVector row;
    row.id = std::string(trim(fields[0]));
    if (!seen.insert(row.id).second) throw DuplicateId(row.id);
    row.values.reserve(dim);
    for (std::size_t c = 1; c < fields.size(); ++c) {
      auto value = parse_double(trim(fields[c]));
      if (!value || !std::isfinite(*value)) {
        throw MalformedNumber(line_no, c + 1, std::string(trim(fields[c])));
      }
      row.values.push_back(*value);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw EmptyInput("feature CSV has a header but no rows");

  FeatureMatrix out;
  out.rows = std::move(rows);
  out.dim = dim;
  return out;
}

void write_features_csv(const FeatureMatrix& matrix, std::ostream& out) {
  out << "id";
  for (std::size_t i = 0; i < matrix.dim; ++i) out << ",f" << i;
  out << '\n';
  for (const auto& row : matrix.rows) {
    out << row.id;
    for (double v : row.values) out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace taskpart::featex
