#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace taskpart::pcio {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

/// Raw 3D point set for one environment variation. Point order is the file
/// order; ids must be unique within any collection fed downstream.
struct PointCloud {
  std::string id;
  std::vector<Vec3> points;
};

enum class CloudFormat { xyz, ply_ascii };

/// Parses a point cloud from text. xyz: one point per line, three
/// whitespace-separated reals; blank lines and '#' comments are ignored.
/// ply_ascii: standard ASCII PLY header with a vertex element whose first
/// three properties are x, y, z; non-vertex elements are skipped.
PointCloud parse_point_cloud(std::istream& source, CloudFormat format, std::string id);

/// Draws exactly n points uniformly without replacement. Deterministic for a
/// fixed (cloud, n, seed); preserves the cloud id. Throws InsufficientPoints
/// when n exceeds the cloud size.
PointCloud sample_points(const PointCloud& cloud, std::size_t n, std::uint64_t seed);

/// Writes xyz text with enough digits for an exact parse round-trip.
void write_xyz(const PointCloud& cloud, std::ostream& out);

PointCloud load_cloud_file(const std::filesystem::path& path, CloudFormat format, std::string id);

}  // namespace taskpart::pcio
