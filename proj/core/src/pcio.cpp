#include "taskpart/pcio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "taskpart/errors.hpp"
#include "taskpart/rng.hpp"
#include "taskpart/text.hpp"

namespace taskpart::pcio {

namespace {

std::vector<std::string_view> tokenize_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

Vec3 parse_point_line(std::string_view line, std::size_t line_no, std::size_t min_fields) {
  auto fields = tokenize_ws(line);
  if (fields.size() < 3 || (min_fields == 3 && fields.size() != 3)) {
    throw MalformedRecord(line_no, "expected 3 coordinates, got " + std::to_string(fields.size()));
  }
  Vec3 p;
  double* coords[3] = {&p.x, &p.y, &p.z};
  for (int c = 0; c < 3; ++c) {
    auto value = parse_double(fields[static_cast<std::size_t>(c)]);
    if (!value || !std::isfinite(*value)) {
      throw MalformedRecord(line_no, "non-numeric field '" + std::string(fields[static_cast<std::size_t>(c)]) + "'");
    }
    *coords[c] = *value;
  }
  return p;
}

PointCloud parse_xyz(std::istream& source, std::string id) {
  PointCloud cloud;
  cloud.id = std::move(id);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    std::string_view stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    cloud.points.push_back(parse_point_line(stripped, line_no, 3));
  }
  if (cloud.points.empty()) throw EmptyCloud(cloud.id);
  return cloud;
}

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<std::string> properties;
};

PointCloud parse_ply_ascii(std::istream& source, std::string id) {
  std::string line;
  std::size_t line_no = 0;

  auto next_line = [&](std::string_view context) -> std::string_view {
    if (!std::getline(source, line)) {
      throw MalformedRecord(line_no, "unexpected end of file in " + std::string(context));
    }
    ++line_no;
    return trim(line);
  };

  if (next_line("PLY header") != "ply") throw UnsupportedPlyElement("missing 'ply' magic line");

  std::vector<PlyElement> elements;
  bool format_seen = false;
  for (;;) {
    std::string_view header_line = next_line("PLY header");
    if (header_line == "end_header") break;
    auto fields = tokenize_ws(header_line);
    if (fields.empty() || fields[0] == "comment" || fields[0] == "obj_info") continue;
    if (fields[0] == "format") {
      if (fields.size() < 3 || fields[1] != "ascii" || fields[2] != "1.0") {
        throw UnsupportedPlyElement("only 'format ascii 1.0' is supported");
      }
      format_seen = true;
    } else if (fields[0] == "element") {
      if (fields.size() != 3) throw MalformedRecord(line_no, "bad element declaration");
      auto count = parse_double(fields[2]);
      if (!count || *count < 0 || *count != std::floor(*count)) {
        throw MalformedRecord(line_no, "bad element count");
      }
      elements.push_back({std::string(fields[1]), static_cast<std::size_t>(*count), {}});
    } else if (fields[0] == "property") {
      if (elements.empty() || fields.size() < 2) throw MalformedRecord(line_no, "property outside element");
      elements.back().properties.push_back(std::string(fields.back()));
    } else {
      throw UnsupportedPlyElement("unknown header keyword '" + std::string(fields[0]) + "'");
    }
  }
  if (!format_seen) throw UnsupportedPlyElement("header missing format declaration");

  auto vertex = std::find_if(elements.begin(), elements.end(),
                             [](const PlyElement& e) { return e.name == "vertex"; });
  if (vertex == elements.end()) throw UnsupportedPlyElement("no vertex element declared");
  if (vertex->properties.size() < 3 || vertex->properties[0] != "x" || vertex->properties[1] != "y" ||
      vertex->properties[2] != "z") {
    throw UnsupportedPlyElement("vertex element must carry x, y, z as its first three properties");
  }

  PointCloud cloud;
  cloud.id = std::move(id);
  for (const auto& element : elements) {
    for (std::size_t i = 0; i < element.count; ++i) {
      std::string_view record = next_line("element '" + element.name + "'");
      if (element.name == "vertex") {
        cloud.points.push_back(parse_point_line(record, line_no, 0));
      }
      // Records of other elements (faces, edges, ...) are skipped.
    }
  }
  if (cloud.points.empty()) throw EmptyCloud(cloud.id);
  return cloud;
}

}  // namespace

PointCloud parse_point_cloud(std::istream& source, CloudFormat format, std::string id) {
  switch (format) {
    case CloudFormat::xyz:
      return parse_xyz(source, std::move(id));
    case CloudFormat::ply_ascii:
      return parse_ply_ascii(source, std::move(id));
  }
  throw ValidationError("unknown cloud format");
}

PointCloud sample_points(const PointCloud& cloud, std::size_t n, std::uint64_t seed) {
  if (n > cloud.points.size()) throw InsufficientPoints(cloud.id, n, cloud.points.size());
  std::vector<std::size_t> order(cloud.points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  // Partial Fisher-Yates: the first n slots are a uniform sample without
  // replacement, in draw order.
  Rng rng(seed);
  PointCloud out;
  out.id = cloud.id;
  out.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(order.size() - i));
    std::swap(order[i], order[j]);
    out.points.push_back(cloud.points[order[i]]);
  }
  return out;
}

void write_xyz(const PointCloud& cloud, std::ostream& out) {
  for (const auto& p : cloud.points) {
    out << format_double(p.x) << ' ' << format_double(p.y) << ' ' << format_double(p.z) << '\n';
  }
}

PointCloud load_cloud_file(const std::filesystem::path& path, CloudFormat format, std::string id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open point cloud", path.string());
  return parse_point_cloud(in, format, std::move(id));
}

}  // namespace taskpart::pcio
