#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace taskpart {

/// Caller-fixable input or argument defects. The CLI maps these to exit 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Environment failures (filesystem and friends). The CLI maps these to exit 1.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what, std::string path = {})
      : std::runtime_error(path.empty() ? what : what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct MalformedRecord : ValidationError {
  MalformedRecord(std::size_t line_no, const std::string& detail)
      : ValidationError("malformed record at line " + std::to_string(line_no) + ": " + detail),
        line(line_no) {}
  std::size_t line;
};

struct EmptyCloud : ValidationError {
  explicit EmptyCloud(const std::string& id)
      : ValidationError("point cloud '" + id + "' has no points") {}
};

struct UnsupportedPlyElement : ValidationError {
  explicit UnsupportedPlyElement(const std::string& detail)
      : ValidationError("unsupported PLY content: " + detail) {}
};

struct InsufficientPoints : ValidationError {
  InsufficientPoints(const std::string& id, std::size_t requested, std::size_t available)
      : ValidationError("cloud '" + id + "': requested " + std::to_string(requested) +
                        " points but only " + std::to_string(available) + " available"),
        cloud_id(id) {}
  std::string cloud_id;
};

struct DimensionMismatch : ValidationError {
  explicit DimensionMismatch(const std::string& detail, std::size_t line_no = 0)
      : ValidationError("dimension mismatch: " + detail), line(line_no) {}
  std::size_t line;  // 0 when the mismatch is not tied to an input line
};

struct DuplicateId : ValidationError {
  explicit DuplicateId(const std::string& dup)
      : ValidationError("duplicate id '" + dup + "'"), id(dup) {}
  std::string id;
};

struct MalformedNumber : ValidationError {
  MalformedNumber(std::size_t line_no, std::size_t column_no, const std::string& token)
      : ValidationError("malformed number '" + token + "' at line " + std::to_string(line_no) +
                        ", column " + std::to_string(column_no)),
        line(line_no),
        column(column_no) {}
  std::size_t line;
  std::size_t column;
};

struct InvalidK : ValidationError {
  using ValidationError::ValidationError;
};

struct InvalidN : ValidationError {
  using ValidationError::ValidationError;
};

struct InvalidConfig : ValidationError {
  using ValidationError::ValidationError;
};

struct InvalidBudget : ValidationError {
  using ValidationError::ValidationError;
};

struct InstanceTooLarge : ValidationError {
  using ValidationError::ValidationError;
};

struct EmptyInput : ValidationError {
  using ValidationError::ValidationError;
};

}  // namespace taskpart
