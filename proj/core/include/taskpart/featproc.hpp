#pragma once

#include <string>
#include <vector>

#include "taskpart/featex.hpp"

namespace taskpart::featproc {

struct NormalizeResult {
  featex::FeatureMatrix matrix;
  std::vector<std::string> zero_norm_ids;  // rows returned unchanged
};

/// Divides each row by its Euclidean norm. Zero-norm rows pass through
/// unchanged and are reported in the warnings list.
NormalizeResult l2_normalize(const featex::FeatureMatrix& matrix);

/// Fitted projection: mean, orthonormal component rows sorted by descending
/// eigenvalue, and the covariance eigenvalues (divisor n-1). Sign
/// convention: each component's largest-magnitude entry is positive, ties
/// broken by lowest index.
struct PcaModel {
  std::vector<double> mean;
  std::vector<std::vector<double>> components;  // k x dim
  std::vector<double> eigenvalues;              // k, non-increasing, >= 0
  std::size_t k = 0;
  std::size_t dim = 0;
};

PcaModel pca_fit(const featex::FeatureMatrix& matrix, std::size_t k);

/// Maps each row x to components * (x - mean); output dimension is k.
featex::FeatureMatrix pca_transform(const PcaModel& model, const featex::FeatureMatrix& matrix);

std::string to_json(const PcaModel& model);
PcaModel pca_model_from_json(const std::string& text);

}  // namespace taskpart::featproc
