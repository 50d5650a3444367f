#include "taskpart/featproc.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "taskpart/errors.hpp"

namespace taskpart::featproc {

namespace {

void apply_sign_convention(std::vector<double>& component) {
  std::size_t pivot = 0;
  for (std::size_t i = 1; i < component.size(); ++i) {
    if (std::abs(component[i]) > std::abs(component[pivot])) pivot = i;
  }
  if (component[pivot] < 0.0) {
    for (double& v : component) v = -v;
  }
}

}  // namespace

NormalizeResult l2_normalize(const featex::FeatureMatrix& matrix) {
  NormalizeResult result;
  result.matrix = matrix;
  for (auto& row : result.matrix.rows) {
    double sq = 0.0;
    for (double v : row.values) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm == 0.0) {
      result.zero_norm_ids.push_back(row.id);
      continue;
    }
    for (double& v : row.values) v /= norm;
  }
  return result;
}

PcaModel pca_fit(const featex::FeatureMatrix& matrix, std::size_t k) {
  const std::size_t n = matrix.size();
  const std::size_t dim = matrix.dim;
  if (n < 2) throw ValidationError("pca_fit needs at least 2 rows, got " + std::to_string(n));
  if (k == 0 || k > std::min(n, dim)) {
    throw InvalidK("k=" + std::to_string(k) + " must be in [1, min(n=" + std::to_string(n) +
                   ", dim=" + std::to_string(dim) + ")]");
  }

  Eigen::MatrixXd data(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = matrix.rows[r].values[c];
    }
  }

  Eigen::RowVectorXd mean = data.colwise().mean();
  Eigen::MatrixXd centered = data.rowwise() - mean;
  Eigen::MatrixXd covariance =
      (centered.transpose() * centered) / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance);
  if (solver.info() != Eigen::Success) {
    throw ValidationError("eigendecomposition failed to converge");
  }

  PcaModel model;
  model.k = k;
  model.dim = dim;
  model.mean.assign(mean.data(), mean.data() + dim);
  model.components.reserve(k);
  model.eigenvalues.reserve(k);
  // Eigen returns ascending eigenvalues; take the top k from the back.
  for (std::size_t i = 0; i < k; ++i) {
    const auto col = static_cast<Eigen::Index>(dim - 1 - i);
    double value = solver.eigenvalues()(col);
    if (value < -1e-12) {
      throw ValidationError("covariance produced eigenvalue " + std::to_string(value));
    }
    model.eigenvalues.push_back(std::max(0.0, value));
    std::vector<double> component(dim);
    for (std::size_t c = 0; c < dim; ++c) {
      component[c] = solver.eigenvectors()(static_cast<Eigen::Index>(c), col);
    }
    apply_sign_convention(component);
    model.components.push_back(std::move(component));
  }
  return model;
}

featex::FeatureMatrix pca_transform(const PcaModel& model, const featex::FeatureMatrix& matrix) {
  if (matrix.dim != model.dim) {
    throw DimensionMismatch("matrix dim " + std::to_string(matrix.dim) + " vs model dim " +
                            std::to_string(model.dim));
  }
  featex::FeatureMatrix out;
  out.dim = model.k;
  out.rows.reserve(matrix.size());
  for (const auto& row : matrix.rows) {
    featex::FeatureVector projected;
    projected.id = row.id;
    projected.values.reserve(model.k);
    for (std::size_t c = 0; c < model.k; ++c) {
      double dot = 0.0;
      for (std::size_t d = 0; d < model.dim; ++d) {
        dot += model.components[c][d] * (row.values[d] - model.mean[d]);
      }
      projected.values.push_back(dot);
    }
    out.rows.push_back(std::move(projected));
  }
  return out;
}

std::string to_json(const PcaModel& model) {
  nlohmann::json doc;
  doc["mean"] = model.mean;
  doc["components"] = model.components;
  doc["eigenvalues"] = model.eigenvalues;
  doc["k"] = model.k;
  doc["dim"] = model.dim;
  return doc.dump(2) + "\n";
}

PcaModel pca_model_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
    PcaModel model;
    model.mean = doc.at("mean").get<std::vector<double>>();
    model.components = doc.at("components").get<std::vector<std::vector<double>>>();
    model.eigenvalues = doc.at("eigenvalues").get<std::vector<double>>();
    model.k = doc.at("k").get<std::size_t>();
    model.dim = doc.at("dim").get<std::size_t>();
    if (model.components.size() != model.k || model.mean.size() != model.dim) {
      throw ValidationError("PCA model fields are inconsistent");
    }
    for (const auto& c : model.components) {
      if (c.size() != model.dim) throw ValidationError("PCA component has wrong dimension");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad PCA model JSON: ") + e.what());
  }
}

}  // namespace taskpart::featproc
