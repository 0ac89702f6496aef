#pragma once

#include "jedi/types.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace jedi::kernels::detail {

// Shared row bodies so the serial and OpenMP kernels agree bit for bit.

inline double residual_row(const FeatureMatrix& X, Eigen::Index i, double c, const Vector& target) {
  const double* row = X.data() + i * X.cols();
  double acc = 0.0;
  for (Eigen::Index d = 0; d < X.cols(); ++d) {
    const double r = c * row[d] - target[d];
    acc += r * r;
  }
  return acc;
}

inline double scaled_distance_sq(const FeatureMatrix& X, Eigen::Index i, Eigen::Index j, const Vector& inv_sigma_sq) {
  const double* a = X.data() + i * X.cols();
  const double* b = X.data() + j * X.cols();
  double acc = 0.0;
  for (Eigen::Index d = 0; d < X.cols(); ++d) {
    const double diff = a[d] - b[d];
    acc += diff * diff * inv_sigma_sq[d];
  }
  return acc;
}

inline double gaussian_weight(const FeatureMatrix& X, Eigen::Index i, Eigen::Index j, const Vector& inv_sigma_sq) {
  return std::exp(-scaled_distance_sq(X, i, j, inv_sigma_sq));
}

inline bool better(double score, std::size_t index, double best_score, std::size_t best_index,
                   const std::vector<std::string>& ids) {
  if (score < best_score) return true;
  if (score > best_score) return false;
  return ids[index] < ids[best_index];
}

}  // namespace jedi::kernels::detail
