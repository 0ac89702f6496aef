#include "detail.hpp"
#include "jedi/kernels/kernels.hpp"

#include <algorithm>
#include <numeric>
#include <utility>

namespace jedi::kernels {

namespace {

void check_bandwidth(const FeatureMatrix& X, const Vector& inv_sigma_sq) {
  require_same_dim(X.cols(), inv_sigma_sq.size(), "affinity");
  for (Eigen::Index d = 0; d < inv_sigma_sq.size(); ++d) {
    if (!(inv_sigma_sq[d] > 0.0) || !std::isfinite(inv_sigma_sq[d])) {
      throw ContractViolation("affinity: bandwidths must be positive and finite");
    }
  }
}

// k nearest neighbours of node i (excluding i) by scaled distance, ties by index.
std::vector<Eigen::Index> nearest(const FeatureMatrix& X, Eigen::Index i, const Vector& inv_sigma_sq, std::size_t k) {
  const Eigen::Index n = X.rows();
  std::vector<std::pair<double, Eigen::Index>> d;
  d.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j != i) d.emplace_back(detail::scaled_distance_sq(X, i, j, inv_sigma_sq), j);
  }
  const std::size_t keep = std::min(k, d.size());
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(keep), d.end());
  std::vector<Eigen::Index> out(keep);
  for (std::size_t r = 0; r < keep; ++r) out[r] = d[r].second;
  return out;
}

SparseMatrix assemble_knn(const FeatureMatrix& X, const Vector& inv_sigma_sq,
                          const std::vector<std::vector<Eigen::Index>>& neighbours) {
  const Eigen::Index n = X.rows();
  std::vector<Eigen::Triplet<double>> triplets;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j : neighbours[static_cast<std::size_t>(i)]) {
      const double a = detail::gaussian_weight(X, i, j, inv_sigma_sq);
      triplets.emplace_back(i, j, a);
      triplets.emplace_back(j, i, a);
    }
  }
  SparseMatrix A(n, n);
  // Duplicates from mutual neighbours carry the same weight; keep one.
  A.setFromTriplets(triplets.begin(), triplets.end(), [](double a, double) { return a; });
  return A;
}

}  // namespace

namespace serial {

Matrix affinity(const FeatureMatrix& X, const Vector& inv_sigma_sq) {
  check_bandwidth(X, inv_sigma_sq);
  const Eigen::Index n = X.rows();
  Matrix A = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double a = detail::gaussian_weight(X, i, j, inv_sigma_sq);
      A(i, j) = a;
      A(j, i) = a;
    }
  }
  return A;
}

SparseMatrix knn_affinity(const FeatureMatrix& X, const Vector& inv_sigma_sq, std::size_t k) {
  check_bandwidth(X, inv_sigma_sq);
  std::vector<std::vector<Eigen::Index>> neighbours(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) neighbours[static_cast<std::size_t>(i)] = nearest(X, i, inv_sigma_sq, k);
  return assemble_knn(X, inv_sigma_sq, neighbours);
}

}  // namespace serial

namespace omp {

Matrix affinity(const FeatureMatrix& X, const Vector& inv_sigma_sq) {
  check_bandwidth(X, inv_sigma_sq);
  const Eigen::Index n = X.rows();
  Matrix A = Matrix::Zero(n, n);
  // Column j owns the strictly-lower entries of column j and mirrors them.
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double a = detail::gaussian_weight(X, i, j, inv_sigma_sq);
      A(i, j) = a;
      A(j, i) = a;
    }
  }
  return A;
}

SparseMatrix knn_affinity(const FeatureMatrix& X, const Vector& inv_sigma_sq, std::size_t k) {
  check_bandwidth(X, inv_sigma_sq);
  const Eigen::Index n = X.rows();
  std::vector<std::vector<Eigen::Index>> neighbours(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index i = 0; i < n; ++i) neighbours[static_cast<std::size_t>(i)] = nearest(X, i, inv_sigma_sq, k);
  return assemble_knn(X, inv_sigma_sq, neighbours);
}

}  // namespace omp

}  // namespace jedi::kernels
