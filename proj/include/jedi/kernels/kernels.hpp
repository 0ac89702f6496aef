#pragma once

// Data-parallel inner loops. Every kernel has a serial reference in
// kernels::serial and an OpenMP version in kernels::omp that produces
// bit-identical output; the unqualified names dispatch to the OpenMP version.

#include "jedi/types.hpp"

#include <Eigen/SparseCore>

#include <span>
#include <string>
#include <vector>

namespace jedi::kernels {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Best {
  std::size_t index = 0;
  double score = 0.0;
};

namespace serial {

// out[i] = || coef[i] * X.row(i) - target ||^2
void residual_scores(const FeatureMatrix& X, std::span<const double> coef, const Vector& target,
                     std::span<double> out);

// Minimum by (score, id); ids compared lexicographically.
Best argmin(std::span<const double> scores, const std::vector<std::string>& ids);

// Dense Gaussian affinity exp(-sum_d (x_id - x_jd)^2 * inv_sigma_sq_d), zero diagonal.
Matrix affinity(const FeatureMatrix& X, const Vector& inv_sigma_sq);

// Same weights restricted to each node's k nearest neighbours, symmetrised by
// union; zero diagonal.
SparseMatrix knn_affinity(const FeatureMatrix& X, const Vector& inv_sigma_sq, std::size_t k);

}  // namespace serial

namespace omp {

void residual_scores(const FeatureMatrix& X, std::span<const double> coef, const Vector& target,
                     std::span<double> out);
Best argmin(std::span<const double> scores, const std::vector<std::string>& ids);
Matrix affinity(const FeatureMatrix& X, const Vector& inv_sigma_sq);
SparseMatrix knn_affinity(const FeatureMatrix& X, const Vector& inv_sigma_sq, std::size_t k);

}  // namespace omp

using omp::affinity;
using omp::argmin;
using omp::knn_affinity;
using omp::residual_scores;

// Number of OpenMP threads the kernels will use (1 without OpenMP).
int max_threads();

}  // namespace jedi::kernels
