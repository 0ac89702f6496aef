#include "detail.hpp"
#include "jedi/kernels/kernels.hpp"

#include <omp.h>

#include <cmath>
#include <limits>

namespace jedi::kernels {

namespace {

void check_sizes(const FeatureMatrix& X, std::span<const double> coef, const Vector& target, std::span<double> out) {
  if (coef.size() != static_cast<std::size_t>(X.rows()) || out.size() != coef.size()) {
    throw ContractViolation("residual_scores: size mismatch");
  }
  require_same_dim(X.cols(), target.size(), "residual_scores");
}

void check_argmin(std::span<const double> scores, const std::vector<std::string>& ids) {
  if (scores.empty()) throw ContractViolation("argmin: empty candidate set");
  if (scores.size() != ids.size()) throw ContractViolation("argmin: scores and ids differ in length");
  for (double s : scores) {
    if (std::isnan(s)) throw ContractViolation("argmin: NaN score");
  }
}

}  // namespace

int max_threads() { return omp_get_max_threads(); }

namespace serial {

void residual_scores(const FeatureMatrix& X, std::span<const double> coef, const Vector& target,
                     std::span<double> out) {
  check_sizes(X, coef, target, out);
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = detail::residual_row(X, i, coef[i], target);
}

Best argmin(std::span<const double> scores, const std::vector<std::string>& ids) {
  check_argmin(scores, ids);
  Best best{0, scores[0]};
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (detail::better(scores[i], i, best.score, best.index, ids)) best = {i, scores[i]};
  }
  return best;
}

}  // namespace serial

namespace omp {

void residual_scores(const FeatureMatrix& X, std::span<const double> coef, const Vector& target,
                     std::span<double> out) {
  check_sizes(X, coef, target, out);
  const Eigen::Index n = X.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) out[i] = detail::residual_row(X, i, coef[i], target);
}

Best argmin(std::span<const double> scores, const std::vector<std::string>& ids) {
  check_argmin(scores, ids);
  const std::size_t n = scores.size();
  Best best{0, scores[0]};
#pragma omp parallel
  {
    Best local{n, std::numeric_limits<double>::infinity()};
#pragma omp for schedule(static) nowait
    for (std::size_t i = 0; i < n; ++i) {
      if (local.index == n || detail::better(scores[i], i, local.score, local.index, ids)) local = {i, scores[i]};
    }
#pragma omp critical(jedi_argmin)
    {
      if (local.index != n && detail::better(local.score, local.index, best.score, best.index, ids)) best = local;
    }
  }
  return best;
}

}  // namespace omp

}  // namespace jedi::kernels
