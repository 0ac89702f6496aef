#pragma once

// Shared helpers for the test binaries: seeded random instances and small
// independent reference implementations.

#include "jedi/harmonic.hpp"
#include "jedi/types.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace jedi::test {

inline Vector random_vector(std::mt19937_64& rng, Eigen::Index m, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Vector v(m);
  for (Eigen::Index i = 0; i < m; ++i) v[i] = n(rng);
  return v;
}

inline Label random_label(std::mt19937_64& rng) { return (rng() & 1u) ? Label::Positive : Label::Negative; }

// Pool with both labels guaranteed: example i gets label (i even ? +1 : -1).
inline TeachingPool random_pool(std::mt19937_64& rng, std::size_t n, Eigen::Index m, double scale = 1.0) {
  std::vector<Example> ex;
  for (std::size_t i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "c%04zu", i);
    ex.push_back({id, random_vector(rng, m, scale), i % 2 == 0 ? Label::Positive : Label::Negative, ""});
  }
  return TeachingPool(std::move(ex));
}

// Plain sigmoid, written independently of the library's stable form.
inline double naive_sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

// Graph over `unlabeled` free nodes followed by labeled nodes with the given
// one-hot rows, from a symmetric affinity matrix with zero diagonal.
inline AffinityGraph graph_from_matrix(const Matrix& A, std::size_t unlabeled, const Matrix& F_l) {
  AffinityGraph g;
  g.unlabeled = unlabeled;
  g.A = A;
  g.degree = A.rowwise().sum();
  g.F_l = F_l;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    g.node_ids.push_back("n" + std::to_string(i));
    if (static_cast<std::size_t>(i) >= unlabeled) {
      g.labeled_nodes.push_back(static_cast<std::size_t>(i));
      g.clone_of.push_back(0);
    }
  }
  return g;
}

// Connected graph on n nodes: a random spanning tree plus random extra edges,
// weights in [0.1, 1]. The last `labeled` nodes carry random one-hot labels,
// with both classes present when labeled >= 2.
inline AffinityGraph random_connected_graph(std::mt19937_64& rng, std::size_t n, std::size_t labeled) {
  std::uniform_real_distribution<double> w(0.1, 1.0), coin(0.0, 1.0);
  const auto N = static_cast<Eigen::Index>(n);
  Matrix A = Matrix::Zero(N, N);
  for (Eigen::Index i = 1; i < N; ++i) {
    const auto j = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(i));
    A(i, j) = A(j, i) = w(rng);
  }
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = i + 1; j < N; ++j)
      if (A(i, j) == 0.0 && coin(rng) < 0.3) A(i, j) = A(j, i) = w(rng);
  Matrix F = Matrix::Zero(static_cast<Eigen::Index>(labeled), 2);
  for (Eigen::Index l = 0; l < F.rows(); ++l) {
    const bool pos = l == 0 ? true : l == 1 ? false : (rng() & 1u) != 0;
    F(l, pos ? 0 : 1) = 1.0;
  }
  return graph_from_matrix(A, n - labeled, F);
}

// Jacobi label propagation F_u <- D_uu^{-1} (A_uu F_u + A_ul F_l), run until
// the update stops changing or `max_steps` is reached.
inline Matrix propagate_labels(const AffinityGraph& g, int max_steps = 1000000) {
  const auto n = static_cast<Eigen::Index>(g.unlabeled);
  const auto L = static_cast<Eigen::Index>(g.labeled_nodes.size());
  const Matrix Auu = g.A.topLeftCorner(n, n);
  const Matrix B = g.A.block(0, n, n, L) * g.F_l;
  Matrix F = Matrix::Constant(n, 2, 0.5);
  for (int step = 0; step < max_steps; ++step) {
    Matrix next = Auu * F + B;
    for (Eigen::Index i = 0; i < n; ++i) next.row(i) /= g.degree[i];
    const double change = (next - F).cwiseAbs().maxCoeff();
    F = std::move(next);
    if (change < 1e-15) break;
  }
  return F;
}

}  // namespace jedi::test
