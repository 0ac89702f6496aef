#include "jedi/harmonic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace jedi {

PendingEvent::PendingEvent(std::size_t step, const Example& example, std::size_t pool_index, double objective_value) {
  event_.step = step;
  event_.example_id = example.id;
  event_.pool_index = pool_index;
  event_.shown_x = example.x;
  event_.objective_value = objective_value;
}

void PendingEvent::commit_learner_label(Label label) {
  if (committed_) throw ContractViolation("learner label already committed for step " + std::to_string(event_.step));
  committed_ = label;
}

TeachingEvent PendingEvent::reveal(Label true_label) && {
  if (!committed_) {
    throw ContractViolation("true label revealed before the learner label for step " + std::to_string(event_.step));
  }
  event_.learner_label = *committed_;
  event_.true_label = true_label;
  return std::move(event_);
}

std::vector<LabeledEvent> dedup_history(std::span<const TeachingEvent> events) {
  std::vector<LabeledEvent> out;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& e : events) {
    auto [it, inserted] = slot.emplace(e.example_id, out.size());
    if (inserted) {
      out.push_back({e.example_id, e.pool_index, e.shown_x, e.learner_label});
    } else {
      out[it->second].learner_label = e.learner_label;
    }
  }
  return out;
}

double AffinityGraph::weight(std::size_t i, std::size_t j) const {
  if (sparse) return A_sparse.coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

Vector default_bandwidths(const TeachingPool& pool, double factor) {
  if (!(factor > 0.0)) throw ContractViolation("bandwidth factor must be positive");
  const FeatureMatrix& X = pool.features();
  Vector sigma(X.cols());
  const double n = static_cast<double>(X.rows());
  // Keeps the mean exponent between two random points near 2 in any dimension.
  const double scale = factor * std::sqrt(static_cast<double>(X.cols()));
  for (Eigen::Index d = 0; d < X.cols(); ++d) {
    const double mean = X.col(d).mean();
    const double ss = (X.col(d).array() - mean).square().sum();
    const double sd = n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    sigma[d] = (sd > 0.0 ? sd : 1.0) * scale;
  }
  return sigma;
}

namespace {

Vector inverse_square(const Vector& sigma) {
  for (Eigen::Index d = 0; d < sigma.size(); ++d) {
    if (!(sigma[d] > 0.0) || !std::isfinite(sigma[d])) {
      throw ContractViolation("bandwidths must be positive and finite");
    }
  }
  return sigma.array().square().inverse().matrix();
}

void fill_labels(AffinityGraph& g, const TeachingPool& pool, std::span<const LabeledEvent> labeled) {
  const std::size_t n = pool.size();
  g.unlabeled = n;
  g.node_ids = pool.ids();
  g.F_l = Matrix::Zero(static_cast<Eigen::Index>(labeled.size()), 2);
  for (std::size_t l = 0; l < labeled.size(); ++l) {
    if (labeled[l].pool_index >= n || pool[labeled[l].pool_index].id != labeled[l].example_id) {
      throw ContractViolation("labeled event '" + labeled[l].example_id + "' does not match the pool");
    }
    g.node_ids.push_back(labeled[l].example_id);
    g.labeled_nodes.push_back(n + l);
    g.clone_of.push_back(labeled[l].pool_index);
    g.F_l(static_cast<Eigen::Index>(l), labeled[l].learner_label == Label::Positive ? 0 : 1) = 1.0;
  }
}

FeatureMatrix node_features(const TeachingPool& pool, std::span<const LabeledEvent> labeled) {
  const Eigen::Index n = static_cast<Eigen::Index>(pool.size());
  FeatureMatrix nodes(n + static_cast<Eigen::Index>(labeled.size()), pool.dimension());
  nodes.topRows(n) = pool.features();
  for (std::size_t l = 0; l < labeled.size(); ++l) {
    require_same_dim(pool.dimension(), labeled[l].x.size(), "build_affinity");
    nodes.row(n + static_cast<Eigen::Index>(l)) = labeled[l].x.transpose();
  }
  return nodes;
}

void validate_labeled(std::span<const LabeledEvent> labeled) {
  if (labeled.empty()) throw ContractViolation("build_affinity: empty history");
}

}  // namespace

AffinityGraph build_affinity(const TeachingPool& pool, std::span<const LabeledEvent> labeled, const Vector& sigma,
                             const GraphOptions& options) {
  validate_labeled(labeled);
  require_same_dim(pool.dimension(), sigma.size(), "build_affinity");
  const Vector inv = inverse_square(sigma);
  AffinityGraph g;
  g.sigma = sigma;
  fill_labels(g, pool, labeled);
  const FeatureMatrix nodes = node_features(pool, labeled);
  if (static_cast<std::size_t>(nodes.rows()) > options.dense_limit) {
    g.sparse = true;
    g.A_sparse = kernels::knn_affinity(nodes, inv, options.knn);
    g.degree = Vector(g.A_sparse * Vector::Ones(nodes.rows()));
  } else {
    g.A = kernels::affinity(nodes, inv);
    g.degree = g.A.rowwise().sum();
  }
  return g;
}

HarmonicEstimate harmonic_solve(const AffinityGraph& graph) {
  if (graph.labeled_nodes.empty()) throw ContractViolation("harmonic_solve: no labeled nodes");
  const Eigen::Index n = static_cast<Eigen::Index>(graph.unlabeled);
  const Eigen::Index L = static_cast<Eigen::Index>(graph.labeled_nodes.size());

  HarmonicEstimate out;
  Matrix B;
  if (!graph.sparse) {
    Matrix M = -graph.A.topLeftCorner(n, n);
    M.diagonal() += graph.degree.head(n);
    B = graph.A.block(0, n, n, L) * graph.F_l;
    Eigen::LLT<Matrix> llt(M);
    if (llt.info() == Eigen::Success) {
      out.F_u = llt.solve(B);
    } else {
      M.diagonal().array() += kHarmonicRidge;
      Eigen::LDLT<Matrix> ldlt(M);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw IllConditionedGraph("harmonic system is singular after regularization");
      }
      out.F_u = ldlt.solve(B);
      out.regularized = true;
    }
  } else {
    using ColSparse = Eigen::SparseMatrix<double>;
    ColSparse full = graph.A_sparse;
    ColSparse M = -ColSparse(full.topLeftCorner(n, n));
    for (Eigen::Index i = 0; i < n; ++i) M.coeffRef(i, i) += graph.degree[i];
    B = Matrix(full.block(0, n, n, L)) * graph.F_l;
    Eigen::SimplicialLLT<ColSparse> llt(M);
    if (llt.info() == Eigen::Success) {
      out.F_u = llt.solve(B);
    } else {
      for (Eigen::Index i = 0; i < n; ++i) M.coeffRef(i, i) += kHarmonicRidge;
      Eigen::SimplicialLDLT<ColSparse> ldlt(M);
      if (ldlt.info() != Eigen::Success) throw IllConditionedGraph("harmonic system is singular after regularization");
      out.F_u = ldlt.solve(B);
      out.regularized = true;
    }
  }
  if (!out.F_u.allFinite()) throw IllConditionedGraph("harmonic solve produced non-finite values");

  out.p.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double pos = std::max(out.F_u(i, 0), 0.0);
    double neg = std::max(out.F_u(i, 1), 0.0);
    const double mass = pos + neg;
    if (mass > 1e-300) {
      pos /= mass;
      neg /= mass;
    } else {
      pos = neg = 0.5;
    }
    out.F_u(i, 0) = pos;
    out.F_u(i, 1) = neg;
    out.p[static_cast<std::size_t>(i)] = pos;
  }
  return out;
}

double clamp_probability(double p) { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); }

double incorrect_prob_from_estimate(double p, Label y) {
  const double q = clamp_probability(p);
  return y == Label::Positive ? 1.0 - q : q;
}

double inv_f_neg_from_estimate(double p, Label y) {
  const double q = clamp_probability(p);
  return y == Label::Positive ? 1.0 / q : 1.0 / (1.0 - q);
}

std::vector<double> estimate_f_history(const HarmonicEstimate& estimate, std::span<const TeachingEvent> history) {
  std::vector<double> f;
  f.reserve(history.size());
  for (const auto& e : history) {
    if (e.pool_index >= estimate.size()) {
      throw ContractViolation("estimate_f_history: no estimate for example '" + e.example_id + "'");
    }
    f.push_back(incorrect_prob_from_estimate(estimate.p[e.pool_index], e.true_label));
  }
  return f;
}

double estimate_inv_f_neg(const HarmonicEstimate& estimate, std::size_t pool_index, Label y) {
  if (pool_index >= estimate.size()) throw ContractViolation("estimate_inv_f_neg: no estimate for example");
  return inv_f_neg_from_estimate(estimate.p[pool_index], y);
}

HarmonicEstimator::HarmonicEstimator(const TeachingPool& pool, Vector sigma, GraphOptions options)
    : pool_(&pool), sigma_(std::move(sigma)), options_(options) {
  require_same_dim(pool.dimension(), sigma_.size(), "HarmonicEstimator");
  const Vector inv = inverse_square(sigma_);
  if (pool.size() < options_.dense_limit) pool_affinity_ = kernels::affinity(pool.features(), inv);
}

AffinityGraph HarmonicEstimator::graph(std::span<const LabeledEvent> labeled) const {
  validate_labeled(labeled);
  const std::size_t n = pool_->size();
  if (n + labeled.size() > options_.dense_limit) return build_affinity(*pool_, labeled, sigma_, options_);

  AffinityGraph g;
  g.sigma = sigma_;
  fill_labels(g, *pool_, labeled);
  const Eigen::Index N = static_cast<Eigen::Index>(g.size());
  const Eigen::Index nn = static_cast<Eigen::Index>(n);
  g.A.resize(N, N);
  g.A.topLeftCorner(nn, nn) = pool_affinity_;
  for (std::size_t l = 0; l < labeled.size(); ++l) {
    const Eigen::Index c = nn + static_cast<Eigen::Index>(l);
    const Eigen::Index src = static_cast<Eigen::Index>(g.clone_of[l]);
    // A clone shares its source's features: exp(0) = 1 to the source, the
    // source's pool affinities elsewhere.
    g.A.col(c).head(nn) = pool_affinity_.col(src);
    g.A(src, c) = 1.0;
    for (std::size_t k = 0; k < labeled.size(); ++k) {
      const Eigen::Index other = static_cast<Eigen::Index>(g.clone_of[k]);
      g.A(nn + static_cast<Eigen::Index>(k), c) = (k == l) ? 0.0 : (other == src ? 1.0 : pool_affinity_(other, src));
    }
    g.A.row(c) = g.A.col(c).transpose();
  }
  g.degree = g.A.rowwise().sum();
  return g;
}

HarmonicEstimate HarmonicEstimator::estimate(std::span<const LabeledEvent> labeled) const {
  return harmonic_solve(graph(labeled));
}

}  // namespace jedi
