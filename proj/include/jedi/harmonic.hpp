#pragma once

#include "jedi/event.hpp"
#include "jedi/kernels/kernels.hpp"
#include "jedi/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace jedi {

// A deduplicated teaching event: the latest learner label for one example.
struct LabeledEvent {
  std::string example_id;
  std::size_t pool_index = 0;
  Vector x;
  Label learner_label = Label::Positive;
};

// One entry per distinct example id (in order of first appearance) carrying
// the most recent learner label.
std::vector<LabeledEvent> dedup_history(std::span<const TeachingEvent> events);

struct GraphOptions {
  std::size_t dense_limit = 2000;  // node count above which the graph is k-NN sparsified
  std::size_t knn = 20;
};

// Gaussian-field graph. Nodes 0..n-1 are the pool examples (all unlabeled, so
// every example stays recommendable); nodes n..n+L-1 are labeled clones of the
// deduplicated teaching events. Self-affinity is zero.
struct AffinityGraph {
  std::size_t unlabeled = 0;
  std::vector<std::string> node_ids;
  std::vector<std::size_t> labeled_nodes;
  std::vector<std::size_t> clone_of;  // pool index of each labeled node
  bool sparse = false;
  Matrix A;                        // dense storage
  kernels::SparseMatrix A_sparse;  // sparse storage
  Vector degree;
  Vector sigma;
  Matrix F_l;  // L x 2 one-hot rows, column 0 = label +1, column 1 = label -1

  std::size_t size() const { return node_ids.size(); }
  double weight(std::size_t i, std::size_t j) const;
};

// Per-dimension sample standard deviation over the pool times factor * sqrt(m);
// constant dimensions use a standard deviation of 1.
Vector default_bandwidths(const TeachingPool& pool, double factor = 1.0);

AffinityGraph build_affinity(const TeachingPool& pool, std::span<const LabeledEvent> labeled, const Vector& sigma,
                             const GraphOptions& options = {});

struct HarmonicEstimate {
  Matrix F_u;              // n x 2 row-stochastic
  std::vector<double> p;   // P(y = +1 | x) per pool index
  bool regularized = false;

  std::size_t size() const { return p.size(); }
};

// Thrown when the harmonic system stays singular after regularization.
class IllConditionedGraph : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kHarmonicRidge = 1e-9;
inline constexpr double kProbabilityClamp = 1e-6;

// F_u = (D_uu - A_uu)^{-1} A_ul F_l. Solved unregularized when the Cholesky
// factorization succeeds, otherwise with kHarmonicRidge on the diagonal. Rows
// are renormalized; rows with no mass (unreachable from any label) become (1/2, 1/2).
HarmonicEstimate harmonic_solve(const AffinityGraph& graph);

double clamp_probability(double p);

// f = (1 - p)^{(y+1)/2} p^{(1-y)/2}, with p clamped.
double incorrect_prob_from_estimate(double p, Label y);
// 1/f_{-} = (1/p)^{(y+1)/2} (1/(1-p))^{(1-y)/2}, with p clamped.
double inv_f_neg_from_estimate(double p, Label y);

// f_s for each event, combining the estimate at the event's example with its true label.
std::vector<double> estimate_f_history(const HarmonicEstimate& estimate, std::span<const TeachingEvent> history);
double estimate_inv_f_neg(const HarmonicEstimate& estimate, std::size_t pool_index, Label y);

// Caches the pool-pool affinity block so per-iteration graphs only add the
// labeled clones. Produces the same graph as build_affinity, bit for bit.
class HarmonicEstimator {
 public:
  HarmonicEstimator(const TeachingPool& pool, Vector sigma, GraphOptions options = {});

  AffinityGraph graph(std::span<const LabeledEvent> labeled) const;
  HarmonicEstimate estimate(std::span<const LabeledEvent> labeled) const;

  const Vector& sigma() const { return sigma_; }
  const TeachingPool& pool() const { return *pool_; }

 private:
  const TeachingPool* pool_;
  Vector sigma_;
  GraphOptions options_;
  Matrix pool_affinity_;
};

}  // namespace jedi
