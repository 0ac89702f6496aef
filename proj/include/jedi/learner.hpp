#pragma once

#include "jedi/rng.hpp"
#include "jedi/types.hpp"

#include <optional>

namespace jedi {

// Learning-rate rule: constant eta0, or eta_t = c / (c + t) * eta0.
struct EtaSchedule {
  double eta0 = 0.03;
  std::optional<double> decay_c;

  static EtaSchedule constant(double eta0) { return {eta0, std::nullopt}; }
  static EtaSchedule decaying(double eta0, double c) { return {eta0, c}; }

  // Rate for teaching iteration t (1-based).
  double at(std::size_t t) const;
  void validate() const;
};

// Learner with exponentially decayed memory of past gradients.
struct LearnerState {
  Concept w;
  Vector v;
  double beta = 0.0;
  std::size_t step = 0;
  EtaSchedule eta;
  double noise_std = 0.0;
  Rng noise_rng;

  static LearnerState initial(Concept w0, double beta, EtaSchedule eta, double noise_std = 0.0,
                              std::uint64_t noise_seed = 0);
  void validate() const;
};

double logistic_loss(const Concept& w, const Vector& x, Label y);

// Probability that the logistic model w mislabels (x, y): sigmoid(-y <w, x>).
double incorrect_prob(const Concept& w, const Vector& x, Label y);

// d/dw logistic_loss = -y * f * x.
Vector loss_gradient(const Concept& w, const Vector& x, Label y);

// v_t = beta v_{t-1} + grad(w_{t-1}); w_t = w_{t-1} - eta_t v_t; then Gaussian
// concept noise when noise_std > 0.
LearnerState learner_update(LearnerState state, const Vector& x, Label y, double eta_t);

// sign(<w, x>), exact zero broken by a fair coin from `rng`.
Label learner_predict(const LearnerState& state, const Vector& x, Rng& rng);

// Approximate number of examples retained: 1 / (1 - beta).
double memory_window(double beta);

// w0 ~ N(0, I) / sqrt(m).
Concept random_initial_concept(Eigen::Index m, Rng& rng);

// A simulated learner bundles its state with the tie-break stream it answers with.
class SimulatedLearner {
 public:
  SimulatedLearner(LearnerState state, std::uint64_t tie_seed) : state_(std::move(state)), tie_rng_(tie_seed) {}

  Label answer(const Vector& x) { return learner_predict(state_, x, tie_rng_); }
  void learn(const Vector& x, Label y, double eta_t) { state_ = learner_update(std::move(state_), x, y, eta_t); }
  // Learns with the learner's own schedule at iteration step + 1.
  void learn(const Vector& x, Label y) { learn(x, y, state_.eta.at(state_.step + 1)); }

  const LearnerState& state() const { return state_; }

 private:
  LearnerState state_;
  Rng tie_rng_;
};

}  // namespace jedi
