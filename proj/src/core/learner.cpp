#include "jedi/learner.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace jedi {

double EtaSchedule::at(std::size_t t) const {
  if (!decay_c) return eta0;
  return *decay_c / (*decay_c + static_cast<double>(t)) * eta0;
}

void EtaSchedule::validate() const {
  if (!(eta0 > 0.0) || !std::isfinite(eta0)) throw ContractViolation("eta0 must be positive");
  if (decay_c && !(*decay_c > 0.0)) throw ContractViolation("eta decay constant must be positive");
}

LearnerState LearnerState::initial(Concept w0, double beta, EtaSchedule eta, double noise_std,
                                   std::uint64_t noise_seed) {
  LearnerState s;
  s.v = Vector::Zero(w0.dim());
  s.w = std::move(w0);
  s.beta = beta;
  s.eta = eta;
  s.noise_std = noise_std;
  s.noise_rng = Rng(noise_seed);
  s.validate();
  return s;
}

void LearnerState::validate() const {
  if (!(beta >= 0.0 && beta < 1.0)) throw ContractViolation("beta must lie in [0, 1)");
  if (!(noise_std >= 0.0)) throw ContractViolation("noise_std must be non-negative");
  require_same_dim(w.dim(), v.size(), "LearnerState");
  if (!w.w.allFinite() || !v.allFinite()) throw ContractViolation("learner state must be finite");
  eta.validate();
}

namespace {

double margin(const Concept& w, const Vector& x, Label y, const char* what) {
  require_same_dim(w.dim(), x.size(), what);
  return value(y) * w.w.dot(x);
}

}  // namespace

double logistic_loss(const Concept& w, const Vector& x, Label y) {
  const double m = margin(w, x, y, "logistic_loss");
  // log(1 + e^{-m}) = max(-m, 0) + log1p(e^{-|m|})
  const double loss = std::max(-m, 0.0) + std::log1p(std::exp(-std::abs(m)));
  // The loss is strictly positive; keep it so when e^{-|m|} underflows.
  return std::max(loss, std::numeric_limits<double>::denorm_min());
}

double incorrect_prob(const Concept& w, const Vector& x, Label y) {
  const double m = margin(w, x, y, "incorrect_prob");
  if (m >= 0.0) {
    const double e = std::exp(-m);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(m));
}

Vector loss_gradient(const Concept& w, const Vector& x, Label y) {
  return (-value(y) * incorrect_prob(w, x, y)) * x;
}

LearnerState learner_update(LearnerState state, const Vector& x, Label y, double eta_t) {
  if (!(eta_t > 0.0)) throw ContractViolation("learner_update: eta_t must be positive");
  Vector g = loss_gradient(state.w, x, y);
  state.v = state.beta * state.v + g;
  state.w.w -= eta_t * state.v;
  if (state.noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, state.noise_std);
    for (Eigen::Index d = 0; d < state.w.dim(); ++d) state.w.w[d] += noise(state.noise_rng);
  }
  ++state.step;
  return state;
}

Label learner_predict(const LearnerState& state, const Vector& x, Rng& rng) {
  require_same_dim(state.w.dim(), x.size(), "learner_predict");
  const double s = state.w.w.dot(x);
  if (s > 0.0) return Label::Positive;
  if (s < 0.0) return Label::Negative;
  return (rng() & 1ULL) ? Label::Positive : Label::Negative;
}

double memory_window(double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) throw ContractViolation("memory_window: beta must lie in [0, 1)");
  return 1.0 / (1.0 - beta);
}

Concept random_initial_concept(Eigen::Index m, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector w(m);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (Eigen::Index d = 0; d < m; ++d) w[d] = normal(rng) * scale;
  return Concept(std::move(w));
}

}  // namespace jedi
