#pragma once

#include "jedi/event.hpp"
#include "jedi/harmonic.hpp"
#include "jedi/learner.hpp"
#include "jedi/objective.hpp"
#include "jedi/types.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace jedi {

enum class TeacherVariant {
  JediOmniscient,  // knows the learner's concept
  JediHarmonic,    // estimates it from learner labels
  ImtOmniscient,   // no-memory teacher, knows the concept
  ImtHarmonic,     // no-memory teacher, harmonic estimate (beta = 0 score)
  Random,
  Sgd,             // uniform sampling with no teacher model
};

std::string to_string(TeacherVariant v);
TeacherVariant parse_teacher_variant(const std::string& name);

bool is_omniscient(TeacherVariant v);
bool is_harmonic(TeacherVariant v);

struct TeacherKind {
  TeacherVariant variant = TeacherVariant::JediOmniscient;
  double beta = 0.5;  // memory decay the teacher assumes (JEDI variants)
  EtaSchedule eta;
  std::size_t max_iter = 500;
  double convergence_tol = 1e-4;  // on ||w_t - w_*||^2, omniscient variants only
  std::size_t cold_start_count = 1;
  MomentumForm momentum_form = MomentumForm::Scaled;

  // Beta actually used for scoring: 0 for the no-memory and random teachers.
  double scoring_beta() const;
  void validate() const;
};

struct TargetFit {
  Concept w;
  double gradient_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double gradient_norm)
      : std::runtime_error(what), gradient_norm_(gradient_norm) {}
  double gradient_norm() const { return gradient_norm_; }

 private:
  double gradient_norm_;
};

// Mean logistic loss over the pool plus (l2 / 2) ||w||^2.
double regularized_loss(const TeachingPool& pool, const Concept& w, double l2);

// Full-batch gradient descent with backtracking on regularized_loss, starting
// at step `eta`, until the gradient norm drops below 1e-6 or `iters` is reached.
TargetFit fit_target_concept(const TeachingPool& pool, double eta, std::size_t iters, double l2);
// As above; throws ConvergenceError when the tolerance is not reached.
Concept train_target_concept(const TeachingPool& pool, double eta = 1.0, std::size_t iters = 200000, double l2 = 0.01);

struct Recommendation {
  std::size_t index = 0;
  double score = 0.0;  // NaN for random picks
  bool random = false;
};

// Argmin of jedi_score over the pool with true incorrect-prediction
// probabilities under ctx.learner; ties by lowest id.
Recommendation recommend_omniscient(const TeacherContext& ctx, const TeachingPool& pool);

// No-memory score ||y f x - (w_* - w) / eta||^2.
Recommendation recommend_imt(const Concept& target, const Concept& learner, double eta, const TeachingPool& pool);

// Teacher-side state for the harmonic variants: the event history revealed so far.
struct HarmonicTeacherState {
  Concept target;
  double beta = 0.0;
  double eta = 0.03;
  MomentumForm form = MomentumForm::Scaled;
  std::span<const TeachingEvent> history;
};

// Per-candidate pieces of the harmonic score, exposed for analysis.
struct HarmonicScores {
  std::vector<double> score;
  std::vector<double> diversity;   // ||y f x - beta v||^2
  std::vector<double> usefulness;  // log(1/f_-) - loss(w_*)
  Vector momentum;                 // estimated v_{t-1}
};

HarmonicScores harmonic_scores(const HarmonicTeacherState& state, const TeachingPool& pool,
                               const HarmonicEstimate& estimate);

// Argmin of eta^2 ||y f x - beta v||^2 - 2 eta [log(1/f_-) - loss(w_*)] with f,
// 1/f_- and v reconstructed from the estimate and the revealed labels.
Recommendation recommend_harmonic(const HarmonicTeacherState& state, const TeachingPool& pool,
                                  const HarmonicEstimate& estimate);

// Uniform draw for the Random and Sgd teachers; other variants are rejected.
Recommendation recommend_baseline(TeacherVariant variant, const TeachingPool& pool, Rng& rng);

// Omniscient view of the learner, available in simulation only.
struct LearnerView {
  const Concept& w;
  const Vector& v;
};

// Stateful teacher shared by simulations and live sessions. A recommendation
// is a pure function of (kind, pool, target, seed, history), so replaying the
// same history reproduces the same choices.
class TeachingEngine {
 public:
  TeachingEngine(TeacherKind kind, const TeachingPool& pool, Concept target, std::uint64_t seed,
                 std::optional<std::size_t> first_example = std::nullopt,
                 std::shared_ptr<const HarmonicEstimator> estimator = nullptr);

  // Next example for iteration history().size() + 1.
  Recommendation recommend(std::optional<LearnerView> learner = std::nullopt) const;
  void record(TeachingEvent event);

  std::size_t next_step() const { return history_.size() + 1; }
  double eta_at_next_step() const { return kind_.eta.at(next_step()); }
  const std::vector<TeachingEvent>& history() const { return history_; }
  const TeacherKind& kind() const { return kind_; }
  const TeachingPool& pool() const { return *pool_; }
  const Concept& target() const { return target_; }

 private:
  Recommendation random_pick(std::string_view stream, std::size_t step) const;

  TeacherKind kind_;
  const TeachingPool* pool_;
  Concept target_;
  std::uint64_t seed_;
  std::optional<std::size_t> first_example_;
  std::shared_ptr<const HarmonicEstimator> estimator_;
  std::vector<TeachingEvent> history_;
};

struct TeachingRun {
  std::vector<TeachingEvent> events;
  std::vector<double> concept_trace;  // ||w_t - w_*||^2 for t = 0..steps
  std::size_t unique_count = 0;
  bool converged = false;
  Concept final_concept;
};

std::size_t count_unique(std::span<const TeachingEvent> events);

// Runs the show / answer / reveal / learn loop against a simulated learner.
// Omniscient variants stop once ||w_t - w_*||^2 < kind.convergence_tol; the
// others run max_iter iterations.
TeachingRun run_teaching(const TeacherKind& kind, SimulatedLearner learner, const TeachingPool& pool,
                         const Concept& target, std::uint64_t seed,
                         std::optional<std::size_t> first_example = std::nullopt,
                         std::shared_ptr<const HarmonicEstimator> estimator = nullptr);

// Pool example closest to the midpoint of the two class means; ties by lowest id.
std::size_t midpoint_example(const TeachingPool& pool);

}  // namespace jedi
