#pragma once

#include "jedi/types.hpp"

#include <vector>

namespace jedi {

// Which momentum enters the diversity residual. Scaled (beta * v_{t-1}) is the
// exact expansion of ||w_t - w_*||^2; Raw (v_{t-1}) is kept for ablations.
enum class MomentumForm { Scaled, Raw };

struct HistoryEntry {
  Vector x;
  Label y = Label::Positive;
  double f = 0.5;  // incorrect-prediction probability when the example was taught
};

// Everything the teacher needs to score a candidate at iteration t.
struct TeacherContext {
  Concept target;
  Concept learner;
  Vector v_prev;
  double beta = 0.0;
  double eta = 0.03;
  std::vector<HistoryEntry> history;
  MomentumForm form = MomentumForm::Scaled;

  // Builds v_prev = sum_s beta^{t-1-s} (-y_s f_s x_s) from `history`.
  static TeacherContext from_history(Concept target, Concept learner, double beta, double eta,
                                     std::vector<HistoryEntry> history,
                                     MomentumForm form = MomentumForm::Scaled);

  // beta * v_prev (Scaled) or v_prev (Raw).
  Vector momentum_term() const;
  // momentum_term() + (w_* - w_{t-1}) / eta: the point y f x is pulled toward.
  Vector residual_target() const;
  void validate() const;
};

// Momentum accumulated over a history: sum_s beta^{t-1-s} (-y_s f_s x_s).
Vector momentum_from_history(const std::vector<HistoryEntry>& history, double beta, Eigen::Index dim);

// Diversity: ||y f x - beta v_{t-1}||^2.
double diversity_term(const TeacherContext& ctx, const Vector& x, Label y, double f);

// Usefulness: <w_* - w_{t-1}, y f x>.
double usefulness_term_omniscient(const TeacherContext& ctx, const Vector& x, Label y, double f);

// Pool-search score ||y f x - (beta v_{t-1} + (w_* - w_{t-1}) / eta)||^2.
double jedi_score(const TeacherContext& ctx, const Vector& x, Label y, double f);

// eta^2 * diversity - 2 eta * usefulness; differs from jedi_score * eta^2 by a
// candidate-independent constant.
double expanded_objective(const TeacherContext& ctx, const Vector& x, Label y, double f);

// No-memory teaching score ||y f x - (w_* - w_{t-1}) / eta||^2.
double imt_score(const Concept& target, const Concept& learner, double eta, const Vector& x, Label y, double f);

enum class TeachingAction { Exploration, Exploitation };

struct TwoExampleAnalysis {
  double theta = 0.0;       // angle between y_{t-1} f_{t-1} x_{t-1} and w_* - w_{t-1}
  double alpha = 0.0;       // (w_* - w_{t-1})_parallel = alpha * a_{t-1}
  double gamma_plus = 0.0;  // (1 - alpha / eta) * beta
  Vector perturbation;      // (w_* - w_{t-1})_perp / (y_t f_t eta)
  TeachingAction action = TeachingAction::Exploitation;
  Vector x_opt;             // unconstrained minimizer of the score for the given f_t
  // f_t that puts x_opt at the norm of x_{t-1} when the perturbation vanishes:
  // gamma_plus * f_{t-1}.
  double consistent_f = 0.0;
};

// Two-example analysis of the score around the previous example `prev`
// (x_{t-1}, y_{t-1}, f_{t-1}); `f_t` is the candidate's incorrect probability.
// Requires exactly one history entry in ctx, which must be `prev`.
TwoExampleAnalysis two_example_analysis(const TeacherContext& ctx, const HistoryEntry& prev, Label candidate_label,
                                        double f_t);

struct UsefulnessCheck {
  bool useful = false;
  bool degenerate = false;
  double angle = 0.0;
};

// A previous example is not useful when the angle between its negative gradient
// and w_* - w_learner is at least pi/2.
UsefulnessCheck usefulness_check(const HistoryEntry& prev, const Concept& learner, const Concept& target);

}  // namespace jedi
