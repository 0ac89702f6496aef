#include "jedi/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace jedi {

namespace {

void require_probability(double f, const char* what) {
  if (!(f > 0.0 && f < 1.0)) throw ContractViolation(std::string(what) + ": f must lie in (0, 1)");
}

double angle_between(const Vector& a, const Vector& b) {
  // acos loses half the digits near 0 and pi; this form stays accurate there.
  const Vector u = a.normalized(), w = b.normalized();
  return 2.0 * std::atan2((u - w).norm(), (u + w).norm());
}

}  // namespace

Vector momentum_from_history(const std::vector<HistoryEntry>& history, double beta, Eigen::Index dim) {
  Vector v = Vector::Zero(dim);
  for (const auto& h : history) {
    require_same_dim(dim, h.x.size(), "momentum_from_history");
    v = beta * v - (value(h.y) * h.f) * h.x;
  }
  return v;
}

TeacherContext TeacherContext::from_history(Concept target, Concept learner, double beta, double eta,
                                            std::vector<HistoryEntry> history, MomentumForm form) {
  TeacherContext ctx;
  ctx.v_prev = momentum_from_history(history, beta, target.dim());
  ctx.target = std::move(target);
  ctx.learner = std::move(learner);
  ctx.beta = beta;
  ctx.eta = eta;
  ctx.history = std::move(history);
  ctx.form = form;
  ctx.validate();
  return ctx;
}

void TeacherContext::validate() const {
  require_same_dim(target.dim(), learner.dim(), "TeacherContext");
  require_same_dim(target.dim(), v_prev.size(), "TeacherContext");
  if (!(eta > 0.0)) throw ContractViolation("TeacherContext: eta must be positive");
  if (!(beta >= 0.0 && beta < 1.0)) throw ContractViolation("TeacherContext: beta must lie in [0, 1)");
}

Vector TeacherContext::momentum_term() const {
  return form == MomentumForm::Scaled ? Vector(beta * v_prev) : v_prev;
}

Vector TeacherContext::residual_target() const {
  return momentum_term() + (target.w - learner.w) / eta;
}

double diversity_term(const TeacherContext& ctx, const Vector& x, Label y, double f) {
  require_probability(f, "diversity_term");
  require_same_dim(ctx.v_prev.size(), x.size(), "diversity_term");
  return ((value(y) * f) * x - ctx.momentum_term()).squaredNorm();
}

double usefulness_term_omniscient(const TeacherContext& ctx, const Vector& x, Label y, double f) {
  require_probability(f, "usefulness_term_omniscient");
  require_same_dim(ctx.target.dim(), x.size(), "usefulness_term_omniscient");
  return (ctx.target.w - ctx.learner.w).dot((value(y) * f) * x);
}

double jedi_score(const TeacherContext& ctx, const Vector& x, Label y, double f) {
  require_probability(f, "jedi_score");
  require_same_dim(ctx.target.dim(), x.size(), "jedi_score");
  return ((value(y) * f) * x - ctx.residual_target()).squaredNorm();
}

double expanded_objective(const TeacherContext& ctx, const Vector& x, Label y, double f) {
  return ctx.eta * ctx.eta * diversity_term(ctx, x, y, f) - 2.0 * ctx.eta * usefulness_term_omniscient(ctx, x, y, f);
}

double imt_score(const Concept& target, const Concept& learner, double eta, const Vector& x, Label y, double f) {
  require_probability(f, "imt_score");
  require_same_dim(target.dim(), x.size(), "imt_score");
  require_same_dim(learner.dim(), x.size(), "imt_score");
  if (!(eta > 0.0)) throw ContractViolation("imt_score: eta must be positive");
  return ((value(y) * f) * x - (target.w - learner.w) / eta).squaredNorm();
}

TwoExampleAnalysis two_example_analysis(const TeacherContext& ctx, const HistoryEntry& prev, Label candidate_label,
                                        double f_t) {
  if (ctx.history.empty()) throw ContractViolation("two_example_analysis: empty history");
  if (ctx.history.size() != 1) throw ContractViolation("two_example_analysis: expects a single previous example");
  require_probability(f_t, "two_example_analysis");
  require_probability(prev.f, "two_example_analysis");
  require_same_dim(ctx.target.dim(), prev.x.size(), "two_example_analysis");

  const Vector direction = ctx.target.w - ctx.learner.w;
  const Vector neg_grad = (value(prev.y) * prev.f) * prev.x;
  const Vector a_prev = ctx.beta * neg_grad;

  TwoExampleAnalysis out;
  out.theta = angle_between(neg_grad, direction);
  const double a_sq = a_prev.squaredNorm();
  out.alpha = a_sq > 0.0 ? direction.dot(a_prev) / a_sq : 0.0;
  const Vector parallel = out.alpha * a_prev;
  const Vector perpendicular = direction - parallel;
  out.gamma_plus = (1.0 - out.alpha / ctx.eta) * ctx.beta;

  const double yt_ft = value(candidate_label) * f_t;
  out.perturbation = perpendicular / (yt_ft * ctx.eta);
  out.action = candidate_label == prev.y ? TeachingAction::Exploitation : TeachingAction::Exploration;
  // y_t f_t x_t = (momentum term) + direction / eta
  out.x_opt = ctx.residual_target() / yt_ft;
  out.consistent_f = out.gamma_plus * prev.f;
  return out;
}

UsefulnessCheck usefulness_check(const HistoryEntry& prev, const Concept& learner, const Concept& target) {
  require_same_dim(target.dim(), learner.dim(), "usefulness_check");
  require_same_dim(target.dim(), prev.x.size(), "usefulness_check");
  const Vector neg_grad = (value(prev.y) * prev.f) * prev.x;
  const Vector direction = target.w - learner.w;
  UsefulnessCheck out;
  if (neg_grad.squaredNorm() == 0.0 || direction.squaredNorm() == 0.0) {
    out.degenerate = true;
    return out;
  }
  out.angle = angle_between(neg_grad, direction);
  out.useful = out.angle < std::numbers::pi / 2.0;
  return out;
}

}  // namespace jedi
