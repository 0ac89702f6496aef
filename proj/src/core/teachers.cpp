#include "jedi/teachers.hpp"

#include "jedi/kernels/kernels.hpp"

#include <cmath>
#include <limits>
#include <unordered_set>

namespace jedi {

std::string to_string(TeacherVariant v) {
  switch (v) {
    case TeacherVariant::JediOmniscient: return "jedi-omniscient";
    case TeacherVariant::JediHarmonic: return "jedi-harmonic";
    case TeacherVariant::ImtOmniscient: return "imt-omniscient";
    case TeacherVariant::ImtHarmonic: return "imt-harmonic";
    case TeacherVariant::Random: return "rt";
    case TeacherVariant::Sgd: return "sgd";
  }
  return "unknown";
}

TeacherVariant parse_teacher_variant(const std::string& name) {
  for (auto v : {TeacherVariant::JediOmniscient, TeacherVariant::JediHarmonic, TeacherVariant::ImtOmniscient,
                 TeacherVariant::ImtHarmonic, TeacherVariant::Random, TeacherVariant::Sgd}) {
    if (to_string(v) == name) return v;
  }
  throw ValidationError("unknown teacher '" + name + "'");
}

bool is_omniscient(TeacherVariant v) {
  return v == TeacherVariant::JediOmniscient || v == TeacherVariant::ImtOmniscient;
}

bool is_harmonic(TeacherVariant v) { return v == TeacherVariant::JediHarmonic || v == TeacherVariant::ImtHarmonic; }

double TeacherKind::scoring_beta() const {
  return (variant == TeacherVariant::JediOmniscient || variant == TeacherVariant::JediHarmonic) ? beta : 0.0;
}

void TeacherKind::validate() const {
  if (!(beta >= 0.0 && beta < 1.0)) throw ValidationError("teacher beta must lie in [0, 1)");
  if (cold_start_count > max_iter) throw ValidationError("cold_start_count must not exceed max_iter");
  if (!(convergence_tol >= 0.0)) throw ValidationError("convergence tolerance must be non-negative");
  try {
    eta.validate();
  } catch (const ContractViolation& e) {
    throw ValidationError(e.what());
  }
}

namespace {

struct LossAndGradient {
  double loss;
  Vector gradient;
};

LossAndGradient evaluate(const TeachingPool& pool, const Vector& w, double l2) {
  const FeatureMatrix& X = pool.features();
  const double n = static_cast<double>(pool.size());
  Vector margins = X * w;
  Vector weights(margins.size());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    const double y = pool.label_value(static_cast<std::size_t>(i));
    const double m = y * margins[i];
    loss += std::max(-m, 0.0) + std::log1p(std::exp(-std::abs(m)));
    const double f = m >= 0.0 ? std::exp(-m) / (1.0 + std::exp(-m)) : 1.0 / (1.0 + std::exp(m));
    weights[i] = -y * f;
  }
  Vector grad = X.transpose() * weights / n + l2 * w;
  return {loss / n + 0.5 * l2 * w.squaredNorm(), std::move(grad)};
}

constexpr double kTargetGradientTol = 1e-6;

}  // namespace

double regularized_loss(const TeachingPool& pool, const Concept& w, double l2) {
  require_same_dim(pool.dimension(), w.dim(), "regularized_loss");
  return evaluate(pool, w.w, l2).loss;
}

TargetFit fit_target_concept(const TeachingPool& pool, double eta, std::size_t iters, double l2) {
  if (pool.empty()) throw ContractViolation("fit_target_concept: empty pool");
  if (!(eta > 0.0)) throw ContractViolation("fit_target_concept: eta must be positive");
  if (!(l2 >= 0.0)) throw ContractViolation("fit_target_concept: l2 must be non-negative");
  TargetFit fit;
  Vector w = Vector::Zero(pool.dimension());
  double step = eta;
  LossAndGradient cur = evaluate(pool, w, l2);
  for (fit.iterations = 0; fit.iterations < iters; ++fit.iterations) {
    const double g2 = cur.gradient.squaredNorm();
    if (std::sqrt(g2) < kTargetGradientTol) break;
    // Armijo backtracking; the step grows again after each accepted move.
    while (true) {
      Vector candidate = w - step * cur.gradient;
      LossAndGradient next = evaluate(pool, candidate, l2);
      if (next.loss <= cur.loss - 0.5 * step * g2 || step < 1e-16) {
        w = std::move(candidate);
        cur = std::move(next);
        break;
      }
      step *= 0.5;
    }
    step *= 2.0;
  }
  fit.gradient_norm = cur.gradient.norm();
  fit.converged = fit.gradient_norm < kTargetGradientTol;
  fit.w = Concept(std::move(w));
  return fit;
}

Concept train_target_concept(const TeachingPool& pool, double eta, std::size_t iters, double l2) {
  TargetFit fit = fit_target_concept(pool, eta, iters, l2);
  if (!fit.converged) {
    throw ConvergenceError("target concept did not converge: gradient norm " + std::to_string(fit.gradient_norm) +
                               " after " + std::to_string(fit.iterations) + " iterations",
                           fit.gradient_norm);
  }
  return std::move(fit.w);
}

namespace {

Recommendation pick(const TeachingPool& pool, const std::vector<double>& scores) {
  const kernels::Best best = kernels::argmin(scores, pool.ids());
  return {best.index, best.score, false};
}

std::vector<double> scaled_incorrect(const TeachingPool& pool, const Concept& learner) {
  std::vector<double> coef(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    coef[i] = pool.label_value(i) * incorrect_prob(learner, pool[i].x, pool[i].y);
  }
  return coef;
}

}  // namespace

Recommendation recommend_omniscient(const TeacherContext& ctx, const TeachingPool& pool) {
  if (pool.empty()) throw ContractViolation("recommend_omniscient: empty pool");
  ctx.validate();
  require_same_dim(pool.dimension(), ctx.target.dim(), "recommend_omniscient");
  const std::vector<double> coef = scaled_incorrect(pool, ctx.learner);
  std::vector<double> scores(pool.size());
  kernels::residual_scores(pool.features(), coef, ctx.residual_target(), scores);
  return pick(pool, scores);
}

Recommendation recommend_imt(const Concept& target, const Concept& learner, double eta, const TeachingPool& pool) {
  if (pool.empty()) throw ContractViolation("recommend_imt: empty pool");
  if (!(eta > 0.0)) throw ContractViolation("recommend_imt: eta must be positive");
  require_same_dim(pool.dimension(), target.dim(), "recommend_imt");
  require_same_dim(pool.dimension(), learner.dim(), "recommend_imt");
  const std::vector<double> coef = scaled_incorrect(pool, learner);
  std::vector<double> scores(pool.size());
  const Vector goal = (target.w - learner.w) / eta;
  kernels::residual_scores(pool.features(), coef, goal, scores);
  return pick(pool, scores);
}

HarmonicScores harmonic_scores(const HarmonicTeacherState& state, const TeachingPool& pool,
                               const HarmonicEstimate& estimate) {
  if (pool.empty()) throw ContractViolation("recommend_harmonic: empty pool");
  if (estimate.size() != pool.size()) throw ContractViolation("recommend_harmonic: estimate does not cover the pool");
  if (!(state.eta > 0.0)) throw ContractViolation("recommend_harmonic: eta must be positive");
  require_same_dim(pool.dimension(), state.target.dim(), "recommend_harmonic");

  const std::size_t n = pool.size();
  HarmonicScores out;
  std::vector<HistoryEntry> history;
  history.reserve(state.history.size());
  const std::vector<double> f_hist = estimate_f_history(estimate, state.history);
  for (std::size_t s = 0; s < state.history.size(); ++s) {
    history.push_back({state.history[s].shown_x, state.history[s].true_label, f_hist[s]});
  }
  out.momentum = momentum_from_history(history, state.beta, pool.dimension());
  const Vector mom = state.form == MomentumForm::Scaled ? Vector(state.beta * out.momentum) : out.momentum;

  std::vector<double> coef(n);
  out.usefulness.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Label y = pool[i].y;
    coef[i] = value(y) * incorrect_prob_from_estimate(estimate.p[i], y);
    out.usefulness[i] = std::log(inv_f_neg_from_estimate(estimate.p[i], y)) - logistic_loss(state.target, pool[i].x, y);
  }
  out.diversity.resize(n);
  kernels::residual_scores(pool.features(), coef, mom, out.diversity);
  out.score.resize(n);
  const double eta = state.eta;
  for (std::size_t i = 0; i < n; ++i) out.score[i] = eta * eta * out.diversity[i] - 2.0 * eta * out.usefulness[i];
  return out;
}

Recommendation recommend_harmonic(const HarmonicTeacherState& state, const TeachingPool& pool,
                                  const HarmonicEstimate& estimate) {
  return pick(pool, harmonic_scores(state, pool, estimate).score);
}

Recommendation recommend_baseline(TeacherVariant variant, const TeachingPool& pool, Rng& rng) {
  if (pool.empty()) throw ContractViolation("recommend_baseline: empty pool");
  if (variant != TeacherVariant::Random && variant != TeacherVariant::Sgd) {
    throw ContractViolation("recommend_baseline: " + to_string(variant) + " is not a sampling baseline");
  }
  return {uniform_index(rng, pool.size()), std::numeric_limits<double>::quiet_NaN(), true};
}

TeachingEngine::TeachingEngine(TeacherKind kind, const TeachingPool& pool, Concept target, std::uint64_t seed,
                               std::optional<std::size_t> first_example,
                               std::shared_ptr<const HarmonicEstimator> estimator)
    : kind_(kind),
      pool_(&pool),
      target_(std::move(target)),
      seed_(seed),
      first_example_(first_example),
      estimator_(std::move(estimator)) {
  kind_.validate();
  if (pool.empty()) throw ContractViolation("TeachingEngine: empty pool");
  require_same_dim(pool.dimension(), target_.dim(), "TeachingEngine");
  if (first_example_ && *first_example_ >= pool.size()) throw ContractViolation("first example outside the pool");
  if (is_harmonic(kind_.variant)) {
    if (!estimator_) estimator_ = std::make_shared<HarmonicEstimator>(pool, default_bandwidths(pool));
    if (&estimator_->pool() != pool_) throw ContractViolation("estimator built for a different pool");
  }
}

Recommendation TeachingEngine::random_pick(std::string_view stream, std::size_t step) const {
  Rng rng = make_stream(seed_, stream, step);
  return recommend_baseline(TeacherVariant::Random, *pool_, rng);
}

Recommendation TeachingEngine::recommend(std::optional<LearnerView> learner) const {
  const std::size_t step = next_step();
  if (step == 1 && first_example_) return {*first_example_, std::numeric_limits<double>::quiet_NaN(), false};

  switch (kind_.variant) {
    case TeacherVariant::Random: return random_pick(streams::kTeacher, step);
    case TeacherVariant::Sgd: return random_pick(streams::kSgd, step);
    default: break;
  }
  const bool cold = step <= kind_.cold_start_count || (is_harmonic(kind_.variant) && history_.empty());
  if (cold) return random_pick(streams::kTeacher, step);

  const double eta = kind_.eta.at(step);
  if (is_omniscient(kind_.variant)) {
    if (!learner) throw ContractViolation(to_string(kind_.variant) + " needs the learner's concept");
    if (kind_.variant == TeacherVariant::ImtOmniscient) return recommend_imt(target_, learner->w, eta, *pool_);
    TeacherContext ctx;
    ctx.target = target_;
    ctx.learner = learner->w;
    ctx.v_prev = learner->v;
    ctx.beta = kind_.beta;
    ctx.eta = eta;
    ctx.form = kind_.momentum_form;
    return recommend_omniscient(ctx, *pool_);
  }

  const std::vector<LabeledEvent> labeled = dedup_history(history_);
  const HarmonicEstimate estimate = estimator_->estimate(labeled);
  HarmonicTeacherState state{target_, kind_.scoring_beta(), eta, kind_.momentum_form, history_};
  return recommend_harmonic(state, *pool_, estimate);
}

void TeachingEngine::record(TeachingEvent event) {
  if (event.step != next_step()) {
    throw ContractViolation("event step " + std::to_string(event.step) + " out of order, expected " +
                            std::to_string(next_step()));
  }
  if (event.pool_index >= pool_->size() || (*pool_)[event.pool_index].id != event.example_id) {
    throw ContractViolation("event example '" + event.example_id + "' is not in the teaching pool");
  }
  history_.push_back(std::move(event));
}

std::size_t count_unique(std::span<const TeachingEvent> events) {
  std::unordered_set<std::string> seen;
  for (const auto& e : events) seen.insert(e.example_id);
  return seen.size();
}

TeachingRun run_teaching(const TeacherKind& kind, SimulatedLearner learner, const TeachingPool& pool,
                         const Concept& target, std::uint64_t seed, std::optional<std::size_t> first_example,
                         std::shared_ptr<const HarmonicEstimator> estimator) {
  TeachingEngine engine(kind, pool, target, seed, first_example, std::move(estimator));
  TeachingRun run;
  run.concept_trace.push_back(distance_sq(learner.state().w, target));
  const bool stops_on_convergence = is_omniscient(kind.variant);
  for (std::size_t t = 1; t <= kind.max_iter; ++t) {
    if (stops_on_convergence && run.concept_trace.back() < kind.convergence_tol) break;
    const Recommendation rec = engine.recommend(LearnerView{learner.state().w, learner.state().v});
    const Example& example = pool[rec.index];
    PendingEvent pending(t, example, rec.index, rec.score);
    pending.commit_learner_label(learner.answer(example.x));
    TeachingEvent event = std::move(pending).reveal(example.y);
    learner.learn(example.x, example.y);
    engine.record(std::move(event));
    run.concept_trace.push_back(distance_sq(learner.state().w, target));
  }
  run.converged = stops_on_convergence && run.concept_trace.back() < kind.convergence_tol;
  run.events = engine.history();
  run.unique_count = count_unique(run.events);
  run.final_concept = learner.state().w;
  return run;
}

std::size_t midpoint_example(const TeachingPool& pool) {
  Vector pos = Vector::Zero(pool.dimension());
  Vector neg = Vector::Zero(pool.dimension());
  for (const auto& e : pool.examples()) (e.y == Label::Positive ? pos : neg) += e.x;
  const Vector mid = 0.5 * (pos / static_cast<double>(pool.count(Label::Positive)) +
                            neg / static_cast<double>(pool.count(Label::Negative)));
  std::vector<double> dist(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) dist[i] = (pool[i].x - mid).squaredNorm();
  return kernels::argmin(dist, pool.ids()).index;
}

}  // namespace jedi
