#include "jedi/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace jedi {

Dataset materialize(const DatasetSpec& spec, std::uint64_t seed) {
  switch (spec.kind) {
    case DatasetKind::Mixture2D: return gen_mixture2d(spec.mixture, seed);
    case DatasetKind::Gaussian10D: return gen_gaussian10d(spec.gaussian, seed);
    case DatasetKind::Csv: break;
  }
  namespace fs = std::filesystem;
  if (fs::is_directory(spec.path)) {
    return {load_csv(spec.path / "teach.csv"), load_csv(spec.path / "eval.csv"), {}};
  }
  auto [teach, eval] = split(load_csv(spec.path), spec.split_fraction, seed);
  return {std::move(teach), std::move(eval), {}};
}

const RunRecord& ExperimentReport::at(std::uint64_t seed, const std::string& teacher) const {
  for (const auto& r : runs) {
    if (r.seed == seed && r.teacher == teacher) return r;
  }
  throw ContractViolation("no run for teacher '" + teacher + "' and seed " + std::to_string(seed));
}

double evaluation_accuracy(const Concept& w, const TeachingPool& eval, Rng& tie_break) {
  LearnerState probe = LearnerState::initial(w, 0.0, EtaSchedule::constant(1.0));
  std::size_t correct = 0;
  for (const auto& e : eval.examples()) correct += learner_predict(probe, e.x, tie_break) == e.y;
  return static_cast<double>(correct) / static_cast<double>(eval.size());
}

namespace {

struct SeedContext {
  Dataset data;
  Concept target;
  Concept w0;
  std::size_t first = 0;
  std::shared_ptr<const HarmonicEstimator> estimator;
};

// Fills ctx in place: the estimator keeps a pointer to ctx.data.teach.
void prepare(SeedContext& ctx, const ExperimentConfig& config, std::uint64_t seed) {
  ctx.data = materialize(config.dataset, seed);
  ctx.target = train_target_concept(ctx.data.teach, 1.0, 200000, config.target_l2);
  Rng init = make_stream(seed, streams::kLearnerInit);
  ctx.w0 = random_initial_concept(ctx.data.teach.dimension(), init);
  ctx.first = midpoint_example(ctx.data.teach);
  bool harmonic = false;
  for (const auto& t : config.teachers) harmonic = harmonic || is_harmonic(t.kind.variant);
  if (harmonic) {
    ctx.estimator = std::make_shared<HarmonicEstimator>(
        ctx.data.teach, default_bandwidths(ctx.data.teach, config.bandwidth_factor));
  }
}

RunRecord run_cell(const ExperimentConfig& config, const SeedContext& ctx, const TeacherSetup& setup,
                   std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  LearnerState state = LearnerState::initial(ctx.w0, setup.learner_beta, setup.kind.eta, config.noise_std,
                                             derive_seed(seed, streams::kNoise));
  SimulatedLearner learner(std::move(state), derive_seed(seed, streams::kTieBreak));
  RunRecord rec;
  rec.teacher = setup.name;
  rec.variant = setup.kind.variant;
  rec.beta = setup.learner_beta;
  rec.seed = seed;
  rec.run = run_teaching(setup.kind, std::move(learner), ctx.data.teach, ctx.target, seed, ctx.first, ctx.estimator);
  Rng tie = make_stream(seed, streams::kEvaluation);
  rec.eval_accuracy = evaluation_accuracy(rec.run.final_concept, ctx.data.eval, tie);
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  if (config.teachers.empty()) throw ValidationError("experiment needs at least one teacher");
  if (config.seeds.empty()) throw ValidationError("experiment needs at least one seed");
  for (const auto& t : config.teachers) {
    t.kind.validate();
    if (!(t.learner_beta >= 0.0 && t.learner_beta < 1.0)) throw ValidationError("learner beta must lie in [0, 1)");
  }

  const std::size_t n_seeds = config.seeds.size();
  const std::size_t n_teachers = config.teachers.size();
  std::vector<SeedContext> contexts(n_seeds);
  for (std::size_t s = 0; s < n_seeds; ++s) prepare(contexts[s], config, config.seeds[s]);

  ExperimentReport report;
  report.runs.resize(n_seeds * n_teachers);
  const auto cells = static_cast<long>(report.runs.size());
  std::vector<std::exception_ptr> errors(report.runs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long c = 0; c < cells; ++c) {
    const auto cell = static_cast<std::size_t>(c);
    const std::size_t s = cell / n_teachers;
    try {
      report.runs[cell] = run_cell(config, contexts[s], config.teachers[cell % n_teachers], config.seeds[s]);
    } catch (...) {
      errors[cell] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return report;
}

ExperimentConfig toy_experiment(std::vector<std::uint64_t> seeds, double jedi_beta) {
  ExperimentConfig config;
  config.dataset.kind = DatasetKind::Mixture2D;
  config.seeds = std::move(seeds);
  config.noise_std = 0.0;
  TeacherKind base;
  base.eta = EtaSchedule::constant(0.03);
  base.max_iter = 500;
  base.cold_start_count = 1;

  TeacherKind jedi = base;
  jedi.variant = TeacherVariant::JediOmniscient;
  jedi.beta = jedi_beta;
  TeacherKind imt = base;
  imt.variant = TeacherVariant::ImtOmniscient;
  imt.beta = 0.0;
  TeacherKind sgd = base;
  sgd.variant = TeacherVariant::Sgd;
  sgd.beta = 0.0;
  config.teachers = {{"jedi", jedi, jedi_beta}, {"imt", imt, 0.0}, {"sgd", sgd, 0.0}};
  return config;
}

ExperimentConfig gaussian_experiment(std::vector<std::uint64_t> seeds, std::vector<double> betas) {
  ExperimentConfig config;
  config.dataset.kind = DatasetKind::Gaussian10D;
  config.seeds = std::move(seeds);
  config.noise_std = 0.01;
  TeacherKind base;
  base.eta = EtaSchedule::decaying(0.03, 20.0);
  base.max_iter = 500;
  base.cold_start_count = 1;

  TeacherKind rt = base;
  rt.variant = TeacherVariant::Random;
  rt.beta = 0.0;
  TeacherKind imt = base;
  imt.variant = TeacherVariant::ImtHarmonic;
  imt.beta = 0.0;
  config.teachers = {{"rt", rt, 0.0}, {"imt", imt, 0.0}};
  for (double b : betas) {
    TeacherKind jedi = base;
    jedi.variant = TeacherVariant::JediHarmonic;
    jedi.beta = b;
    std::ostringstream name;
    name << "jedi-" << std::setprecision(6) << b;
    config.teachers.push_back({name.str(), jedi, b});
  }
  return config;
}

std::string trace_file_name(const RunRecord& record) {
  return "trace_" + record.teacher + "_seed" + std::to_string(record.seed) + ".csv";
}

nlohmann::json manifest_entry(const RunRecord& record, bool include_timing) {
  nlohmann::json j{
      {"teacher", record.teacher},
      {"variant", to_string(record.variant)},
      {"beta", record.beta},
      {"seed", record.seed},
      {"steps", record.run.events.size()},
      {"unique_count", record.run.unique_count},
      {"converged", record.run.converged},
      {"initial_dist_sq", record.run.concept_trace.front()},
      {"final_dist_sq", record.run.concept_trace.back()},
      {"eval_accuracy", record.eval_accuracy},
      {"trace", trace_file_name(record)},
  };
  if (include_timing) j["wall_ms"] = record.wall_ms;
  return j;
}

void write_trace_csv(const std::filesystem::path& path, const RunRecord& record) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << std::setprecision(17);
  out << "iter,example_id,learner_label,true_label,objective,dist_sq_to_target\n";
  out << "0,,,,," << record.run.concept_trace.front() << '\n';
  for (std::size_t i = 0; i < record.run.events.size(); ++i) {
    const TeachingEvent& e = record.run.events[i];
    out << e.step << ',' << e.example_id << ',' << static_cast<int>(e.learner_label) << ','
        << static_cast<int>(e.true_label) << ',';
    if (std::isfinite(e.objective_value)) out << e.objective_value;
    out << ',' << record.run.concept_trace[i + 1] << '\n';
  }
}

void write_report(const std::filesystem::path& dir, const ExperimentReport& report) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.jsonl");
  if (!manifest) throw ValidationError("cannot write " + (dir / "manifest.jsonl").string());
  for (const auto& r : report.runs) {
    write_trace_csv(dir / trace_file_name(r), r);
    manifest << manifest_entry(r).dump() << '\n';
  }
}

std::vector<nlohmann::json> read_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.jsonl");
  if (!in) throw ValidationError("no manifest.jsonl in " + dir.string());
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("manifest line " + std::to_string(row) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace jedi
