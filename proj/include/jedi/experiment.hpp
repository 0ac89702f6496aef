#pragma once

#include "jedi/dataset.hpp"
#include "jedi/teachers.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace jedi {

enum class DatasetKind { Mixture2D, Gaussian10D, Csv };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::Mixture2D;
  Mixture2DParams mixture;
  GaussianParams gaussian;
  // Csv: a single CSV (split per seed by split_fraction) or a directory
  // holding teach.csv and eval.csv.
  std::filesystem::path path;
  double split_fraction = 0.2;
};

Dataset materialize(const DatasetSpec& spec, std::uint64_t seed);

struct TeacherSetup {
  std::string name;
  TeacherKind kind;
  double learner_beta = 0.0;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  std::vector<TeacherSetup> teachers;
  std::vector<std::uint64_t> seeds;
  double noise_std = 0.01;
  double target_l2 = 0.01;
  double bandwidth_factor = 1.0;
};

struct RunRecord {
  std::string teacher;
  TeacherVariant variant = TeacherVariant::JediOmniscient;
  double beta = 0.0;
  std::uint64_t seed = 0;
  TeachingRun run;
  double eval_accuracy = 0.0;
  double wall_ms = 0.0;
};

struct ExperimentReport {
  std::vector<RunRecord> runs;  // seed-major, teachers in configuration order

  const RunRecord& at(std::uint64_t seed, const std::string& teacher) const;
};

// Shares w0, w_*, and the first example across teachers within a seed; cells
// run concurrently and merge in (seed, teacher) order.
ExperimentReport run_experiment(const ExperimentConfig& config);

// Fraction of `eval` the concept labels correctly.
double evaluation_accuracy(const Concept& w, const TeachingPool& eval, Rng& tie_break);

// Toy configuration: 2D mixture, omniscient teachers, eta = 0.03, 500 iterations.
ExperimentConfig toy_experiment(std::vector<std::uint64_t> seeds, double jedi_beta = 0.5);
// 10D Gaussian, harmonic teachers, eta_t = 20 / (20 + t) * 0.03, 500 iterations.
ExperimentConfig gaussian_experiment(std::vector<std::uint64_t> seeds,
                                     std::vector<double> betas = {0.368, 0.5, 0.75, 0.875, 0.999});

nlohmann::json manifest_entry(const RunRecord& record, bool include_timing = true);
std::string trace_file_name(const RunRecord& record);
void write_trace_csv(const std::filesystem::path& path, const RunRecord& record);
// One trace CSV per run plus manifest.jsonl.
void write_report(const std::filesystem::path& dir, const ExperimentReport& report);
std::vector<nlohmann::json> read_manifest(const std::filesystem::path& dir);

}  // namespace jedi
