#pragma once

#include "jedi/calibration.hpp"
#include "jedi/dataset.hpp"
#include "jedi/teachers.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace jedi::service {

using nlohmann::json;

enum class Phase { Calibration, Teaching, Evaluation, Done };

std::string to_string(Phase p);
Phase parse_phase(const std::string& s);

// Request-level failures, each mapped to one HTTP status by the server.
class ConflictError : public std::runtime_error {  // wrong phase, id mismatch, resubmission
 public:
  ConflictError(const std::string& what, Phase phase) : std::runtime_error(what), phase_(phase) {}
  Phase phase() const { return phase_; }

 private:
  Phase phase_;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A registered dataset with everything sessions share: the teaching pool,
// the held-out evaluation split, the target concept and the cached estimator.
struct DatasetEntry {
  std::string name;
  Dataset data;
  Concept target;
  std::shared_ptr<const HarmonicEstimator> estimator;
};

class DatasetRegistry {
 public:
  // Takes ownership; fits the target concept and builds the estimator.
  void add(std::string name, Dataset data, double bandwidth_factor = 1.0);
  // Every subdirectory holding teach.csv and eval.csv, and every loose *.csv
  // (split 20/80 with `split_seed`), named by directory or file stem.
  void load_dir(const std::filesystem::path& dir, double bandwidth_factor = 1.0, std::uint64_t split_seed = 0);

  const DatasetEntry& find(const std::string& name) const;  // throws ValidationError
  std::vector<std::string> names() const;

 private:
  std::map<std::string, std::unique_ptr<DatasetEntry>> entries_;
};

struct SessionConfig {
  std::string dataset;
  TeacherVariant teacher = TeacherVariant::JediHarmonic;
  std::optional<double> beta;  // skips calibration when set
  std::optional<int> budget;   // overrides the budget rule
  std::uint64_t seed = 0;
  std::size_t cold_start = 5;
  double eta0 = 0.03;
  std::optional<double> eta_c = 200.0;
  std::size_t eval_per_class = 50;

  json to_json() const;
  static SessionConfig from_json(const json& j);  // throws ValidationError
  void validate() const;
};

struct TeachingGainReport {
  double teaching_accuracy_first_seen = 0.0;
  double evaluation_accuracy = 0.0;
  double teaching_gain = 0.0;
  std::size_t first_seen_count = 0;
  std::size_t evaluation_count = 0;

  json to_json() const;
};

TeachingGainReport teaching_gain(std::span<const TeachingEvent> events, std::size_t eval_correct,
                                 std::size_t eval_total);

struct PendingExample {
  std::size_t step = 0;
  std::size_t pool_index = 0;
  double objective = 0.0;
};

// Append-only JSON-lines log, flushed to disk before each append returns.
class EventLog {
 public:
  explicit EventLog(std::filesystem::path path);
  ~EventLog();
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  void append(const json& event);
  const std::filesystem::path& path() const { return path_; }

  static std::vector<json> read(const std::filesystem::path& path);

 private:
  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
};

// One learner's session. Every mutation is written to the event log before
// it is applied, and state is rebuilt by replaying the log, so a restarted
// process recovers exactly what a client last saw.
class Session {
 public:
  static constexpr std::size_t kSnapshotEvery = 20;

  // Creates the session directory and logs the `created` event.
  static std::unique_ptr<Session> create(const std::filesystem::path& dir, std::string id, std::string token,
                                         SessionConfig config, const DatasetRegistry& registry);
  // Loads the latest snapshot, if any, then replays the log tail.
  static std::unique_ptr<Session> recover(const std::filesystem::path& dir, const DatasetRegistry& registry);

  MemoryProfile submit_calibration(const json& body);
  // Returns the pending example, computing it only if none is pending.
  json next_example();
  json submit_label(const std::string& example_id, Label learner_label);
  json evaluation_batch();
  TeachingGainReport submit_evaluation(const json& answers);

  const std::string& id() const { return id_; }
  bool authorized(std::string_view token) const;
  Phase phase() const { return phase_; }
  const SessionConfig& config() const { return config_; }
  const std::vector<TeachingEvent>& events() const { return engine_ ? engine_->history() : no_events_; }
  std::optional<std::size_t> budget() const { return budget_; }
  const std::optional<TeachingGainReport>& report() const { return report_; }
  std::size_t recommendations_computed() const { return recommendations_computed_; }
  std::size_t log_sequence() const { return seq_; }

  // Full state, also the snapshot format. Two sessions in the same state
  // serialize identically.
  json state() const;
  json status() const;  // client-facing subset

 private:
  Session(std::filesystem::path dir, const DatasetRegistry& registry);

  void log(json event);
  void apply(const json& event);
  void apply_created(const json& e);
  void apply_calibrated(const json& e);
  void begin_teaching(double beta, int budget);
  void restore(const json& snapshot);
  void write_snapshot() const;
  json presentation(std::size_t pool_index, bool with_step) const;
  void require_phase(Phase p, const char* op) const;

  std::filesystem::path dir_;
  const DatasetRegistry* registry_;
  const DatasetEntry* dataset_ = nullptr;
  std::unique_ptr<EventLog> log_;
  std::uint64_t seq_ = 0;

  std::string id_;
  std::string token_;
  SessionConfig config_;
  Phase phase_ = Phase::Calibration;
  std::string created_at_;
  std::string updated_at_;
  std::optional<MemoryProfile> profile_;
  json calibration_trials_;
  std::optional<std::size_t> budget_;
  std::unique_ptr<TeachingEngine> engine_;
  std::optional<PendingExample> pending_;
  std::optional<Label> pending_label_;
  std::vector<std::size_t> eval_batch_;  // indices into the eval split
  std::map<std::string, int> eval_answers_;
  std::optional<TeachingGainReport> report_;
  std::size_t recommendations_computed_ = 0;
  std::vector<TeachingEvent> no_events_;
};

std::string random_hex(std::size_t bytes);
std::string utc_timestamp();

}  // namespace jedi::service
