#include "jedi/service/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

namespace jedi::service {

namespace fs = std::filesystem;

std::string to_string(Phase p) {
  switch (p) {
    case Phase::Calibration: return "Calibration";
    case Phase::Teaching: return "Teaching";
    case Phase::Evaluation: return "Evaluation";
    case Phase::Done: return "Done";
  }
  return "?";
}

Phase parse_phase(const std::string& s) {
  for (Phase p : {Phase::Calibration, Phase::Teaching, Phase::Evaluation, Phase::Done}) {
    if (to_string(p) == s) return p;
  }
  throw ValidationError("unknown phase '" + s + "'");
}

std::string random_hex(std::size_t bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::random_device rd;
  std::string out;
  out.reserve(bytes * 2);
  for (std::size_t i = 0; i < bytes; ++i) {
    const unsigned b = rd() & 0xffu;
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xfu]);
  }
  return out;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0') << ms << 'Z';
  return out.str();
}

// ---------------------------------------------------------------- registry

void DatasetRegistry::add(std::string name, Dataset data, double bandwidth_factor) {
  if (name.empty()) throw ValidationError("dataset name must not be empty");
  if (entries_.count(name)) throw ValidationError("dataset '" + name + "' registered twice");
  for (const auto& id : data.eval.ids()) {
    if (data.teach.index_of(id)) throw ValidationError("dataset '" + name + "': id '" + id + "' in both splits");
  }
  require_same_dim(data.teach.dimension(), data.eval.dimension(), "dataset splits");
  auto entry = std::make_unique<DatasetEntry>();
  entry->name = name;
  entry->data = std::move(data);
  entry->target = train_target_concept(entry->data.teach);
  entry->estimator = std::make_shared<HarmonicEstimator>(entry->data.teach,
                                                         default_bandwidths(entry->data.teach, bandwidth_factor));
  entries_.emplace(std::move(name), std::move(entry));
}

void DatasetRegistry::load_dir(const fs::path& dir, double bandwidth_factor, std::uint64_t split_seed) {
  if (!fs::is_directory(dir)) throw ValidationError("dataset directory not found: " + dir.string());
  std::vector<fs::path> paths;
  for (const auto& e : fs::directory_iterator(dir)) paths.push_back(e.path());
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) {
    if (fs::is_directory(p) && fs::exists(p / "teach.csv") && fs::exists(p / "eval.csv")) {
      add(p.filename().string(), {load_csv(p / "teach.csv"), load_csv(p / "eval.csv"), {}}, bandwidth_factor);
    } else if (fs::is_regular_file(p) && p.extension() == ".csv") {
      auto [teach, eval] = split(load_csv(p), 0.2, split_seed);
      add(p.stem().string(), {std::move(teach), std::move(eval), {}}, bandwidth_factor);
    }
  }
}

const DatasetEntry& DatasetRegistry::find(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ValidationError("unknown dataset '" + name + "'");
  return *it->second;
}

std::vector<std::string> DatasetRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

// ------------------------------------------------------------------ config

json SessionConfig::to_json() const {
  json j{{"dataset", dataset},       {"teacher", jedi::to_string(teacher)}, {"seed", seed},
         {"cold_start", cold_start}, {"eta0", eta0},                        {"eval_per_class", eval_per_class}};
  j["beta"] = beta ? json(*beta) : json(nullptr);
  j["budget"] = budget ? json(*budget) : json(nullptr);
  j["eta_c"] = eta_c ? json(*eta_c) : json(nullptr);
  return j;
}

namespace {

template <class T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("field '") + key + "' has the wrong type");
  }
}

template <class T>
std::optional<T> optional_field(const json& j, const char* key, std::optional<T> fallback) {
  if (!j.contains(key)) return fallback;
  if (j[key].is_null()) return std::nullopt;
  return field<T>(j, key, T{});
}

Label parse_label(const json& v) {
  if (!v.is_number_integer()) throw ValidationError("label must be -1 or 1");
  const int y = v.get<int>();
  if (y != -1 && y != 1) throw ValidationError("label must be -1 or 1");
  return y > 0 ? Label::Positive : Label::Negative;
}

int label_int(Label y) { return static_cast<int>(y); }

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_nan(const json& v) { return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>(); }

}  // namespace

SessionConfig SessionConfig::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("session config must be a JSON object");
  SessionConfig c;
  c.dataset = field<std::string>(j, "dataset", "");
  try {
    c.teacher = parse_teacher_variant(field<std::string>(j, "teacher", jedi::to_string(c.teacher)));
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  c.beta = optional_field<double>(j, "beta", c.beta);
  c.budget = optional_field<int>(j, "budget", c.budget);
  c.seed = field<std::uint64_t>(j, "seed", c.seed);
  c.cold_start = field<std::size_t>(j, "cold_start", c.cold_start);
  c.eta0 = field<double>(j, "eta0", c.eta0);
  c.eta_c = optional_field<double>(j, "eta_c", c.eta_c);
  c.eval_per_class = field<std::size_t>(j, "eval_per_class", c.eval_per_class);
  c.validate();
  return c;
}

void SessionConfig::validate() const {
  if (dataset.empty()) throw ValidationError("config needs a dataset");
  if (is_omniscient(teacher)) throw ValidationError(jedi::to_string(teacher) + " needs the learner's concept; live sessions cannot use it");
  if (beta && !(*beta >= 0.0 && *beta < 1.0)) throw ValidationError("beta must lie in [0, 1)");
  if (budget && *budget < 1) throw ValidationError("budget must be at least 1");
  if (!(eta0 > 0.0) || !std::isfinite(eta0)) throw ValidationError("eta0 must be positive");
  if (eta_c && !(*eta_c > 0.0)) throw ValidationError("eta_c must be positive");
  if (eval_per_class < 1) throw ValidationError("eval_per_class must be at least 1");
}

// ------------------------------------------------------------------ report

json TeachingGainReport::to_json() const {
  return {{"teaching_accuracy_first_seen", teaching_accuracy_first_seen},
          {"evaluation_accuracy", evaluation_accuracy},
          {"teaching_gain", teaching_gain},
          {"first_seen_count", first_seen_count},
          {"evaluation_count", evaluation_count}};
}

TeachingGainReport teaching_gain(std::span<const TeachingEvent> events, std::size_t eval_correct,
                                 std::size_t eval_total) {
  if (eval_total == 0 || eval_correct > eval_total) throw ContractViolation("teaching_gain: bad evaluation counts");
  TeachingGainReport r;
  std::set<std::string> seen;
  std::size_t correct = 0;
  for (const auto& e : events) {
    if (!seen.insert(e.example_id).second) continue;
    correct += e.correct();
  }
  r.first_seen_count = seen.size();
  r.evaluation_count = eval_total;
  r.teaching_accuracy_first_seen = seen.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(seen.size());
  r.evaluation_accuracy = static_cast<double>(eval_correct) / static_cast<double>(eval_total);
  r.teaching_gain = r.evaluation_accuracy - r.teaching_accuracy_first_seen;
  return r;
}

// --------------------------------------------------------------------- log

EventLog::EventLog(fs::path path) : path_(std::move(path)) {
  file_ = std::fopen(path_.c_str(), "a");
  if (!file_) throw std::runtime_error("cannot open event log " + path_.string());
}

EventLog::~EventLog() {
  if (file_) std::fclose(file_);
}

void EventLog::append(const json& event) {
  const std::string line = event.dump() + '\n';
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0 ||
      ::fdatasync(::fileno(file_)) != 0) {
    throw std::runtime_error("failed to append to " + path_.string());
  }
}

std::vector<json> EventLog::read(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read event log " + path.string());
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error&) {
      if (in.peek() != std::ifstream::traits_type::eof()) throw;
      break;  // torn final write
    }
  }
  return out;
}

namespace {

// Cuts a torn trailing line so later appends start on a fresh line.
void truncate_partial_tail(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (content.empty() || content.back() == '\n') return;
  const auto cut = content.find_last_of('\n');
  fs::resize_file(path, cut == std::string::npos ? 0 : cut + 1);
}

void write_file_atomically(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::FILE* f = std::fopen(tmp.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    const bool ok = std::fwrite(content.data(), 1, content.size(), f) == content.size() && std::fflush(f) == 0 &&
                    ::fdatasync(::fileno(f)) == 0;
    std::fclose(f);
    if (!ok) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

constexpr const char* kLogName = "events.jsonl";
constexpr const char* kSnapshotName = "snapshot.json";

}  // namespace

// ----------------------------------------------------------------- session

Session::Session(fs::path dir, const DatasetRegistry& registry) : dir_(std::move(dir)), registry_(&registry) {}

std::unique_ptr<Session> Session::create(const fs::path& dir, std::string id, std::string token, SessionConfig config,
                                         const DatasetRegistry& registry) {
  config.validate();
  registry.find(config.dataset);
  const fs::path sdir = dir / id;
  if (fs::exists(sdir)) throw ValidationError("session '" + id + "' already exists");
  fs::create_directories(sdir);
  std::unique_ptr<Session> s(new Session(sdir, registry));
  s->log_ = std::make_unique<EventLog>(sdir / kLogName);
  s->log({{"type", "created"}, {"id", id}, {"token", token}, {"config", config.to_json()}});
  return s;
}

std::unique_ptr<Session> Session::recover(const fs::path& dir, const DatasetRegistry& registry) {
  std::unique_ptr<Session> s(new Session(dir, registry));
  const fs::path log_path = dir / kLogName;
  if (!fs::exists(log_path)) throw std::runtime_error("no event log in " + dir.string());
  truncate_partial_tail(log_path);
  const fs::path snap = dir / kSnapshotName;
  if (fs::exists(snap)) {
    std::ifstream in(snap);
    s->restore(json::parse(in));
  }
  for (const json& e : EventLog::read(log_path)) {
    const auto seq = e.at("seq").get<std::uint64_t>();
    if (seq <= s->seq_) continue;
    if (seq != s->seq_ + 1) throw std::runtime_error("event log gap before seq " + std::to_string(seq));
    s->apply(e);
  }
  s->log_ = std::make_unique<EventLog>(log_path);
  return s;
}

void Session::log(json event) {
  event["seq"] = seq_ + 1;
  event["ts"] = utc_timestamp();
  log_->append(event);
  apply(event);
  if (seq_ % kSnapshotEvery == 0) write_snapshot();
}

void Session::apply(const json& e) {
  const std::string type = e.at("type").get<std::string>();
  if (type == "created") {
    apply_created(e);
  } else if (type == "calibrated") {
    apply_calibrated(e);
  } else if (type == "recommended") {
    const std::size_t index = dataset_->data.teach.require_index(e.at("example_id").get<std::string>());
    pending_ = PendingExample{e.at("step").get<std::size_t>(), index, number_or_nan(e.at("objective"))};
    pending_label_.reset();
  } else if (type == "labeled") {
    pending_label_ = parse_label(e.at("learner_label"));
  } else if (type == "revealed") {
    if (!pending_ || !pending_label_) throw std::runtime_error("reveal without a committed learner label");
    const Example& ex = dataset_->data.teach[pending_->pool_index];
    PendingEvent ev(pending_->step, ex, pending_->pool_index, pending_->objective);
    ev.commit_learner_label(*pending_label_);
    engine_->record(std::move(ev).reveal(parse_label(e.at("true_label"))));
    pending_.reset();
    pending_label_.reset();
    if (engine_->history().size() >= *budget_) phase_ = Phase::Evaluation;
  } else if (type == "evaluation_issued") {
    eval_batch_.clear();
    for (const auto& id : e.at("example_ids")) eval_batch_.push_back(dataset_->data.eval.require_index(id.get<std::string>()));
  } else if (type == "evaluated") {
    eval_answers_ = e.at("answers").get<std::map<std::string, int>>();
    std::size_t correct = 0;
    for (std::size_t i : eval_batch_) {
      const Example& ex = dataset_->data.eval[i];
      correct += eval_answers_.at(ex.id) == label_int(ex.y);
    }
    report_ = teaching_gain(engine_->history(), correct, eval_batch_.size());
    phase_ = Phase::Done;
  } else {
    throw std::runtime_error("unknown event type '" + type + "'");
  }
  seq_ = e.at("seq").get<std::uint64_t>();
  updated_at_ = e.at("ts").get<std::string>();
}

void Session::apply_created(const json& e) {
  id_ = e.at("id").get<std::string>();
  token_ = e.at("token").get<std::string>();
  config_ = SessionConfig::from_json(e.at("config"));
  dataset_ = &registry_->find(config_.dataset);
  created_at_ = e.at("ts").get<std::string>();
  phase_ = Phase::Calibration;
  if (config_.beta) {
    const double n_bar = std::clamp(1.0 / (1.0 - *config_.beta), double(kMinSetSize), double(kMaxSetSize));
    const int rule = config_.teacher == TeacherVariant::JediHarmonic ? teaching_budget(n_bar) : 30;
    begin_teaching(*config_.beta, config_.budget.value_or(rule));
  }
}

void Session::apply_calibrated(const json& e) {
  profile_ = estimate_beta(e.at("scores").get<std::vector<int>>());
  calibration_trials_ = e.value("trials", json(nullptr));
  const int rule = config_.teacher == TeacherVariant::JediHarmonic ? profile_->budget : 30;
  begin_teaching(profile_->beta, config_.budget.value_or(rule));
}

void Session::begin_teaching(double beta, int budget) {
  TeacherKind kind;
  kind.variant = config_.teacher;
  kind.beta = beta;
  kind.eta = config_.eta_c ? EtaSchedule::decaying(config_.eta0, *config_.eta_c) : EtaSchedule::constant(config_.eta0);
  kind.max_iter = static_cast<std::size_t>(budget);
  kind.cold_start_count = std::min(config_.cold_start, kind.max_iter);
  engine_ = std::make_unique<TeachingEngine>(kind, dataset_->data.teach, dataset_->target, config_.seed, std::nullopt,
                                             dataset_->estimator);
  budget_ = static_cast<std::size_t>(budget);
  phase_ = Phase::Teaching;
}

void Session::require_phase(Phase p, const char* op) const {
  if (phase_ == p) return;
  std::string msg = std::string(op) + " is not allowed in phase " + to_string(phase_);
  if (phase_ == Phase::Evaluation && p == Phase::Teaching) msg += "; the teaching budget is used up, continue with evaluation";
  throw ConflictError(msg, phase_);
}

MemoryProfile Session::submit_calibration(const json& body) {
  require_phase(Phase::Calibration, "calibration");
  if (!body.is_object()) throw ValidationError("calibration body must be a JSON object");
  std::vector<int> scores;
  json trials = nullptr;
  if (body.contains("trials")) {
    trials = body["trials"];
    if (!trials.is_array() || trials.size() != 3) throw ValidationError("exactly 3 calibration trials are required");
    for (const json& t : trials) {
      SortingTrial trial;
      if (!t.is_object() || !t.contains("rounds") || !t["rounds"].is_array()) throw ValidationError("each trial needs a 'rounds' array");
      for (const json& r : t["rounds"]) {
        SortingRound round;
        round.set_size = field<int>(r, "set_size", 0);
        round.shown_order = field<std::vector<int>>(r, "shown_order", {});
        round.recovered_order = field<std::vector<int>>(r, "recovered_order", {});
        round.exposure_seconds = exposure_seconds(std::clamp(round.set_size, kMinSetSize, kMaxSetSize));
        trial.rounds.push_back(std::move(round));
      }
      scores.push_back(score_trial(trial));
    }
  } else if (body.contains("scores")) {
    scores = field<std::vector<int>>(body, "scores", {});
    if (scores.size() != 3) throw ValidationError("exactly 3 calibration scores are required");
  } else {
    throw ValidationError("calibration needs 'trials' or 'scores'");
  }
  estimate_beta(scores);  // validates before anything is logged
  log({{"type", "calibrated"}, {"scores", scores}, {"trials", trials}});
  return *profile_;
}

json Session::presentation(std::size_t pool_index, bool with_step) const {
  const Example& ex = with_step ? dataset_->data.teach[pool_index] : dataset_->data.eval[pool_index];
  json j{{"example_id", ex.id},
         {"payload", ex.payload.empty() ? json(nullptr) : json(ex.payload)},
         {"features", std::vector<double>(ex.x.data(), ex.x.data() + ex.x.size())}};
  if (with_step) {
    j["step"] = pending_->step;
    j["remaining"] = *budget_ - engine_->history().size();
  }
  return j;
}

json Session::next_example() {
  require_phase(Phase::Teaching, "next example");
  if (!pending_) {
    const Recommendation rec = engine_->recommend();
    ++recommendations_computed_;
    log({{"type", "recommended"},
         {"step", engine_->next_step()},
         {"example_id", dataset_->data.teach[rec.index].id},
         {"objective", number_or_null(rec.score)}});
  }
  return presentation(pending_->pool_index, true);
}

json Session::submit_label(const std::string& example_id, Label learner_label) {
  require_phase(Phase::Teaching, "labeling");
  if (!pending_) throw ConflictError("no example is pending; request the next example first", phase_);
  const Example& ex = dataset_->data.teach[pending_->pool_index];
  if (ex.id != example_id) throw ConflictError("label is for '" + example_id + "' but '" + ex.id + "' is pending", phase_);
  if (pending_label_ && *pending_label_ != learner_label) {
    throw ConflictError("a different label was already submitted for step " + std::to_string(pending_->step), phase_);
  }
  const std::size_t step = pending_->step;
  if (!pending_label_) log({{"type", "labeled"}, {"step", step}, {"example_id", ex.id}, {"learner_label", label_int(learner_label)}});
  log({{"type", "revealed"}, {"step", step}, {"example_id", ex.id}, {"true_label", label_int(ex.y)}});
  return {{"step", step},
          {"example_id", ex.id},
          {"learner_label", label_int(learner_label)},
          {"true_label", label_int(ex.y)},
          {"correct", learner_label == ex.y},
          {"phase", to_string(phase_)},
          {"remaining", *budget_ - engine_->history().size()}};
}

json Session::evaluation_batch() {
  if (phase_ != Phase::Evaluation && phase_ != Phase::Done) require_phase(Phase::Evaluation, "evaluation");
  if (eval_batch_.empty()) {
    const TeachingPool& eval = dataset_->data.eval;
    Rng rng = make_stream(config_.seed, streams::kEvaluation);
    std::vector<std::size_t> chosen;
    for (Label y : {Label::Positive, Label::Negative}) {
      std::vector<std::size_t> cls;
      for (std::size_t i = 0; i < eval.size(); ++i) {
        if (eval[i].y == y) cls.push_back(i);
      }
      for (std::size_t i = cls.size(); i > 1; --i) std::swap(cls[i - 1], cls[uniform_index(rng, i)]);
      cls.resize(std::min(cls.size(), config_.eval_per_class));
      chosen.insert(chosen.end(), cls.begin(), cls.end());
    }
    for (std::size_t i = chosen.size(); i > 1; --i) std::swap(chosen[i - 1], chosen[uniform_index(rng, i)]);
    json ids = json::array();
    for (std::size_t i : chosen) ids.push_back(eval[i].id);
    log({{"type", "evaluation_issued"}, {"example_ids", ids}});
  }
  json items = json::array();
  for (std::size_t i : eval_batch_) items.push_back(presentation(i, false));
  return {{"items", items}, {"phase", to_string(phase_)}};
}

TeachingGainReport Session::submit_evaluation(const json& body) {
  require_phase(Phase::Evaluation, "evaluation answers");
  if (eval_batch_.empty()) throw ConflictError("fetch the evaluation batch before answering", phase_);
  const json& answers = body.is_object() && body.contains("answers") ? body["answers"] : body;
  std::map<std::string, int> given;
  auto put = [&](const std::string& id, const json& label) {
    if (!given.emplace(id, label_int(parse_label(label))).second) throw ValidationError("duplicate answer for '" + id + "'");
  };
  if (answers.is_array()) {
    for (const json& a : answers) {
      if (!a.is_object() || !a.contains("example_id") || !a["example_id"].is_string() || !a.contains("label")) {
        throw ValidationError("each answer needs example_id and label");
      }
      put(a["example_id"].get<std::string>(), a["label"]);
    }
  } else if (answers.is_object()) {
    for (const auto& [id, label] : answers.items()) put(id, label);
  } else {
    throw ValidationError("answers must be an array or an object");
  }
  std::set<std::string> batch_ids;
  for (std::size_t i : eval_batch_) batch_ids.insert(dataset_->data.eval[i].id);
  for (const auto& [id, _] : given) {
    if (!batch_ids.count(id)) throw ValidationError("'" + id + "' is not in the evaluation batch");
  }
  if (given.size() != batch_ids.size()) {
    throw ValidationError("answers cover " + std::to_string(given.size()) + " of " + std::to_string(batch_ids.size()) +
                          " evaluation items");
  }
  log({{"type", "evaluated"}, {"answers", given}});
  return *report_;
}

bool Session::authorized(std::string_view token) const {
  if (token.size() != token_.size()) return false;
  unsigned char diff = 0;
  for (std::size_t i = 0; i < token.size(); ++i) diff |= static_cast<unsigned char>(token[i] ^ token_[i]);
  return diff == 0;
}

namespace {

json profile_json(const MemoryProfile& p) {
  return {{"trial_scores", p.trial_scores}, {"n_bar", p.n_bar}, {"beta", p.beta}, {"budget", p.budget}};
}

}  // namespace

json Session::state() const {
  json events_json = json::array();
  for (const auto& e : events()) {
    events_json.push_back({{"step", e.step},
                           {"example_id", e.example_id},
                           {"learner_label", label_int(e.learner_label)},
                           {"true_label", label_int(e.true_label)},
                           {"objective", number_or_null(e.objective_value)}});
  }
  json pending = nullptr;
  if (pending_) {
    pending = {{"step", pending_->step},
               {"example_id", dataset_->data.teach[pending_->pool_index].id},
               {"objective", number_or_null(pending_->objective)},
               {"learner_label", pending_label_ ? json(label_int(*pending_label_)) : json(nullptr)}};
  }
  json batch = json::array();
  for (std::size_t i : eval_batch_) batch.push_back(dataset_->data.eval[i].id);
  return {{"seq", seq_},
          {"id", id_},
          {"token", token_},
          {"config", config_.to_json()},
          {"phase", to_string(phase_)},
          {"created_at", created_at_},
          {"updated_at", updated_at_},
          {"profile", profile_ ? profile_json(*profile_) : json(nullptr)},
          {"calibration_trials", calibration_trials_},
          {"teacher_beta", engine_ ? json(engine_->kind().beta) : json(nullptr)},
          {"budget", budget_ ? json(*budget_) : json(nullptr)},
          {"events", events_json},
          {"pending", pending},
          {"eval_batch", batch},
          {"eval_answers", eval_answers_},
          {"report", report_ ? report_->to_json() : json(nullptr)}};
}

json Session::status() const {
  json s{{"id", id_},
         {"phase", to_string(phase_)},
         {"dataset", config_.dataset},
         {"teacher", jedi::to_string(config_.teacher)},
         {"created_at", created_at_},
         {"updated_at", updated_at_},
         {"profile", profile_ ? profile_json(*profile_) : json(nullptr)},
         {"budget", budget_ ? json(*budget_) : json(nullptr)},
         {"steps_completed", events().size()},
         {"pending_step", pending_ ? json(pending_->step) : json(nullptr)},
         {"report", report_ ? report_->to_json() : json(nullptr)}};
  if (budget_) s["remaining"] = *budget_ - events().size();
  return s;
}

void Session::restore(const json& snap) {
  apply_created({{"id", snap.at("id")},
                 {"token", snap.at("token")},
                 {"config", snap.at("config")},
                 {"ts", snap.at("created_at")}});
  if (!snap.at("profile").is_null()) {
    profile_ = estimate_beta(snap["profile"].at("trial_scores").get<std::vector<int>>());
  }
  calibration_trials_ = snap.at("calibration_trials");
  if (!snap.at("budget").is_null() && !engine_) {
    begin_teaching(snap.at("teacher_beta").get<double>(), snap["budget"].get<int>());
  }
  const TeachingPool& teach = dataset_->data.teach;
  for (const json& e : snap.at("events")) {
    const std::size_t index = teach.require_index(e.at("example_id").get<std::string>());
    PendingEvent ev(e.at("step").get<std::size_t>(), teach[index], index, number_or_nan(e.at("objective")));
    ev.commit_learner_label(parse_label(e.at("learner_label")));
    engine_->record(std::move(ev).reveal(parse_label(e.at("true_label"))));
  }
  if (!snap.at("pending").is_null()) {
    const json& p = snap["pending"];
    pending_ = PendingExample{p.at("step").get<std::size_t>(), teach.require_index(p.at("example_id").get<std::string>()),
                              number_or_nan(p.at("objective"))};
    if (!p.at("learner_label").is_null()) pending_label_ = parse_label(p["learner_label"]);
  }
  for (const json& id : snap.at("eval_batch")) eval_batch_.push_back(dataset_->data.eval.require_index(id.get<std::string>()));
  eval_answers_ = snap.at("eval_answers").get<std::map<std::string, int>>();
  if (!snap.at("report").is_null()) {
    const json& r = snap["report"];
    TeachingGainReport rep;
    rep.teaching_accuracy_first_seen = r.at("teaching_accuracy_first_seen").get<double>();
    rep.evaluation_accuracy = r.at("evaluation_accuracy").get<double>();
    rep.teaching_gain = r.at("teaching_gain").get<double>();
    rep.first_seen_count = r.at("first_seen_count").get<std::size_t>();
    rep.evaluation_count = r.at("evaluation_count").get<std::size_t>();
    report_ = rep;
  }
  phase_ = parse_phase(snap.at("phase").get<std::string>());
  seq_ = snap.at("seq").get<std::uint64_t>();
  updated_at_ = snap.at("updated_at").get<std::string>();
}

void Session::write_snapshot() const { write_file_atomically(dir_ / kSnapshotName, state().dump()); }

}  // namespace jedi::service
