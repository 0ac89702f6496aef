#include <doctest.h>

#include "jedi/service/server.hpp"
#include "jedi/service/session.hpp"

#include <httplib.h>

#include <chrono>
#include <fstream>
#include <thread>

using namespace jedi;
using namespace jedi::service;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("jedi-svc-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

const DatasetRegistry& registry() {
  static const DatasetRegistry r = [] {
    DatasetRegistry reg;
    Mixture2DParams p;
    p.per_class = 40;
    p.eval_per_class = 20;
    reg.add("toy", gen_mixture2d(p, 1));
    return reg;
  }();
  return r;
}

// A dataset large enough that one harmonic recommendation takes a while.
const DatasetRegistry& big_registry() {
  static const DatasetRegistry r = [] {
    DatasetRegistry reg;
    GaussianParams p;
    p.per_class = 5000;
    p.teach_fraction = 0.18;
    reg.add("big", gen_gaussian10d(p, 2));
    return reg;
  }();
  return r;
}

class LiveServer {
 public:
  LiveServer(const DatasetRegistry& reg, fs::path log_dir) : server_(reg, {std::move(log_dir), std::nullopt}) {
    port_ = server_.bind("127.0.0.1", 0);
    REQUIRE(port_ > 0);
    thread_ = std::thread([this] { server_.listen(); });
    httplib::Client probe("127.0.0.1", port_);
    for (int i = 0; i < 200 && !probe.Get("/healthz"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  ~LiveServer() {
    server_.stop();
    thread_.join();
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(30, 0);
    return c;
  }
  TeachServer& server() { return server_; }

 private:
  TeachServer server_;
  int port_ = 0;
  std::thread thread_;
};

struct Reply {
  int status = 0;
  json body;
  httplib::Headers headers;
};

Reply reply(const httplib::Result& r) {
  REQUIRE(r);
  Reply out{r->status, r->body.empty() ? json(nullptr) : json::parse(r->body), r->headers};
  return out;
}

httplib::Headers auth(const std::string& token) { return {{"Authorization", "Bearer " + token}}; }

struct Handle {
  std::string id;
  std::string token;
};

Handle create(httplib::Client& c, json config) {
  const Reply r = reply(c.Post("/sessions", config.dump(), "application/json"));
  REQUIRE(r.status == 201);
  return {r.body.at("id").get<std::string>(), r.body.at("token").get<std::string>()};
}

Reply get(httplib::Client& c, const Handle& h, const std::string& suffix) {
  return reply(c.Get(("/sessions/" + h.id + suffix).c_str(), auth(h.token)));
}

Reply post(httplib::Client& c, const Handle& h, const std::string& suffix, const json& body) {
  return reply(c.Post(("/sessions/" + h.id + suffix).c_str(), auth(h.token), body.dump(), "application/json"));
}

std::vector<json> log_events(const fs::path& log_dir, const std::string& id) {
  return EventLog::read(log_dir / id / "events.jsonl");
}

json toy_config(std::uint64_t seed = 7) { return {{"dataset", "toy"}, {"seed", seed}}; }

}  // namespace

TEST_CASE("health and session creation") {
  TempDir dir("create");
  LiveServer live(registry(), dir.path);
  auto c = live.client();

  const Reply h = reply(c.Get("/healthz"));
  CHECK(h.status == 200);
  CHECK(h.body.at("datasets") == json::array({"toy"}));

  const Reply ok = reply(c.Post("/sessions", toy_config().dump(), "application/json"));
  CHECK(ok.status == 201);
  CHECK(ok.body.at("phase") == "Calibration");
  CHECK(ok.body.at("token").get<std::string>().size() == 32);
  CHECK(ok.body.at("seed") == 7);
  CHECK(live.server().session_count() == 1);

  CHECK(reply(c.Post("/sessions", R"({"seed": 1})", "application/json")).status == 400);
  CHECK(reply(c.Post("/sessions", R"({"dataset": "nope"})", "application/json")).status == 400);
  const Reply omni = reply(c.Post("/sessions", R"({"dataset": "toy", "teacher": "jedi-omniscient"})", "application/json"));
  CHECK(omni.status == 400);
  CHECK(omni.body.at("error").get<std::string>().find("learner's concept") != std::string::npos);
  CHECK(reply(c.Post("/sessions", R"({"dataset": "toy", "teacher": "nope"})", "application/json")).status == 400);
  CHECK(reply(c.Post("/sessions", R"({"dataset": "toy", "teacher": "imt-harmonic"})", "application/json")).status == 201);
  CHECK(reply(c.Post("/sessions", R"({"dataset": "toy", "beta": 1.2})", "application/json")).status == 400);
  CHECK(reply(c.Post("/sessions", "{not json", "application/json")).status == 400);

  // Without a seed the server draws one and reports it.
  const Reply seeded = reply(c.Post("/sessions", R"({"dataset": "toy"})", "application/json"));
  CHECK(seeded.status == 201);
  CHECK(seeded.body.at("seed").is_number_unsigned());
}

TEST_CASE("a supplied beta skips calibration") {
  TempDir dir("beta");
  LiveServer live(registry(), dir.path);
  auto c = live.client();
  const Handle h = create(c, {{"dataset", "toy"}, {"beta", 0.875}, {"seed", 1}});
  const Reply s = get(c, h, "");
  CHECK(s.body.at("phase") == "Teaching");
  CHECK(s.body.at("budget") == 40);
  CHECK(post(c, h, "/calibration", {{"scores", {4, 6, 8}}}).status == 409);
}

TEST_CASE("calibration sets beta and budget once") {
  TempDir dir("calib");
  LiveServer live(registry(), dir.path);
  auto c = live.client();

  const Handle a = create(c, toy_config());
  CHECK(get(c, a, "/next").status == 409);
  const Reply r = post(c, a, "/calibration", {{"scores", {4, 6, 8}}});
  CHECK(r.status == 200);
  CHECK(r.body.at("beta").get<double>() == 6.0 / 7.0);
  CHECK(r.body.at("budget") == 40);
  CHECK(r.body.at("phase") == "Teaching");
  const Reply again = post(c, a, "/calibration", {{"scores", {4, 6, 8}}});
  CHECK(again.status == 409);
  CHECK(again.body.at("phase") == "Teaching");

  const Handle b = create(c, toy_config());
  const Reply low = post(c, b, "/calibration", {{"scores", {2, 2, 3}}});
  CHECK(low.body.at("n_bar") == 2.5);
  CHECK(low.body.at("budget") == 20);

  const Handle d = create(c, toy_config());
  CHECK(post(c, d, "/calibration", {{"scores", {4, 6}}}).status == 400);
  CHECK(post(c, d, "/calibration", json::object()).status == 400);
  CHECK(get(c, d, "").body.at("phase") == "Calibration");

  // Raw trials are scored server-side: 2..4 exact, 5 wrong, in each trial.
  json trials = json::array();
  for (int t = 0; t < 3; ++t) {
    json rounds = json::array();
    for (int k = 2; k <= 5; ++k) {
      std::vector<int> shown(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i) shown[static_cast<std::size_t>(i)] = i;
      std::vector<int> back = shown;
      if (k == 5) std::swap(back[0], back[4]);
      rounds.push_back({{"set_size", k}, {"shown_order", shown}, {"recovered_order", back}});
    }
    trials.push_back({{"rounds", rounds}});
  }
  const Reply tr = post(c, d, "/calibration", {{"trials", trials}});
  CHECK(tr.status == 200);
  CHECK(tr.body.at("trial_scores") == json::array({4, 4, 4}));
  CHECK(tr.body.at("beta").get<double>() == 0.75);
}

TEST_CASE("authentication and unknown sessions") {
  TempDir dir("auth");
  LiveServer live(registry(), dir.path);
  auto c = live.client();
  const Handle h = create(c, toy_config());

  const Reply none = reply(c.Get(("/sessions/" + h.id).c_str()));
  CHECK(none.status == 401);
  CHECK(none.headers.count("WWW-Authenticate") == 1);
  CHECK(get(c, {h.id, h.token + "x"}, "").status == 401);
  CHECK(get(c, {h.id, std::string(h.token.size(), '0')}, "").status == 401);
  CHECK(get(c, {"deadbeef", h.token}, "").status == 404);
  CHECK(get(c, h, "").status == 200);
}

TEST_CASE("next is idempotent and withholds the label") {
  TempDir dir("next");
  LiveServer live(registry(), dir.path);
  auto c = live.client();
  const Handle h = create(c, {{"dataset", "toy"}, {"beta", 0.5}, {"seed", 3}});

  const Reply first = get(c, h, "/next");
  CHECK(first.status == 200);
  CHECK(first.body.at("step") == 1);
  CHECK_FALSE(first.body.contains("label"));
  CHECK_FALSE(first.body.contains("true_label"));
  CHECK(registry().find("toy").data.teach.index_of(first.body.at("example_id").get<std::string>()));
  for (int i = 0; i < 5; ++i) CHECK(get(c, h, "/next").body == first.body);

  std::size_t recommended = 0;
  for (const auto& e : log_events(dir.path, h.id)) recommended += e.at("type") == "recommended";
  CHECK(recommended == 1);
}

TEST_CASE("labels: conflicts, validation and protocol order") {
  TempDir dir("label");
  LiveServer live(registry(), dir.path);
  auto c = live.client();
  const Handle h = create(c, {{"dataset", "toy"}, {"beta", 0.5}, {"seed", 4}, {"budget", 8}});

  CHECK(post(c, h, "/label", {{"example_id", "m000"}, {"label", 1}}).status == 409);
  const std::string id = get(c, h, "/next").body.at("example_id").get<std::string>();
  CHECK(post(c, h, "/label", {{"example_id", id + "-other"}, {"label", 1}}).status == 409);
  CHECK(post(c, h, "/label", {{"example_id", id}, {"label", 0}}).status == 400);
  CHECK(post(c, h, "/label", {{"example_id", id}}).status == 400);

  const Reply r = post(c, h, "/label", {{"example_id", id}, {"label", 1}});
  CHECK(r.status == 200);
  const int truth = r.body.at("true_label").get<int>();
  CHECK(r.body.at("correct") == (truth == 1));
  CHECK(r.body.at("remaining") == 7);
  // The step is closed; the same label again is a conflict.
  CHECK(post(c, h, "/label", {{"example_id", id}, {"label", 1}}).status == 409);

  for (int step = 2; step <= 8; ++step) {
    const std::string next = get(c, h, "/next").body.at("example_id").get<std::string>();
    const Reply lr = post(c, h, "/label", {{"example_id", next}, {"label", step % 2 ? 1 : -1}});
    CHECK(lr.body.at("phase") == (step == 8 ? "Evaluation" : "Teaching"));
  }

  // In the log every learner label precedes the reveal of the same step.
  int last_labeled = 0, reveals = 0;
  for (const auto& e : log_events(dir.path, h.id)) {
    if (e.at("type") == "labeled") last_labeled = e.at("step").get<int>();
    if (e.at("type") == "revealed") {
      CHECK(e.at("step").get<int>() == last_labeled);
      ++reveals;
    }
  }
  CHECK(reveals == 8);

  const Reply after = get(c, h, "/next");
  CHECK(after.status == 409);
  CHECK(after.body.at("next") == "/sessions/" + h.id + "/evaluation");
}

TEST_CASE("evaluation and report") {
  TempDir dir("eval");
  LiveServer live(registry(), dir.path);
  auto c = live.client();
  const Handle h = create(c, {{"dataset", "toy"}, {"beta", 0.5}, {"seed", 5}, {"budget", 6}, {"eval_per_class", 4}});

  CHECK(get(c, h, "/evaluation").status == 409);
  CHECK(get(c, h, "/report").status == 409);
  std::size_t correct = 0;
  std::set<std::string> seen;
  for (int step = 1; step <= 6; ++step) {
    const std::string id = get(c, h, "/next").body.at("example_id").get<std::string>();
    const Reply r = post(c, h, "/label", {{"example_id", id}, {"label", 1}});
    if (seen.insert(id).second) correct += r.body.at("correct").get<bool>();
  }

  const Reply batch = get(c, h, "/evaluation");
  CHECK(batch.status == 200);
  const json items = batch.body.at("items");
  REQUIRE(items.size() == 8);
  CHECK(get(c, h, "/evaluation").body == batch.body);
  const auto& eval = registry().find("toy").data.eval;
  json answers = json::array();
  int pos = 0;
  for (const auto& it : items) {
    CHECK_FALSE(it.contains("label"));
    const std::string id = it.at("example_id").get<std::string>();
    const auto idx = eval.index_of(id);
    REQUIRE(idx);
    CHECK_FALSE(registry().find("toy").data.teach.index_of(id));
    pos += eval[*idx].y == Label::Positive;
    answers.push_back({{"example_id", id}, {"label", static_cast<int>(eval[*idx].y)}});
  }
  CHECK(pos == 4);

  json partial = answers;
  partial.erase(partial.end() - 1);
  CHECK(post(c, h, "/evaluation", partial).status == 400);
  CHECK(get(c, h, "/report").status == 409);

  const Reply done = post(c, h, "/evaluation", answers);
  CHECK(done.status == 200);
  CHECK(done.body.at("phase") == "Done");
  CHECK(done.body.at("evaluation_accuracy") == 1.0);
  const double teach_acc = static_cast<double>(correct) / static_cast<double>(seen.size());
  CHECK(done.body.at("teaching_accuracy_first_seen").get<double>() == doctest::Approx(teach_acc));
  CHECK(done.body.at("teaching_gain").get<double>() == doctest::Approx(1.0 - teach_acc));

  const Reply report = get(c, h, "/report");
  CHECK(report.status == 200);
  CHECK(report.body.at("teaching_gain") == done.body.at("teaching_gain"));
  CHECK(report.body.at("steps") == 6);
  CHECK(post(c, h, "/evaluation", answers).status == 409);
}

TEST_CASE("teaching gain counts first-seen examples only") {
  auto ev = [](std::size_t step, const std::string& id, bool correct) {
    TeachingEvent e;
    e.step = step;
    e.example_id = id;
    e.true_label = Label::Positive;
    e.learner_label = correct ? Label::Positive : Label::Negative;
    return e;
  };
  std::vector<TeachingEvent> events{ev(1, "a", true),  ev(2, "b", true),  ev(3, "c", true), ev(4, "a", false),
                                    ev(5, "d", false), ev(6, "e", false), ev(7, "b", false)};
  const auto all_right = teaching_gain(events, 10, 10);
  CHECK(all_right.first_seen_count == 5);
  CHECK(all_right.teaching_accuracy_first_seen == doctest::Approx(0.6));
  CHECK(all_right.teaching_gain == doctest::Approx(0.4));
  const auto all_wrong = teaching_gain(events, 0, 10);
  CHECK(all_wrong.teaching_gain == doctest::Approx(-0.6));
  CHECK_THROWS(teaching_gain(events, 3, 0));
}

namespace {

// Drives a session through n label submissions with a fixed answer policy.
void drive(Session& s, std::size_t n, Label answer) {
  for (std::size_t i = 0; i < n && s.phase() == Phase::Teaching; ++i) {
    const json p = s.next_example();
    s.submit_label(p.at("example_id").get<std::string>(), answer);
  }
}

}  // namespace

TEST_CASE("recommendations are computed once per step and replay offline") {
  TempDir dir("replay");
  SessionConfig cfg;
  cfg.dataset = "toy";
  cfg.beta = 0.75;
  cfg.seed = 11;
  auto s = Session::create(dir.path, "abc", "tok", cfg, registry());
  drive(*s, 5, Label::Positive);
  for (int i = 0; i < 4; ++i) s->next_example();
  CHECK(s->recommendations_computed() == 6);

  const DatasetEntry& d = registry().find("toy");
  TeacherKind kind;
  kind.variant = TeacherVariant::JediHarmonic;
  kind.beta = 0.75;
  kind.eta = EtaSchedule::decaying(cfg.eta0, *cfg.eta_c);
  kind.max_iter = *s->budget();
  kind.cold_start_count = 5;
  TeachingEngine offline(kind, d.data.teach, d.target, 11, std::nullopt, d.estimator);
  for (const auto& e : s->events()) offline.record(e);
  const json pending = s->next_example();
  CHECK(pending.at("step") == 6);
  CHECK(d.data.teach[offline.recommend().index].id == pending.at("example_id"));
}

TEST_CASE("recovery from snapshot plus tail equals recovery from the log alone") {
  TempDir dir("recover");
  SessionConfig cfg;
  cfg.dataset = "toy";
  cfg.seed = 12;
  cfg.budget = 30;
  json expected;
  {
    auto s = Session::create(dir.path, "s1", "tok", cfg, registry());
    s->submit_calibration({{"scores", {3, 5, 5}}});
    drive(*s, 17, Label::Negative);
    s->next_example();  // leave a pending example
    expected = s->state();
    CHECK(s->log_sequence() > 40);
  }
  const fs::path sdir = dir.path / "s1";
  REQUIRE(fs::exists(sdir / "snapshot.json"));
  CHECK(Session::recover(sdir, registry())->state() == expected);

  fs::remove(sdir / "snapshot.json");
  auto from_log = Session::recover(sdir, registry());
  CHECK(from_log->state() == expected);

  // A torn final write is dropped and the session keeps going.
  { std::ofstream(sdir / "events.jsonl", std::ios::app) << R"({"type":"labeled","st)"; }
  auto torn = Session::recover(sdir, registry());
  CHECK(torn->state() == expected);
  drive(*torn, 1, Label::Positive);
  CHECK(Session::recover(sdir, registry())->state() == torn->state());
}

TEST_CASE("a label committed before a crash completes on resubmission") {
  TempDir dir("crash");
  SessionConfig cfg;
  cfg.dataset = "toy";
  cfg.beta = 0.5;
  cfg.seed = 13;
  std::string id;
  {
    auto s = Session::create(dir.path, "s2", "tok", cfg, registry());
    id = s->next_example().at("example_id").get<std::string>();
  }
  // Simulate a crash between the labeled and revealed appends.
  {
    EventLog log(dir.path / "s2" / "events.jsonl");
    log.append({{"type", "labeled"}, {"seq", 3}, {"ts", utc_timestamp()}, {"step", 1}, {"example_id", id},
                {"learner_label", -1}});
  }
  auto s = Session::recover(dir.path / "s2", registry());
  CHECK(s->state().at("pending").at("learner_label") == -1);
  CHECK_THROWS_AS(s->submit_label(id, Label::Positive), ConflictError);
  const json r = s->submit_label(id, Label::Negative);
  CHECK(r.at("step") == 1);
  CHECK(s->events().size() == 1);
  std::size_t labeled = 0;
  for (const auto& e : EventLog::read(dir.path / "s2" / "events.jsonl")) labeled += e.at("type") == "labeled";
  CHECK(labeled == 1);
}

TEST_CASE("a restarted server recovers its sessions") {
  TempDir dir("restart");
  Handle h;
  json before;
  {
    LiveServer live(registry(), dir.path);
    auto c = live.client();
    h = create(c, {{"dataset", "toy"}, {"beta", 0.5}, {"seed", 14}});
    for (int i = 0; i < 3; ++i) {
      const std::string id = get(c, h, "/next").body.at("example_id").get<std::string>();
      post(c, h, "/label", {{"example_id", id}, {"label", -1}});
    }
    get(c, h, "/next");
    before = get(c, h, "").body;
  }
  LiveServer live(registry(), dir.path);
  CHECK(live.server().recovered_count() == 1);
  auto c = live.client();
  CHECK(get(c, h, "").body == before);
  CHECK(get(c, h, "/next").body.at("step") == 4);
}

TEST_CASE("sessions are isolated from each other") {
  TempDir dir("iso");
  LiveServer live(registry(), dir.path);
  auto c = live.client();
  const json cfg{{"dataset", "toy"}, {"beta", 0.75}, {"seed", 21}, {"budget", 12}};
  const Handle a = create(c, cfg), b = create(c, cfg);
  for (int step = 0; step < 12; ++step) {
    for (const auto& [h, y] : {std::pair{a, 1}, std::pair{b, -1}}) {
      const std::string id = get(c, h, "/next").body.at("example_id").get<std::string>();
      post(c, h, "/label", {{"example_id", id}, {"label", y}});
    }
  }
  const Handle solo = create(c, cfg);
  for (int step = 0; step < 12; ++step) {
    const std::string id = get(c, solo, "/next").body.at("example_id").get<std::string>();
    post(c, solo, "/label", {{"example_id", id}, {"label", 1}});
  }
  auto sequence = [&](const Handle& h) {
    std::vector<std::string> ids;
    for (const auto& e : log_events(dir.path, h.id))
      if (e.at("type") == "revealed") ids.push_back(e.at("example_id").get<std::string>());
    return ids;
  };
  CHECK(sequence(a) == sequence(solo));
  CHECK(sequence(a).size() == 12);
}

TEST_CASE("a concurrent mutation is turned away with 429") {
  TempDir dir("busy");
  LiveServer live(big_registry(), dir.path);
  auto c = live.client();
  const Handle h = create(c, {{"dataset", "big"}, {"beta", 0.5}, {"seed", 1}, {"cold_start", 0}, {"budget", 5}});
  const std::string first = get(c, h, "/next").body.at("example_id").get<std::string>();
  post(c, h, "/label", {{"example_id", first}, {"label", 1}});

  // The second step runs a harmonic solve over the whole pool.
  Reply slow;
  std::thread worker([&] {
    auto c2 = live.client();
    slow = get(c2, h, "/next");
  });
  Reply busy;
  for (int attempt = 0; attempt < 200; ++attempt) {
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    busy = get(c, h, "/next");
    if (busy.status == 429) break;
  }
  worker.join();
  CHECK(busy.status == 429);
  CHECK(busy.headers.count("Retry-After") == 1);
  CHECK(slow.status == 200);
  CHECK(get(c, h, "/next").body == slow.body);
  // Reads are not blocked by the exclusive lock once it is released.
  CHECK(get(c, h, "").status == 200);
}
