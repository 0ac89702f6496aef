#include "jedi/service/server.hpp"

#include <httplib.h>

#include <iostream>
#include <random>

namespace jedi::service {

namespace fs = std::filesystem;

namespace {

class Unauthorized : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Busy : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void fail(httplib::Response& res, int status, const std::string& message, std::optional<Phase> phase = std::nullopt) {
  json body{{"error", message}};
  if (phase) body["phase"] = to_string(*phase);
  send(res, status, body);
}

template <class Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const ConflictError& e) {
    fail(res, 409, e.what(), e.phase());
  } catch (const Unauthorized& e) {
    res.set_header("WWW-Authenticate", "Bearer");
    fail(res, 401, e.what());
  } catch (const NotFoundError& e) {
    fail(res, 404, e.what());
  } catch (const Busy& e) {
    res.set_header("Retry-After", "1");
    fail(res, 429, e.what());
  } catch (const ValidationError& e) {
    fail(res, 400, e.what());
  } catch (const std::invalid_argument& e) {  // ContractViolation from the core
    fail(res, 400, e.what());
  } catch (const std::exception& e) {
    fail(res, 500, e.what());
  }
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("request body is not valid JSON: ") + e.what());
  }
}

std::string bearer_token(const httplib::Request& req) {
  const std::string h = req.get_header_value("Authorization");
  constexpr std::string_view prefix = "Bearer ";
  if (h.size() <= prefix.size() || h.compare(0, prefix.size(), prefix) != 0) throw Unauthorized("missing bearer token");
  return h.substr(prefix.size());
}

std::uint64_t random_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

}  // namespace

TeachServer::TeachServer(const DatasetRegistry& registry, ServerOptions options)
    : registry_(&registry), options_(std::move(options)), http_(std::make_unique<httplib::Server>()) {
  fs::create_directories(options_.log_dir);
  for (const auto& e : fs::directory_iterator(options_.log_dir)) {
    if (!e.is_directory() || !fs::exists(e.path() / "events.jsonl")) continue;
    try {
      auto s = Session::recover(e.path(), registry);
      auto slot = std::make_shared<Slot>();
      const std::string id = s->id();
      slot->session = std::move(s);
      sessions_.emplace(id, std::move(slot));
      ++recovered_;
    } catch (const std::exception& ex) {
      std::cerr << "skipping session in " << e.path() << ": " << ex.what() << '\n';
    }
  }
  if (options_.assets_dir && !http_->set_mount_point("/assets", options_.assets_dir->string())) {
    throw ValidationError("assets directory not found: " + options_.assets_dir->string());
  }
  routes();
}

TeachServer::~TeachServer() { stop(); }

int TeachServer::bind(const std::string& host, int port) {
  if (port == 0) return http_->bind_to_any_port(host);
  return http_->bind_to_port(host, port) ? port : -1;
}

bool TeachServer::listen() { return http_->listen_after_bind(); }

void TeachServer::stop() {
  if (http_) http_->stop();
}

std::size_t TeachServer::session_count() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

std::shared_ptr<TeachServer::Slot> TeachServer::slot(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
  return it->second;
}

void TeachServer::routes() {
  auto& http = *http_;

  // Runs fn on an authorized session, exclusively for mutations (429 if
  // another mutation is in flight), shared for reads.
  auto with_session = [this](const httplib::Request& req, bool mutating, auto&& fn) {
    auto s = slot(req.matches[1]);
    const std::string token = bearer_token(req);
    if (mutating) {
      std::unique_lock lock(s->mutex, std::try_to_lock);
      if (!lock.owns_lock()) throw Busy("another request for this session is in progress; retry");
      if (!s->session->authorized(token)) throw Unauthorized("invalid token for this session");
      fn(*s->session);
    } else {
      std::shared_lock lock(s->mutex);
      if (!s->session->authorized(token)) throw Unauthorized("invalid token for this session");
      fn(*s->session);
    }
  };

  http.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    send(res, 200, {{"status", "ok"}, {"sessions", session_count()}, {"datasets", registry_->names()}});
  });

  http.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      json body = parse_body(req);
      if (!body.is_object()) throw ValidationError("session config must be a JSON object");
      if (!body.contains("seed")) body["seed"] = random_seed();
      SessionConfig config = SessionConfig::from_json(body);
      std::string id;
      {
        std::shared_lock lock(sessions_mutex_);
        do id = random_hex(8); while (sessions_.count(id));
      }
      const std::string token = random_hex(16);
      auto slot = std::make_shared<Slot>();
      slot->session = Session::create(options_.log_dir, id, token, std::move(config), *registry_);
      json out = slot->session->status();
      out["token"] = token;
      out["seed"] = slot->session->config().seed;
      {
        std::unique_lock lock(sessions_mutex_);
        sessions_.emplace(id, std::move(slot));
      }
      send(res, 201, out);
    });
  });

  http.Get(R"(/sessions/([0-9a-f]+))", [with_session](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { with_session(req, false, [&](Session& s) { send(res, 200, s.status()); }); });
  });

  http.Post(R"(/sessions/([0-9a-f]+)/calibration)", [with_session](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      with_session(req, true, [&](Session& s) {
        const MemoryProfile p = s.submit_calibration(body);
        send(res, 200, {{"trial_scores", p.trial_scores},
                        {"n_bar", p.n_bar},
                        {"beta", p.beta},
                        {"budget", *s.budget()},
                        {"phase", to_string(s.phase())}});
      });
    });
  });

  http.Get(R"(/sessions/([0-9a-f]+)/next)", [with_session](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      with_session(req, true, [&](Session& s) {
        if (s.phase() == Phase::Evaluation) {
          send(res, 409, {{"error", "teaching budget used up"},
                          {"phase", to_string(s.phase())},
                          {"next", "/sessions/" + s.id() + "/evaluation"}});
          return;
        }
        send(res, 200, s.next_example());
      });
    });
  });

  http.Post(R"(/sessions/([0-9a-f]+)/label)", [with_session](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      if (!body.is_object() || !body.contains("example_id") || !body["example_id"].is_string() ||
          !body.contains("label") || !body["label"].is_number_integer()) {
        throw ValidationError("label body needs example_id (string) and label (-1 or 1)");
      }
      const int y = body["label"].get<int>();
      if (y != 1 && y != -1) throw ValidationError("label must be -1 or 1");
      with_session(req, true, [&](Session& s) {
        send(res, 200, s.submit_label(body["example_id"].get<std::string>(), y > 0 ? Label::Positive : Label::Negative));
      });
    });
  });

  http.Get(R"(/sessions/([0-9a-f]+)/evaluation)", [with_session](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { with_session(req, true, [&](Session& s) { send(res, 200, s.evaluation_batch()); }); });
  });

  http.Post(R"(/sessions/([0-9a-f]+)/evaluation)", [with_session](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      with_session(req, true, [&](Session& s) {
        json out = s.submit_evaluation(body).to_json();
        out["phase"] = to_string(s.phase());
        send(res, 200, out);
      });
    });
  });

  http.Get(R"(/sessions/([0-9a-f]+)/report)", [with_session](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      with_session(req, false, [&](Session& s) {
        if (!s.report()) throw ConflictError("the report is available once evaluation is submitted", s.phase());
        json out = s.report()->to_json();
        out["steps"] = s.events().size();
        out["phase"] = to_string(s.phase());
        send(res, 200, out);
      });
    });
  });
}

}  // namespace jedi::service
