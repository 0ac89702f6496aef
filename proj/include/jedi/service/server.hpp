#pragma once

#include "jedi/service/session.hpp"

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

namespace httplib {
class Server;
}

namespace jedi::service {

struct ServerOptions {
  std::filesystem::path log_dir;
  std::optional<std::filesystem::path> assets_dir;  // served under /assets
};

// HTTP front end for live sessions. Sessions found under log_dir are
// recovered at construction. One mutating request per session runs at a
// time; a concurrent one gets 429.
class TeachServer {
 public:
  TeachServer(const DatasetRegistry& registry, ServerOptions options);
  ~TeachServer();

  // Binds to host:port (0 picks a free port) and returns the bound port.
  int bind(const std::string& host, int port);
  // Serves until stop(); returns false if the listener failed.
  bool listen();
  void stop();

  std::size_t session_count() const;
  std::size_t recovered_count() const { return recovered_; }

 private:
  struct Slot {
    std::shared_mutex mutex;
    std::unique_ptr<Session> session;
  };

  void routes();
  std::shared_ptr<Slot> slot(const std::string& id) const;

  const DatasetRegistry* registry_;
  ServerOptions options_;
  std::unique_ptr<httplib::Server> http_;
  mutable std::shared_mutex sessions_mutex_;
  std::unordered_map<std::string, std::shared_ptr<Slot>> sessions_;
  std::size_t recovered_ = 0;
};

}  // namespace jedi::service
