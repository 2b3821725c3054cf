#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "datalabel/session.hpp"

namespace httplib {
class Server;
}

namespace datalabel {

struct ServiceConfig {
  std::string bind_address = "127.0.0.1";
  /// 0 binds an ephemeral port (see Service::port()).
  int port = 8080;
  std::string session_path = "session.dls";
  std::vector<std::string> cors_origins;
  std::size_t max_request_bytes = 64u << 20;

  void validate() const;
};

/// Session settings from a JSON object; absent fields keep their defaults,
/// unknown fields are rejected.
SessionConfig session_config_from_json(const nlohmann::json& j);

/// Flat stats object: quality metrics, coverage, training status and stop decision.
nlohmann::json stats_json(const Session& session);

class Service {
 public:
  /// Loads `session_path` when it exists. Throws on an unreadable or corrupt file.
  explicit Service(ServiceConfig config);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds the listening socket; throws Error(kIo) when the port is taken.
  void bind();
  /// Serves until stop(). Binds first if needed.
  void listen();
  void stop();
  int port() const { return port_; }

 private:
  void install_routes();
  void persist();
  Session& require_session();

  ServiceConfig config_;
  std::unique_ptr<httplib::Server> server_;
  int port_ = -1;
  std::mutex mutex_;
  std::optional<Session> session_;
};

/// Serves until SIGINT or SIGTERM.
void serve(Service& service);

}  // namespace datalabel
