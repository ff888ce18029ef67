#pragma once

// HTTP/JSON front end for the advisor session store.

#include <memory>
#include <string>

#include "spkg/advisor.hpp"

namespace spkg::advisor {

struct HttpOptions {
  bool enable_replay = false;   // exposes GET /sessions/{id}/replay
  std::string cors_origin = "*";
};

class AdvisorServer {
 public:
  AdvisorServer(SessionStore& store, HttpOptions options = {});
  ~AdvisorServer();
  AdvisorServer(const AdvisorServer&) = delete;
  AdvisorServer& operator=(const AdvisorServer&) = delete;

  /// Binds to host:port (port 0 picks a free port). Returns false on failure.
  bool bind(const std::string& host, int port);
  int port() const;
  /// Serves until stop() is called. Requires a successful bind().
  bool listen();
  void stop();
  /// Blocks until the server accepts connections.
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Splits "host:port"; a bare port means 127.0.0.1.
std::pair<std::string, int> parse_address(const std::string& addr);

}  // namespace spkg::advisor
