#include "spkg/advisor_http.hpp"

#include <httplib.h>

#include <charconv>

namespace spkg::advisor {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

json parse_body(const httplib::Request& req, bool allow_empty) {
  if (req.body.empty()) {
    if (allow_empty) return json::object();
    throw AdvisorError(400, "bad_request", "request body is empty");
  }
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw AdvisorError(400, "bad_json", std::string("malformed JSON: ") + e.what());
  }
}

// Runs a handler and maps exceptions to the error envelope.
template <class F>
httplib::Server::Handler wrap(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const AdvisorError& e) {
      send(res, e.status(), e.body());
    } catch (const ValidationError& e) {
      send(res, 422, AdvisorError(422, "invalid_input", e.what(), e.field()).body());
    } catch (const json::exception& e) {
      send(res, 422, AdvisorError(422, "invalid_input", e.what()).body());
    } catch (const std::exception& e) {
      send(res, 500, AdvisorError(500, "internal", e.what()).body());
    }
  };
}

}  // namespace

struct AdvisorServer::Impl {
  SessionStore& store;
  HttpOptions options;
  httplib::Server server;
  int port = -1;

  Impl(SessionStore& s, HttpOptions o) : store(s), options(std::move(o)) { routes(); }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", options.cors_origin},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Get("/healthz", wrap([](const httplib::Request&, httplib::Response& res) {
      send(res, 200, {{"status", "ok"}});
    }));
    server.Post("/sessions", wrap([this](const httplib::Request& req, httplib::Response& res) {
      send(res, 200, store.create(parse_body(req, false)));
    }));
    server.Get(R"(/sessions/([0-9a-f]+))", wrap([this](const httplib::Request& req, httplib::Response& res) {
      send(res, 200, store.get(req.matches[1]));
    }));
    server.Post(R"(/sessions/([0-9a-f]+)/suggest)", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req, true);
      std::string mode = body.value("mode", std::string("single"));
      if (req.has_param("mode")) mode = req.get_param_value("mode");
      std::optional<int> expected;
      if (body.contains("expected_version")) {
        if (!body.at("expected_version").is_number_integer())
          throw AdvisorError(422, "invalid_input", "expected_version must be an integer", "expected_version");
        expected = body.at("expected_version").get<int>();
      }
      send(res, 200, store.suggest(req.matches[1], mode_from_string(mode), expected));
    }));
    server.Post(R"(/sessions/([0-9a-f]+)/observations)",
                wrap([this](const httplib::Request& req, httplib::Response& res) {
                  send(res, 200, store.observe(req.matches[1], parse_body(req, false)));
                }));
    server.Get(R"(/sessions/([0-9a-f]+)/posterior)", wrap([this](const httplib::Request& req, httplib::Response& res) {
      send(res, 200, store.posterior(req.matches[1]));
    }));
    server.Get(R"(/sessions/([0-9a-f]+)/history)", wrap([this](const httplib::Request& req, httplib::Response& res) {
      send(res, 200, store.history(req.matches[1]));
    }));
    if (options.enable_replay) {
      server.Get(R"(/sessions/([0-9a-f]+)/replay)", wrap([this](const httplib::Request& req, httplib::Response& res) {
        send(res, 200, store.replay_check(req.matches[1]));
      }));
    }
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty() && res.status == 404)
        send(res, 404, AdvisorError(404, "not_found", "no such route").body());
    });
  }
};

AdvisorServer::AdvisorServer(SessionStore& store, HttpOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(options))) {}

AdvisorServer::~AdvisorServer() = default;

bool AdvisorServer::bind(const std::string& host, int port) {
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port(host);
    return impl_->port > 0;
  }
  if (!impl_->server.bind_to_port(host, port)) return false;
  impl_->port = port;
  return true;
}

int AdvisorServer::port() const { return impl_->port; }
bool AdvisorServer::listen() { return impl_->server.listen_after_bind(); }
void AdvisorServer::stop() { impl_->server.stop(); }
void AdvisorServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

std::pair<std::string, int> parse_address(const std::string& addr) {
  const auto colon = addr.rfind(':');
  const std::string host = colon == std::string::npos ? "127.0.0.1" : addr.substr(0, colon);
  const std::string port_s = colon == std::string::npos ? addr : addr.substr(colon + 1);
  int port = -1;
  const auto [ptr, ec] = std::from_chars(port_s.data(), port_s.data() + port_s.size(), port);
  if (ec != std::errc() || ptr != port_s.data() + port_s.size() || port < 0 || port > 65535 || host.empty())
    throw std::invalid_argument("address must be host:port, got '" + addr + "'");
  return {host, port};
}

}  // namespace spkg::advisor
