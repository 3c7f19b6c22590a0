#include <atomic>

#include <httplib.h>

#include "uavllm/error.hpp"
#include "uavllm/gateway.hpp"

namespace uavllm {

namespace {

constexpr auto kTelemetryPoll = std::chrono::milliseconds(200);

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
  send_json(res, http_status_for(e.code()),
            {{"schema", kGatewaySchema}, {"error", e.code_name()}, {"message", e.what()}});
}

nlohmann::json parse_body(const httplib::Request& req) {
  const auto j = nlohmann::json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::kInvalidArguments, "request body must be a JSON object");
  }
  return j;
}

std::string string_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw Error(ErrorCode::kInvalidArguments, std::string("missing string field '") + key + "'");
  }
  return j[key].get<std::string>();
}

/// Wraps a handler so library errors become JSON error responses.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const std::exception& e) {
      send_json(res, 500, {{"schema", kGatewaySchema}, {"error", "Internal"}, {"message", e.what()}});
    }
  };
}

}  // namespace

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissionNotFound:
    case ErrorCode::kSessionNotFound: return 404;
    case ErrorCode::kConflict:
    case ErrorCode::kBusy: return 409;
    case ErrorCode::kBudgetExceeded: return 429;
    case ErrorCode::kInvalidArguments: return 400;
    default: return 500;
  }
}

struct GatewayServer::Impl {
  Gateway& gateway;
  httplib::Server server;
  std::atomic<bool> stopping{false};

  explicit Impl(Gateway& g) : gateway(g) {}
};

GatewayServer::GatewayServer(Gateway& gateway) : impl_(std::make_unique<Impl>(gateway)) {
  Impl& im = *impl_;
  Gateway& gw = gateway;
  auto& svr = im.server;

  // The operator console is served from another origin.
  svr.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  svr.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });

  svr.Get("/v1/missions", guarded([&gw](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, gw.list_missions());
          }));
  svr.Get("/v1/tools", guarded([](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, export_schemas());
          }));
  svr.Get("/v1/sessions", guarded([&gw](const httplib::Request&, httplib::Response& res) {
            nlohmann::json list = nlohmann::json::array();
            for (const SessionHandle& h : gw.sessions()) list.push_back(handle_to_json(h));
            send_json(res, 200, {{"schema", kGatewaySchema}, {"sessions", list}});
          }));
  svr.Post("/v1/sessions", guarded([&gw](const httplib::Request& req, httplib::Response& res) {
             const nlohmann::json body = parse_body(req);
             const MissionMode mode =
                 body.contains("mode") ? parse_mode(string_field(body, "mode")) : MissionMode::kLlm;
             send_json(res, 201,
                       handle_to_json(gw.create_session(string_field(body, "mission_id"), mode)));
           }));
  svr.Get(R"(/v1/sessions/([^/]+))",
          guarded([&gw](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, gw.status(req.matches[1]));
          }));
  svr.Post(R"(/v1/sessions/([^/]+)/prompt)",
           [&gw](const httplib::Request& req, httplib::Response& res) {
             try {
               const nlohmann::json body = parse_body(req);
               gw.submit_prompt(req.matches[1], body.value("text", ""));
               send_json(res, 202,
                         {{"schema", kGatewaySchema}, {"accepted", true},
                          {"session_id", req.matches[1].str()}});
             } catch (const Error& e) {
               send_json(res, http_status_for(e.code()),
                         {{"schema", kGatewaySchema},
                          {"accepted", false},
                          {"error", e.code_name()},
                          {"message", e.what()}});
             }
           });
  svr.Get(R"(/v1/sessions/([^/]+)/log)",
          guarded([&gw](const httplib::Request& req, httplib::Response& res) {
            res.set_content(log_to_ndjson(gw.log(req.matches[1])), "application/x-ndjson");
          }));
  svr.Get(R"(/v1/sessions/([^/]+)/telemetry)",
          guarded([&gw, &im](const httplib::Request& req, httplib::Response& res) {
            auto sub = std::make_shared<TelemetrySubscription>(gw.subscribe(req.matches[1]));
            res.set_chunked_content_provider(
                "application/x-ndjson", [sub, &im](std::size_t, httplib::DataSink& sink) {
                  while (!im.stopping.load()) {
                    if (!sink.is_writable()) return false;
                    auto frame = sub->next(kTelemetryPoll);
                    if (frame) {
                      const std::string line = frame->dump() + "\n";
                      if (!sink.write(line.data(), line.size())) return false;
                      if (sub->ended()) sink.done();
                      return true;
                    }
                    if (sub->ended()) break;
                  }
                  sink.done();
                  return true;
                });
          }));
}

GatewayServer::~GatewayServer() { stop(); }

int GatewayServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound <= 0) throw Error(ErrorCode::kConflict, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::kConflict, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void GatewayServer::serve() { impl_->server.listen_after_bind(); }

void GatewayServer::stop() {
  impl_->stopping = true;
  impl_->server.stop();
}

}  // namespace uavllm
