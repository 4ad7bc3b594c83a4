#include "rallyforge/http_bridge.hpp"

#include <httplib.h>

#include <stdexcept>

namespace rallyforge {

using nlohmann::json;

struct HttpBridge::Impl {
  SessionManager& manager;
  httplib::Server server;
};

HttpBridge::HttpBridge(SessionManager& manager) : impl_(new Impl{manager, {}}) {
  auto& srv = impl_->server;
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  srv.Options("/rpc", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  srv.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"ok":true})", "application/json");
  });
  srv.Post("/rpc", [this](const httplib::Request& req, httplib::Response& res) {
    json request;
    try {
      request = json::parse(req.body);
    } catch (const json::parse_error& e) {
      res.status = 400;
      res.set_content(json::array({{{"type", "error"}, {"code", "bad-request"}, {"message", e.what()}}}).dump(),
                      "application/json");
      return;
    }
    res.set_content(json(impl_->manager.handle(request)).dump(), "application/json");
  });
}

HttpBridge::~HttpBridge() {
  stop();
}

int HttpBridge::bind(const std::string& host, int port) {
  const std::string h = host.empty() || host == "localhost" ? "127.0.0.1" : host;
  if (port == 0) {
    const int p = impl_->server.bind_to_any_port(h);
    if (p < 0) throw std::runtime_error("cannot bind HTTP bridge on " + h);
    return p;
  }
  if (!impl_->server.bind_to_port(h, port))
    throw std::runtime_error("cannot bind HTTP bridge on " + h + ":" + std::to_string(port));
  return port;
}

void HttpBridge::run() {
  impl_->server.listen_after_bind();
}

void HttpBridge::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace rallyforge
