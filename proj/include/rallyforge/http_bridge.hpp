#pragma once

#include "rallyforge/session.hpp"

#include <memory>
#include <string>

namespace rallyforge {

/// Same messages as the framed TCP protocol, for clients that can only speak
/// HTTP: POST /rpc with one request object, answered by a JSON array of the
/// replies in order. GET /health answers {"ok": true}.
class HttpBridge {
 public:
  explicit HttpBridge(SessionManager& manager);
  ~HttpBridge();
  /// Port 0 picks a free port; returns the bound port. Throws std::runtime_error.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace rallyforge
