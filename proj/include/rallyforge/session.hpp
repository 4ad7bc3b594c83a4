#pragma once

#include "rallyforge/behavior.hpp"
#include "rallyforge/clipdb.hpp"
#include "rallyforge/config.hpp"
#include "rallyforge/rally.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace rallyforge {

/// Ball and player samples in snapshots.
inline constexpr double kSnapshotDt = 0.02;
/// Largest accepted frame payload.
inline constexpr std::uint32_t kMaxFrame = 16u << 20;

/// 4-byte big-endian length, then the UTF-8 JSON text.
std::string encode_frame(const nlohmann::json& message);
/// Pulls complete frames off the front of `buffer`. Throws std::runtime_error
/// on an oversized length or a payload that is not JSON.
std::vector<nlohmann::json> decode_frames(std::string& buffer);

/// One interactive point. All methods are called under the owning manager's
/// per-session lock.
class Session {
 public:
  Session(std::string id, const ClipDatabase& db, std::array<const BehaviorModel*, 2> models,
          std::array<std::string, 2> players, std::optional<int> human, int server, int point, std::uint64_t seed,
          const RallyConfig& config);

  const std::string& id() const { return id_; }
  std::optional<int> human() const { return human_; }
  Rally& rally() { return rally_; }
  nlohmann::json snapshot();
  std::size_t logged() const { return logged_; }
  void set_logged(std::size_t n) { logged_ = n; }

 private:
  std::string id_;
  std::optional<int> human_;
  Rally rally_;
  std::size_t logged_ = 0;  ///< events already sent in step acks
  std::uint64_t seq_ = 0;
};

/// Transport-independent request handling. Thread safe: sessions are isolated
/// and each one is serialized by its own lock.
class SessionManager {
 public:
  SessionManager(const ClipDatabase& db, std::map<std::string, BehaviorModel> models, EngineConfig config = {});

  /// Replies to one request, in order. Never throws for bad input; failures
  /// come back as `error` messages.
  std::vector<nlohmann::json> handle(const nlohmann::json& request);
  std::size_t session_count() const;

 private:
  struct Entry {
    std::mutex mu;
    std::unique_ptr<Session> session;
  };
  std::vector<nlohmann::json> create(const nlohmann::json& req);
  std::vector<nlohmann::json> control(Session& s, const nlohmann::json& req);
  std::vector<nlohmann::json> step(Session& s);
  std::shared_ptr<Entry> find(const std::string& id) const;

  const ClipDatabase& db_;
  std::map<std::string, BehaviorModel> models_;
  EngineConfig config_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::uint64_t next_id_ = 1;
};

/// Length-prefixed frames over TCP, one reader thread per connection.
class TcpServer {
 public:
  explicit TcpServer(SessionManager& manager);
  ~TcpServer();
  /// Binds and listens; port 0 picks a free port. Throws std::runtime_error.
  void bind(const std::string& host, int port);
  int port() const { return port_; }
  /// Accept loop; returns after stop().
  void run();
  void stop();

 private:
  void serve_connection(int fd);

  SessionManager& manager_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::mutex mu_;
  std::vector<int> clients_;
  bool stopping_ = false;
};

/// Blocking client for the framed protocol; used by tools and tests.
class TcpClient {
 public:
  TcpClient(const std::string& host, int port);
  ~TcpClient();
  void send(const nlohmann::json& message);
  nlohmann::json receive();

 private:
  int fd_ = -1;
  std::string buffer_;
};

/// "host:port" with the port required.
std::pair<std::string, int> parse_bind(const std::string& s);

}  // namespace rallyforge
