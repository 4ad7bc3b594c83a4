#include "rallyforge/session.hpp"

#include "rallyforge/errors.hpp"
#include "rallyforge/serialize.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <thread>

namespace rallyforge {

using nlohmann::json;
using io::vec_json;

// --- framing -----------------------------------------------------------------------------

std::string encode_frame(const json& message) {
  const std::string body = message.dump();
  if (body.size() > kMaxFrame) throw std::runtime_error("frame too large");
  const auto n = static_cast<std::uint32_t>(body.size());
  std::string out;
  out.reserve(4 + body.size());
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<char>((n >> shift) & 0xff));
  out += body;
  return out;
}

std::vector<json> decode_frames(std::string& buffer) {
  std::vector<json> out;
  std::size_t pos = 0;
  while (buffer.size() - pos >= 4) {
    std::uint32_t n = 0;
    for (int i = 0; i < 4; ++i) n = n << 8 | static_cast<unsigned char>(buffer[pos + i]);
    if (n > kMaxFrame) throw std::runtime_error("frame length " + std::to_string(n) + " exceeds the limit");
    if (buffer.size() - pos - 4 < n) break;
    try {
      out.push_back(json::parse(buffer.begin() + static_cast<std::ptrdiff_t>(pos + 4),
                                buffer.begin() + static_cast<std::ptrdiff_t>(pos + 4 + n)));
    } catch (const json::parse_error& e) {
      throw std::runtime_error(std::string("frame is not JSON: ") + e.what());
    }
    pos += 4 + n;
  }
  buffer.erase(0, pos);
  return out;
}

// --- sessions ----------------------------------------------------------------------------

Session::Session(std::string id, const ClipDatabase& db, std::array<const BehaviorModel*, 2> models,
                 std::array<std::string, 2> players, std::optional<int> human, int server, int point,
                 std::uint64_t seed, const RallyConfig& config)
    : id_(std::move(id)), human_(human), rally_(db, models, std::move(players), server, point, seed, config) {}

json Session::snapshot() {
  const RallyState& s = rally_.state();
  const double clock = rally_.clock();
  json snap = {{"type", "state_snapshot"},
               {"session", id_},
               {"seq", seq_++},
               {"phase", std::string(to_string(s.phase))},
               {"shot_index", s.responses},
               {"clock", clock},
               {"server", s.server},
               {"service_court", s.service_court == ServiceCourt::Deuce ? "deuce" : "ad"},
               {"human", human_ ? json(*human_) : json(nullptr)}};

  // Sample window: the active flight, or nothing before the serve.
  double t0 = clock, t1 = clock;
  json ball = nullptr;
  if (s.phase != RallyPhase::Serving) {
    ball = json::object();
    ball["start_time"] = s.ball_start;
    ball["end_time"] = s.ball_start + s.ball.end_time;
    json samples = json::array();
    const int n = static_cast<int>(std::floor(s.ball.end_time / kSnapshotDt + 1e-9));
    for (int i = 0; i <= n; ++i) {
      const double t = i * kSnapshotDt;
      const Vec3 p = s.ball.position_at(t);
      samples.push_back({s.ball_start + t, p.x(), p.y(), p.z()});
    }
    if (n * kSnapshotDt < s.ball.end_time) {
      const Vec3 p = s.ball.end_pos;
      samples.push_back({s.ball_start + s.ball.end_time, p.x(), p.y(), p.z()});
    }
    ball["samples"] = std::move(samples);
    t0 = s.ball_start;
    t1 = s.ball_start + s.ball.end_time;
  }
  snap["ball"] = std::move(ball);

  json players = json::array();
  for (int i = 0; i < 2; ++i) {
    const PlayerState& p = s.players[i];
    json path = json::array();
    for (double t = t0;; t += kSnapshotDt) {
      const double tt = std::min(t, t1);
      const Vec2 x = rally_.player_position(i, tt);
      path.push_back({tt, x.x(), x.y()});
      if (tt >= t1) break;
    }
    players.push_back({{"id", p.id},
                       {"side", i},
                       {"position", vec_json(rally_.player_position(i, clock))},
                       {"velocity", vec_json(rally_.player_velocity(i, clock))},
                       {"recovery_target", vec_json(p.recovery_target)},
                       {"clip", p.clip ? json(p.clip->id) : json(nullptr)},
                       {"pending_override", rally_.has_pending_override(i)},
                       {"path", std::move(path)}});
  }
  snap["players"] = std::move(players);

  json last = nullptr;
  const auto& ev = rally_.events();
  for (auto it = ev.rbegin(); it != ev.rend(); ++it)
    if ((*it)["event"] == "shot_cycle") {
      last = {{"player", (*it)["player"]}, {"shot", (*it)["shot"]}, {"outcome", (*it)["outcome"]}};
      if (it->contains("decision")) last["decision"] = (*it)["decision"];
      if (it->contains("clip")) last["clip"] = (*it)["clip"];
      break;
    }
  snap["last_decision"] = std::move(last);
  snap["outcome"] = s.phase == RallyPhase::Ended
                        ? json{{"winner", s.winner ? json(s.players[*s.winner].id) : json(nullptr)},
                               {"reason", std::string(to_string(s.reason))}}
                        : json(nullptr);
  return snap;
}

namespace {

json error(const std::string& code, const std::string& message, const std::string& session = {}) {
  json e = {{"type", "error"}, {"code", code}, {"message", message}};
  if (!session.empty()) e["session"] = session;
  return e;
}

struct BadRequest : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename T>
T field(const json& req, const char* key, T fallback) {
  auto it = req.find(key);
  if (it == req.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw BadRequest(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

SessionManager::SessionManager(const ClipDatabase& db, std::map<std::string, BehaviorModel> models,
                               EngineConfig config)
    : db_(db), models_(std::move(models)), config_(std::move(config)) {
  config_.validate();
}

std::size_t SessionManager::session_count() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

std::shared_ptr<SessionManager::Entry> SessionManager::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::vector<json> SessionManager::handle(const json& request) {
  std::vector<json> out;
  try {
    if (!request.is_object()) throw BadRequest("request must be a JSON object");
    const std::string type = field<std::string>(request, "type", "");
    if (type == "create_session") {
      out = create(request);
    } else if (type == "control_input" || type == "step" || type == "get_snapshot" || type == "close_session") {
      const std::string id = field<std::string>(request, "session", "");
      if (type == "close_session") {
        std::lock_guard lock(mu_);
        if (sessions_.erase(id)) out.push_back({{"type", "session_closed"}, {"session", id}});
        else out.push_back(error("session-not-found", "no session '" + id + "'", id));
      } else if (auto entry = find(id)) {
        std::lock_guard lock(entry->mu);
        Session& s = *entry->session;
        if (type == "control_input") out = control(s, request);
        else if (type == "step") out = step(s);
        else out.push_back(s.snapshot());
      } else {
        out.push_back(error("session-not-found", "no session '" + id + "'", id));
      }
    } else {
      out.push_back(error("bad-request", "unknown message type '" + type + "'"));
    }
  } catch (const BadRequest& e) {
    out = {error("bad-request", e.what())};
  } catch (const std::exception& e) {
    out = {error("engine-error", e.what())};
  }
  if (request.is_object() && request.contains("request_id"))
    for (auto& m : out) m["request_id"] = request["request_id"];
  return out;
}

std::vector<json> SessionManager::create(const json& req) {
  const auto players = field<std::vector<std::string>>(req, "players", {});
  if (players.size() != 2) throw BadRequest("'players' must name two players, near side first");
  std::array<const BehaviorModel*, 2> models{};
  for (int i = 0; i < 2; ++i) {
    auto it = models_.find(players[i]);
    if (it == models_.end()) return {error("unknown-player", "no behavior model for '" + players[i] + "'")};
    models[i] = &it->second;
  }
  const auto seed = field<std::uint64_t>(req, "seed", 1);
  const int point = field<int>(req, "point", 0);
  if (point < 0) throw BadRequest("'point' must be >= 0");
  const int server = field<int>(req, "server", (point / 2) % 2);
  if (server != 0 && server != 1) throw BadRequest("'server' must be 0 or 1");
  std::optional<int> human;
  if (req.contains("human") && !req["human"].is_null()) {
    human = field<int>(req, "human", -1);
    if (*human != 0 && *human != 1) throw BadRequest("'human' must be 0, 1 or null");
  }
  RallyConfig rc = config_.rally();
  rc.max_shots = field<int>(req, "max_shots", rc.max_shots);
  if (rc.max_shots < 1) throw BadRequest("'max_shots' must be >= 1");

  std::string id;
  {
    std::lock_guard lock(mu_);
    id = "s" + std::to_string(next_id_++);
  }
  auto entry = std::make_shared<Entry>();
  try {
    entry->session = std::make_unique<Session>(id, db_, models, std::array{players[0], players[1]}, human, server,
                                               point, seed, rc);
  } catch (const InsufficientData& e) {
    return {error("unknown-player", e.what())};
  }
  json snap = entry->session->snapshot();
  std::lock_guard lock(mu_);
  sessions_[id] = std::move(entry);
  return {std::move(snap)};
}

std::vector<json> SessionManager::control(Session& s, const json& req) {
  const std::string& id = s.id();
  if (s.rally().ended()) return {error("invalid-control", "the rally has ended", id)};
  if (!s.human()) return {error("invalid-control", "no side of this session is human controlled", id)};
  ControlOverride o;
  o.player = field<int>(req, "player", *s.human());
  if (o.player != *s.human())
    return {error("invalid-control", "player " + std::to_string(o.player) + " is model controlled", id)};
  try {
    if (req.contains("placement") && !req["placement"].is_null()) o.placement = io::vec2_from(req["placement"], "placement");
    if (req.contains("recovery") && !req["recovery"].is_null()) o.recovery = io::vec2_from(req["recovery"], "recovery");
  } catch (const io::SchemaError& e) {
    return {error("invalid-control", e.what(), id)};
  }
  if (req.contains("shot_type") && !req["shot_type"].is_null()) {
    const auto name = field<std::string>(req, "shot_type", "");
    o.shot = shot_type_from_string(name);
    if (!o.shot || *o.shot == ShotType::Serve) return {error("invalid-control", "bad shot_type '" + name + "'", id)};
  }
  if (!o.placement && !o.recovery && !o.shot) return {error("invalid-control", "control input sets no goal", id)};
  s.rally().queue_override(o);
  json ack = {{"type", "control_ack"}, {"session", id}, {"player", o.player}};
  if (o.placement) ack["placement"] = vec_json(*o.placement);
  if (o.recovery) ack["recovery"] = vec_json(*o.recovery);
  if (o.shot) ack["shot_type"] = std::string(to_string(*o.shot));
  return {std::move(ack)};
}

std::vector<json> SessionManager::step(Session& s) {
  Rally& r = s.rally();
  const std::string& id = s.id();
  if (r.ended()) return {error("rally-ended", "the rally is over; create a new session", id)};
  try {
    if (r.state().phase == RallyPhase::Serving) r.start();
    else r.step();
  } catch (const NoServeClips& e) {
    return {error("no-serve-clips", e.what(), id)};
  }
  json events = json::array();
  for (std::size_t i = s.logged(); i < r.events().size(); ++i) events.push_back(r.events()[i]);
  s.set_logged(r.events().size());
  std::vector<json> out;
  out.push_back({{"type", "step_ack"}, {"session", id}, {"shot_index", r.state().responses}, {"events", events}});
  out.push_back(s.snapshot());
  if (r.ended()) {
    const RallyState& st = r.state();
    out.push_back({{"type", "rally_ended"},
                   {"session", id},
                   {"winner", st.winner ? json(st.players[*st.winner].id) : json(nullptr)},
                   {"reason", std::string(to_string(st.reason))},
                   {"shot_index", st.responses}});
  }
  return out;
}

// --- TCP ---------------------------------------------------------------------------------

std::pair<std::string, int> parse_bind(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos || colon + 1 == s.size()) throw std::invalid_argument("bind address must be host:port");
  int port = 0;
  try {
    std::size_t used = 0;
    port = std::stoi(s.substr(colon + 1), &used);
    if (used != s.size() - colon - 1) throw std::invalid_argument("port");
  } catch (const std::exception&) {
    throw std::invalid_argument("bad port in '" + s + "'");
  }
  if (port < 0 || port > 65535) throw std::invalid_argument("port out of range in '" + s + "'");
  return {s.substr(0, colon), port};
}

namespace {

sockaddr_in resolve(const std::string& host, int port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  const std::string h = host.empty() || host == "localhost" ? "127.0.0.1" : host;
  if (inet_pton(AF_INET, h.c_str(), &addr.sin_addr) != 1) {
    addrinfo hints{}, *res = nullptr;
    hints.ai_family = AF_INET;
    if (getaddrinfo(h.c_str(), nullptr, &hints, &res) != 0 || !res)
      throw std::runtime_error("cannot resolve host '" + host + "'");
    addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    freeaddrinfo(res);
  }
  return addr;
}

bool send_all(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

TcpServer::TcpServer(SessionManager& manager) : manager_(manager) {}

TcpServer::~TcpServer() {
  stop();
}

void TcpServer::bind(const std::string& host, int port) {
  const sockaddr_in addr = resolve(host, port);
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("socket: " + std::string(std::strerror(errno)));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(listen_fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port) + ": " + why);
  }
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

void TcpServer::run() {
  if (listen_fd_ < 0) throw std::logic_error("TcpServer::run before bind");
  std::vector<std::thread> workers;
  for (;;) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;
    }
    std::lock_guard lock(mu_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    clients_.push_back(fd);
    workers.emplace_back([this, fd] { serve_connection(fd); });
  }
  {
    std::lock_guard lock(mu_);
    for (int fd : clients_) ::shutdown(fd, SHUT_RDWR);
  }
  for (auto& w : workers) w.join();
}

void TcpServer::stop() {
  std::lock_guard lock(mu_);
  if (stopping_) return;
  stopping_ = true;
  if (listen_fd_ >= 0) {
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  for (int fd : clients_) ::shutdown(fd, SHUT_RDWR);
}

void TcpServer::serve_connection(int fd) {
  std::string buffer;
  char chunk[65536];
  for (bool open = true; open;) {
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::vector<json> requests;
    try {
      requests = decode_frames(buffer);
    } catch (const std::exception& e) {
      send_all(fd, encode_frame(error("bad-frame", e.what())));
      break;
    }
    for (const json& req : requests)
      for (const json& reply : manager_.handle(req))
        if (!send_all(fd, encode_frame(reply))) open = false;
  }
  std::lock_guard lock(mu_);
  std::erase(clients_, fd);
  ::close(fd);
}

TcpClient::TcpClient(const std::string& host, int port) {
  const sockaddr_in addr = resolve(host, port);
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0 || ::connect(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    const std::string why = std::strerror(errno);
    if (fd_ >= 0) ::close(fd_);
    throw std::runtime_error("cannot connect to " + host + ":" + std::to_string(port) + ": " + why);
  }
}

TcpClient::~TcpClient() {
  if (fd_ >= 0) ::close(fd_);
}

void TcpClient::send(const json& message) {
  if (!send_all(fd_, encode_frame(message))) throw std::runtime_error("connection closed while sending");
}

json TcpClient::receive() {
  char chunk[65536];
  for (;;) {
    // Decode at most one frame and keep the rest buffered.
    if (buffer_.size() >= 4) {
      std::uint32_t n = 0;
      for (int i = 0; i < 4; ++i) n = n << 8 | static_cast<unsigned char>(buffer_[i]);
      if (n > kMaxFrame) throw std::runtime_error("frame length " + std::to_string(n) + " exceeds the limit");
      if (buffer_.size() >= 4 + static_cast<std::size_t>(n)) {
        std::string one = buffer_.substr(0, 4 + n);
        buffer_.erase(0, 4 + n);
        return decode_frames(one).front();
      }
    }
    const ssize_t got = ::recv(fd_, chunk, sizeof chunk, 0);
    if (got < 0 && errno == EINTR) continue;
    if (got <= 0) throw std::runtime_error("connection closed while receiving");
    buffer_.append(chunk, static_cast<std::size_t>(got));
  }
}

}  // namespace rallyforge
