#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "arena/battle_log.hpp"
#include "arena/harness.hpp"

namespace arena {

// Error with an HTTP status, raised by the service and mapped to a response by the API layer.
class ServiceError : public ArenaError {
 public:
  ServiceError(int status, const std::string& message, nlohmann::json detail = nullptr)
      : ArenaError(message), status_(status), detail_(std::move(detail)) {}
  int status() const noexcept { return status_; }
  const nlohmann::json& detail() const noexcept { return detail_; }

 private:
  int status_;
  nlohmann::json detail_;
};

struct ServeConfig {
  std::string agent = "maxpower";  // default opponent when the create body names none
  AgentOptions agent_options;
  std::chrono::seconds session_timeout{600};  // idle human forfeits after this
  int turn_cap = kDefaultTurnCap;
  std::uint64_t seed_base = 0;
  std::optional<std::filesystem::path> log_dir;
};

// Human-vs-agent battles. The human is always side A and sees only view_of(state, A); the
// agent's decision traces stay in the log, which is readable once the battle is over.
class BattleService {
 public:
  using Clock = std::chrono::steady_clock;

  BattleService(std::shared_ptr<const Pokedex> dex, ServeConfig config);
  ~BattleService();

  // Body: {"agent": spec, "seed": n, "icrl": bool, "kag": mode}, all optional. Returns the id.
  std::string create(const nlohmann::json& body = nlohmann::json::object());
  nlohmann::json state(const std::string& id);
  // Submits the human's action by label. Illegal labels raise ServiceError 400 carrying the
  // legal list; the state is unchanged.
  nlohmann::json act(const std::string& id, const std::string& label);
  // Events after `since`; blocks up to `wait` for new ones. Empty when none arrived.
  std::vector<nlohmann::json> events(const std::string& id, std::size_t since, std::chrono::milliseconds wait);
  bool finished(const std::string& id);
  // Full JSONL log; only after the battle has ended.
  std::string log(const std::string& id);
  // Forfeits battles whose human has been idle longer than the timeout. Returns how many.
  int sweep(Clock::time_point now = Clock::now());
  std::vector<std::string> ids() const;

  struct Session;

 private:
  std::shared_ptr<Session> find(const std::string& id) const;

  std::shared_ptr<const Pokedex> dex_;
  ServeConfig config_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t counter_ = 0;
};

// HTTP front end:
//   POST /battles                  -> {"id": ...}
//   GET  /battles/{id}/state       -> human view, legal actions, result when finished
//   POST /battles/{id}/action      body {"action": label}
//   GET  /battles/{id}/events      server-sent events; ?since=N resumes
//   GET  /battles/{id}/log         JSONL, after the battle ends
//   GET  /healthz
class ApiServer {
 public:
  explicit ApiServer(BattleService& service);
  ~ApiServer();
  // Binds (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace arena
