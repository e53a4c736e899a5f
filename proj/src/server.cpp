#include "arena/server.hpp"

#include <cstdio>
#include <fstream>
#include <thread>

#include "httplib.h"

#include "arena/feedback.hpp"
#include "arena/textstate.hpp"

namespace arena {

using nlohmann::json;

struct BattleService::Session {
  std::string id;
  std::string agent_spec;
  std::mutex mu;
  std::condition_variable cv;
  bool busy = false;
  BattleState state;
  std::unique_ptr<Policy> agent;
  BattleLog log;
  std::vector<json> events;
  Clock::time_point last_activity;
};

namespace {

json result_json(const BattleState& s) {
  const auto& w = s.phase.winner;
  return {{"winner", w ? json(*w == Side::A ? "you" : "opponent") : json(nullptr)},
          {"reason", finish_reason_name(s.phase.reason)},
          {"scores", {{"you", battle_score(s, Side::A)}, {"opponent", battle_score(s, Side::B)}}}};
}

std::string phase_name(const BattleState& s) {
  if (s.finished()) return "finished";
  if (s.phase.kind == PhaseKind::AwaitingForcedSwitch) return s.forced_pending(Side::A) ? "forced_switch" : "waiting";
  return "awaiting_action";
}

json state_json(const std::string& id, const std::string& agent, const BattleState& s) {
  json j = view_to_json(view_of(s, Side::A), *s.dex);
  j["id"] = id;
  j["agent"] = agent;
  j["phase"] = phase_name(s);
  j["finished"] = s.finished();
  if (s.finished()) j["result"] = result_json(s);
  return j;
}

}  // namespace

BattleService::BattleService(std::shared_ptr<const Pokedex> dex, ServeConfig config)
    : dex_(std::move(dex)), config_(std::move(config)) {
  policy_factory(config_.agent, config_.agent_options);  // fail fast on a bad default agent
}

BattleService::~BattleService() = default;

std::shared_ptr<BattleService::Session> BattleService::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "no such battle: " + id);
  return it->second;
}

std::vector<std::string> BattleService::ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, _] : sessions_) out.push_back(id);
  return out;
}

namespace {

void record_event(BattleService::Session& s, const TurnRecord& rec, std::array<json, 2> decisions);
void finish_if_over(BattleService::Session& s, const std::optional<std::filesystem::path>& log_dir);
void advance_agent(BattleService::Session& s);

}  // namespace

std::string BattleService::create(const json& body) {
  if (!body.is_object()) throw ServiceError(400, "body must be a JSON object");
  AgentOptions opts = config_.agent_options;
  std::string spec = config_.agent;
  std::optional<std::uint64_t> seed;
  try {
    spec = body.value("agent", spec);
    opts.icrl = body.value("icrl", opts.icrl);
    if (body.contains("kag")) {
      const auto mode = parse_kag_mode(body["kag"].get<std::string>());
      if (!mode) throw ServiceError(400, "unknown kag mode");
      opts.kag = *mode;
    }
    if (body.contains("seed")) seed = body["seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ServiceError(400, std::string("bad battle config: ") + e.what());
  } catch (const ConfigError& e) {
    throw ServiceError(400, e.what());
  }
  PolicyFactory factory;
  try {
    factory = policy_factory(spec, opts);
  } catch (const ConfigError& e) {
    throw ServiceError(400, e.what());
  }

  auto s = std::make_shared<Session>();
  {
    std::lock_guard lock(mu_);
    const std::uint64_t n = ++counter_;
    if (!seed) seed = mix_seed(config_.seed_base, n);
    char buf[40];
    std::snprintf(buf, sizeof buf, "b%llu%08llx", static_cast<unsigned long long>(n),
                  static_cast<unsigned long long>(mix_seed(*seed, n) & 0xffffffffULL));
    s->id = buf;
  }
  s->agent_spec = spec;
  Rng team_rng(*seed);
  Team team_a = random_team(team_rng, *dex_);
  Team team_b = random_team(team_rng, *dex_);
  s->agent = factory(mix_seed(*seed, 2), Side::B);
  s->log.header.seed = *seed;
  s->log.header.turn_cap = config_.turn_cap;
  s->log.header.teams = {team_a, team_b};
  s->log.header.agents = {json{{"name", "human"}}, s->agent->describe()};
  s->state = new_battle(dex_, std::move(team_a), std::move(team_b), *seed, {config_.turn_cap});
  s->last_activity = Clock::now();
  record_event(*s, s->state.log.back(), {});
  {
    std::lock_guard lock(mu_);
    sessions_[s->id] = s;
  }
  return s->id;
}

namespace {

void record_event(BattleService::Session& s, const TurnRecord& rec, std::array<json, 2> decisions) {
  s.log.records.push_back({rec, std::move(decisions)});
  s.agent->observe(s.state, Side::B, rec);
  json feedback = json::array();
  for (const auto& f : derive_feedback(rec, s.state, Side::A)) {
    feedback.push_back({{"kind", feedback_kind_name(f.kind)}, {"text", f.text}});
  }
  // Only human-visible material: no raw events, which carry hidden HP values.
  s.events.push_back({{"seq", s.events.size()},
                      {"type", "record"},
                      {"record", {{"kind", record_kind_name(rec.kind)},
                                  {"turn", rec.turn},
                                  {"summary", history_text(rec, s.state, Side::A)},
                                  {"feedback", feedback}}},
                      {"state", state_json(s.id, s.agent_spec, s.state)}});
}

void advance_agent(BattleService::Session& s) {
  while (!s.state.finished() && s.state.phase.kind == PhaseKind::AwaitingForcedSwitch &&
         s.state.forced_pending(Side::B) && !s.state.forced_pending(Side::A)) {
    PolicyChoice c = s.agent->choose(s.state, Side::B);
    const TurnRecord& rec = resolve_forced_switches(s.state, std::nullopt, c.action);
    record_event(s, rec, {nullptr, std::move(c.trace)});
  }
}

void finish_if_over(BattleService::Session& s, const std::optional<std::filesystem::path>& log_dir) {
  if (!s.state.finished() || s.log.footer) return;
  s.log.footer = make_footer(s.state);
  s.events.push_back({{"seq", s.events.size()},
                      {"type", "finished"},
                      {"result", result_json(s.state)},
                      {"state", state_json(s.id, s.agent_spec, s.state)}});
  if (log_dir) {
    std::filesystem::create_directories(*log_dir);
    std::ofstream out(*log_dir / (s.id + ".jsonl"), std::ios::binary);
    write_log(s.log, out);
  }
}

}  // namespace

json BattleService::state(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  return state_json(s->id, s->agent_spec, s->state);
}

bool BattleService::finished(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  return s->state.finished();
}

json BattleService::act(const std::string& id, const std::string& label) {
  auto s = find(id);
  std::unique_lock lock(s->mu);
  if (s->busy) throw ServiceError(409, "an action is already being resolved");
  if (s->state.finished()) throw ServiceError(409, "the battle is over");

  const auto options = action_options(s->state, Side::A);
  const ActionOption* chosen = nullptr;
  json legal = json::array();
  for (const auto& o : options) {
    legal.push_back(o.label);
    if (o.label == label) chosen = &o;
  }
  if (!chosen) throw ServiceError(400, "illegal action: " + label, {{"legal", legal}});

  const std::size_t before = s->events.size();
  s->busy = true;
  try {
    const Action human = chosen->action;
    if (s->state.phase.kind == PhaseKind::AwaitingActions) {
      PolicyChoice c = s->agent->choose(s->state, Side::B);
      const TurnRecord& rec = step(s->state, human, c.action);
      record_event(*s, rec, {nullptr, std::move(c.trace)});
    } else {
      std::optional<Action> agent_switch;
      json trace;
      if (s->state.forced_pending(Side::B)) {
        PolicyChoice c = s->agent->choose(s->state, Side::B);
        agent_switch = c.action;
        trace = std::move(c.trace);
      }
      const TurnRecord& rec = resolve_forced_switches(s->state, human, agent_switch);
      record_event(*s, rec, {nullptr, std::move(trace)});
    }
    advance_agent(*s);
  } catch (const EndpointExhausted&) {
    end_battle(s->state, std::nullopt, FinishReason::Aborted);
  } catch (...) {
    s->busy = false;
    throw;
  }
  s->busy = false;
  finish_if_over(*s, config_.log_dir);
  s->last_activity = Clock::now();
  s->cv.notify_all();

  json fresh = json::array();
  for (std::size_t i = before; i < s->events.size(); ++i) fresh.push_back(s->events[i]);
  return {{"events", fresh}, {"state", state_json(s->id, s->agent_spec, s->state)}};
}

std::vector<json> BattleService::events(const std::string& id, std::size_t since, std::chrono::milliseconds wait) {
  auto s = find(id);
  std::unique_lock lock(s->mu);
  s->cv.wait_for(lock, wait, [&] { return s->events.size() > since || s->state.finished(); });
  std::vector<json> out;
  for (std::size_t i = since; i < s->events.size(); ++i) out.push_back(s->events[i]);
  return out;
}

std::string BattleService::log(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  if (!s->state.finished()) throw ServiceError(409, "the log is available after the battle ends");
  return write_log(s->log);
}

int BattleService::sweep(Clock::time_point now) {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::lock_guard lock(mu_);
    for (const auto& [_, s] : sessions_) all.push_back(s);
  }
  int n = 0;
  for (const auto& s : all) {
    std::lock_guard lock(s->mu);
    if (s->busy || s->state.finished() || now - s->last_activity < config_.session_timeout) continue;
    end_battle(s->state, Side::B, FinishReason::Forfeit);
    finish_if_over(*s, config_.log_dir);
    s->cv.notify_all();
    ++n;
  }
  return n;
}

// ---- HTTP ----

struct ApiServer::Impl {
  BattleService& service;
  httplib::Server server;
  std::atomic<bool> stopping{false};
  std::thread sweeper;
  std::mutex sweep_mu;
  std::condition_variable sweep_cv;

  explicit Impl(BattleService& s) : service(s) {}
};

namespace {

void send_json(httplib::Response& res, const json& j, int status = 200) {
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

}  // namespace

ApiServer::ApiServer(BattleService& service) : impl_(std::make_unique<Impl>(service)) {
  auto& svr = impl_->server;
  BattleService& svc = service;

  svr.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  svr.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const ServiceError& e) {
      json j{{"error", e.what()}};
      if (!e.detail().is_null()) j.update(e.detail());
      send_json(res, j, e.status());
    } catch (const std::exception& e) {
      send_json(res, {{"error", e.what()}}, 500);
    }
  });

  svr.Get("/healthz", [&svc](const httplib::Request&, httplib::Response& res) {
    send_json(res, {{"status", "ok"}, {"battles", svc.ids().size()}});
  });

  svr.Post("/battles", [&svc](const httplib::Request& req, httplib::Response& res) {
    json body = json::object();
    if (!req.body.empty()) {
      body = json::parse(req.body, nullptr, false);
      if (body.is_discarded()) throw ServiceError(400, "body is not valid JSON");
    }
    const std::string id = svc.create(body);
    send_json(res, {{"id", id}, {"state", svc.state(id)}}, 201);
  });

  svr.Get(R"(/battles/([A-Za-z0-9]+)/state)", [&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, svc.state(req.matches[1]));
  });

  svr.Post(R"(/battles/([A-Za-z0-9]+)/action)", [&svc](const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("action") || !body["action"].is_string()) {
      throw ServiceError(400, R"(body must be {"action": "<label>"})");
    }
    send_json(res, svc.act(req.matches[1], body["action"].get<std::string>()));
  });

  svr.Get(R"(/battles/([A-Za-z0-9]+)/log)", [&svc](const httplib::Request& req, httplib::Response& res) {
    res.set_content(svc.log(req.matches[1]), "application/x-ndjson");
  });

  Impl* impl = impl_.get();
  svr.Get(R"(/battles/([A-Za-z0-9]+)/events)", [&svc, impl](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    svc.state(id);  // 404 before the stream starts
    std::size_t since = 0;
    if (req.has_param("since")) {
      try {
        since = std::stoul(req.get_param_value("since"));
      } catch (const std::exception&) {
        throw ServiceError(400, "since must be a non-negative integer");
      }
    }
    auto cursor = std::make_shared<std::size_t>(since);
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider("text/event-stream", [&svc, impl, id, cursor](std::size_t, httplib::DataSink& sink) {
      if (impl->stopping) return false;
      const auto evs = svc.events(id, *cursor, std::chrono::milliseconds(500));
      for (const auto& e : evs) {
        const std::string chunk = "id: " + std::to_string(*cursor) + "\nevent: " + e.value("type", "record") +
                                  "\ndata: " + e.dump() + "\n\n";
        if (!sink.write(chunk.data(), chunk.size())) return false;
        ++*cursor;
      }
      if (evs.empty()) {
        if (svc.finished(id)) {
          sink.done();
          return true;
        }
        static const std::string ping = ": keepalive\n\n";
        if (!sink.write(ping.data(), ping.size())) return false;
      }
      return true;
    });
  });
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  if (!impl_->server.bind_to_port(host, port)) throw ArenaError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void ApiServer::listen() {
  impl_->sweeper = std::thread([impl = impl_.get()] {
    std::unique_lock lock(impl->sweep_mu);
    while (!impl->stopping) {
      impl->sweep_cv.wait_for(lock, std::chrono::seconds(1));
      impl->service.sweep();
    }
  });
  impl_->server.listen_after_bind();
}

void ApiServer::stop() {
  if (impl_->stopping.exchange(true)) return;
  impl_->server.stop();
  impl_->sweep_cv.notify_all();
  if (impl_->sweeper.joinable()) impl_->sweeper.join();
}

}  // namespace arena
