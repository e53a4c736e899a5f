#include <set>
#include <sstream>
#include <thread>

#include "arena/server.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "httplib.h"

using namespace arena;
using arena::testing::bundled_dex;
using nlohmann::json;

namespace {

ServeConfig config(std::string agent = "bot") {
  ServeConfig c;
  c.agent = std::move(agent);
  c.seed_base = 77;
  return c;
}

int status_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ServiceError& e) {
    return e.status();
  }
  return 200;
}

// Plays to the end taking the label at `pick` (clamped) each time; returns every event seen.
std::vector<json> play_out(BattleService& svc, const std::string& id, std::size_t pick = 0) {
  for (int guard = 0; guard < 1000 && !svc.finished(id); ++guard) {
    const json st = svc.state(id);
    const auto& acts = st["actions"];
    REQUIRE(!acts.empty());
    svc.act(id, acts[std::min(pick, acts.size() - 1)].get<std::string>());
  }
  REQUIRE(svc.finished(id));
  return svc.events(id, 0, std::chrono::milliseconds(0));
}

// Independent check of what the opponent side may expose, from the engine log itself.
void check_hidden(const json& state, const BattleLog& log) {
  std::set<std::string> seen_species, used_moves;
  for (const auto& r : log.records) {
    for (const auto& e : r.record.events) {
      if (e.side != Side::B) continue;
      if (e.kind == EventKind::SwitchIn) seen_species.insert(log.header.teams[1][e.slot].species);
      if (e.kind == EventKind::MoveUsed) used_moves.insert(e.move);
    }
  }
  for (const auto& m : state["opponent"]["team"]) {
    if (!m["revealed"].get<bool>()) {
      CHECK(m.size() == 2);  // revealed + active only
      continue;
    }
    CHECK(seen_species.count(m["species"].get<std::string>()) == 1);
    CHECK_FALSE(m.contains("hp"));
    CHECK_FALSE(m.contains("max_hp"));
    CHECK_FALSE(m.contains("stats"));
    for (const auto& mv : m["moves"]) CHECK(used_moves.count(mv.get<std::string>()) == 1);
  }
}

BattleLog parse(const std::string& text) {
  std::istringstream in(text);
  return read_log(in);
}

}  // namespace

TEST_CASE("contract walk: create, state, act, events") {
  BattleService svc(bundled_dex(), config());
  const std::string id = svc.create({{"seed", 5}});
  const json st = svc.state(id);
  CHECK(st["id"] == id);
  CHECK(st["phase"] == "awaiting_action");
  CHECK(st["side"] == "p1");
  CHECK_FALSE(st["actions"].empty());
  CHECK(svc.events(id, 0, std::chrono::milliseconds(0)).size() == 1);  // start

  const json r = svc.act(id, st["actions"][0].get<std::string>());
  REQUIRE(r["events"].size() >= 1);
  CHECK(r["events"][0]["record"]["kind"] == "turn");
  CHECK(r["events"][0]["record"]["turn"] == 1);
  CHECK(r["state"]["turn"].get<int>() >= 1);
  CHECK(status_of([&] { svc.log(id); }) == 409);

  const auto evs = play_out(svc, id);
  for (std::size_t i = 0; i < evs.size(); ++i) CHECK(evs[i]["seq"] == i);
  CHECK(evs.back()["type"] == "finished");
  const json fin = svc.state(id);
  CHECK(fin["phase"] == "finished");
  CHECK(fin["actions"].empty());
  CHECK(fin.contains("result"));
  CHECK(status_of([&] { svc.act(id, "move Tackle"); }) == 409);

  const BattleLog log = parse(svc.log(id));
  REQUIRE(log.footer);
  CHECK(log.header.agents[0]["name"] == "human");
  CHECK(log.records.size() + 1 == evs.size());
}

TEST_CASE("illegal action is rejected with the legal list and no state change") {
  BattleService svc(bundled_dex(), config());
  const std::string id = svc.create({{"seed", 9}});
  const json before = svc.state(id);
  json detail;
  try {
    svc.act(id, "switch Nonexistentmon");
    FAIL("accepted an illegal action");
  } catch (const ServiceError& e) {
    CHECK(e.status() == 400);
    detail = e.detail();
  }
  CHECK(detail["legal"] == before["actions"]);
  CHECK(svc.state(id) == before);
  CHECK(svc.events(id, 0, std::chrono::milliseconds(0)).size() == 1);

  CHECK(status_of([&] { svc.state("nope"); }) == 404);
  CHECK(status_of([&] { svc.create({{"agent", "telepathy"}}); }) == 400);
  CHECK(status_of([&] { svc.create({{"agent", "cot"}}); }) == 400);  // no endpoint configured
  CHECK(status_of([&] { svc.create({{"seed", "x"}}); }) == 400);
  CHECK(status_of([&] { svc.create(json::array()); }) == 400);
}

TEST_CASE("sessions are isolated and replayable") {
  BattleService svc(bundled_dex(), config());
  const std::string a = svc.create({{"seed", 31}});
  const std::string b = svc.create({{"seed", 31}});
  CHECK(a != b);
  const json b0 = svc.state(b);
  const json acts = svc.state(a)["actions"];
  svc.act(a, acts[std::min<std::size_t>(1, acts.size() - 1)].get<std::string>());
  CHECK(svc.state(b) == b0);

  // Same seed, same human choices: same battle.
  play_out(svc, a, 1);
  play_out(svc, b, 1);
  const BattleLog la = parse(svc.log(a)), lb = parse(svc.log(b));
  CHECK(la.records.size() == lb.records.size());
  CHECK(la.footer->digest == lb.footer->digest);
  CHECK(replay(la, bundled_dex()).ok());
}

TEST_CASE("idle sessions forfeit after the timeout") {
  ServeConfig c = config();
  c.session_timeout = std::chrono::seconds(5);
  BattleService svc(bundled_dex(), c);
  const std::string idle = svc.create({{"seed", 3}});
  const auto t0 = BattleService::Clock::now();
  CHECK(svc.sweep(t0) == 0);
  CHECK(svc.sweep(t0 + std::chrono::seconds(60)) == 1);
  const json st = svc.state(idle);
  CHECK(st["phase"] == "finished");
  CHECK(st["result"]["winner"] == "opponent");
  CHECK(st["result"]["reason"] == "forfeit");
  CHECK(svc.sweep(t0 + std::chrono::seconds(120)) == 0);
  CHECK(parse(svc.log(idle)).footer.has_value());
}

TEST_CASE("responses never expose unrevealed opponent information") {
  for (std::uint64_t seed : {2, 4, 6, 8}) {
    BattleService svc(bundled_dex(), config("random"));
    const std::string id = svc.create({{"seed", seed}});
    play_out(svc, id, seed % 3);
    const BattleLog log = parse(svc.log(id));
    // Every intermediate state, checked against the log prefix that produced it.
    for (const auto& e : svc.events(id, 0, std::chrono::milliseconds(0))) {
      BattleLog prefix = log;
      const std::size_t upto = std::min<std::size_t>(e["seq"].get<std::size_t>() + 1, log.records.size());
      prefix.records.resize(upto);
      check_hidden(e["state"], prefix);
      const std::string text = e.dump();
      CHECK(text.find("\"hp_after\"") == std::string::npos);
      CHECK(text.find("\"events\"") == std::string::npos);
    }
  }
}

TEST_CASE("log directory receives finished battles") {
  const auto dir = std::filesystem::temp_directory_path() / "arena_serve_logs";
  std::filesystem::remove_all(dir);
  ServeConfig c = config("maxpower");
  c.log_dir = dir;
  BattleService svc(bundled_dex(), c);
  const std::string id = svc.create({{"seed", 12}});
  play_out(svc, id);
  CHECK(std::filesystem::exists(dir / (id + ".jsonl")));
  std::filesystem::remove_all(dir);
}

TEST_CASE("http api smoke") {
  BattleService svc(bundled_dex(), config());
  ApiServer api(svc);
  const int port = api.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread th([&] { api.listen(); });

  httplib::Client cli("127.0.0.1", port);
  cli.set_read_timeout(10, 0);
  for (int i = 0; i < 50 && !cli.Get("/healthz"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(20));

  auto res = cli.Post("/battles", R"({"seed": 21})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 201);
  const std::string id = json::parse(res->body)["id"];

  res = cli.Get("/battles/" + id + "/state");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");
  const json st = json::parse(res->body);

  res = cli.Post("/battles/" + id + "/action", R"({"action": "move Nothing"})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
  CHECK(json::parse(res->body)["legal"] == st["actions"]);

  res = cli.Post("/battles/" + id + "/action", "not json", "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);

  res = cli.Post("/battles/" + id + "/action", json{{"action", st["actions"][0]}}.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);

  CHECK(cli.Get("/battles/zzz/state")->status == 404);
  CHECK(cli.Get("/battles/" + id + "/log")->status == 409);

  play_out(svc, id);
  res = cli.Get("/battles/" + id + "/events?since=1");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Content-Type") == "text/event-stream");
  const auto total = svc.events(id, 0, std::chrono::milliseconds(0)).size();
  std::size_t frames = 0;
  for (std::size_t p = 0; (p = res->body.find("data: ", p)) != std::string::npos; ++p) ++frames;
  CHECK(frames == total - 1);
  CHECK(res->body.find("event: finished") != std::string::npos);

  res = cli.Get("/battles/" + id + "/log");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(parse(res->body).footer.has_value());

  api.stop();
  th.join();
}
