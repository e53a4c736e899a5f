#include <filesystem>
#include <fstream>
#include <sstream>

#include "arena/battle_log.hpp"
#include "arena/error.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace arena;
using arena::testing::bundled_dex;
using arena::testing::random_battle;
using nlohmann::json;

namespace {

BattleLog log_of(const BattleState& s, std::uint64_t seed) {
  BattleLog log;
  log.header.seed = seed;
  log.header.turn_cap = s.turn_cap;
  // Pristine teams are not recoverable from a finished state; the tests only need a valid header.
  for (Side side : {Side::A, Side::B}) log.header.teams[idx(side)] = s.side(side).team;
  log.header.agents = {json{{"name", "random"}}, json{{"name", "random"}}};
  for (const auto& r : s.log) log.records.push_back({r, {nullptr, json{{"note", r.turn}}}});
  if (s.finished()) log.footer = make_footer(s);
  return log;
}

BattleLog parse(const std::string& text, bool allow_incomplete = false) {
  std::istringstream in(text);
  return read_log(in, allow_incomplete);
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string join(const std::vector<std::string>& ls) {
  std::string out;
  for (const auto& l : ls) out += l + "\n";
  return out;
}

}  // namespace

TEST_CASE("logs round-trip through JSONL") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const BattleState s = random_battle(seed);
    const BattleLog log = log_of(s, seed);
    const std::string text = write_log(log);
    const auto lines = lines_of(text);
    REQUIRE(lines.size() == log.records.size() + 2);
    for (const auto& l : lines) CHECK(json::parse(l).is_object());
    CHECK(json::parse(lines.front())["type"] == "header");
    CHECK(json::parse(lines.back())["type"] == "result");

    const BattleLog back = parse(text);
    REQUIRE(back.records.size() == log.records.size());
    for (std::size_t i = 0; i < log.records.size(); ++i) {
      CHECK(back.records[i].record == log.records[i].record);
      CHECK(back.records[i].decisions == log.records[i].decisions);
    }
    CHECK(back.header.teams == log.header.teams);
    CHECK(back.footer->digest == state_digest(s));
    CHECK(back.footer->scores == log.footer->scores);
    CHECK(back.footer->winner == log.footer->winner);
    CHECK(write_log(back) == text);  // canonical
  }
}

TEST_CASE("per-type json round-trips") {
  for (const auto& a : {Action::use("Fire Blast"), Action::switch_to(3)}) CHECK(action_from_json(to_json(a)) == a);
  const BattleState s = random_battle(3);
  int events = 0;
  for (const auto& r : s.log) {
    CHECK(record_from_json(to_json(r)) == r);
    for (const auto& e : r.events) {
      CHECK(event_from_json(to_json(e)) == e);
      ++events;
    }
  }
  CHECK(events > 20);
  for (const auto& p : s.side(Side::A).team) CHECK(pokemon_from_json(to_json(p)) == p);
  CHECK(team_from_json(team_to_json(s.side(Side::B).team)) == s.side(Side::B).team);
}

TEST_CASE("digest tracks game state only") {
  const auto dex = bundled_dex();
  Rng rng(5);
  Team a = random_team(rng, *dex), b = random_team(rng, *dex);
  BattleState x = new_battle(dex, a, b, 9), y = new_battle(dex, a, b, 9);
  CHECK(state_digest(x) == state_digest(y));
  CHECK(state_digest(x).size() == 16);
  y.log.clear();
  CHECK(state_digest(x) == state_digest(y));
  const Action m = legal_actions(x, Side::A).front();
  const Action n = legal_actions(x, Side::B).front();
  step(x, m, n);
  CHECK(state_digest(x) != state_digest(y));
  step(y, m, n);
  CHECK(state_digest(x) == state_digest(y));
}

TEST_CASE("malformed logs are rejected with a location") {
  const BattleState s = random_battle(4);
  const auto lines = lines_of(write_log(log_of(s, 4)));

  SUBCASE("truncated") {
    auto cut = lines;
    cut.pop_back();
    CHECK_THROWS_AS(parse(join(cut)), LogError);
    const BattleLog partial = parse(join(cut), true);
    CHECK_FALSE(partial.footer.has_value());
    CHECK(partial.records.size() == cut.size() - 1);
  }
  SUBCASE("schema version") {
    auto bad = lines;
    json h = json::parse(bad[0]);
    h["schema_version"] = kLogSchemaVersion + 1;
    bad[0] = h.dump();
    CHECK_THROWS_AS(parse(join(bad)), LogError);
  }
  SUBCASE("garbage line") {
    auto bad = lines;
    bad[2] = "{not json";
    CHECK_THROWS_WITH_AS(parse(join(bad)), doctest::Contains("line 3: "), LogError);
  }
  SUBCASE("record before header") {
    auto bad = lines;
    std::swap(bad[0], bad[1]);
    CHECK_THROWS_AS(parse(join(bad)), LogError);
  }
  SUBCASE("empty input") { CHECK_THROWS_AS(parse(""), LogError); }
}

TEST_CASE("the streaming writer leaves a readable prefix") {
  const BattleState s = random_battle(6);
  const BattleLog log = log_of(s, 6);
  std::ostringstream out;
  LogWriter w(out);
  w.header(log.header);
  for (std::size_t i = 0; i < 3; ++i) w.record(log.records[i].record, log.records[i].decisions);
  const BattleLog prefix = parse(out.str(), true);
  CHECK(prefix.records.size() == 3);
  for (std::size_t i = 3; i < log.records.size(); ++i) w.record(log.records[i].record, log.records[i].decisions);
  w.footer(*log.footer);
  CHECK(out.str() == write_log(log));

  const auto path = std::filesystem::temp_directory_path() / "arena_log_test.jsonl";
  {
    std::ofstream f(path);
    f << out.str();
  }
  CHECK(read_log_file(path.string()).records.size() == log.records.size());
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_log_file((std::filesystem::temp_directory_path() / "no_such_log.jsonl").string()), LogError);
}
