#include "arena/battle_log.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "arena/error.hpp"

namespace arena {

using nlohmann::json;

namespace {

template <typename T, typename Parse>
T parse_or_throw(const json& j, Parse parse, const char* what) {
  const auto s = j.get<std::string>();
  if (auto v = parse(s)) return *v;
  throw LogError(std::string("unknown ") + what + ": " + s);
}

json side_json(Side s) { return side_tag(s); }

Side side_from(const json& j) {
  const auto s = j.get<std::string>();
  if (s == "p1") return Side::A;
  if (s == "p2") return Side::B;
  throw LogError("bad side: " + s);
}

json hp_grid(const std::array<std::array<int, kTeamSize>, 2>& g) { return json::array({g[0], g[1]}); }

std::array<std::array<int, kTeamSize>, 2> hp_grid_from(const json& j) {
  std::array<std::array<int, kTeamSize>, 2> g{};
  for (std::size_t s = 0; s < 2; ++s) {
    const auto& row = j.at(s);
    if (row.size() != static_cast<std::size_t>(kTeamSize)) throw LogError("hp snapshot must have 6 entries");
    for (std::size_t i = 0; i < static_cast<std::size_t>(kTeamSize); ++i) g[s][i] = row.at(i).get<int>();
  }
  return g;
}

std::string_view phase_kind_name(PhaseKind k) {
  switch (k) {
    case PhaseKind::AwaitingActions: return "awaiting_actions";
    case PhaseKind::AwaitingForcedSwitch: return "awaiting_forced_switch";
    case PhaseKind::Finished: return "finished";
  }
  return "awaiting_actions";
}

}  // namespace

std::string_view record_kind_name(RecordKind k) {
  switch (k) {
    case RecordKind::Start: return "start";
    case RecordKind::Turn: return "turn";
    case RecordKind::ForcedSwitch: return "forced_switch";
  }
  return "turn";
}

json to_json(const Action& a) {
  if (a.is_move()) return {{"kind", "move"}, {"move", a.move}};
  return {{"kind", "switch"}, {"slot", a.slot}};
}

Action action_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "move") return Action::use(j.at("move").get<std::string>());
  if (kind == "switch") return Action::switch_to(j.at("slot").get<int>());
  throw LogError("bad action kind: " + kind);
}

// Fields equal to their defaults are omitted; the reader restores the defaults.
json to_json(const Event& e) {
  const Event d;
  json j{{"kind", event_kind_name(e.kind)}, {"side", side_json(e.side)}};
  if (e.slot != d.slot) j["slot"] = e.slot;
  if (!e.move.empty()) j["move"] = e.move;
  if (!e.cause.empty()) j["cause"] = e.cause;
  if (e.amount != d.amount) j["amount"] = e.amount;
  if (e.value != d.value) j["value"] = e.value;
  if (e.effectiveness != d.effectiveness) j["effectiveness"] = e.effectiveness;
  if (e.stat != d.stat) j["stat"] = stat_name(e.stat);
  if (e.status != d.status) j["status"] = status_name(e.status);
  if (e.hazard != d.hazard) j["hazard"] = hazard_name(e.hazard);
  if (e.weather != d.weather) j["weather"] = weather_name(e.weather);
  return j;
}

Event event_from_json(const json& j) {
  Event e;
  e.kind = parse_or_throw<EventKind>(j.at("kind"), parse_event_kind, "event kind");
  e.side = side_from(j.at("side"));
  e.slot = j.value("slot", e.slot);
  e.move = j.value("move", std::string{});
  e.cause = j.value("cause", std::string{});
  e.amount = j.value("amount", 0);
  e.value = j.value("value", 0);
  e.effectiveness = j.value("effectiveness", -1);
  if (j.contains("stat")) e.stat = parse_or_throw<Stat>(j["stat"], parse_stat, "stat");
  if (j.contains("status")) e.status = parse_or_throw<StatusKind>(j["status"], parse_status, "status");
  if (j.contains("hazard")) e.hazard = parse_or_throw<Hazard>(j["hazard"], parse_hazard, "hazard");
  if (j.contains("weather")) e.weather = parse_or_throw<Weather>(j["weather"], parse_weather, "weather");
  return e;
}

json to_json(const TurnRecord& r) {
  json actions = json::array();
  for (const auto& a : r.actions) actions.push_back(a ? to_json(*a) : json(nullptr));
  json events = json::array();
  for (const auto& e : r.events) events.push_back(to_json(e));
  return {{"kind", record_kind_name(r.kind)}, {"turn", r.turn},          {"actions", actions},
          {"events", events},                 {"hp_before", hp_grid(r.hp_before)}, {"hp_after", hp_grid(r.hp_after)}};
}

TurnRecord record_from_json(const json& j) {
  TurnRecord r;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "start") r.kind = RecordKind::Start;
  else if (kind == "turn") r.kind = RecordKind::Turn;
  else if (kind == "forced_switch") r.kind = RecordKind::ForcedSwitch;
  else throw LogError("bad record kind: " + kind);
  r.turn = j.at("turn").get<int>();
  const auto& acts = j.at("actions");
  if (acts.size() != 2) throw LogError("record needs two action slots");
  for (std::size_t i = 0; i < 2; ++i) {
    if (!acts[i].is_null()) r.actions[i] = action_from_json(acts[i]);
  }
  for (const auto& e : j.at("events")) r.events.push_back(event_from_json(e));
  r.hp_before = hp_grid_from(j.at("hp_before"));
  r.hp_after = hp_grid_from(j.at("hp_after"));
  return r;
}

json to_json(const PokemonInstance& p) {
  json types = json::array();
  for (Type t : p.types) types.push_back(type_name(t));
  return {
      {"species", p.species},
      {"types", types},
      {"ability", p.ability},
      {"moves", p.moves},
      {"max_hp", p.max_hp},
      {"hp", p.hp},
      {"atk", p.atk},
      {"def", p.def},
      {"spe", p.spe},
      {"stages", {{"atk", p.stages.atk}, {"def", p.stages.def}, {"spe", p.stages.spe}}},
      {"status", {{"kind", status_name(p.status.kind)}, {"counter", p.status.counter}}},
      {"volatiles",
       {{"protected", p.volatiles.protected_now},
        {"protect_chain", p.volatiles.protect_chain},
        {"magnet_rise", p.volatiles.magnet_rise}}},
      {"fainted", p.fainted},
      {"revealed", p.revealed},
      {"revealed_moves", p.revealed_moves},
  };
}

PokemonInstance pokemon_from_json(const json& j) {
  PokemonInstance p;
  p.species = j.at("species").get<std::string>();
  for (const auto& t : j.at("types")) p.types.push_back(parse_or_throw<Type>(t, parse_type, "type"));
  p.ability = j.at("ability").get<std::string>();
  p.moves = j.at("moves").get<std::vector<std::string>>();
  p.max_hp = j.at("max_hp").get<int>();
  p.hp = j.at("hp").get<int>();
  p.atk = j.at("atk").get<int>();
  p.def = j.at("def").get<int>();
  p.spe = j.at("spe").get<int>();
  const auto& st = j.at("stages");
  p.stages = {st.at("atk").get<int>(), st.at("def").get<int>(), st.at("spe").get<int>()};
  p.status.kind = parse_or_throw<StatusKind>(j.at("status").at("kind"), parse_status, "status");
  p.status.counter = j.at("status").at("counter").get<int>();
  const auto& v = j.at("volatiles");
  p.volatiles = {v.at("protected").get<bool>(), v.at("protect_chain").get<int>(), v.at("magnet_rise").get<int>()};
  p.fainted = j.at("fainted").get<bool>();
  p.revealed = j.at("revealed").get<bool>();
  p.revealed_moves = j.at("revealed_moves").get<std::vector<std::string>>();
  return p;
}

json team_to_json(const Team& t) {
  json out = json::array();
  for (const auto& p : t) out.push_back(to_json(p));
  return out;
}

Team team_from_json(const json& j) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(kTeamSize)) throw LogError("team must have 6 members");
  Team t;
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = pokemon_from_json(j[i]);
  return t;
}

json state_to_json(const BattleState& s) {
  json sides = json::array();
  for (const auto& side : s.sides) {
    sides.push_back({{"team", team_to_json(side.team)},
                     {"active", side.active},
                     {"stealth_rock", side.stealth_rock},
                     {"spikes", side.spikes}});
  }
  json winner = s.phase.winner ? side_json(*s.phase.winner) : json(nullptr);
  return {
      {"seed", s.seed},
      {"turn_cap", s.turn_cap},
      {"field", {{"weather", weather_name(s.field.weather)}, {"weather_turns", s.field.weather_turns}, {"turn", s.field.turn}}},
      {"sides", sides},
      {"phase",
       {{"kind", phase_kind_name(s.phase.kind)},
        {"forced", {s.phase.forced[0], s.phase.forced[1]}},
        {"winner", winner},
        {"reason", finish_reason_name(s.phase.reason)}}},
  };
}

std::string state_digest(const BattleState& s) {
  const std::string text = state_to_json(s).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

LogFooter make_footer(const BattleState& s) {
  LogFooter f;
  f.winner = s.phase.winner;
  f.reason = s.phase.reason;
  f.scores = {battle_score(s, Side::A), battle_score(s, Side::B)};
  f.turns = s.field.turn;
  f.digest = state_digest(s);
  return f;
}

namespace {

json header_json(const LogHeader& h) {
  return {{"type", "header"},
          {"schema_version", h.schema_version},
          {"seed", h.seed},
          {"battle_index", h.battle_index},
          {"turn_cap", h.turn_cap},
          {"teams", {team_to_json(h.teams[0]), team_to_json(h.teams[1])}},
          {"agents", {h.agents[0], h.agents[1]}}};
}

json record_line(const TurnRecord& r, const std::array<json, 2>& decisions) {
  json j = to_json(r);
  j["type"] = "record";
  j["decisions"] = {decisions[0], decisions[1]};
  return j;
}

json footer_json(const LogFooter& f) {
  return {{"type", "result"},
          {"winner", f.winner ? side_json(*f.winner) : json(nullptr)},
          {"reason", finish_reason_name(f.reason)},
          {"scores", f.scores},
          {"turns", f.turns},
          {"digest", f.digest}};
}

}  // namespace

void LogWriter::header(const LogHeader& h) { out_ << header_json(h).dump() << '\n' << std::flush; }

void LogWriter::record(const TurnRecord& r, const std::array<json, 2>& decisions) {
  out_ << record_line(r, decisions).dump() << '\n' << std::flush;
}

void LogWriter::footer(const LogFooter& f) { out_ << footer_json(f).dump() << '\n' << std::flush; }

void write_log(const BattleLog& log, std::ostream& out) {
  LogWriter w(out);
  w.header(log.header);
  for (const auto& r : log.records) w.record(r.record, r.decisions);
  if (log.footer) w.footer(*log.footer);
}

std::string write_log(const BattleLog& log) {
  std::ostringstream os;
  write_log(log, os);
  return os.str();
}

BattleLog read_log(std::istream& in, bool allow_incomplete) {
  BattleLog log;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (log.footer) throw LogError(where + "content after the result footer");
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw LogError(where + "corrupted record (" + e.what() + ")");
    }
    try {
      const auto type = j.at("type").get<std::string>();
      if (!have_header) {
        if (type != "header") throw LogError("first line must be the header");
        const int version = j.at("schema_version").get<int>();
        if (version != kLogSchemaVersion) {
          throw LogError("schema version mismatch: log has " + std::to_string(version) + ", expected " +
                         std::to_string(kLogSchemaVersion));
        }
        log.header.schema_version = version;
        log.header.seed = j.at("seed").get<std::uint64_t>();
        log.header.battle_index = j.value("battle_index", 0);
        log.header.turn_cap = j.at("turn_cap").get<int>();
        log.header.teams = {team_from_json(j.at("teams").at(0)), team_from_json(j.at("teams").at(1))};
        if (j.contains("agents")) log.header.agents = {j["agents"].at(0), j["agents"].at(1)};
        have_header = true;
      } else if (type == "record") {
        LoggedRecord r;
        r.record = record_from_json(j);
        if (j.contains("decisions")) r.decisions = {j["decisions"].at(0), j["decisions"].at(1)};
        log.records.push_back(std::move(r));
      } else if (type == "result") {
        LogFooter f;
        if (!j.at("winner").is_null()) f.winner = side_from(j["winner"]);
        f.reason = parse_or_throw<FinishReason>(j.at("reason"), parse_finish_reason, "finish reason");
        f.scores = j.at("scores").get<std::array<int, 2>>();
        f.turns = j.at("turns").get<int>();
        f.digest = j.at("digest").get<std::string>();
        log.footer = f;
      } else {
        throw LogError("unknown line type: " + type);
      }
    } catch (const LogError& e) {
      throw LogError(where + e.what());
    } catch (const json::exception& e) {
      throw LogError(where + "corrupted record (" + e.what() + ")");
    }
  }
  if (!have_header) throw LogError("empty log");
  if (!log.footer && !allow_incomplete) throw LogError("log is truncated: no result footer");
  return log;
}

BattleLog read_log_file(const std::string& path, bool allow_incomplete) {
  std::ifstream in(path);
  if (!in) throw LogError("cannot open log: " + path);
  return read_log(in, allow_incomplete);
}

}  // namespace arena
