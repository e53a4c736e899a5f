#include "arena/protocol.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

namespace arena {

using nlohmann::json;

namespace {

template <class... F>
struct overloaded : F... {
  using F::operator()...;
};
template <class... F>
overloaded(F...) -> overloaded<F...>;

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t at = s.find(sep, start);
    out.push_back(s.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start));
    if (at == std::string_view::npos) return out;
    start = at + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<int> to_int(std::string_view s) {
  s = trim(s);
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<StatusKind> status_from_code(std::string_view code) {
  for (StatusKind k : {StatusKind::Poison, StatusKind::Toxic, StatusKind::Burn, StatusKind::Paralysis,
                       StatusKind::Sleep, StatusKind::Freeze}) {
    if (status_short(k) == code) return k;
  }
  return std::nullopt;
}

std::optional<Side> side_from_tag(std::string_view tag) {
  if (tag == "p1") return Side::A;
  if (tag == "p2") return Side::B;
  return std::nullopt;
}

std::optional<Weather> weather_from_wire(std::string_view w) {
  if (w == "none") return Weather::None;
  if (w == "RainDance" || w == "Rain") return Weather::Rain;
  if (w == "SunnyDay" || w == "Sun") return Weather::Sun;
  if (w == "Sandstorm") return Weather::Sandstorm;
  return std::nullopt;
}

std::string_view weather_wire(Weather w) {
  switch (w) {
    case Weather::Rain: return "RainDance";
    case Weather::Sun: return "SunnyDay";
    case Weather::Sandstorm: return "Sandstorm";
    case Weather::None: break;
  }
  return "none";
}

// "[from] ability: Dry Skin" among trailing fields
std::string from_tag(const std::vector<std::string_view>& f, std::size_t first) {
  for (std::size_t i = first; i < f.size(); ++i) {
    if (f[i].rfind("[from]", 0) == 0) return std::string(trim(f[i].substr(6)));
  }
  return {};
}

std::string species_of(std::string_view details) { return std::string(trim(details.substr(0, details.find(',')))); }

std::optional<proto::Request> parse_request(std::string_view text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  proto::Request r;
  r.raw = j;
  if (j.contains("rqid") && j["rqid"].is_number_integer()) r.rqid = j["rqid"].get<int>();
  r.wait = j.value("wait", false);
  r.team_preview = j.value("teamPreview", false);
  if (const auto fs = j.find("forceSwitch"); fs != j.end() && fs->is_array()) {
    for (const auto& v : *fs) r.force_switch = r.force_switch || (v.is_boolean() && v.get<bool>());
  }
  if (const auto side = j.find("side"); side != j.end() && side->is_object()) {
    r.player = side->value("name", "");
    r.side = side_from_tag(side->value("id", ""));
    if (const auto mons = side->find("pokemon"); mons != side->end() && mons->is_array()) {
      for (const auto& m : *mons) {
        proto::RequestMon rm;
        const auto id = parse_ident(m.value("ident", ""));
        if (!id) return std::nullopt;
        rm.name = id->second;
        rm.species = species_of(m.value("details", rm.name));
        const auto cond = parse_condition(m.value("condition", ""));
        if (!cond) return std::nullopt;
        rm.hp = cond->hp;
        rm.max_hp = cond->max_hp;
        rm.status = cond->status;
        rm.fainted = cond->fainted;
        rm.active = m.value("active", false);
        if (const auto st = m.find("stats"); st != m.end() && st->is_object()) {
          for (const auto& [k, v] : st->items()) {
            if (v.is_number_integer()) rm.stats[k] = v.get<int>();
          }
        }
        if (const auto mv = m.find("moves"); mv != m.end() && mv->is_array()) {
          for (const auto& x : *mv) {
            if (x.is_string()) rm.moves.push_back(x.get<std::string>());
          }
        }
        rm.ability = m.value("baseAbility", m.value("ability", ""));
        r.team.push_back(std::move(rm));
      }
    }
  }
  if (const auto active = j.find("active"); active != j.end() && active->is_array() && !active->empty()) {
    const json& a = (*active)[0];
    if (const auto mv = a.find("moves"); mv != a.end() && mv->is_array()) {
      for (const auto& m : *mv) {
        proto::RequestMove rm;
        rm.name = m.value("move", "");
        rm.id = m.value("id", to_id(rm.name));
        const auto d = m.find("disabled");
        rm.disabled = d != m.end() && ((d->is_boolean() && d->get<bool>()) || d->is_string());
        r.moves.push_back(std::move(rm));
      }
    }
  }
  return r;
}

ProtocolMessage parse_tagged(std::string_view line) {
  const proto::Unknown unknown{std::string(line)};
  if (line.empty() || line.front() != '|') return unknown;
  const auto f = split(line.substr(1), '|');
  const std::string_view tag = f[0];
  auto field = [&](std::size_t i) { return i < f.size() ? f[i] : std::string_view{}; };

  if (tag == "turn") {
    const auto n = to_int(field(1));
    if (!n || *n < 0) return unknown;
    return proto::Turn{*n};
  }
  if (tag == "win") {
    if (field(1).empty()) return unknown;
    return proto::Win{std::string(field(1))};
  }
  if (tag == "request") {
    const std::string_view payload = line.substr(std::string_view("|request|").size() > line.size() ? line.size() : 9);
    auto r = parse_request(payload);
    if (!r) return unknown;
    return *r;
  }
  if (tag == "-weather") {
    const auto w = weather_from_wire(trim(field(1)));
    if (!w) return unknown;
    return proto::WeatherMsg{*w, field(2) == "[upkeep]"};
  }

  const auto who = parse_ident(field(1));
  if (!who) return unknown;
  const auto& [side, name] = *who;

  if (tag == "move") {
    if (trim(field(2)).empty()) return unknown;
    proto::Move m{side, name, std::string(trim(field(2))), std::nullopt, {}};
    if (const auto target = parse_ident(field(3))) {
      m.target_side = target->first;
      m.target = target->second;
    }
    return m;
  }
  if (tag == "switch" || tag == "drag") {
    const auto cond = parse_condition(field(3));
    if (!cond || field(2).empty()) return unknown;
    proto::SwitchIn s{side, name, species_of(field(2)), cond->fraction, std::nullopt, std::nullopt, cond->status};
    if (cond->max_hp != 100) {
      s.hp = cond->hp;
      s.max_hp = cond->max_hp;
    }
    return s;
  }
  if (tag == "-damage" || tag == "-heal") {
    const auto cond = parse_condition(field(2));
    if (!cond) return unknown;
    if (tag == "-damage") return proto::Damage{side, name, cond->fraction, cond->status, from_tag(f, 3)};
    return proto::Heal{side, name, cond->fraction, cond->status, from_tag(f, 3)};
  }
  if (tag == "faint") return proto::Faint{side, name};
  if (tag == "-boost" || tag == "-unboost") {
    const auto amount = to_int(field(3));
    if (trim(field(2)).empty() || !amount || *amount < 0 || *amount > 12) return unknown;
    return proto::Boost{side, name, std::string(trim(field(2))), tag == "-boost" ? *amount : -*amount};
  }
  if (tag == "-status") {
    const auto st = status_from_code(trim(field(2)));
    if (!st) return unknown;
    return proto::Status{side, name, *st};
  }
  if (tag == "-curestatus") return proto::Status{side, name, StatusKind::None};
  if (tag == "-immune") return proto::Immune{side, name, from_tag(f, 2)};
  return unknown;
}

std::string summary(const ProtocolMessage& msg) {
  return std::visit(overloaded{
                        [](const proto::Move& m) { return side_tag(m.side) + " " + m.pokemon + " used " + m.move; },
                        [](const proto::SwitchIn& m) { return side_tag(m.side) + " sent in " + m.species; },
                        [](const proto::Faint& m) { return side_tag(m.side) + " " + m.pokemon + " fainted"; },
                        [](const proto::Immune& m) { return side_tag(m.side) + " " + m.pokemon + " was immune"; },
                        [](const auto&) { return std::string(); },
                    },
                    msg);
}

int find_index(const TrackedSide& s, std::string_view name) {
  for (std::size_t i = 0; i < s.mons.size(); ++i) {
    if (s.mons[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

void warn(KnownState& st, std::string w) {
  if (std::find(st.warnings.begin(), st.warnings.end(), w) == st.warnings.end()) st.warnings.push_back(std::move(w));
}

}  // namespace

std::optional<std::pair<Side, std::string>> parse_ident(std::string_view ident) {
  ident = trim(ident);
  const auto colon = ident.find(':');
  if (colon == std::string_view::npos || colon < 2) return std::nullopt;
  const auto side = side_from_tag(ident.substr(0, 2));
  const std::string_view pos = ident.substr(2, colon - 2);
  if (!side || pos.size() > 1 || (pos.size() == 1 && (pos[0] < 'a' || pos[0] > 'c'))) return std::nullopt;
  const std::string_view name = trim(ident.substr(colon + 1));
  if (name.empty()) return std::nullopt;
  return std::pair{*side, std::string(name)};
}

std::optional<Condition> parse_condition(std::string_view text) {
  text = trim(text);
  const auto space = text.find(' ');
  const std::string_view hp_part = text.substr(0, space);
  const std::string_view rest = space == std::string_view::npos ? std::string_view{} : trim(text.substr(space + 1));
  Condition c;
  if (rest == "fnt") {
    if (to_int(hp_part) != 0) return std::nullopt;
    c.fainted = true;
    c.max_hp = 0;
    return c;
  }
  if (!rest.empty()) {
    const auto st = status_from_code(rest);
    if (!st) return std::nullopt;
    c.status = *st;
  }
  const auto slash = hp_part.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  const auto cur = to_int(hp_part.substr(0, slash));
  const auto max = to_int(hp_part.substr(slash + 1));
  if (!cur || !max || *max <= 0 || *cur < 0 || *cur > *max) return std::nullopt;
  c.hp = *cur;
  c.max_hp = *max;
  c.fraction = static_cast<double>(*cur) / *max;
  return c;
}

ProtocolMessage parse_line(std::string_view line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
  try {
    return parse_tagged(line);
  } catch (...) {
    return proto::Unknown{std::string(line)};
  }
}

std::string_view message_name(const ProtocolMessage& m) {
  static constexpr std::string_view kNames[] = {"turn", "move",    "switch_in", "damage",  "heal", "faint",  "boost",
                                                "status", "immune", "weather", "request", "win", "unknown"};
  return kNames[m.index()];
}

const TrackedMon* KnownState::find(Side s, std::string_view name) const {
  const int i = find_index(side(s), name);
  return i < 0 ? nullptr : &side(s).mons[static_cast<std::size_t>(i)];
}

const TrackedMon* KnownState::active(Side s) const {
  const auto& sd = side(s);
  return sd.active < 0 ? nullptr : &sd.mons[static_cast<std::size_t>(sd.active)];
}

std::optional<Side> KnownState::winner() const {
  if (!winner_name) return std::nullopt;
  for (Side s : {Side::A, Side::B}) {
    if (!side(s).player.empty() && side(s).player == *winner_name) return s;
  }
  if (own && !side(*own).player.empty()) return other(*own);
  return std::nullopt;
}

void track(KnownState& st, const ProtocolMessage& msg) {
  auto mon = [&](Side s, const std::string& name, const char* what) -> TrackedMon* {
    const int i = find_index(st.sides[idx(s)], name);
    if (i < 0) {
      st.anomalies.push_back(std::string(what) + " for unrevealed " + side_tag(s) + " " + name);
      return nullptr;
    }
    return &st.sides[idx(s)].mons[static_cast<std::size_t>(i)];
  };
  auto set_hp = [&](Side s, TrackedMon& m, double fraction, std::optional<int> hp, std::optional<int> max) {
    m.hp_fraction = std::clamp(fraction, 0.0, 1.0);
    if (st.own == s && hp && max) {
      m.hp = hp;
      m.max_hp = max;
    }
  };

  std::visit(
      overloaded{
          [&](const proto::Turn& t) {
            st.turn = t.n;
            st.turn_log.clear();
          },
          [&](const proto::Move& m) {
            TrackedMon* p = mon(m.side, m.pokemon, "move");
            if (!p) return;
            if (std::find(p->moves.begin(), p->moves.end(), m.move) == p->moves.end()) p->moves.push_back(m.move);
          },
          [&](const proto::SwitchIn& m) {
            TrackedSide& sd = st.sides[idx(m.side)];
            int i = find_index(sd, m.pokemon);
            if (i < 0) {
              if (sd.mons.size() >= kTeamSize) {
                st.anomalies.push_back("seventh Pokémon revealed for " + side_tag(m.side) + ": " + m.pokemon);
                return;
              }
              sd.mons.push_back(TrackedMon{m.pokemon, m.species, 1.0, {}, {}, StatusKind::None, {}, {}, false});
              i = static_cast<int>(sd.mons.size()) - 1;
            } else if (sd.mons[static_cast<std::size_t>(i)].fainted) {
              st.anomalies.push_back("fainted " + m.pokemon + " switched in");
              return;
            }
            if (sd.active >= 0) sd.mons[static_cast<std::size_t>(sd.active)].boosts.clear();
            sd.active = i;
            TrackedMon& p = sd.mons[static_cast<std::size_t>(i)];
            p.species = m.species;
            p.status = m.status;
            set_hp(m.side, p, m.hp_fraction, m.hp, m.max_hp);
          },
          [&](const proto::Damage& m) {
            if (TrackedMon* p = mon(m.side, m.pokemon, "damage")) {
              p->hp_fraction = std::clamp(m.hp_fraction, 0.0, 1.0);
              if (st.own == m.side && p->max_hp) p->hp = static_cast<int>(m.hp_fraction * *p->max_hp + 0.5);
            }
          },
          [&](const proto::Heal& m) {
            if (TrackedMon* p = mon(m.side, m.pokemon, "heal")) {
              p->hp_fraction = std::clamp(m.hp_fraction, 0.0, 1.0);
              if (st.own == m.side && p->max_hp) p->hp = static_cast<int>(m.hp_fraction * *p->max_hp + 0.5);
            }
          },
          [&](const proto::Faint& m) {
            if (TrackedMon* p = mon(m.side, m.pokemon, "faint")) {
              p->fainted = true;
              p->status = StatusKind::None;
              p->hp_fraction = 0.0;
              if (p->hp) p->hp = 0;
              p->boosts.clear();
            }
          },
          [&](const proto::Boost& m) {
            if (TrackedMon* p = mon(m.side, m.pokemon, "boost")) {
              p->boosts[m.stat] = std::clamp(p->boosts[m.stat] + m.delta, -6, 6);
            }
          },
          [&](const proto::Status& m) {
            if (TrackedMon* p = mon(m.side, m.pokemon, "status")) p->status = m.status;
          },
          [&](const proto::Immune& m) { mon(m.side, m.pokemon, "immunity"); },
          [&](const proto::WeatherMsg& m) { st.weather = m.weather; },
          [&](const proto::Request& r) {
            st.request = r;
            if (!r.side) return;
            if (st.own && *st.own != *r.side) {
              st.anomalies.push_back("request for the other side");
              return;
            }
            st.own = r.side;
            TrackedSide& sd = st.sides[idx(*r.side)];
            sd.player = r.player;
            for (const auto& rm : r.team) {
              int i = find_index(sd, rm.name);
              if (i < 0) {
                if (sd.mons.size() >= kTeamSize) continue;
                sd.mons.push_back(TrackedMon{rm.name, rm.species, 1.0, {}, {}, StatusKind::None, {}, {}, false});
                i = static_cast<int>(sd.mons.size()) - 1;
              }
              TrackedMon& p = sd.mons[static_cast<std::size_t>(i)];
              p.species = rm.species;
              p.fainted = rm.fainted;
              p.status = rm.status;
              p.hp = rm.hp;
              if (rm.max_hp > 0) p.max_hp = rm.max_hp;
              p.hp_fraction = rm.fainted || rm.max_hp == 0 ? 0.0 : static_cast<double>(rm.hp) / rm.max_hp;
              if (rm.active && !rm.fainted) sd.active = i;
            }
          },
          [&](const proto::Win& w) { st.winner_name = w.player; },
          [&](const proto::Unknown& u) {
            if (u.raw.empty() || u.raw == "|") return;
            if (u.raw.front() != '|') {
              warn(st, "unrecognized line");
              return;
            }
            const std::string_view rest = std::string_view(u.raw).substr(1);
            warn(st, "unsupported tag: " + std::string(rest.substr(0, rest.find('|'))));
          },
      },
      msg);
  if (std::string s = summary(msg); !s.empty()) st.turn_log.push_back(std::move(s));
}

KnownState apply_message(KnownState state, const ProtocolMessage& msg) {
  track(state, msg);
  return state;
}

KnownState replay_stream(const std::vector<std::string>& lines) {
  KnownState st;
  for (const auto& l : lines) track(st, parse_line(l));
  return st;
}

std::vector<Action> request_actions(const proto::Request& req, const Pokedex& dex) {
  std::vector<Action> out;
  if (req.wait || req.team_preview) return out;
  if (!req.force_switch) {
    for (const auto& m : req.moves) {
      if (m.disabled) continue;
      const MoveDef* def = dex.find_move(m.id);
      out.push_back(Action::use(def ? def->name : m.name));
    }
  }
  for (std::size_t k = 0; k < req.team.size(); ++k) {
    if (!req.team[k].active && !req.team[k].fainted) out.push_back(Action::switch_to(static_cast<int>(k)));
  }
  return out;
}

std::string serialize_choice(const Action& action, const proto::Request& req) {
  if (action.is_move()) {
    if (req.force_switch) throw ProtocolError("a move is not allowed during a forced switch");
    const std::string id = to_id(action.move);
    for (std::size_t k = 0; k < req.moves.size(); ++k) {
      if (req.moves[k].id == id && !req.moves[k].disabled) return "move " + std::to_string(k + 1);
    }
    throw ProtocolError("move not in request: " + action.move);
  }
  if (action.slot < 0 || action.slot >= static_cast<int>(req.team.size())) {
    throw ProtocolError("switch position out of range: " + std::to_string(action.slot));
  }
  const auto& m = req.team[static_cast<std::size_t>(action.slot)];
  if (m.active || m.fainted) throw ProtocolError("cannot switch to " + m.name);
  return "switch " + std::to_string(action.slot + 1);
}

namespace {

int percent_of(double fraction) {
  if (fraction <= 0) return 0;
  return std::max(1, static_cast<int>(fraction * 100 + 1e-9));
}

StatStages stages_of(const std::map<std::string, int>& boosts) {
  StatStages s;
  for (Stat st : {Stat::Atk, Stat::Def, Stat::Spe}) {
    if (const auto it = boosts.find(std::string(stat_name(st))); it != boosts.end()) s.set(st, it->second);
  }
  return s;
}

std::string move_name(const Pokedex& dex, const std::string& id_or_name) {
  const MoveDef* m = dex.find_move(id_or_name);
  return m ? m->name : id_or_name;
}

}  // namespace

BattleView view_of(const KnownState& st, const Pokedex& dex) {
  if (!st.own || !st.request) throw ProtocolError("no request received yet");
  const Side own = *st.own;
  const proto::Request& req = *st.request;
  BattleView v;
  v.side = own;
  v.turn = st.turn;
  v.weather = st.weather;
  v.forced_switch = req.force_switch;

  const TrackedMon* own_active = st.active(own);
  for (const auto& rm : req.team) {
    MonView m;
    m.revealed = true;
    m.species = rm.species;
    if (const SpeciesDef* sp = dex.find_species(rm.species)) m.types = sp->types;
    if (const AbilityDef* ab = dex.find_ability(rm.ability)) m.ability = ab->name;
    m.hp = rm.hp;
    m.max_hp = rm.max_hp;
    m.hp_percent = rm.fainted || rm.max_hp == 0 ? 0 : std::max(rm.hp > 0 ? 1 : 0, rm.hp * 100 / rm.max_hp);
    auto stat = [&](const char* k) -> std::optional<int> {
      const auto it = rm.stats.find(k);
      return it == rm.stats.end() ? std::nullopt : std::optional<int>(it->second);
    };
    m.atk = stat("atk");
    m.def = stat("def");
    m.spe = stat("spe");
    m.status = rm.status;
    m.fainted = rm.fainted;
    m.active = rm.active && !rm.fainted;
    if (m.active && own_active) m.stages = stages_of(own_active->boosts);
    for (const auto& id : rm.moves) m.moves.push_back(move_name(dex, id));
    v.own.team.push_back(std::move(m));
  }

  const TrackedSide& opp = st.side(other(own));
  for (std::size_t i = 0; i < opp.mons.size(); ++i) {
    const TrackedMon& t = opp.mons[i];
    MonView m;
    m.revealed = true;
    m.species = t.species;
    if (const SpeciesDef* sp = dex.find_species(t.species)) {
      m.types = sp->types;
      m.ability = sp->ability;
    }
    m.hp_percent = percent_of(t.hp_fraction);
    m.status = t.status;
    m.fainted = t.fainted;
    m.active = static_cast<int>(i) == opp.active && !t.fainted;
    if (m.active) m.stages = stages_of(t.boosts);
    m.moves = t.moves;
    v.opponent.team.push_back(std::move(m));
  }
  while (v.own.team.size() < kTeamSize) v.own.team.emplace_back();
  while (v.opponent.team.size() < kTeamSize) v.opponent.team.emplace_back();

  for (const Action& a : request_actions(req, dex)) {
    ActionOption o;
    o.action = a;
    if (a.is_move()) {
      o.label = "move " + a.move;
      if (const MoveDef* m = dex.find_move(a.move)) {
        o.power = m->power;
        o.order = dex.move_order(m->name);
      }
    } else {
      o.label = "switch " + req.team[static_cast<std::size_t>(a.slot)].species;
    }
    v.actions.push_back(std::move(o));
  }
  return v;
}

// ---- exporter ----

namespace {

class Exporter {
 public:
  Exporter(const BattleLog& log, std::shared_ptr<const Pokedex> dex, Side me, const std::array<std::string, 2>& players)
      : log_(log), me_(me), players_(players),
        state_(initial_state(dex, log.header.teams[0], log.header.teams[1], log.header.seed, {log.header.turn_cap})) {
    for (auto& order : order_) {
      for (int i = 0; i < kTeamSize; ++i) order[static_cast<std::size_t>(i)] = i;
    }
  }

  std::vector<std::string> run() {
    out_.push_back("|j|" + players_[0]);
    out_.push_back("|j|" + players_[1]);
    out_.push_back("|gametype|singles");
    out_.push_back("|player|p1|" + players_[0] + "|");
    out_.push_back("|player|p2|" + players_[1] + "|");
    out_.push_back("|teamsize|p1|6");
    out_.push_back("|teamsize|p2|6");
    out_.push_back("|gen|9");
    out_.push_back("|tier|[Gen 9] Random Battle");
    out_.push_back("|");
    out_.push_back("|start|");
    for (const auto& lr : log_.records) {
      const TurnRecord& rec = lr.record;
      if (rec.kind == RecordKind::Turn) {
        out_.push_back("|");
        out_.push_back("|t:|" + std::to_string(1700000000 + rec.turn));
      } else if (rec.kind == RecordKind::ForcedSwitch) {
        request(state_.forced_pending(me_) ? Mode::Forced : Mode::Wait);
      }
      for (const Event& e : rec.events) {
        const BattleState before = state_;
        apply_event(state_, e);
        event_lines(e, before);
      }
      state_.field.turn = rec.turn;
      settle_phase(state_, rec.kind);
      if (rec.kind == RecordKind::Turn) out_.push_back("|upkeep|");
      if (!state_.finished() && state_.phase.kind == PhaseKind::AwaitingActions) {
        request(Mode::Move);
        out_.push_back("|turn|" + std::to_string(state_.field.turn + 1));
      }
    }
    if (state_.finished()) {
      if (state_.phase.winner) out_.push_back("|win|" + players_[idx(*state_.phase.winner)]);
      else out_.push_back("|tie");
    }
    return std::move(out_);
  }

 private:
  enum class Mode { Move, Forced, Wait };

  std::string ident(Side s, int slot) const {
    return side_tag(s) + "a: " + state_.side(s).team[static_cast<std::size_t>(slot)].species;
  }

  std::string condition(Side s, const PokemonInstance& p) const {
    if (p.hp <= 0) return "0 fnt";
    std::string c = s == me_ ? std::to_string(p.hp) + "/" + std::to_string(p.max_hp)
                             : std::to_string(std::max(1, p.hp * 100 / p.max_hp)) + "/100";
    if (p.status.kind != StatusKind::None) c += " " + std::string(status_short(p.status.kind));
    return c;
  }

  int position_of(Side s, int slot) const {
    const auto& order = order_[idx(s)];
    return static_cast<int>(std::find(order.begin(), order.end(), slot) - order.begin());
  }

  void request(Mode mode) {
    const SideState& sd = state_.side(me_);
    json mons = json::array();
    for (int slot : order_[idx(me_)]) {
      const PokemonInstance& p = sd.team[static_cast<std::size_t>(slot)];
      json moves = json::array();
      for (const auto& m : p.moves) moves.push_back(to_id(m));
      mons.push_back({{"ident", side_tag(me_) + ": " + p.species},
                      {"details", p.species + ", L" + std::to_string(kLevel)},
                      {"condition", condition(me_, p)},
                      {"active", slot == sd.active},
                      {"stats", {{"atk", p.atk}, {"def", p.def}, {"spa", p.atk}, {"spd", p.def}, {"spe", p.spe}}},
                      {"moves", moves},
                      {"baseAbility", to_id(p.ability)},
                      {"item", ""},
                      {"pokeball", "pokeball"}});
    }
    json j{{"side", {{"name", players_[idx(me_)]}, {"id", side_tag(me_)}, {"pokemon", mons}}}, {"rqid", ++rqid_}};
    if (mode == Mode::Wait) {
      j["wait"] = true;
    } else if (mode == Mode::Forced) {
      j["forceSwitch"] = {true};
    } else {
      json moves = json::array();
      for (const auto& m : sd.active_mon().moves) {
        moves.push_back({{"move", m}, {"id", to_id(m)}, {"pp", 16}, {"maxpp", 16}, {"target", "normal"}, {"disabled", false}});
      }
      j["active"] = json::array({{{"moves", moves}}});
    }
    out_.push_back("|request|" + j.dump());
  }

  void event_lines(const Event& e, const BattleState& before) {
    const Side s = e.side;
    const Side foe = other(s);
    switch (e.kind) {
      case EventKind::SwitchIn: {
        auto& order = order_[idx(s)];
        const int from = position_of(s, before.side(s).active);
        const int to = position_of(s, e.slot);
        std::swap(order[static_cast<std::size_t>(from)], order[static_cast<std::size_t>(to)]);
        const PokemonInstance& p = state_.side(s).team[static_cast<std::size_t>(e.slot)];
        out_.push_back("|switch|" + ident(s, e.slot) + "|" + p.species + ", L" + std::to_string(kLevel) + "|" +
                       condition(s, p));
        break;
      }
      case EventKind::MoveUsed: {
        const MoveDef* m = state_.dex->find_move(e.move);
        const bool at_foe = m && m->targets_foe();
        out_.push_back("|move|" + ident(s, e.slot) + "|" + e.move + "|" +
                       (at_foe ? ident(foe, state_.side(foe).active) : ident(s, e.slot)));
        break;
      }
      case EventKind::Cant:
        out_.push_back("|cant|" + ident(s, state_.side(s).active) + "|" + e.cause);
        break;
      case EventKind::Miss:
        out_.push_back("|-miss|" + ident(s, state_.side(s).active) + "|" + ident(foe, state_.side(foe).active));
        break;
      case EventKind::Fail:
        out_.push_back("|-fail|" + ident(s, state_.side(s).active));
        break;
      case EventKind::Protected:
        out_.push_back("|-activate|" + ident(s, state_.side(s).active) + "|move: Protect");
        break;
      case EventKind::Immune: {
        std::string l = "|-immune|" + ident(s, state_.side(s).active);
        if (e.cause == "ability") l += "|[from] ability: " + state_.side(s).active_mon().ability;
        out_.push_back(l);
        break;
      }
      case EventKind::Damage:
      case EventKind::Heal: {
        const PokemonInstance& p = state_.side(s).team[static_cast<std::size_t>(e.slot)];
        std::string l = std::string(e.kind == EventKind::Damage ? "|-damage|" : "|-heal|") + ident(s, e.slot) + "|" +
                        condition(s, p);
        if (e.cause != "move" && !e.cause.empty()) l += "|[from] " + e.cause;
        out_.push_back(l);
        break;
      }
      case EventKind::Stage:
        out_.push_back(std::string(e.amount < 0 ? "|-unboost|" : "|-boost|") + ident(s, e.slot) + "|" +
                       std::string(stat_name(e.stat)) + "|" + std::to_string(std::abs(e.amount)));
        break;
      case EventKind::StageReset:
        out_.push_back("|-clearallboost");
        break;
      case EventKind::Status:
        out_.push_back("|-status|" + ident(s, e.slot) + "|" + std::string(status_short(e.status)));
        break;
      case EventKind::Cure:
        out_.push_back("|-curestatus|" + ident(s, e.slot) + "|" +
                       std::string(status_short(before.side(s).team[static_cast<std::size_t>(e.slot)].status.kind)));
        break;
      case EventKind::Faint:
        out_.push_back("|faint|" + ident(s, e.slot));
        break;
      case EventKind::HazardSet:
        out_.push_back("|-sidestart|" + side_tag(s) + ": " + players_[idx(s)] + "|move: " +
                       (e.hazard == Hazard::StealthRock ? "Stealth Rock" : "Spikes"));
        break;
      case EventKind::HazardClear:
        out_.push_back("|-sideend|" + side_tag(s) + ": " + players_[idx(s)] + "|hazards");
        break;
      case EventKind::WeatherStart:
        out_.push_back("|-weather|" + std::string(weather_wire(e.weather)));
        break;
      case EventKind::WeatherTick:
        out_.push_back("|-weather|" + std::string(weather_wire(state_.field.weather)) + "|[upkeep]");
        break;
      case EventKind::WeatherEnd:
        out_.push_back("|-weather|none");
        break;
      case EventKind::VolatileStart:
        out_.push_back("|-start|" + ident(s, e.slot) + "|Magnet Rise");
        break;
      case EventKind::VolatileEnd:
        out_.push_back("|-end|" + ident(s, e.slot) + "|Magnet Rise");
        break;
      case EventKind::ProtectStart:
        out_.push_back("|-singleturn|" + ident(s, e.slot) + "|Protect");
        break;
      default:
        break;
    }
  }

  const BattleLog& log_;
  Side me_;
  std::array<std::string, 2> players_;
  BattleState state_;
  std::array<std::array<int, kTeamSize>, 2> order_{};
  std::vector<std::string> out_;
  int rqid_ = 0;
};

}  // namespace

std::vector<std::string> export_protocol(const BattleLog& log, std::shared_ptr<const Pokedex> dex, Side perspective,
                                         const std::array<std::string, 2>& players) {
  return Exporter(log, std::move(dex), perspective, players).run();
}

// ---- gateway ----

RecordedGateway RecordedGateway::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ProtocolError("cannot open stream: " + path);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return RecordedGateway(std::move(lines));
}

std::optional<std::string> RecordedGateway::next_line() {
  if (!connected_ || next_ >= lines_.size()) return std::nullopt;
  return lines_[next_++];
}

GatewayOutcome drive_gateway(Gateway& gateway, const Pokedex& dex, const ViewChooser& choose,
                             const GatewayConfig& config) {
  GatewayOutcome out;
  gateway.connect(config);
  std::optional<proto::Request> pending;
  auto answer = [&] {
    const proto::Request req = *pending;
    pending.reset();
    if (req.wait || req.team_preview || request_actions(req, dex).empty()) return;
    gateway.send_choice(serialize_choice(choose(view_of(out.state, dex)), req), req.rqid);
    ++out.choices;
  };
  while (auto line = gateway.next_line()) {
    const ProtocolMessage msg = parse_line(*line);
    track(out.state, msg);
    if (const auto* req = std::get_if<proto::Request>(&msg)) {
      pending = *req;
      // A forced switch is answered at once; a move request waits until the turn header has
      // been seen so the view includes everything before it.
      if (req->force_switch || req->wait) answer();
    } else if (pending && std::holds_alternative<proto::Turn>(msg)) {
      answer();
    } else if (std::holds_alternative<proto::Win>(msg)) {
      pending.reset();
    }
  }
  if (pending) answer();
  out.aborted = !out.state.winner_name;
  return out;
}

}  // namespace arena
