#include "arena/textstate.hpp"

#include <algorithm>
#include <sstream>

namespace arena {

using nlohmann::json;

const MonView* SideView::active() const {
  for (const auto& m : team) {
    if (m.active) return &m;
  }
  return nullptr;
}

const ActionOption* Observation::find(const Action& a) const {
  for (const auto& o : actions) {
    if (o.action == a) return &o;
  }
  return nullptr;
}

std::string action_label(const BattleState& state, Side side, const Action& a) {
  if (a.is_move()) return "move " + a.move;
  return "switch " + state.side(side).team[static_cast<std::size_t>(a.slot)].species;
}

std::vector<ActionOption> action_options(const BattleState& state, Side side) {
  std::vector<ActionOption> out;
  for (const auto& a : legal_actions(state, side)) {
    ActionOption o{a, action_label(state, side, a), 0, 0};
    if (a.is_move()) {
      o.power = state.dex->move(a.move).power;
      o.order = state.dex->move_order(a.move);
    }
    out.push_back(std::move(o));
  }
  return out;
}

namespace {

int hp_percent(int hp, int max_hp) {
  if (hp <= 0) return 0;
  return std::max(1, hp * 100 / max_hp);
}

std::string who(Side s, Side me) { return s == me ? "you" : "the opponent"; }

std::string types_text(const std::vector<Type>& ts) {
  std::string out;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (i) out += "/";
    out += type_name(ts[i]);
  }
  return out;
}

std::string signed_stage(int v) { return (v > 0 ? "+" : "-") + std::to_string(std::abs(v)); }

std::string stages_text(const StatStages& s) {
  std::vector<std::string> parts;
  for (Stat st : {Stat::Atk, Stat::Def, Stat::Spe}) {
    if (s.get(st) != 0) parts.push_back(std::string(stat_name(st)) + " " + signed_stage(s.get(st)));
  }
  if (parts.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? ", " : "") + parts[i];
  return out;
}

std::string status_text(StatusKind s) { return s == StatusKind::None ? "none" : std::string(status_name(s)); }

std::string hazards_text(int rocks, int spikes) {
  std::vector<std::string> parts;
  if (rocks) parts.push_back("stealth rock");
  if (spikes) parts.push_back("spikes (" + std::to_string(spikes) + (spikes == 1 ? " layer)" : " layers)"));
  if (parts.empty()) return "none";
  return parts.size() == 1 ? parts[0] : parts[0] + ", " + parts[1];
}

std::string move_text(const Pokedex& dex, const std::string& name) {
  const MoveDef* m = dex.find_move(name);
  if (!m) return name;
  std::ostringstream os;
  os << m->name << " (" << type_name(m->type) << ", ";
  if (m->is_attack()) os << "power " << m->power;
  else os << "status";
  os << ", accuracy " << m->accuracy_percent() << "%";
  if (m->priority != 0) os << ", priority " << (m->priority > 0 ? "+" : "") << m->priority;
  os << ")";
  return os.str();
}

MonView own_view(const PokemonInstance& p, bool active) {
  MonView v;
  v.revealed = true;
  v.species = p.species;
  v.types = p.types;
  v.ability = p.ability;
  v.hp_percent = hp_percent(p.hp, p.max_hp);
  v.hp = p.hp;
  v.max_hp = p.max_hp;
  v.atk = p.atk;
  v.def = p.def;
  v.spe = p.spe;
  v.status = p.status.kind;
  v.stages = p.stages;
  v.moves = p.moves;
  v.fainted = p.fainted;
  v.active = active;
  v.magnet_rise = p.volatiles.magnet_rise;
  return v;
}

MonView foe_view(const PokemonInstance& p, bool active) {
  MonView v;
  v.active = active;
  if (!p.revealed) return v;
  v.revealed = true;
  v.species = p.species;
  v.types = p.types;
  v.ability = p.ability;
  v.hp_percent = hp_percent(p.hp, p.max_hp);
  v.status = p.status.kind;
  if (active) {
    v.stages = p.stages;
    v.magnet_rise = p.volatiles.magnet_rise;
  }
  v.moves = p.revealed_moves;
  v.fainted = p.fainted;
  return v;
}

std::string mon_line(const Pokedex& dex, const MonView& m, int index, bool own) {
  std::ostringstream os;
  os << index << ". ";
  if (!m.revealed) {
    os << "unrevealed";
    return os.str();
  }
  os << m.species;
  if (m.active) os << " [active]";
  if (m.fainted) {
    os << " [fainted]";
    return os.str();
  }
  os << " | types: " << types_text(m.types) << " | HP " << m.hp_percent << "%";
  if (m.hp && m.max_hp) os << " (" << *m.hp << "/" << *m.max_hp << ")";
  if (m.atk) os << " | Atk " << *m.atk << ", Def " << *m.def << ", Spe " << *m.spe;
  os << " | status: " << status_text(m.status);
  if (m.active) os << " | stages: " << stages_text(m.stages);
  if (m.magnet_rise > 0) os << " | magnet rise (" << m.magnet_rise << " turns left)";
  os << " | ability: " << m.ability;
  if (own) {
    os << "\n   moves: ";
    for (std::size_t i = 0; i < m.moves.size(); ++i) os << (i ? "; " : "") << move_text(dex, m.moves[i]);
  } else {
    os << "\n   revealed moves: ";
    if (m.moves.empty()) os << "none";
    for (std::size_t i = 0; i < m.moves.size(); ++i) os << (i ? "; " : "") << move_text(dex, m.moves[i]);
  }
  return os.str();
}

json mon_json(const MonView& m) {
  if (!m.revealed) return {{"revealed", false}, {"active", m.active}};
  json types = json::array();
  for (Type t : m.types) types.push_back(type_name(t));
  json j{{"revealed", true},
         {"species", m.species},
         {"types", types},
         {"ability", m.ability},
         {"hp_percent", m.hp_percent},
         {"status", status_name(m.status)},
         {"stages", {{"atk", m.stages.atk}, {"def", m.stages.def}, {"spe", m.stages.spe}}},
         {"moves", m.moves},
         {"fainted", m.fainted},
         {"active", m.active},
         {"magnet_rise", m.magnet_rise}};
  if (m.hp) j["hp"] = *m.hp;
  if (m.max_hp) j["max_hp"] = *m.max_hp;
  if (m.atk) j["stats"] = {{"atk", *m.atk}, {"def", *m.def}, {"spe", *m.spe}};
  return j;
}

}  // namespace

std::string history_text(const TurnRecord& rec, const BattleState& state, Side side) {
  if (rec.kind == RecordKind::Start) return {};
  std::vector<std::string> parts;
  for (Side s : {side, other(side)}) {
    const auto& act = rec.actions[idx(s)];
    if (!act) continue;
    const std::string subject = who(s, side);
    if (act->is_switch()) {
      const std::string& sp = state.side(s).team[static_cast<std::size_t>(act->slot)].species;
      parts.push_back(subject + (rec.kind == RecordKind::ForcedSwitch ? " sent in " : " switched to ") + sp);
      continue;
    }
    std::string what = subject + " did not act";
    for (const auto& e : rec.events) {
      if (e.side != s) continue;
      if (e.kind == EventKind::MoveUsed) {
        what = subject + " used " + e.move;
        break;
      }
      if (e.kind == EventKind::Cant) {
        what = subject + " could not move";
        break;
      }
    }
    parts.push_back(what);
  }
  if (parts.empty()) return {};
  std::string out = rec.kind == RecordKind::ForcedSwitch ? "After turn " + std::to_string(rec.turn) + ": "
                                                          : "Turn " + std::to_string(rec.turn) + ": ";
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "; " : "") + parts[i];
  return out + ".";
}

BattleView view_of(const BattleState& state, Side side, const DescribeOptions& options) {
  BattleView v;
  v.side = side;
  v.turn = state.field.turn;
  const SideState& own = state.side(side);
  const SideState& opp = state.side(other(side));
  for (int i = 0; i < kTeamSize; ++i) {
    v.own.team.push_back(own_view(own.team[static_cast<std::size_t>(i)], i == own.active));
    v.opponent.team.push_back(foe_view(opp.team[static_cast<std::size_t>(i)], i == opp.active));
  }
  v.own.stealth_rock = own.stealth_rock;
  v.own.spikes = own.spikes;
  v.opponent.stealth_rock = opp.stealth_rock;
  v.opponent.spikes = opp.spikes;
  v.weather = state.field.weather;
  v.weather_turns = state.field.weather_turns;
  const int first_turn = state.field.turn - options.history_window + 1;
  for (const auto& rec : state.log) {
    if (rec.turn < first_turn) continue;
    std::string text = history_text(rec, state, side);
    if (!text.empty()) v.history.push_back({rec.turn, std::move(text)});
  }
  if (!state.finished()) {
    v.actions = action_options(state, side);
    v.forced_switch = state.forced_pending(side);
  }
  return v;
}

Observation describe(const BattleView& view, const Pokedex& dex, const DescribeOptions& options) {
  Observation o;
  o.side = view.side;
  o.turn = view.turn;
  o.forced_switch = view.forced_switch;
  o.actions = view.actions;

  std::ostringstream own;
  own << "Your team:";
  for (std::size_t i = 0; i < view.own.team.size(); ++i) own << "\n" << mon_line(dex, view.own.team[i], static_cast<int>(i + 1), true);
  o.own_team = own.str();

  std::ostringstream opp;
  opp << "Opponent team:";
  for (std::size_t i = 0; i < view.opponent.team.size(); ++i) {
    opp << "\n" << mon_line(dex, view.opponent.team[i], static_cast<int>(i + 1), false);
  }
  o.opponent_team = opp.str();

  std::ostringstream field;
  field << "Field:\nweather: " << weather_name(view.weather);
  if (view.weather != Weather::None) field << " (" << view.weather_turns << " turns left)";
  field << "\nhazards on your side: " << hazards_text(view.own.stealth_rock, view.own.spikes);
  field << "\nhazards on the opponent's side: " << hazards_text(view.opponent.stealth_rock, view.opponent.spikes);
  o.field = field.str();

  std::ostringstream hist;
  hist << "Recent turns:";
  const int first_turn = view.turn - options.history_window + 1;
  bool any = false;
  for (const auto& h : view.history) {
    if (h.turn < first_turn) continue;
    hist << "\n" << h.text;
    any = true;
  }
  if (!any) hist << "\nnone yet";
  o.turn_history = hist.str();
  return o;
}

Observation describe(const BattleState& state, Side side, const DescribeOptions& options) {
  return describe(view_of(state, side, options), *state.dex, options);
}

std::string Observation::render() const {
  std::ostringstream os;
  os << own_team << "\n\n" << opponent_team << "\n\n" << field << "\n\n" << turn_history;
  if (!knowledge.empty()) {
    os << "\n\nKnowledge:";
    for (const auto& k : knowledge) os << "\n- " << k;
  }
  if (!feedback.empty()) {
    os << "\n\nFeedback from previous turns:";
    for (const auto& f : feedback) os << "\n- Turn " << f.turn << ": " << f.text;
  }
  os << "\n\nAvailable actions" << (forced_switch ? " (your active Pokémon fainted; choose a replacement)" : "") << ":";
  for (const auto& a : actions) os << "\n- " << a.label;
  return os.str();
}

json view_to_json(const BattleView& view, const Pokedex& /*dex*/) {
  auto side_json = [](const SideView& s) {
    json team = json::array();
    for (const auto& m : s.team) team.push_back(mon_json(m));
    return json{{"team", team}, {"hazards", {{"stealth_rock", s.stealth_rock}, {"spikes", s.spikes}}}};
  };
  json history = json::array();
  for (const auto& h : view.history) history.push_back({{"turn", h.turn}, {"text", h.text}});
  json actions = json::array();
  for (const auto& a : view.actions) actions.push_back(a.label);
  return {{"side", side_tag(view.side)},
          {"turn", view.turn},
          {"own", side_json(view.own)},
          {"opponent", side_json(view.opponent)},
          {"field", {{"weather", weather_name(view.weather)}, {"weather_turns", view.weather_turns}}},
          {"history", history},
          {"actions", actions},
          {"forced_switch", view.forced_switch}};
}

}  // namespace arena
