#include "arena/battle.hpp"

#include <algorithm>
#include <numeric>

#include "arena/error.hpp"

namespace arena {

std::string side_tag(Side s) { return s == Side::A ? "p1" : "p2"; }

int StatStages::get(Stat s) const {
  switch (s) {
    case Stat::Atk: return atk;
    case Stat::Def: return def;
    case Stat::Spe: return spe;
  }
  return 0;
}

void StatStages::set(Stat s, int v) {
  switch (s) {
    case Stat::Atk: atk = v; break;
    case Stat::Def: def = v; break;
    case Stat::Spe: spe = v; break;
  }
}

bool PokemonInstance::has_type(Type t) const {
  return std::find(types.begin(), types.end(), t) != types.end();
}

int SideState::unfainted() const {
  return static_cast<int>(std::count_if(team.begin(), team.end(), [](const auto& p) { return !p.fainted; }));
}

int level_hp(int base) { return 2 * base * kLevel / 100 + kLevel + 10; }
int level_stat(int base) { return 2 * base * kLevel / 100 + 5; }

int staged_stat(int stat, int stage) {
  if (stage >= 0) return stat * (2 + stage) / 2;
  return stat * 2 / (2 - stage);
}

PokemonInstance make_pokemon(const Pokedex& dex, const SpeciesDef& species,
                             std::vector<std::string> moves) {
  if (moves.size() != static_cast<std::size_t>(kMaxMoves)) {
    throw BattleError(species.name + ": a Pokémon needs exactly 4 moves");
  }
  for (auto& m : moves) m = dex.move(m).name;  // canonical spelling; throws on unknown
  PokemonInstance p;
  p.species = species.name;
  p.types = species.types;
  p.ability = species.ability;
  p.moves = std::move(moves);
  p.max_hp = level_hp(species.base_hp);
  p.hp = p.max_hp;
  p.atk = level_stat(species.base_atk);
  p.def = level_stat(species.base_def);
  p.spe = level_stat(species.base_spe);
  return p;
}

std::string to_string(const Action& a) {
  if (a.is_move()) return "move " + a.move;
  return "switch " + std::to_string(a.slot);
}

namespace {

constexpr std::array<std::string_view, 27> kEventNames = {
    "switch_out",   "switch_in",      "move",       "cant",          "miss",
    "fail",         "protected",      "immune",     "damage",        "heal",
    "stage",        "stage_reset",    "status",     "status_counter", "cure",
    "faint",        "hazard_set",     "hazard_clear", "weather_start", "weather_tick",
    "weather_end",  "volatile_start", "volatile_tick", "volatile_end", "protect_start",
    "protect_end",  "protect_chain"};

}  // namespace

std::string_view event_kind_name(EventKind k) { return kEventNames[static_cast<std::size_t>(k)]; }

std::optional<EventKind> parse_event_kind(std::string_view s) {
  for (std::size_t i = 0; i < kEventNames.size(); ++i) {
    if (kEventNames[i] == s) return static_cast<EventKind>(i);
  }
  return std::nullopt;
}

std::string_view finish_reason_name(FinishReason r) {
  switch (r) {
    case FinishReason::None: return "none";
    case FinishReason::AllFainted: return "all_fainted";
    case FinishReason::TurnCap: return "turn_cap";
    case FinishReason::Forfeit: return "forfeit";
    case FinishReason::Aborted: return "aborted";
  }
  return "none";
}

std::optional<FinishReason> parse_finish_reason(std::string_view s) {
  for (auto r : {FinishReason::None, FinishReason::AllFainted, FinishReason::TurnCap,
                 FinishReason::Forfeit, FinishReason::Aborted}) {
    if (finish_reason_name(r) == s) return r;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Hooks and derived quantities

namespace {

template <typename Hook>
const Hook* find_hook(const Pokedex& dex, const PokemonInstance& p) {
  const AbilityDef* ab = dex.find_ability(p.ability);
  if (!ab) return nullptr;
  for (const auto& h : ab->hooks) {
    if (const auto* v = std::get_if<Hook>(&h)) return v;
  }
  return nullptr;
}

const ImmuneTypeHook* immunity_hook(const Pokedex& dex, const PokemonInstance& p, Type t) {
  const AbilityDef* ab = dex.find_ability(p.ability);
  if (!ab) return nullptr;
  for (const auto& h : ab->hooks) {
    if (const auto* v = std::get_if<ImmuneTypeHook>(&h); v && v->type == t) return v;
  }
  return nullptr;
}

bool status_blocked_by_ability(const Pokedex& dex, const PokemonInstance& p, StatusKind s) {
  const AbilityDef* ab = dex.find_ability(p.ability);
  if (!ab) return false;
  for (const auto& h : ab->hooks) {
    if (const auto* v = std::get_if<StatusImmuneHook>(&h); v && v->status == s) return true;
  }
  return false;
}

}  // namespace

int effective_speed(const PokemonInstance& p) {
  int s = staged_stat(p.spe, p.stages.spe);
  if (p.status.kind == StatusKind::Paralysis) s /= 2;
  return s;
}

Effectiveness move_effectiveness(const Pokedex& dex, const MoveDef& move,
                                 const PokemonInstance& defender) {
  Effectiveness e = dex.effectiveness(move.type, defender.types);
  if (immunity_hook(dex, defender, move.type)) return Effectiveness::immune();
  if (move.type == Type::Ground && defender.volatiles.magnet_rise > 0) return Effectiveness::immune();
  return e;
}

bool is_grounded(const Pokedex& dex, const PokemonInstance& p) {
  if (p.has_type(Type::Flying)) return false;
  if (immunity_hook(dex, p, Type::Ground)) return false;
  return p.volatiles.magnet_rise == 0;
}

int damage_with_roll(const PokemonInstance& attacker, const PokemonInstance& defender,
                     const MoveDef& move, const DamageInputs& in, int roll_percent,
                     const Pokedex* dex) {
  if (!move.is_attack()) throw BattleError("damage() called with status move " + move.name);
  if (in.effectiveness.is_immune()) return 0;

  std::int64_t power = move.power;
  if (dex) {
    if (const auto* pinch = find_hook<PinchBoostHook>(*dex, attacker);
        pinch && pinch->type == move.type && attacker.hp * 3 <= attacker.max_hp) {
      power = power * 3 / 2;
    }
  }
  const std::int64_t atk = staged_stat(attacker.atk, attacker.stages.atk);
  const std::int64_t def = std::max(1, staged_stat(defender.def, defender.stages.def));
  const std::int64_t level_factor = 2 * kLevel / 5 + 2;
  const std::int64_t base = (level_factor * power * atk / def) / 50 + 2;

  // Remaining modifiers multiply as an exact rational and are floored once.
  std::int64_t num = base;
  std::int64_t den = 1;
  if (attacker.has_type(move.type)) {
    num *= 3;
    den *= 2;
  }
  num *= in.effectiveness.quarters();
  den *= 4;
  if (attacker.status.kind == StatusKind::Burn) den *= 2;
  if ((in.weather == Weather::Rain && move.type == Type::Water) ||
      (in.weather == Weather::Sun && move.type == Type::Fire)) {
    num *= 3;
    den *= 2;
  } else if ((in.weather == Weather::Rain && move.type == Type::Fire) ||
             (in.weather == Weather::Sun && move.type == Type::Water)) {
    den *= 2;
  }
  num *= roll_percent;
  den *= 100;
  const std::int64_t dmg = num / den;
  return static_cast<int>(std::max<std::int64_t>(dmg, 1));
}

int damage(const PokemonInstance& attacker, const PokemonInstance& defender, const MoveDef& move,
           Rng& rng, const DamageInputs& in, const Pokedex* dex) {
  if (!move.is_attack()) throw BattleError("damage() called with status move " + move.name);
  const int roll = 85 + static_cast<int>(rng.below(16));
  return damage_with_roll(attacker, defender, move, in, roll, dex);
}

// ---------------------------------------------------------------------------
// Event application

void apply_event(BattleState& state, const Event& e) {
  SideState& side = state.side(e.side);
  auto mon = [&]() -> PokemonInstance& {
    if (e.slot < 0 || e.slot >= kTeamSize) throw BattleError("event slot out of range");
    return side.team[static_cast<std::size_t>(e.slot)];
  };
  switch (e.kind) {
    case EventKind::SwitchOut: {
      auto& p = mon();
      p.stages = {};
      p.volatiles = {};
      if (p.status.kind == StatusKind::Toxic) p.status.counter = 1;
      break;
    }
    case EventKind::SwitchIn:
      side.active = e.slot;
      mon().revealed = true;
      break;
    case EventKind::MoveUsed: {
      auto& p = mon();
      if (std::find(p.revealed_moves.begin(), p.revealed_moves.end(), e.move) == p.revealed_moves.end()) {
        p.revealed_moves.push_back(e.move);
      }
      break;
    }
    case EventKind::Cant:
    case EventKind::Miss:
    case EventKind::Fail:
    case EventKind::Protected:
    case EventKind::Immune:
      break;
    case EventKind::Damage:
    case EventKind::Heal:
      mon().hp = e.value;
      break;
    case EventKind::Stage:
      mon().stages.set(e.stat, e.value);
      break;
    case EventKind::StageReset:
      mon().stages = {};
      break;
    case EventKind::Status:
      mon().status = {e.status, e.value};
      break;
    case EventKind::StatusCounter:
      mon().status.counter = e.value;
      break;
    case EventKind::Cure:
      mon().status = {};
      break;
    case EventKind::Faint: {
      auto& p = mon();
      p.hp = 0;
      p.fainted = true;
      p.status = {};
      p.stages = {};
      p.volatiles = {};
      break;
    }
    case EventKind::HazardSet:
      if (e.hazard == Hazard::StealthRock) side.stealth_rock = e.value;
      else side.spikes = e.value;
      break;
    case EventKind::HazardClear:
      side.stealth_rock = 0;
      side.spikes = 0;
      break;
    case EventKind::WeatherStart:
      state.field.weather = e.weather;
      state.field.weather_turns = e.value;
      break;
    case EventKind::WeatherTick:
      state.field.weather_turns = e.value;
      break;
    case EventKind::WeatherEnd:
      state.field.weather = Weather::None;
      state.field.weather_turns = 0;
      break;
    case EventKind::VolatileStart:
    case EventKind::VolatileTick:
      mon().volatiles.magnet_rise = e.value;
      break;
    case EventKind::VolatileEnd:
      mon().volatiles.magnet_rise = 0;
      break;
    case EventKind::ProtectStart:
      mon().volatiles.protected_now = true;
      break;
    case EventKind::ProtectEnd:
      mon().volatiles.protected_now = false;
      break;
    case EventKind::ProtectChain:
      mon().volatiles.protect_chain = e.value;
      break;
  }
}

void settle_phase(BattleState& state, RecordKind last) {
  const bool a_out = state.side(Side::A).unfainted() == 0;
  const bool b_out = state.side(Side::B).unfainted() == 0;
  Phase ph;
  if (a_out || b_out) {
    ph.kind = PhaseKind::Finished;
    ph.reason = FinishReason::AllFainted;
    if (!(a_out && b_out)) ph.winner = a_out ? Side::B : Side::A;
    state.phase = ph;
    return;
  }
  if (last == RecordKind::Turn && state.field.turn >= state.turn_cap) {
    ph.kind = PhaseKind::Finished;
    ph.reason = FinishReason::TurnCap;
    const int score_a = state.side(Side::B).fainted() + state.side(Side::A).unfainted();
    const int score_b = state.side(Side::A).fainted() + state.side(Side::B).unfainted();
    if (score_a != score_b) ph.winner = score_a > score_b ? Side::A : Side::B;
    state.phase = ph;
    return;
  }
  for (Side s : {Side::A, Side::B}) ph.forced[idx(s)] = state.side(s).active_mon().fainted;
  ph.kind = (ph.forced[0] || ph.forced[1]) ? PhaseKind::AwaitingForcedSwitch : PhaseKind::AwaitingActions;
  state.phase = ph;
}

void apply_record(BattleState& state, const TurnRecord& record) {
  state.field.turn = record.turn;
  for (const auto& e : record.events) apply_event(state, e);
  settle_phase(state, record.kind);
  state.log.push_back(record);
}

// ---------------------------------------------------------------------------
// Turn resolution

namespace {

std::array<std::array<int, kTeamSize>, 2> hp_snapshot(const BattleState& s) {
  std::array<std::array<int, kTeamSize>, 2> out{};
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < static_cast<std::size_t>(kTeamSize); ++j) out[i][j] = s.sides[i].team[j].hp;
  }
  return out;
}

class Resolver {
 public:
  Resolver(BattleState& state, TurnRecord& rec, Rng* rng)
      : state_(state), rec_(rec), rng_(rng), dex_(*state.dex) {}

  void emit(Event e) {
    apply_event(state_, e);
    rec_.events.push_back(std::move(e));
  }

  Event ev(EventKind k, Side s) const {
    Event e;
    e.kind = k;
    e.side = s;
    e.slot = state_.side(s).active;
    return e;
  }

  PokemonInstance& mon(Side s) { return state_.side(s).active_mon(); }

  bool decided() const {
    return state_.side(Side::A).unfainted() == 0 || state_.side(Side::B).unfainted() == 0;
  }

  void deal_damage(Side s, int amount, std::string cause, std::string move = {}, int eff = -1) {
    auto& p = mon(s);
    if (p.fainted || amount <= 0) return;
    Event e = ev(EventKind::Damage, s);
    e.amount = std::min(amount, p.hp);
    e.value = p.hp - e.amount;
    e.cause = std::move(cause);
    e.move = std::move(move);
    e.effectiveness = eff;
    emit(e);
    if (mon(s).hp == 0) emit(ev(EventKind::Faint, s));
  }

  void heal(Side s, int amount, std::string cause) {
    auto& p = mon(s);
    if (p.fainted || amount <= 0 || p.hp >= p.max_hp) return;
    Event e = ev(EventKind::Heal, s);
    e.amount = std::min(amount, p.max_hp - p.hp);
    e.value = p.hp + e.amount;
    e.cause = std::move(cause);
    emit(e);
  }

  void change_stage(Side target, Stat stat, int delta, bool by_foe, std::string cause) {
    auto& p = mon(target);
    if (p.fainted || delta == 0) return;
    if (by_foe && delta < 0 && find_hook<StageDropGuardHook>(dex_, p)) {
      Event f = ev(EventKind::Fail, target);
      f.cause = "ability";
      f.stat = stat;
      emit(f);
      return;
    }
    const int cur = p.stages.get(stat);
    const int next = std::clamp(cur + delta, -6, 6);
    Event e = ev(EventKind::Stage, target);
    e.stat = stat;
    e.amount = next - cur;
    e.value = next;
    e.cause = std::move(cause);
    emit(e);
  }

  std::optional<std::string> status_block_reason(const PokemonInstance& p, StatusKind s) const {
    if (p.status.kind != StatusKind::None) return "already_statused";
    switch (s) {
      case StatusKind::Poison:
      case StatusKind::Toxic:
        if (p.has_type(Type::Poison) || p.has_type(Type::Steel)) return "type";
        break;
      case StatusKind::Burn:
        if (p.has_type(Type::Fire)) return "type";
        break;
      case StatusKind::Paralysis:
        if (p.has_type(Type::Electric)) return "type";
        break;
      case StatusKind::Freeze:
        if (p.has_type(Type::Ice)) return "type";
        break;
      default:
        break;
    }
    if (status_blocked_by_ability(dex_, p, s)) return "ability";
    return std::nullopt;
  }

  void switch_out(Side s) {
    auto& p = mon(s);
    if (!p.fainted) {
      if (const auto* h = find_hook<ExitHealHook>(dex_, p)) {
        heal(s, p.max_hp * h->fraction.num / h->fraction.den, "ability");
      }
      if (find_hook<ExitCureHook>(dex_, p) && p.status.kind != StatusKind::None) {
        Event c = ev(EventKind::Cure, s);
        c.cause = "ability";
        emit(c);
      }
    }
    emit(ev(EventKind::SwitchOut, s));
  }

  void switch_in(Side s, int slot) {
    Event in;
    in.kind = EventKind::SwitchIn;
    in.side = s;
    in.slot = slot;
    emit(in);
    auto& p = mon(s);
    const SideState& field_side = state_.side(s);
    const bool guarded = find_hook<ResidualGuardHook>(dex_, p) != nullptr;
    if (field_side.stealth_rock > 0 && !guarded) {
      const int q = dex_.effectiveness(Type::Rock, p.types).quarters();
      deal_damage(s, std::max(1, p.max_hp * q / 32), "stealth_rock");
    }
    if (field_side.spikes > 0 && !guarded && !mon(s).fainted && is_grounded(dex_, mon(s))) {
      deal_damage(s, std::max(1, mon(s).max_hp * field_side.spikes / 8), "spikes");
    }
    if (mon(s).fainted) return;
    if (const auto* h = find_hook<EntryStageHook>(dex_, mon(s))) {
      if (!mon(other(s)).fainted) change_stage(other(s), h->stat, h->delta, true, "ability");
    }
    if (const auto* h = find_hook<EntryWeatherHook>(dex_, mon(s))) {
      if (state_.field.weather != h->weather) {
        Event w = ev(EventKind::WeatherStart, s);
        w.weather = h->weather;
        w.value = 5;
        w.cause = "ability";
        emit(w);
      }
    }
  }

  void do_switch(Side s, int slot) {
    switch_out(s);
    switch_in(s, slot);
  }

  // Returns false when the Pokémon cannot act this turn.
  bool pre_move_check(Side s) {
    auto& p = mon(s);
    switch (p.status.kind) {
      case StatusKind::Sleep:
        if (p.status.counter > 0) {
          Event c = ev(EventKind::StatusCounter, s);
          c.value = p.status.counter - 1;
          emit(c);
          Event cant = ev(EventKind::Cant, s);
          cant.cause = "sleep";
          emit(cant);
          return false;
        } else {
          Event w = ev(EventKind::Cure, s);
          w.cause = "woke";
          emit(w);
        }
        break;
      case StatusKind::Freeze:
        if (rng_->chance(20)) {
          Event t = ev(EventKind::Cure, s);
          t.cause = "thaw";
          emit(t);
        } else {
          Event cant = ev(EventKind::Cant, s);
          cant.cause = "freeze";
          emit(cant);
          return false;
        }
        break;
      case StatusKind::Paralysis:
        if (rng_->chance(25)) {
          Event cant = ev(EventKind::Cant, s);
          cant.cause = "paralysis";
          emit(cant);
          return false;
        }
        break;
      default:
        break;
    }
    return true;
  }

  void fail(Side s, const MoveDef& mv, std::string cause) {
    Event f = ev(EventKind::Fail, s);
    f.move = mv.name;
    f.cause = std::move(cause);
    emit(f);
  }

  void execute_move(Side s, const std::string& move_name) {
    const MoveDef& mv = dex_.move(move_name);
    if (!pre_move_check(s)) return;
    const bool is_protect = std::any_of(mv.effects.begin(), mv.effects.end(), [](const auto& e) {
      return std::holds_alternative<ProtectEffect>(e);
    });
    if (!is_protect && mon(s).volatiles.protect_chain > 0) {
      Event c = ev(EventKind::ProtectChain, s);
      c.value = 0;
      emit(c);
    }
    Event used = ev(EventKind::MoveUsed, s);
    used.move = mv.name;
    emit(used);

    const Side foe = other(s);
    bool foe_hit = false;
    if (mv.targets_foe()) {
      if (mon(foe).fainted) {
        fail(s, mv, "no_target");
        return;
      }
      if (mon(foe).volatiles.protected_now) {
        Event p = ev(EventKind::Protected, foe);
        p.move = mv.name;
        emit(p);
        return;
      }
      if (mv.accuracy_percent() < 100 && !rng_->chance(mv.accuracy_percent())) {
        Event m = ev(EventKind::Miss, s);
        m.move = mv.name;
        emit(m);
        return;
      }
      const Effectiveness eff = move_effectiveness(dex_, mv, mon(foe));
      if (eff.is_immune()) {
        Event im = ev(EventKind::Immune, foe);
        im.move = mv.name;
        im.effectiveness = 0;
        const auto* hook = immunity_hook(dex_, mon(foe), mv.type);
        if (dex_.effectiveness(mv.type, mon(foe).types).is_immune()) im.cause = "type";
        else if (hook) im.cause = "ability";
        else im.cause = "magnet_rise";
        emit(im);
        if (hook && im.cause == "ability" && hook->heal.num > 0) {
          heal(foe, mon(foe).max_hp * hook->heal.num / hook->heal.den, "ability");
        }
        return;
      }
      if (mv.is_attack()) {
        const int dmg = damage(mon(s), mon(foe), mv, *rng_, {eff, state_.field.weather}, &dex_);
        const int before = mon(foe).hp;
        deal_damage(foe, dmg, "move", mv.name, eff.quarters());
        const int dealt = before - mon(foe).hp;
        for (const auto& e : mv.effects) {
          if (const auto* d = std::get_if<DrainEffect>(&e); d && dealt > 0) {
            heal(s, std::max(1, dealt * d->fraction.num / d->fraction.den), "drain");
          }
        }
      }
      foe_hit = true;
    }
    apply_effects(s, mv, foe_hit);
  }

  void apply_effects(Side s, const MoveDef& mv, bool foe_hit) {
    const Side foe = other(s);
    for (const auto& effect : mv.effects) {
      if (mon(s).fainted && !foe_hit) return;
      std::visit(
          [&](const auto& e) {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, StageEffect>) {
              const Side target = e.self ? s : foe;
              if (mon(target).fainted) return;
              if (e.chance < 100 && !rng_->chance(e.chance)) return;
              if (!e.self && !foe_hit) return;
              change_stage(target, e.stat, e.delta, !e.self, mv.name);
            } else if constexpr (std::is_same_v<T, StatusEffect>) {
              if (!foe_hit || mon(foe).fainted) return;
              if (e.chance < 100 && !rng_->chance(e.chance)) return;
              if (auto why = status_block_reason(mon(foe), e.status)) {
                if (!mv.is_attack()) fail(s, mv, *why);
                return;
              }
              Event st = ev(EventKind::Status, foe);
              st.status = e.status;
              st.move = mv.name;
              st.value = e.status == StatusKind::Toxic ? 1
                         : e.status == StatusKind::Sleep ? 1 + static_cast<int>(rng_->below(3))
                                                         : 0;
              emit(st);
            } else if constexpr (std::is_same_v<T, HealEffect>) {
              auto& p = mon(s);
              if (p.hp >= p.max_hp) {
                fail(s, mv, "full_hp");
                return;
              }
              heal(s, p.max_hp * e.fraction.num / e.fraction.den, mv.name);
            } else if constexpr (std::is_same_v<T, ProtectEffect>) {
              const int chain = mon(s).volatiles.protect_chain;
              const bool ok = chain == 0 || rng_->chance(1, std::uint64_t{1} << std::min(chain, 16));
              if (ok) {
                emit(ev(EventKind::ProtectStart, s));
                Event c = ev(EventKind::ProtectChain, s);
                c.value = chain + 1;
                emit(c);
              } else {
                fail(s, mv, "protect_chain");
                Event c = ev(EventKind::ProtectChain, s);
                c.value = 0;
                emit(c);
              }
            } else if constexpr (std::is_same_v<T, HazardEffect>) {
              const SideState& target = state_.side(foe);
              const int cur = e.hazard == Hazard::StealthRock ? target.stealth_rock : target.spikes;
              const int cap = e.hazard == Hazard::StealthRock ? 1 : 3;
              if (cur >= cap) {
                fail(s, mv, "hazard_full");
                return;
              }
              Event h;
              h.kind = EventKind::HazardSet;
              h.side = foe;
              h.hazard = e.hazard;
              h.value = cur + 1;
              h.move = mv.name;
              emit(h);
            } else if constexpr (std::is_same_v<T, VolatileEffect>) {
              if (mon(s).volatiles.magnet_rise > 0) {
                fail(s, mv, "already_active");
                return;
              }
              Event v = ev(EventKind::VolatileStart, s);
              v.cause = e.volatile_name;
              v.value = e.turns;
              v.move = mv.name;
              emit(v);
            } else if constexpr (std::is_same_v<T, HazeEffect>) {
              for (Side t : {s, foe}) {
                if (mon(t).fainted) continue;
                if (!mon(t).stages.all_zero()) {
                  Event r = ev(EventKind::StageReset, t);
                  r.move = mv.name;
                  emit(r);
                }
                if (mon(t).status.kind != StatusKind::None) {
                  Event c = ev(EventKind::Cure, t);
                  c.cause = mv.name;
                  emit(c);
                }
              }
            } else if constexpr (std::is_same_v<T, WeatherEffect>) {
              if (state_.field.weather == e.weather) {
                fail(s, mv, "weather_active");
                return;
              }
              Event w = ev(EventKind::WeatherStart, s);
              w.weather = e.weather;
              w.value = 5;
              w.move = mv.name;
              emit(w);
            } else if constexpr (std::is_same_v<T, ClearHazardsEffect>) {
              const SideState& own = state_.side(s);
              if (own.stealth_rock > 0 || own.spikes > 0) {
                Event c;
                c.kind = EventKind::HazardClear;
                c.side = s;
                c.move = mv.name;
                emit(c);
              }
            } else {
              // DrainEffect is resolved with the damage.
            }
          },
          effect);
    }
  }

  void residual() {
    for (Side s : {Side::A, Side::B}) {
      if (mon(s).fainted) continue;
      const bool guarded = find_hook<ResidualGuardHook>(dex_, mon(s)) != nullptr;
      if (state_.field.weather == Weather::Sandstorm && !guarded && !mon(s).has_type(Type::Rock) &&
          !mon(s).has_type(Type::Ground) && !mon(s).has_type(Type::Steel)) {
        deal_damage(s, std::max(1, mon(s).max_hp / 16), "sandstorm");
      }
      if (mon(s).fainted || guarded) continue;
      const auto& st = mon(s).status;
      switch (st.kind) {
        case StatusKind::Poison:
          deal_damage(s, std::max(1, mon(s).max_hp / 8), "poison");
          break;
        case StatusKind::Burn:
          deal_damage(s, std::max(1, mon(s).max_hp / 16), "burn");
          break;
        case StatusKind::Toxic: {
          const int n = st.counter;
          deal_damage(s, std::max(1, mon(s).max_hp * n / 16), "toxic");
          if (!mon(s).fainted && n < 15) {
            Event c = ev(EventKind::StatusCounter, s);
            c.value = n + 1;
            emit(c);
          }
          break;
        }
        default:
          break;
      }
    }
    for (Side s : {Side::A, Side::B}) {
      auto& p = mon(s);
      if (!p.fainted && p.volatiles.magnet_rise > 0) {
        const int left = p.volatiles.magnet_rise - 1;
        Event v = ev(left == 0 ? EventKind::VolatileEnd : EventKind::VolatileTick, s);
        v.cause = "magnet_rise";
        v.value = left;
        emit(v);
      }
      if (mon(s).volatiles.protected_now) emit(ev(EventKind::ProtectEnd, s));
    }
    if (state_.field.weather != Weather::None) {
      const int left = state_.field.weather_turns - 1;
      Event w;
      w.kind = left <= 0 ? EventKind::WeatherEnd : EventKind::WeatherTick;
      w.value = std::max(left, 0);
      w.weather = state_.field.weather;
      emit(w);
    }
  }

  // Faster side first, ties by coin flip. Uses the rng only for ties.
  std::array<Side, 2> speed_order() {
    const int sa = effective_speed(mon(Side::A));
    const int sb = effective_speed(mon(Side::B));
    if (sa != sb) return sa > sb ? std::array{Side::A, Side::B} : std::array{Side::B, Side::A};
    return rng_->coin() ? std::array{Side::A, Side::B} : std::array{Side::B, Side::A};
  }

  void run_turn(const Action& a, const Action& b) {
    const std::array<const Action*, 2> acts{&a, &b};
    // Switches resolve before moves.
    const bool sw_a = a.is_switch();
    const bool sw_b = b.is_switch();
    if (sw_a && sw_b) {
      for (Side s : speed_order()) do_switch(s, acts[idx(s)]->slot);
    } else if (sw_a) {
      do_switch(Side::A, a.slot);
    } else if (sw_b) {
      do_switch(Side::B, b.slot);
    }

    std::vector<Side> movers;
    for (Side s : {Side::A, Side::B}) {
      if (acts[idx(s)]->is_move()) movers.push_back(s);
    }
    if (movers.size() == 2) {
      const int pa = dex_.move(a.move).priority;
      const int pb = dex_.move(b.move).priority;
      if (pa != pb) {
        movers = pa > pb ? std::vector{Side::A, Side::B} : std::vector{Side::B, Side::A};
      } else {
        auto o = speed_order();
        movers = {o[0], o[1]};
      }
    }
    for (Side s : movers) {
      if (decided()) break;
      if (mon(s).fainted) continue;  // fainted earlier this turn: pending move cancelled
      execute_move(s, acts[idx(s)]->move);
    }
    if (!decided()) residual();
  }

 private:
  BattleState& state_;
  TurnRecord& rec_;
  Rng* rng_;
  const Pokedex& dex_;
};

std::optional<std::string> illegal_reason(const BattleState& state, Side side, const Action& act) {
  const auto legal = legal_actions(state, side);
  if (std::find(legal.begin(), legal.end(), act) != legal.end()) return std::nullopt;
  if (act.is_move()) {
    if (state.forced_pending(side)) return "a forced switch is pending; only switches are legal";
    return "move '" + act.move + "' is not known by the active Pokémon";
  }
  if (act.slot < 0 || act.slot >= kTeamSize) return "switch slot out of range";
  if (act.slot == state.side(side).active && !state.forced_pending(side)) return "target is already active";
  if (state.side(side).team[static_cast<std::size_t>(act.slot)].fainted) return "switch target has fainted";
  return "action not available";
}

}  // namespace

Team random_team(Rng& rng, const Pokedex& dex) {
  const auto& all = dex.all_species();
  if (all.size() < static_cast<std::size_t>(kTeamSize)) {
    throw BattleError("dex too small: need at least 6 species, have " + std::to_string(all.size()));
  }
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  Team team;
  for (std::size_t i = 0; i < static_cast<std::size_t>(kTeamSize); ++i) {
    const std::size_t j = i + rng.below(order.size() - i);
    std::swap(order[i], order[j]);
    const SpeciesDef& sp = all[order[i]];
    std::vector<std::size_t> pool(sp.move_pool.size());
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t k = 0; k < static_cast<std::size_t>(kMaxMoves); ++k) {
      const std::size_t m = k + rng.below(pool.size() - k);
      std::swap(pool[k], pool[m]);
    }
    std::sort(pool.begin(), pool.begin() + kMaxMoves);
    std::vector<std::string> moves;
    for (std::size_t k = 0; k < static_cast<std::size_t>(kMaxMoves); ++k) moves.push_back(sp.move_pool[pool[k]]);
    team[i] = make_pokemon(dex, sp, std::move(moves));
  }
  return team;
}

BattleState initial_state(std::shared_ptr<const Pokedex> dex, Team team_a, Team team_b,
                          std::uint64_t seed, BattleOptions options) {
  BattleState s;
  s.dex = std::move(dex);
  s.sides[0].team = std::move(team_a);
  s.sides[1].team = std::move(team_b);
  s.seed = seed;
  s.turn_cap = options.turn_cap;
  return s;
}

BattleState new_battle(std::shared_ptr<const Pokedex> dex, Team team_a, Team team_b,
                       std::uint64_t seed, BattleOptions options) {
  BattleState s = initial_state(std::move(dex), std::move(team_a), std::move(team_b), seed, options);
  TurnRecord rec;
  rec.turn = 0;
  rec.kind = RecordKind::Start;
  rec.hp_before = hp_snapshot(s);
  Resolver r(s, rec, nullptr);
  r.switch_in(Side::A, 0);
  r.switch_in(Side::B, 0);
  rec.hp_after = hp_snapshot(s);
  settle_phase(s, RecordKind::Start);
  s.log.push_back(std::move(rec));
  return s;
}

std::vector<Action> legal_actions(const BattleState& state, Side side) {
  if (state.finished()) throw BattleError("battle is finished");
  const SideState& ss = state.side(side);
  std::vector<Action> out;
  if (state.phase.kind == PhaseKind::AwaitingForcedSwitch) {
    if (!state.phase.forced[idx(side)]) return out;
    for (int i = 0; i < kTeamSize; ++i) {
      if (i != ss.active && !ss.team[static_cast<std::size_t>(i)].fainted) out.push_back(Action::switch_to(i));
    }
    return out;
  }
  for (const auto& m : ss.active_mon().moves) out.push_back(Action::use(m));
  for (int i = 0; i < kTeamSize; ++i) {
    if (i != ss.active && !ss.team[static_cast<std::size_t>(i)].fainted) out.push_back(Action::switch_to(i));
  }
  return out;
}

const TurnRecord& step(BattleState& state, const Action& a, const Action& b) {
  if (state.finished()) throw BattleError("battle is finished");
  if (state.phase.kind != PhaseKind::AwaitingActions) throw BattleError("a forced switch is pending");
  for (Side s : {Side::A, Side::B}) {
    if (auto why = illegal_reason(state, s, s == Side::A ? a : b)) throw IllegalActionError(static_cast<int>(idx(s)), *why);
  }
  TurnRecord rec;
  rec.turn = state.field.turn + 1;
  rec.kind = RecordKind::Turn;
  rec.actions = {a, b};
  rec.hp_before = hp_snapshot(state);
  state.field.turn = rec.turn;
  Rng rng(mix_seed(state.seed, static_cast<std::uint64_t>(rec.turn)));
  Resolver r(state, rec, &rng);
  r.run_turn(a, b);
  rec.hp_after = hp_snapshot(state);
  settle_phase(state, RecordKind::Turn);
  state.log.push_back(std::move(rec));
  return state.log.back();
}

const TurnRecord& resolve_forced_switches(BattleState& state, const std::optional<Action>& a,
                                          const std::optional<Action>& b) {
  if (state.phase.kind != PhaseKind::AwaitingForcedSwitch) throw BattleError("no forced switch is pending");
  const std::array<const std::optional<Action>*, 2> acts{&a, &b};
  for (Side s : {Side::A, Side::B}) {
    const auto& act = *acts[idx(s)];
    if (state.phase.forced[idx(s)]) {
      if (!act) throw IllegalActionError(static_cast<int>(idx(s)), "a forced switch must be chosen");
      if (auto why = illegal_reason(state, s, *act)) throw IllegalActionError(static_cast<int>(idx(s)), *why);
    } else if (act) {
      throw IllegalActionError(static_cast<int>(idx(s)), "no forced switch pending for this side");
    }
  }
  TurnRecord rec;
  rec.turn = state.field.turn;
  rec.kind = RecordKind::ForcedSwitch;
  rec.actions = {a, b};
  rec.hp_before = hp_snapshot(state);
  Resolver r(state, rec, nullptr);
  for (Side s : {Side::A, Side::B}) {
    if (const auto& act = *acts[idx(s)]) r.switch_in(s, act->slot);
  }
  rec.hp_after = hp_snapshot(state);
  settle_phase(state, RecordKind::ForcedSwitch);
  state.log.push_back(std::move(rec));
  return state.log.back();
}

void end_battle(BattleState& state, std::optional<Side> winner, FinishReason reason) {
  state.phase = Phase{PhaseKind::Finished, {false, false}, winner, reason};
}

int battle_score(const BattleState& state, Side side) {
  if (!state.finished()) throw BattleError("battle is not finished");
  return state.side(other(side)).fainted() + state.side(side).unfainted();
}

}  // namespace arena
