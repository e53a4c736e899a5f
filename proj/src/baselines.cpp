#include "arena/baselines.hpp"

#include "arena/error.hpp"

namespace arena {

namespace {

bool is_boost_move(const MoveDef& m) {
  if (m.is_attack()) return false;
  for (const auto& e : m.effects) {
    if (const auto* st = std::get_if<StageEffect>(&e); st && st->self && st->delta > 0) return true;
  }
  return false;
}

const HazardEffect* hazard_of(const MoveDef& m) {
  for (const auto& e : m.effects) {
    if (const auto* h = std::get_if<HazardEffect>(&e)) return h;
  }
  return nullptr;
}

// Boost moves used by the Pokémon in `slot` so far, counted from the log.
int boosts_used(const BattleState& state, Side side, int slot) {
  int n = 0;
  for (const auto& rec : state.log) {
    for (const auto& e : rec.events) {
      if (e.kind == EventKind::MoveUsed && e.side == side && e.slot == slot &&
          is_boost_move(state.dex->move(e.move))) {
        ++n;
      }
    }
  }
  return n;
}

// The foe's types hit `p` super-effectively.
bool at_type_disadvantage(const Pokedex& dex, const PokemonInstance& p, const PokemonInstance& foe) {
  for (Type t : foe.types) {
    if (dex.effectiveness(t, p.types).quarters() >= 8) return true;
  }
  return false;
}

}  // namespace

Action random_policy(const BattleState& state, Side side, Rng& rng) {
  const auto legal = legal_actions(state, side);
  if (legal.empty()) throw BattleError("no legal actions");
  return legal[static_cast<std::size_t>(rng.below(legal.size()))];
}

Action maxpower_policy(const BattleState& state, Side side) {
  const auto legal = legal_actions(state, side);
  if (legal.empty()) throw BattleError("no legal actions");
  const Pokedex& dex = *state.dex;
  const Action* best = nullptr;
  for (const auto& a : legal) {
    if (!a.is_move()) continue;
    if (!best) {
      best = &a;
      continue;
    }
    const MoveDef& m = dex.move(a.move);
    const MoveDef& b = dex.move(best->move);
    if (m.power > b.power || (m.power == b.power && dex.move_order(m.name) < dex.move_order(b.name))) best = &a;
  }
  if (best) return *best;
  return legal.front();  // forced switch: lowest unfainted slot
}

double bot_move_score(const Pokedex& dex, const PokemonInstance& user, const MoveDef& move,
                      const PokemonInstance& target) {
  if (!move.is_attack()) return 0.0;
  const double stab = user.has_type(move.type) ? 1.5 : 1.0;
  return move.power * move_effectiveness(dex, move, target).value() * stab;
}

double bot_best_score(const Pokedex& dex, const PokemonInstance& user, const PokemonInstance& target) {
  double best = 0.0;
  for (const auto& m : user.moves) best = std::max(best, bot_move_score(dex, user, dex.move(m), target));
  return best;
}

Action heuristic_bot(const BattleState& state, Side side, const BotConfig& config) {
  const auto legal = legal_actions(state, side);
  if (legal.empty()) throw BattleError("no legal actions");
  const Pokedex& dex = *state.dex;
  const SideState& own = state.side(side);
  const SideState& opp = state.side(other(side));
  const PokemonInstance& foe = opp.active_mon();

  if (state.forced_pending(side)) {
    const Action* best = &legal.front();
    double best_score = -1.0;
    for (const auto& a : legal) {
      const double s = bot_best_score(dex, own.team[static_cast<std::size_t>(a.slot)], foe);
      if (s > best_score) {
        best_score = s;
        best = &a;
      }
    }
    return *best;
  }

  const PokemonInstance& me = own.active_mon();

  // Rung 1: entry hazard on the Pokémon's first appearance.
  if (me.revealed_moves.empty()) {
    for (const auto& m : me.moves) {
      const HazardEffect* h = hazard_of(dex.move(m));
      if (!h) continue;
      const int layers = h->hazard == Hazard::StealthRock ? opp.stealth_rock : opp.spikes;
      if (layers == 0) return Action::use(m);
    }
  }

  // Rung 2: boost while unboosted and not threatened by type.
  if (!me.stages.any_positive() && !at_type_disadvantage(dex, me, foe) &&
      boosts_used(state, side, own.active) < config.max_boosts) {
    for (const auto& m : me.moves) {
      if (is_boost_move(dex.move(m))) return Action::use(m);
    }
  }

  // Rung 3: best scored move or penalized switch.
  std::optional<Action> best;
  double best_score = -1.0;
  for (const auto& a : legal) {
    double s;
    if (a.is_move()) {
      s = bot_move_score(dex, me, dex.move(a.move), foe);
    } else {
      s = bot_best_score(dex, own.team[static_cast<std::size_t>(a.slot)], foe) * config.switch_penalty;
    }
    if (s > best_score) {
      best_score = s;
      best = a;
    }
  }
  return *best;
}

}  // namespace arena
