#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "arena/battle.hpp"
#include "arena/pokedex.hpp"

namespace arena::testing {

inline std::shared_ptr<const Pokedex> bundled_dex() {
  static const auto dex = std::make_shared<const Pokedex>(load_pokedex(ARENA_DATA_DIR));
  return dex;
}

struct Member {
  std::string species;
  std::vector<std::string> moves;  // empty: first four of the pool
};

inline Team make_team(const Pokedex& dex, const std::vector<Member>& members) {
  Team t;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const Member& m = members.at(i);
    const SpeciesDef& sp = dex.species(m.species);
    std::vector<std::string> moves = m.moves;
    if (moves.empty()) moves.assign(sp.move_pool.begin(), sp.move_pool.begin() + kMaxMoves);
    t[i] = make_pokemon(dex, sp, moves);
  }
  return t;
}

// Six members where only the lead is specified; the bench is filler.
inline Team lead_team(const Pokedex& dex, Member lead) {
  std::vector<Member> ms{std::move(lead)};
  for (const char* s : {"Snorlax", "Blissey", "Vaporeon", "Slowbro", "Lapras"}) ms.push_back({s, {}});
  return make_team(dex, ms);
}

inline const Event* find_event(const TurnRecord& r, EventKind k, std::optional<Side> side = std::nullopt) {
  for (const auto& e : r.events) {
    if (e.kind == k && (!side || e.side == *side)) return &e;
  }
  return nullptr;
}

// Leads only; benches are filler.
inline BattleState duel(Member a, Member b, std::uint64_t seed = 1) {
  const auto dex = bundled_dex();
  return new_battle(dex, lead_team(*dex, std::move(a)), lead_team(*dex, std::move(b)), seed);
}


inline Action pick(Rng& rng, const std::vector<Action>& legal) {
  return legal.at(static_cast<std::size_t>(rng.below(legal.size())));
}

// Plays a battle with uniformly random actions; `after` runs after every record.
inline BattleState random_battle(std::uint64_t seed, int turn_cap = kDefaultTurnCap,
                                 const std::function<void(const BattleState&)>& after = {}) {
  const auto dex = bundled_dex();
  Rng team_rng(mix_seed(seed, 1));
  Team a = random_team(team_rng, *dex);
  Team b = random_team(team_rng, *dex);
  BattleState s = new_battle(dex, a, b, seed, {turn_cap});
  Rng pol(mix_seed(seed, 2));
  while (!s.finished()) {
    if (s.phase.kind == PhaseKind::AwaitingForcedSwitch) {
      std::optional<Action> fa, fb;
      if (s.forced_pending(Side::A)) fa = pick(pol, legal_actions(s, Side::A));
      if (s.forced_pending(Side::B)) fb = pick(pol, legal_actions(s, Side::B));
      resolve_forced_switches(s, fa, fb);
    } else {
      const Action x = pick(pol, legal_actions(s, Side::A));
      const Action y = pick(pol, legal_actions(s, Side::B));
      step(s, x, y);
    }
    if (after) after(s);
  }
  return s;
}

}  // namespace arena::testing
