#pragma once

#include <optional>

#include "arena/policy.hpp"

namespace arena {

Action random_policy(const BattleState& state, Side side, Rng& rng);

// Highest-power move, ties by dex order; never switches voluntarily. In a forced switch, the first
// unfainted bench slot.
Action maxpower_policy(const BattleState& state, Side side);

struct BotConfig {
  double switch_penalty = 0.8;
  int max_boosts = 2;  // boost rung applies to the first N boost uses per Pokémon
};

// power x effectiveness x STAB as seen from `user` against `target`.
double bot_move_score(const Pokedex& dex, const PokemonInstance& user, const MoveDef& move,
                      const PokemonInstance& target);
// Best bot_move_score over the user's attack moves.
double bot_best_score(const Pokedex& dex, const PokemonInstance& user, const PokemonInstance& target);

// Priority ladder: hazard on first appearance, boost when safe, then best scored option.
Action heuristic_bot(const BattleState& state, Side side, const BotConfig& config = {});

class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
  std::string name() const override { return "random"; }
  PolicyChoice choose(const BattleState& state, Side side) override {
    return {random_policy(state, side, rng_), nullptr, false};
  }

 private:
  Rng rng_;
};

class MaxPowerPolicy : public Policy {
 public:
  std::string name() const override { return "maxpower"; }
  PolicyChoice choose(const BattleState& state, Side side) override {
    return {maxpower_policy(state, side), nullptr, false};
  }
};

class BotPolicy : public Policy {
 public:
  explicit BotPolicy(BotConfig config = {}) : config_(config) {}
  std::string name() const override { return "bot"; }
  PolicyChoice choose(const BattleState& state, Side side) override {
    return {heuristic_bot(state, side, config_), nullptr, false};
  }

 private:
  BotConfig config_;
};

}  // namespace arena
