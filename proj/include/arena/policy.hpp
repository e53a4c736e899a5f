#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "json.hpp"

#include "arena/battle.hpp"

namespace arena {

struct PolicyChoice {
  Action action;
  nlohmann::json trace;  // null for policies without a decision trace
  bool fallback = false;
};

// Chooses actions for one side of one battle. Instances may keep per-battle memory and are not
// shared between battles.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  // Called in awaiting_actions and for this side's forced switches.
  virtual PolicyChoice choose(const BattleState& state, Side side) = 0;
  // Called after each record is applied.
  virtual void observe(const BattleState& /*state*/, Side /*side*/, const TurnRecord& /*record*/) {}
  virtual nlohmann::json describe() const { return {{"name", name()}}; }
};

// Builds a fresh policy for one battle; `seed` is the per-battle seed.
using PolicyFactory = std::function<std::unique_ptr<Policy>(std::uint64_t seed, Side side)>;

}  // namespace arena
