#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arena/pokedex.hpp"
#include "arena/rng.hpp"

namespace arena {

inline constexpr int kLevel = 80;
inline constexpr int kTeamSize = 6;
inline constexpr int kMaxMoves = 4;
inline constexpr int kDefaultTurnCap = 200;

enum class Side : std::uint8_t { A = 0, B = 1 };

constexpr std::size_t idx(Side s) { return static_cast<std::size_t>(s); }
constexpr Side other(Side s) { return s == Side::A ? Side::B : Side::A; }
// Wire-protocol side tag: "p1" / "p2".
std::string side_tag(Side s);

struct StatStages {
  int atk = 0;
  int def = 0;
  int spe = 0;

  int get(Stat s) const;
  void set(Stat s, int v);
  bool any_positive() const { return atk > 0 || def > 0 || spe > 0; }
  bool all_zero() const { return atk == 0 && def == 0 && spe == 0; }
  bool operator==(const StatStages&) const = default;
};

// counter: toxic damage numerator for Toxic, remaining sleep turns for Sleep.
struct StatusCondition {
  StatusKind kind = StatusKind::None;
  int counter = 0;
  bool operator==(const StatusCondition&) const = default;
};

struct Volatiles {
  bool protected_now = false;
  int protect_chain = 0;  // consecutive successful Protect uses
  int magnet_rise = 0;    // turns left
  bool operator==(const Volatiles&) const = default;
};

struct PokemonInstance {
  std::string species;
  std::vector<Type> types;
  std::string ability;
  std::vector<std::string> moves;  // exactly 4
  int max_hp = 1;
  int hp = 1;
  int atk = 1;
  int def = 1;
  int spe = 1;
  StatStages stages;
  StatusCondition status;
  Volatiles volatiles;
  bool fainted = false;
  // Visible to the opposing player: has been on the field / moves it has used.
  bool revealed = false;
  std::vector<std::string> revealed_moves;

  bool has_type(Type t) const;
  bool operator==(const PokemonInstance&) const = default;
};

// Level-80 four-stat instance of a species with the given moves.
PokemonInstance make_pokemon(const Pokedex& dex, const SpeciesDef& species,
                             std::vector<std::string> moves);

int level_hp(int base);    // floor(2*base*L/100) + L + 10
int level_stat(int base);  // floor(2*base*L/100) + 5
// (2+s)/2 for s >= 0, 2/(2-s) for s < 0, applied with floor.
int staged_stat(int stat, int stage);

using Team = std::array<PokemonInstance, kTeamSize>;

struct SideState {
  Team team;
  int active = 0;
  int stealth_rock = 0;  // 0 or 1
  int spikes = 0;        // 0..3

  const PokemonInstance& active_mon() const { return team[static_cast<std::size_t>(active)]; }
  PokemonInstance& active_mon() { return team[static_cast<std::size_t>(active)]; }
  int unfainted() const;
  int fainted() const { return kTeamSize - unfainted(); }
  bool operator==(const SideState&) const = default;
};

struct FieldState {
  Weather weather = Weather::None;
  int weather_turns = 0;
  int turn = 0;  // last completed turn; the first turn is 1
  bool operator==(const FieldState&) const = default;
};

struct Action {
  enum class Kind : std::uint8_t { Move, Switch };
  Kind kind = Kind::Move;
  std::string move;  // Move
  int slot = -1;     // Switch: index into the side's team

  static Action use(std::string move_name) { return {Kind::Move, std::move(move_name), -1}; }
  static Action switch_to(int slot) { return {Kind::Switch, {}, slot}; }
  bool is_move() const { return kind == Kind::Move; }
  bool is_switch() const { return kind == Kind::Switch; }
  bool operator==(const Action&) const = default;
};

std::string to_string(const Action& a);

enum class EventKind : std::uint8_t {
  SwitchOut,      // side, slot: stages/volatiles cleared, toxic counter reset
  SwitchIn,       // side, slot: becomes active and revealed
  MoveUsed,       // side, slot, move
  Cant,           // side, slot, cause = paralysis|sleep|freeze
  Miss,           // side (attacker), move
  Fail,           // side (user), move, cause
  Protected,      // side (target), move
  Immune,         // side (target), move, cause = type|ability|magnet_rise, effectiveness 0
  Damage,         // side (target), slot, amount, value = hp after, cause, move, effectiveness
  Heal,           // side, slot, amount, value = hp after, cause
  Stage,          // side, slot, stat, amount = applied delta, value = stage after, cause
  StageReset,     // side, slot
  Status,         // side, slot, status, value = counter
  StatusCounter,  // side, slot, value = counter
  Cure,           // side, slot, cause
  Faint,          // side, slot
  HazardSet,      // side (owner of the field side), hazard, value = layers after
  HazardClear,    // side
  WeatherStart,   // weather, value = turns
  WeatherTick,    // value = turns left
  WeatherEnd,
  VolatileStart,  // side, slot, cause = volatile name, value = turns
  VolatileTick,   // side, slot, cause, value = turns left
  VolatileEnd,    // side, slot, cause
  ProtectStart,   // side, slot
  ProtectEnd,     // side, slot
  ProtectChain,   // side, slot, value
};

std::string_view event_kind_name(EventKind k);
std::optional<EventKind> parse_event_kind(std::string_view s);

// One state mutation. Fields beyond kind/side are meaningful per kind (see EventKind).
struct Event {
  EventKind kind = EventKind::Fail;
  Side side = Side::A;
  int slot = -1;
  std::string move;
  std::string cause;
  int amount = 0;
  int value = 0;
  int effectiveness = -1;  // quarters; -1 when not applicable
  Stat stat = Stat::Atk;
  StatusKind status = StatusKind::None;
  Hazard hazard = Hazard::StealthRock;
  Weather weather = Weather::None;
  bool operator==(const Event&) const = default;
};

enum class RecordKind : std::uint8_t { Start, Turn, ForcedSwitch };

struct TurnRecord {
  int turn = 0;
  RecordKind kind = RecordKind::Turn;
  // Chosen actions for Turn records; forced switches for ForcedSwitch records (nullopt when the
  // side had nothing to do).
  std::array<std::optional<Action>, 2> actions;
  std::vector<Event> events;
  std::array<std::array<int, kTeamSize>, 2> hp_before{};
  std::array<std::array<int, kTeamSize>, 2> hp_after{};
  bool operator==(const TurnRecord&) const = default;
};

enum class PhaseKind : std::uint8_t { AwaitingActions, AwaitingForcedSwitch, Finished };
enum class FinishReason : std::uint8_t { None, AllFainted, TurnCap, Forfeit, Aborted };
std::string_view finish_reason_name(FinishReason r);
std::optional<FinishReason> parse_finish_reason(std::string_view s);

struct Phase {
  PhaseKind kind = PhaseKind::AwaitingActions;
  std::array<bool, 2> forced{false, false};
  std::optional<Side> winner;  // nullopt with Finished = draw
  FinishReason reason = FinishReason::None;
  bool operator==(const Phase&) const = default;
};

struct BattleOptions {
  int turn_cap = kDefaultTurnCap;
};

struct BattleState {
  std::shared_ptr<const Pokedex> dex;
  std::array<SideState, 2> sides;
  FieldState field;
  std::uint64_t seed = 0;
  int turn_cap = kDefaultTurnCap;
  Phase phase;
  std::vector<TurnRecord> log;

  const SideState& side(Side s) const { return sides[idx(s)]; }
  SideState& side(Side s) { return sides[idx(s)]; }
  bool finished() const { return phase.kind == PhaseKind::Finished; }
  bool forced_pending(Side s) const {
    return phase.kind == PhaseKind::AwaitingForcedSwitch && phase.forced[idx(s)];
  }

  // Game state only (dex pointer and log excluded).
  bool same_game_state(const BattleState& o) const {
    return sides == o.sides && field == o.field && seed == o.seed && turn_cap == o.turn_cap &&
           phase == o.phase;
  }
};

// 6 distinct species uniformly without replacement, 4 distinct moves each uniformly from the pool.
Team random_team(Rng& rng, const Pokedex& dex);

// State before any record: leads at slot 0, nothing revealed, empty log.
BattleState initial_state(std::shared_ptr<const Pokedex> dex, Team team_a, Team team_b,
                          std::uint64_t seed, BattleOptions options = {});

// Builds the initial state; leads are sent out and entry effects resolved in a Start record.
BattleState new_battle(std::shared_ptr<const Pokedex> dex, Team team_a, Team team_b,
                       std::uint64_t seed, BattleOptions options = {});

// Moves of the active Pokémon followed by switches to unfainted bench slots (awaiting_actions),
// or switches only (forced switch pending for `side`). Empty for a side with nothing to decide
// during another side's forced switch. Throws BattleError for a finished battle.
std::vector<Action> legal_actions(const BattleState& state, Side side);

// Resolves one turn. Throws IllegalActionError naming the side and reason.
const TurnRecord& step(BattleState& state, const Action& a, const Action& b);

// Resolves pending forced switches; each pending side must supply a Switch.
const TurnRecord& resolve_forced_switches(BattleState& state, const std::optional<Action>& a,
                                          const std::optional<Action>& b);

// Ends the battle with `loser` forfeiting (or aborted when reason == Aborted).
void end_battle(BattleState& state, std::optional<Side> winner, FinishReason reason);

struct DamageInputs {
  Effectiveness effectiveness = Effectiveness::neutral();
  Weather weather = Weather::None;
};

// Deterministic core of the damage formula with an explicit roll in [85, 100].
int damage_with_roll(const PokemonInstance& attacker, const PokemonInstance& defender,
                     const MoveDef& move, const DamageInputs& in, int roll_percent,
                     const Pokedex* dex = nullptr);

// Draws the roll from rng. Throws BattleError for status moves.
int damage(const PokemonInstance& attacker, const PokemonInstance& defender, const MoveDef& move,
           Rng& rng, const DamageInputs& in, const Pokedex* dex = nullptr);

// Opponent fainted count + own unfainted count. Throws BattleError unless finished.
int battle_score(const BattleState& state, Side side);

// Applies one event to the state. The engine mutates state exclusively through this function,
// so replaying a record's events over the pre-state reproduces the post-state.
void apply_event(BattleState& state, const Event& e);

// Recomputes the phase from the state after a record has been applied.
void settle_phase(BattleState& state, RecordKind last);

// Rebuilds a state by applying records to `initial` (a state fresh from new_battle with its Start
// record removed, or any pre-state).
void apply_record(BattleState& state, const TurnRecord& record);

// Effective speed used for move ordering (stages and paralysis applied).
int effective_speed(const PokemonInstance& p);

// Effectiveness of `move` against `defender` including ability and volatile immunities.
Effectiveness move_effectiveness(const Pokedex& dex, const MoveDef& move,
                                 const PokemonInstance& defender);

bool is_grounded(const Pokedex& dex, const PokemonInstance& p);

}  // namespace arena
