#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "arena/battle.hpp"
#include "arena/feedback.hpp"

namespace arena {

// What one player can see. Built from the engine state or from a protocol tracker, so the text
// renderer never touches hidden data.
struct MonView {
  bool revealed = false;  // false: only the slot's existence is known
  std::string species;
  std::vector<Type> types;
  std::string ability;
  int hp_percent = 0;
  std::optional<int> hp;       // own side only
  std::optional<int> max_hp;   // own side only
  std::optional<int> atk, def, spe;  // own side only
  StatusKind status = StatusKind::None;
  StatStages stages;  // meaningful for the active Pokémon
  std::vector<std::string> moves;  // own: full set; opponent: revealed only
  bool fainted = false;
  bool active = false;
  int magnet_rise = 0;
};

struct SideView {
  std::vector<MonView> team;  // always 6 entries
  int stealth_rock = 0;
  int spikes = 0;

  const MonView* active() const;
};

struct HistoryEntry {
  int turn = 0;
  std::string text;
};

struct ActionOption {
  Action action;
  std::string label;     // "move Fire Blast" / "switch Charizard"
  int power = 0;         // move power; 0 for switches and status moves
  std::size_t order = 0; // dex order of the move, for fallback tie-breaks
};

struct BattleView {
  Side side = Side::A;
  int turn = 0;
  SideView own;
  SideView opponent;
  Weather weather = Weather::None;
  int weather_turns = 0;
  std::vector<HistoryEntry> history;  // actions only, oldest first
  std::vector<ActionOption> actions;
  bool forced_switch = false;
};

struct DescribeOptions {
  int history_window = 5;
};

struct Observation {
  Side side = Side::A;
  int turn = 0;
  std::string own_team;
  std::string opponent_team;
  std::string field;
  std::string turn_history;
  std::vector<ActionOption> actions;
  std::vector<FeedbackItem> feedback;  // filled by the agent from its ICRL memory
  std::vector<std::string> knowledge;  // filled by the knowledge module
  bool forced_switch = false;

  const ActionOption* find(const Action& a) const;
  std::string render() const;
};

std::string action_label(const BattleState& state, Side side, const Action& a);
std::vector<ActionOption> action_options(const BattleState& state, Side side);

// History lines for one record from `side`'s perspective; empty for records with no actions.
std::string history_text(const TurnRecord& rec, const BattleState& state, Side side);

BattleView view_of(const BattleState& state, Side side, const DescribeOptions& options = {});

Observation describe(const BattleView& view, const Pokedex& dex, const DescribeOptions& options = {});
Observation describe(const BattleState& state, Side side, const DescribeOptions& options = {});

// Machine-readable form of the view; the serve API's human-side state.
nlohmann::json view_to_json(const BattleView& view, const Pokedex& dex);

}  // namespace arena
