#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "arena/battle.hpp"

namespace arena {

inline constexpr int kLogSchemaVersion = 1;

nlohmann::json to_json(const Action& a);
Action action_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Event& e);
Event event_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TurnRecord& r);
TurnRecord record_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PokemonInstance& p);
PokemonInstance pokemon_from_json(const nlohmann::json& j);

nlohmann::json team_to_json(const Team& t);
Team team_from_json(const nlohmann::json& j);

// Full game state (dex and log excluded).
nlohmann::json state_to_json(const BattleState& s);

// Stable 64-bit FNV-1a over the canonical state JSON, as 16 hex digits.
std::string state_digest(const BattleState& s);

std::string_view record_kind_name(RecordKind k);

struct LogHeader {
  int schema_version = kLogSchemaVersion;
  std::uint64_t seed = 0;
  int battle_index = 0;
  int turn_cap = kDefaultTurnCap;
  std::array<Team, 2> teams;  // pristine teams before the Start record
  std::array<nlohmann::json, 2> agents{nlohmann::json::object(), nlohmann::json::object()};
};

struct LogFooter {
  std::optional<Side> winner;
  FinishReason reason = FinishReason::None;
  std::array<int, 2> scores{0, 0};
  int turns = 0;
  std::string digest;
};

struct LoggedRecord {
  TurnRecord record;
  // Per-side decision traces (null when the side had no decision or is a non-LLM policy).
  std::array<nlohmann::json, 2> decisions;
};

struct BattleLog {
  LogHeader header;
  std::vector<LoggedRecord> records;
  std::optional<LogFooter> footer;
};

LogFooter make_footer(const BattleState& finished);

// Appends one JSON line per call and flushes, so a crash leaves a readable prefix.
class LogWriter {
 public:
  explicit LogWriter(std::ostream& out) : out_(out) {}
  void header(const LogHeader& h);
  void record(const TurnRecord& r, const std::array<nlohmann::json, 2>& decisions = {});
  void footer(const LogFooter& f);

 private:
  std::ostream& out_;
};

void write_log(const BattleLog& log, std::ostream& out);
std::string write_log(const BattleLog& log);

// Throws LogError on schema-version mismatch, malformed lines, or (unless allow_incomplete) a
// missing result footer.
BattleLog read_log(std::istream& in, bool allow_incomplete = false);
BattleLog read_log_file(const std::string& path, bool allow_incomplete = false);

}  // namespace arena
