#pragma once

#include <array>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "arena/battle.hpp"
#include "arena/battle_log.hpp"
#include "arena/error.hpp"
#include "arena/textstate.hpp"

namespace arena {

class ProtocolError : public ArenaError {
 public:
  using ArenaError::ArenaError;
};

namespace proto {

struct Turn {
  int n = 0;
};
struct Move {
  Side side = Side::A;
  std::string pokemon;
  std::string move;
  std::optional<Side> target_side;
  std::string target;
};
struct SwitchIn {
  Side side = Side::A;
  std::string pokemon;  // nickname from the ident
  std::string species;  // from the details field
  double hp_fraction = 1.0;
  std::optional<int> hp, max_hp;  // when the condition carries absolute numbers
  StatusKind status = StatusKind::None;
};
struct Damage {
  Side side = Side::A;
  std::string pokemon;
  double hp_fraction = 0.0;
  StatusKind status = StatusKind::None;
  std::string from;  // [from] tag, if any
};
struct Heal {
  Side side = Side::A;
  std::string pokemon;
  double hp_fraction = 0.0;
  StatusKind status = StatusKind::None;
  std::string from;
};
struct Faint {
  Side side = Side::A;
  std::string pokemon;
};
struct Boost {
  Side side = Side::A;
  std::string pokemon;
  std::string stat;  // wire name: atk, def, spa, spd, spe, accuracy, evasion
  int delta = 0;     // negative for -unboost
};
// -status sets a condition; -curestatus arrives as Status with StatusKind::None.
struct Status {
  Side side = Side::A;
  std::string pokemon;
  StatusKind status = StatusKind::None;
};
struct Immune {
  Side side = Side::A;
  std::string pokemon;
  std::string from;
};
struct WeatherMsg {
  Weather weather = Weather::None;
  bool upkeep = false;
};

struct RequestMove {
  std::string name;
  std::string id;
  bool disabled = false;
};
struct RequestMon {
  std::string name;     // from the ident
  std::string species;  // from the details
  int hp = 0;
  int max_hp = 0;
  StatusKind status = StatusKind::None;
  bool fainted = false;
  bool active = false;
  std::map<std::string, int> stats;
  std::vector<std::string> moves;  // ids
  std::string ability;             // id
};
struct Request {
  std::string player;        // side.name
  std::optional<Side> side;  // side.id
  std::vector<RequestMove> moves;  // moves of the active Pokémon
  std::vector<RequestMon> team;    // server order; position k is "switch k+1"
  bool force_switch = false;
  bool wait = false;
  bool team_preview = false;
  int rqid = 0;
  nlohmann::json raw;
};
struct Win {
  std::string player;
};
struct Unknown {
  std::string raw;
};

}  // namespace proto

using ProtocolMessage = std::variant<proto::Turn, proto::Move, proto::SwitchIn, proto::Damage, proto::Heal,
                                     proto::Faint, proto::Boost, proto::Status, proto::Immune, proto::WeatherMsg,
                                     proto::Request, proto::Win, proto::Unknown>;

// Total: never throws. Lines with an unsupported tag, or a supported tag with malformed fields,
// become Unknown.
ProtocolMessage parse_line(std::string_view line);
std::string_view message_name(const ProtocolMessage& m);

// "p2a: Venusaur" -> (p2, "Venusaur")
std::optional<std::pair<Side, std::string>> parse_ident(std::string_view ident);
// "45/100", "0 fnt", "250/300 par" -> fraction, absolute numbers, status
struct Condition {
  double fraction = 0.0;
  int hp = 0;
  int max_hp = 0;
  bool fainted = false;
  StatusKind status = StatusKind::None;
};
std::optional<Condition> parse_condition(std::string_view text);

struct TrackedMon {
  std::string name;
  std::string species;
  double hp_fraction = 1.0;
  std::optional<int> hp, max_hp;
  StatusKind status = StatusKind::None;
  std::map<std::string, int> boosts;  // active Pokémon only; cleared on switch-out
  std::vector<std::string> moves;     // observed
  bool fainted = false;
  bool operator==(const TrackedMon&) const = default;
};

struct TrackedSide {
  std::string player;
  std::vector<TrackedMon> mons;  // in order of first appearance; at most 6
  int active = -1;
  bool operator==(const TrackedSide&) const = default;
};

struct KnownState {
  std::optional<Side> own;
  std::array<TrackedSide, 2> sides;
  Weather weather = Weather::None;
  int turn = 0;
  std::optional<std::string> winner_name;
  std::optional<proto::Request> request;  // latest
  std::vector<std::string> turn_log;      // summaries of messages since the last Turn
  std::vector<std::string> anomalies;
  std::vector<std::string> warnings;

  const TrackedSide& side(Side s) const { return sides[idx(s)]; }
  const TrackedMon* find(Side s, std::string_view name) const;
  const TrackedMon* active(Side s) const;
  // Resolved from the winner's name and the players seen in requests.
  std::optional<Side> winner() const;
  bool operator==(const KnownState& o) const {
    return own == o.own && sides == o.sides && weather == o.weather && turn == o.turn &&
           winner_name == o.winner_name && turn_log == o.turn_log && anomalies == o.anomalies &&
           warnings == o.warnings && request.has_value() == o.request.has_value() &&
           (!request || request->raw == o.request->raw);
  }
};

// Contradictory messages are recorded as anomalies and leave the state unchanged; Unknown
// messages only add a warning.
void track(KnownState& state, const ProtocolMessage& msg);
KnownState apply_message(KnownState state, const ProtocolMessage& msg);
KnownState replay_stream(const std::vector<std::string>& lines);

// Legal actions of a request in the engine's vocabulary: moves by name, switches by request position.
std::vector<Action> request_actions(const proto::Request& req, const Pokedex& dex);
// "move k" / "switch k", 1-based in request order. Throws ProtocolError when the action is absent.
std::string serialize_choice(const Action& action, const proto::Request& req);

// The player's view from tracker plus latest request, for the text renderer.
BattleView view_of(const KnownState& state, const Pokedex& dex);

// Server-style lines for a logged engine battle, as seen by `perspective`: own HP absolute,
// opposing HP in percent, a request before each of its decisions. Request positions follow the
// server convention (the active Pokémon first, swapped on every switch).
std::vector<std::string> export_protocol(const BattleLog& log, std::shared_ptr<const Pokedex> dex,
                                         Side perspective,
                                         const std::array<std::string, 2>& players = {"Alice", "Bob"});

// ---- gateway ----

struct GatewayConfig {
  std::string server_url;
  std::string username;
  std::string password;  // from the environment or a config file only
};

// A battle-server connection. Only recorded streams ship; a live client implements the same contract.
class Gateway {
 public:
  virtual ~Gateway() = default;
  virtual void connect(const GatewayConfig& config) = 0;
  // Next line of the subscribed battle stream; nullopt on disconnect or end of stream.
  virtual std::optional<std::string> next_line() = 0;
  virtual void send_choice(const std::string& choice, int rqid) = 0;
};

class RecordedGateway : public Gateway {
 public:
  explicit RecordedGateway(std::vector<std::string> lines) : lines_(std::move(lines)) {}
  static RecordedGateway from_file(const std::string& path);

  void connect(const GatewayConfig&) override { connected_ = true; }
  std::optional<std::string> next_line() override;
  void send_choice(const std::string& choice, int rqid) override { sent_.emplace_back(choice, rqid); }
  const std::vector<std::pair<std::string, int>>& sent() const { return sent_; }

 private:
  std::vector<std::string> lines_;
  std::size_t next_ = 0;
  bool connected_ = false;
  std::vector<std::pair<std::string, int>> sent_;
};

struct GatewayOutcome {
  KnownState state;
  int choices = 0;
  bool aborted = false;  // stream ended before a win message
};

using ViewChooser = std::function<Action(const BattleView& view)>;

// Feeds the stream through the tracker and answers every actionable request (at most one
// outstanding choice).
GatewayOutcome drive_gateway(Gateway& gateway, const Pokedex& dex, const ViewChooser& choose,
                             const GatewayConfig& config = {});

}  // namespace arena
