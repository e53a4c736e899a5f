#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "arena/agent.hpp"
#include "arena/battle_log.hpp"
#include "arena/endpoint.hpp"
#include "arena/policy.hpp"

namespace arena {

// ---- agents by name ----

struct AgentOptions {
  bool icrl = false;
  KagMode kag = KagMode::None;
  std::optional<double> temperature;
  int history_window = 5;
  int retry_budget = 2;
  // Supplies the completion endpoint for LLM strategies; unset means none is configured.
  std::function<std::shared_ptr<CompletionEndpoint>()> endpoint;
};

// "random", "maxpower", "bot", "oracle:<random|maxpower|bot>", or an LLM strategy "io", "cot",
// "sc:K", "tot:K". oracle:X is an io agent whose endpoint answers with X's choice.
// Throws ConfigError for unknown specs and for LLM strategies without an endpoint.
PolicyFactory policy_factory(const std::string& spec, const AgentOptions& options = {});
bool is_llm_spec(const std::string& spec);

// ---- battles ----

struct BattleSetup {
  std::uint64_t seed = 0;  // per-battle seed
  int index = 0;
  int turn_cap = kDefaultTurnCap;
};

struct BattleResult {
  BattleLog log;
  std::array<int, 2> fallbacks{0, 0};
  bool aborted = false;
  std::string abort_reason;
};

// Teams come from Rng(seed); the policies get mix_seed(seed, 1) and mix_seed(seed, 2). When
// `out` is set each line is written as soon as it exists. EndpointExhausted ends the battle as
// aborted instead of propagating.
BattleResult play_battle(std::shared_ptr<const Pokedex> dex, const PolicyFactory& a, const PolicyFactory& b,
                         const BattleSetup& setup, std::ostream* out = nullptr);

struct SwitchStats {
  int active_switches = 0;
  int cs1 = 0;
  int cs2 = 0;
  int turns = 0;  // decided turns

  double switch_rate() const { return turns ? static_cast<double>(active_switches) / turns : 0.0; }
  double cs1_rate() const { return active_switches ? static_cast<double>(cs1) / active_switches : 0.0; }
  double cs2_rate() const { return active_switches ? static_cast<double>(cs2) / active_switches : 0.0; }
  SwitchStats& operator+=(const SwitchStats& o);
  bool operator==(const SwitchStats&) const = default;
};

enum class TurnChoice : std::uint8_t { Move, Switch, Forced };

// Forced entries are dropped first: they are not the player's action and do not break a streak.
SwitchStats switch_stats(std::span<const TurnChoice> sequence);
std::vector<TurnChoice> choice_sequence(const BattleLog& log, Side side);
// Sum over logs. Throws ArenaError when `logs` is empty.
SwitchStats switch_metrics(std::span<const BattleLog> logs, Side side);

struct AttritionConfig {
  int min_recoveries = 3;
  int min_turns = 25;
};

// True when `opponent` used healing moves at least min_recoveries times in a battle lasting at
// least min_turns turns.
bool classify_attrition(const BattleLog& log, Side opponent, const Pokedex& dex, const AttritionConfig& config = {});

struct OutcomeSplit {
  int battles = 0;
  int wins = 0;
  int decided = 0;
  double turns_sum = 0;
  double win_rate() const { return decided ? static_cast<double>(wins) / decided : 0.0; }
  double mean_turns() const { return battles ? turns_sum / battles : 0.0; }
};

struct MetricsReport {
  std::string agent;
  std::string opponent;
  int requested = 0;
  int battles = 0;  // finished, not aborted
  int wins = 0;
  int losses = 0;
  int draws = 0;
  int aborted = 0;
  bool partial = false;
  double score_sum = 0;
  double turns_sum = 0;
  std::array<int, 2> fallbacks{0, 0};
  std::array<SwitchStats, 2> switches;
  OutcomeSplit with_attrition;
  OutcomeSplit without_attrition;

  // Over decided battles; draws_as_losses counts draws in the denominator.
  double win_rate(bool draws_as_losses = false) const;
  double mean_score() const { return battles ? score_sum / battles : 0.0; }
  double mean_turns() const { return battles ? turns_sum / battles : 0.0; }
  nlohmann::json to_json() const;
  std::string render(bool draws_as_losses = false) const;
};

// Metrics are log-derived only, so a report rebuilt from persisted logs equals the original.
MetricsReport report_from_logs(std::span<const BattleLog> logs, const Pokedex& dex, int requested,
                               const AttritionConfig& attrition = {});

struct RunConfig {
  int n = 1;
  std::uint64_t seed = 0;  // master seed; battle i uses mix_seed(seed, i)
  int parallel = 1;
  int turn_cap = kDefaultTurnCap;
  std::optional<std::filesystem::path> log_dir;
  AttritionConfig attrition;
};

struct RunResult {
  MetricsReport report;
  std::vector<BattleResult> battles;  // index order; battles never started are absent
};

RunResult run_battles(std::shared_ptr<const Pokedex> dex, const PolicyFactory& a, const PolicyFactory& b,
                      const RunConfig& config);

std::string log_file_name(int index);

// ---- replay ----

struct ReplayResult {
  BattleState state;
  std::vector<std::string> mismatches;
  bool ok() const { return mismatches.empty(); }
};

// Re-simulates the battle from the header with the recorded actions and re-applies the recorded
// events, comparing records, per-record HP snapshots and the footer.
ReplayResult replay(const BattleLog& log, std::shared_ptr<const Pokedex> dex);

// ---- hallucination test ----

struct ConfusionMatrix {
  // rows: true class A..D; columns: predicted A..D, then invalid
  std::array<std::array<int, 5>, 4> counts{};

  int total() const;
  int correct() const;
  int invalid() const;
  double accuracy() const { return total() ? static_cast<double>(correct()) / total() : 0.0; }
  std::array<int, 4> row_sums() const;
  nlohmann::json to_json() const;
  std::string render() const;
};

std::string hallucination_prompt(Type attack, Type defend);
// Predicted class from a free-text answer; nullopt when unparseable.
std::optional<EffectClass> parse_class_answer(std::string_view answer);
ConfusionMatrix hallucination_test(CompletionEndpoint& endpoint, const Pokedex& dex, double temperature = 0.0);

// Answers hallucination prompts from the chart.
class ChartOracleEndpoint : public CompletionEndpoint {
 public:
  explicit ChartOracleEndpoint(std::shared_ptr<const Pokedex> dex) : dex_(std::move(dex)) {}
  std::string complete(const std::string& prompt, double temperature, int max_tokens) override;

 private:
  std::shared_ptr<const Pokedex> dex_;
};

}  // namespace arena
