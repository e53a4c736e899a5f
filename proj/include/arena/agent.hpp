#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "arena/endpoint.hpp"
#include "arena/feedback.hpp"
#include "arena/knowledge.hpp"
#include "arena/policy.hpp"
#include "arena/textstate.hpp"

namespace arena {

enum class Strategy : std::uint8_t { IO, CoT, SC, ToT };
std::string_view strategy_name(Strategy s);

struct PolicyConfig {
  Strategy strategy = Strategy::IO;
  int k = 1;
  bool icrl = false;
  KagMode kag = KagMode::None;
  std::optional<double> temperature;  // sampling temperature; strategy default when unset
  double eval_temperature = 0.3;      // ToT evaluation call
  int history_window = 5;
  int retry_budget = 2;
  int max_tokens = 512;

  double sample_temperature() const;
  // sc/tot need k >= 2, sc needs temperature > 0. Throws ConfigError.
  void validate() const;
  // "io", "cot", "sc:3", "tot:3" (k defaults to 3 when omitted).
  static PolicyConfig parse(std::string_view spec);
  std::string spec() const;
  nlohmann::json to_json() const;
};

struct MemoryEntry {
  int turn = 0;
  std::string action_label;
  std::vector<FeedbackItem> feedback;
};

// Last W (action, feedback) pairs.
class IcrlMemory {
 public:
  explicit IcrlMemory(int window = 5) : window_(window) {}
  void add(MemoryEntry e);
  const std::deque<MemoryEntry>& entries() const { return entries_; }
  std::vector<FeedbackItem> feedback() const;
  int window() const { return window_; }

 private:
  int window_;
  std::deque<MemoryEntry> entries_;
};

std::string build_prompt(const Observation& obs, const PolicyConfig& config, const IcrlMemory& memory);

struct ParsedAction {
  std::optional<Action> action;
  std::string label;  // matched label on success
  std::string error;  // set on failure
};

// Finds the first {"action": ..., "name": ...} object in the text and matches it, case-insensitively,
// against the legal labels.
ParsedAction parse_llm_action(std::string_view raw, const std::vector<ActionOption>& legal);

// Plurality; ties go to the candidate that appears first. Requires a non-empty list.
Action vote(const std::vector<Action>& candidates);

// Highest-power legal move (ties by dex order), else the first legal switch.
Action fallback_action(const std::vector<ActionOption>& legal);

struct Decision {
  Action action;
  nlohmann::json trace;
  bool fallback = false;
};

// EndpointExhausted propagates; other endpoint failures are retried and then fall back.
Decision decide(const PolicyConfig& config, const Observation& obs, const IcrlMemory& memory,
                CompletionEndpoint& endpoint);

// Re-runs the vote recorded in an sc trace.
std::optional<Action> revote(const nlohmann::json& trace, const std::vector<ActionOption>& legal);

class LlmAgent : public Policy {
 public:
  LlmAgent(PolicyConfig config, std::shared_ptr<CompletionEndpoint> endpoint, std::string name = "llm");

  std::string name() const override { return name_; }
  PolicyChoice choose(const BattleState& state, Side side) override;
  void observe(const BattleState& state, Side side, const TurnRecord& record) override;
  nlohmann::json describe() const override;

  const IcrlMemory& memory() const { return memory_; }
  // The observation and prompt of the latest decision.
  const Observation& last_observation() const { return last_obs_; }
  const std::string& last_prompt() const { return last_prompt_; }

 private:
  PolicyConfig config_;
  std::shared_ptr<CompletionEndpoint> endpoint_;
  std::string name_;
  IcrlMemory memory_;
  Observation last_obs_;
  std::string last_prompt_;
};

}  // namespace arena
