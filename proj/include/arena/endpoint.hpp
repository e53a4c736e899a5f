#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "arena/error.hpp"
#include "arena/policy.hpp"

namespace arena {

// A failed completion call. Counts against the retry budget.
class EndpointError : public ArenaError {
 public:
  using ArenaError::ArenaError;
};

// A scripted transcript ran out of responses. Not retried: it aborts the harness run.
class EndpointExhausted : public ArenaError {
 public:
  using ArenaError::ArenaError;
};

class ConfigError : public ArenaError {
 public:
  using ArenaError::ArenaError;
};

class CompletionEndpoint {
 public:
  virtual ~CompletionEndpoint() = default;
  virtual std::string complete(const std::string& prompt, double temperature, int max_tokens) = 0;
  // Oracle endpoints answer from the true state; every other endpoint ignores this.
  virtual void bind(const BattleState* /*state*/, Side /*side*/) {}
};

struct HttpEndpointConfig {
  std::string base_url;  // e.g. https://api.example.com/v1
  std::string model;
  std::string api_key;
  double timeout_seconds = 60.0;
};

// Reads the key from ARENA_API_KEY, falling back to `key_file` when given. Flags never carry keys.
HttpEndpointConfig http_config(const std::string& base_url, const std::string& model,
                               const std::string& key_file = {});

// OpenAI-style chat-completions endpoint.
class HttpEndpoint : public CompletionEndpoint {
 public:
  explicit HttpEndpoint(HttpEndpointConfig config);
  std::string complete(const std::string& prompt, double temperature, int max_tokens) override;

 private:
  HttpEndpointConfig config_;
  std::string origin_;
  std::string path_;
};

// Replays responses in order; throws EndpointExhausted when they run out.
class ScriptedEndpoint : public CompletionEndpoint {
 public:
  explicit ScriptedEndpoint(std::vector<std::string> responses);
  // One JSON string per line, or {"response": "..."} objects.
  static ScriptedEndpoint from_file(const std::string& path);

  std::string complete(const std::string& prompt, double temperature, int max_tokens) override;
  std::vector<std::string> prompts() const;
  std::size_t remaining() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::string> responses_;
  std::size_t next_ = 0;
  std::vector<std::string> prompts_;
};

// Answers with a function of the prompt.
class FunctionEndpoint : public CompletionEndpoint {
 public:
  using Fn = std::function<std::string(const std::string& prompt, double temperature)>;
  explicit FunctionEndpoint(Fn fn) : fn_(std::move(fn)) {}
  std::string complete(const std::string& prompt, double temperature, int /*max_tokens*/) override {
    return fn_(prompt, temperature);
  }

 private:
  Fn fn_;
};

// Wraps a baseline policy: every completion is that policy's choice for the bound state, written
// in the agent output grammar.
class PolicyOracleEndpoint : public CompletionEndpoint {
 public:
  explicit PolicyOracleEndpoint(std::unique_ptr<Policy> policy) : policy_(std::move(policy)) {}
  void bind(const BattleState* state, Side side) override;
  std::string complete(const std::string& prompt, double temperature, int max_tokens) override;

 private:
  std::unique_ptr<Policy> policy_;
  const BattleState* state_ = nullptr;
  Side side_ = Side::A;
};

// Single-line directive in the agent output grammar.
std::string action_directive(const std::string& label);

}  // namespace arena
