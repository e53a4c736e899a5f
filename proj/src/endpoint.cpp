#include "arena/endpoint.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>

#include "httplib.h"
#include "json.hpp"

#include "arena/textstate.hpp"

namespace arena {

using nlohmann::json;

HttpEndpointConfig http_config(const std::string& base_url, const std::string& model, const std::string& key_file) {
  if (base_url.empty()) throw ConfigError("endpoint URL is required for LLM strategies");
  if (model.empty()) throw ConfigError("model name is required for LLM strategies");
  HttpEndpointConfig c;
  c.base_url = base_url;
  c.model = model;
  if (const char* k = std::getenv("ARENA_API_KEY"); k && *k) {
    c.api_key = k;
  } else if (!key_file.empty()) {
    std::ifstream in(key_file);
    if (!in) throw ConfigError("cannot read key file: " + key_file);
    std::getline(in, c.api_key);
    while (!c.api_key.empty() && std::isspace(static_cast<unsigned char>(c.api_key.back()))) c.api_key.pop_back();
  }
  return c;
}

HttpEndpoint::HttpEndpoint(HttpEndpointConfig config) : config_(std::move(config)) {
  const auto scheme_end = config_.base_url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + config_.base_url);
  const auto path_start = config_.base_url.find('/', scheme_end + 3);
  origin_ = config_.base_url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "" : config_.base_url.substr(path_start);
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
}

std::string HttpEndpoint::complete(const std::string& prompt, double temperature, int max_tokens) {
  httplib::Client cli(origin_);
  const auto secs = static_cast<time_t>(config_.timeout_seconds);
  cli.set_connection_timeout(secs, 0);
  cli.set_read_timeout(secs, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  const json body{{"model", config_.model},
                  {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                  {"temperature", temperature},
                  {"max_tokens", max_tokens}};
  auto res = cli.Post(path_ + "/chat/completions", headers, body.dump(), "application/json");
  if (!res) throw EndpointError("endpoint request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw EndpointError("endpoint returned HTTP " + std::to_string(res->status));
  try {
    const json j = json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw EndpointError(std::string("malformed endpoint response: ") + e.what());
  }
}

ScriptedEndpoint::ScriptedEndpoint(std::vector<std::string> responses) : responses_(std::move(responses)) {}

ScriptedEndpoint ScriptedEndpoint::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open transcript: " + path);
  std::vector<std::string> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      out.push_back(j.is_string() ? j.get<std::string>() : j.at("response").get<std::string>());
    } catch (const json::exception& e) {
      throw ConfigError(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return ScriptedEndpoint(std::move(out));
}

std::string ScriptedEndpoint::complete(const std::string& prompt, double /*temperature*/, int /*max_tokens*/) {
  std::lock_guard lock(mu_);
  if (next_ >= responses_.size()) throw EndpointExhausted("scripted endpoint exhausted after " + std::to_string(next_) + " responses");
  prompts_.push_back(prompt);
  return responses_[next_++];
}

std::vector<std::string> ScriptedEndpoint::prompts() const {
  std::lock_guard lock(mu_);
  return prompts_;
}

std::size_t ScriptedEndpoint::remaining() const {
  std::lock_guard lock(mu_);
  return responses_.size() - next_;
}

void PolicyOracleEndpoint::bind(const BattleState* state, Side side) {
  state_ = state;
  side_ = side;
}

std::string PolicyOracleEndpoint::complete(const std::string& /*prompt*/, double /*temperature*/, int /*max_tokens*/) {
  if (!state_) throw EndpointError("oracle endpoint is not bound to a battle");
  const Action a = policy_->choose(*state_, side_).action;
  return action_directive(action_label(*state_, side_, a));
}

std::string action_directive(const std::string& label) {
  const auto space = label.find(' ');
  return json{{"action", label.substr(0, space)}, {"name", label.substr(space + 1)}}.dump();
}

}  // namespace arena
