#include "arena/agent.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace arena {

using nlohmann::json;

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::IO: return "io";
    case Strategy::CoT: return "cot";
    case Strategy::SC: return "sc";
    case Strategy::ToT: return "tot";
  }
  return "io";
}

double PolicyConfig::sample_temperature() const {
  if (temperature) return *temperature;
  return (strategy == Strategy::SC || strategy == Strategy::ToT) ? 0.8 : 0.3;
}

void PolicyConfig::validate() const {
  if ((strategy == Strategy::SC || strategy == Strategy::ToT) && k < 2) {
    throw ConfigError(std::string(strategy_name(strategy)) + " needs k >= 2");
  }
  if (strategy == Strategy::SC && sample_temperature() <= 0) throw ConfigError("sc needs a temperature above 0");
  if (temperature && *temperature < 0) throw ConfigError("temperature must be non-negative");
  if (history_window < 0) throw ConfigError("history window must be non-negative");
  if (retry_budget < 0) throw ConfigError("retry budget must be non-negative");
}

PolicyConfig PolicyConfig::parse(std::string_view spec) {
  PolicyConfig c;
  const auto colon = spec.find(':');
  const std::string head(spec.substr(0, colon));
  if (head == "io") c.strategy = Strategy::IO;
  else if (head == "cot") c.strategy = Strategy::CoT;
  else if (head == "sc") c.strategy = Strategy::SC;
  else if (head == "tot") c.strategy = Strategy::ToT;
  else throw ConfigError("unknown strategy: " + std::string(spec));
  if (c.strategy == Strategy::SC || c.strategy == Strategy::ToT) c.k = 3;
  if (colon != std::string_view::npos) {
    if (c.strategy == Strategy::IO || c.strategy == Strategy::CoT) throw ConfigError("io/cot take no k: " + std::string(spec));
    const std::string num(spec.substr(colon + 1));
    try {
      std::size_t used = 0;
      c.k = std::stoi(num, &used);
      if (used != num.size()) throw std::invalid_argument(num);
    } catch (const std::exception&) {
      throw ConfigError("bad k in strategy: " + std::string(spec));
    }
  }
  return c;
}

std::string PolicyConfig::spec() const {
  if (strategy == Strategy::SC || strategy == Strategy::ToT) return std::string(strategy_name(strategy)) + ":" + std::to_string(k);
  return std::string(strategy_name(strategy));
}

json PolicyConfig::to_json() const {
  return {{"strategy", strategy_name(strategy)},
          {"k", k},
          {"icrl", icrl},
          {"kag", kag_mode_name(kag)},
          {"temperature", sample_temperature()},
          {"eval_temperature", eval_temperature},
          {"history_window", history_window},
          {"retry_budget", retry_budget},
          {"max_tokens", max_tokens}};
}

void IcrlMemory::add(MemoryEntry e) {
  entries_.push_back(std::move(e));
  while (static_cast<int>(entries_.size()) > window_) entries_.pop_front();
}

std::vector<FeedbackItem> IcrlMemory::feedback() const {
  std::vector<FeedbackItem> out;
  for (const auto& e : entries_) out.insert(out.end(), e.feedback.begin(), e.feedback.end());
  return out;
}

namespace {

const char* kOutputFormat =
    "Reply with your choice as a single JSON line, either {\"action\":\"move\",\"name\":\"<move name>\"} "
    "or {\"action\":\"switch\",\"name\":\"<Pokémon name>\"}.";

std::string state_block(const Observation& obs, const PolicyConfig& config, const IcrlMemory& memory) {
  std::ostringstream os;
  os << "You are playing a Pokémon battle as player " << side_tag(obs.side)
     << ". Each turn you either use a move of your active Pokémon or switch to a benched one. "
        "You win when every opposing Pokémon has fainted.\n\n";
  os << obs.own_team << "\n\n" << obs.opponent_team << "\n\n" << obs.field << "\n\n" << obs.turn_history;
  if (config.kag != KagMode::None && !obs.knowledge.empty()) {
    os << "\n\nKnowledge:";
    for (const auto& k : obs.knowledge) os << "\n- " << k;
  }
  if (config.icrl && !memory.entries().empty()) {
    os << "\n\nYour previous actions and their feedback:";
    for (const auto& e : memory.entries()) {
      os << "\nTurn " << e.turn << ": you chose " << e.action_label << ".";
      for (const auto& f : e.feedback) os << "\n- " << f.text;
    }
  }
  os << "\n\nAvailable actions"
     << (obs.forced_switch ? " (your active Pokémon fainted; choose a replacement)" : "") << ":";
  for (const auto& a : obs.actions) os << "\n- " << a.label;
  return os.str();
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// End of the balanced {...} starting at `start`, honoring JSON strings; npos when unbalanced.
std::size_t object_end(std::string_view s, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = start; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i;
  }
  return std::string_view::npos;
}

struct Sample {
  json attempts = json::array();
  std::optional<Action> action;
  std::string label;
};

Sample draw(CompletionEndpoint& endpoint, const std::string& prompt, double temperature, const PolicyConfig& config,
            const std::vector<ActionOption>& options) {
  Sample s;
  for (int attempt = 0; attempt <= config.retry_budget; ++attempt) {
    std::string raw;
    try {
      raw = endpoint.complete(prompt, temperature, config.max_tokens);
    } catch (const EndpointExhausted&) {
      throw;
    } catch (const std::exception& e) {
      s.attempts.push_back({{"raw", nullptr}, {"error", std::string("endpoint: ") + e.what()}});
      continue;
    }
    ParsedAction p = parse_llm_action(raw, options);
    if (p.action) {
      s.attempts.push_back({{"raw", raw}});
      s.action = p.action;
      s.label = p.label;
      return s;
    }
    s.attempts.push_back({{"raw", raw}, {"error", p.error}});
  }
  return s;
}

json sample_json(const Sample& s) {
  return {{"attempts", s.attempts}, {"choice", s.action ? json(s.label) : json(nullptr)}};
}

const std::string& label_of(const std::vector<ActionOption>& options, const Action& a) {
  for (const auto& o : options) {
    if (o.action == a) return o.label;
  }
  static const std::string none;
  return none;
}

}  // namespace

std::string build_prompt(const Observation& obs, const PolicyConfig& config, const IcrlMemory& memory) {
  std::string p = state_block(obs, config, memory);
  p += "\n\n";
  if (config.strategy == Strategy::CoT) {
    p += "First analyze the current battle situation step by step: the matchups, HP, speed and the likely "
         "opposing action. Then decide.\n";
  }
  p += kOutputFormat;
  return p;
}

ParsedAction parse_llm_action(std::string_view raw, const std::vector<ActionOption>& legal) {
  for (std::size_t pos = raw.find('{'); pos != std::string_view::npos; pos = raw.find('{', pos + 1)) {
    const std::size_t end = object_end(raw, pos);
    if (end == std::string_view::npos) continue;
    const json j = json::parse(raw.substr(pos, end - pos + 1), nullptr, false);
    if (j.is_discarded() || !j.is_object()) continue;
    const auto act = j.find("action");
    const auto name = j.find("name");
    if (act == j.end() || name == j.end() || !act->is_string() || !name->is_string()) continue;

    const std::string kind = lower(act->get<std::string>());
    if (kind != "move" && kind != "switch") return {std::nullopt, {}, "unknown action kind: " + act->get<std::string>()};
    std::string wanted = kind + " " + lower(name->get<std::string>());
    while (!wanted.empty() && std::isspace(static_cast<unsigned char>(wanted.back()))) wanted.pop_back();
    for (const auto& o : legal) {
      if (lower(o.label) == wanted) return {o.action, o.label, {}};
    }
    return {std::nullopt, {}, "illegal or unknown option: " + kind + " " + name->get<std::string>()};
  }
  return {std::nullopt, {}, "no action directive found"};
}

Action vote(const std::vector<Action>& candidates) {
  if (candidates.empty()) throw BattleError("vote() needs at least one candidate");
  std::vector<std::pair<Action, int>> tally;
  for (const auto& c : candidates) {
    auto it = std::find_if(tally.begin(), tally.end(), [&](const auto& t) { return t.first == c; });
    if (it == tally.end()) tally.emplace_back(c, 1);
    else ++it->second;
  }
  const auto best = std::max_element(tally.begin(), tally.end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; });
  return best->first;  // max_element keeps the first of equal maxima
}

Action fallback_action(const std::vector<ActionOption>& legal) {
  const ActionOption* best = nullptr;
  for (const auto& o : legal) {
    if (!o.action.is_move()) continue;
    if (!best || o.power > best->power || (o.power == best->power && o.order < best->order)) best = &o;
  }
  if (best) return best->action;
  for (const auto& o : legal) {
    if (o.action.is_switch()) return o.action;
  }
  throw BattleError("no legal actions");
}

Decision decide(const PolicyConfig& config, const Observation& obs, const IcrlMemory& memory,
                CompletionEndpoint& endpoint) {
  if (obs.actions.empty()) throw BattleError("decide() needs at least one legal action");
  const std::string prompt = build_prompt(obs, config, memory);
  const int n = (config.strategy == Strategy::SC || config.strategy == Strategy::ToT) ? std::max(1, config.k) : 1;
  const double temp = config.sample_temperature();

  json trace{{"strategy", strategy_name(config.strategy)}, {"k", n}, {"temperature", temp}};
  std::string sample_prompt = prompt;
  if (config.strategy == Strategy::ToT) {
    sample_prompt = state_block(obs, config, memory) +
                    "\n\nPropose the one action you consider most promising in this situation.\n" + kOutputFormat;
  }

  std::vector<Sample> samples;
  json samples_json = json::array();
  std::vector<Action> candidates;
  for (int i = 0; i < n; ++i) {
    samples.push_back(draw(endpoint, sample_prompt, temp, config, obs.actions));
    samples_json.push_back(sample_json(samples.back()));
    if (samples.back().action) candidates.push_back(*samples.back().action);
  }
  trace["samples"] = samples_json;

  Decision d;
  if (candidates.empty()) {
    d.action = fallback_action(obs.actions);
    d.fallback = true;
  } else if (config.strategy == Strategy::ToT) {
    std::vector<ActionOption> distinct;
    for (const auto& c : candidates) {
      if (std::none_of(distinct.begin(), distinct.end(), [&](const ActionOption& o) { return o.action == c; })) {
        distinct.push_back(*obs.find(c));
      }
    }
    std::ostringstream eval;
    eval << state_block(obs, config, memory) << "\n\nCandidate actions proposed for this turn:";
    for (std::size_t i = 0; i < distinct.size(); ++i) eval << "\n" << (i + 1) << ". " << distinct[i].label;
    eval << "\n\nEvaluate each candidate against the current situation and choose the best one.\n" << kOutputFormat;
    const Sample judged = draw(endpoint, eval.str(), config.eval_temperature, config, distinct);
    trace["evaluation"] = sample_json(judged);
    d.action = judged.action ? *judged.action : vote(candidates);
  } else {
    d.action = vote(candidates);
  }
  if (config.strategy == Strategy::SC) {
    json tally = json::array();
    for (const auto& c : candidates) tally.push_back(label_of(obs.actions, c));
    trace["votes"] = tally;
  }
  trace["chosen"] = label_of(obs.actions, d.action);
  trace["fallback"] = d.fallback;
  d.trace = std::move(trace);
  return d;
}

std::optional<Action> revote(const json& trace, const std::vector<ActionOption>& legal) {
  std::vector<Action> candidates;
  for (const auto& s : trace.at("samples")) {
    if (s.at("choice").is_null()) continue;
    const auto label = s["choice"].get<std::string>();
    for (const auto& o : legal) {
      if (o.label == label) candidates.push_back(o.action);
    }
  }
  if (candidates.empty()) return std::nullopt;
  return vote(candidates);
}

LlmAgent::LlmAgent(PolicyConfig config, std::shared_ptr<CompletionEndpoint> endpoint, std::string name)
    : config_(config), endpoint_(std::move(endpoint)), name_(std::move(name)), memory_(config.history_window) {
  if (!endpoint_) throw ConfigError("LLM agent needs a completion endpoint");
}

PolicyChoice LlmAgent::choose(const BattleState& state, Side side) {
  const DescribeOptions opts{config_.history_window};
  const BattleView view = view_of(state, side, opts);
  Observation obs = arena::describe(view, *state.dex, opts);
  for (const auto& a : annotate(view, *state.dex, config_.kag)) obs.knowledge.push_back(a.render());
  if (config_.icrl) obs.feedback = memory_.feedback();
  endpoint_->bind(&state, side);
  Decision d;
  try {
    d = decide(config_, obs, memory_, *endpoint_);
  } catch (...) {
    endpoint_->bind(nullptr, side);
    throw;
  }
  endpoint_->bind(nullptr, side);
  last_prompt_ = build_prompt(obs, config_, memory_);
  last_obs_ = std::move(obs);
  return {d.action, std::move(d.trace), d.fallback};
}

void LlmAgent::observe(const BattleState& state, Side side, const TurnRecord& record) {
  if (record.kind != RecordKind::Turn || !record.actions[idx(side)]) return;
  memory_.add({record.turn, action_label(state, side, *record.actions[idx(side)]), derive_feedback(record, state, side)});
}

json LlmAgent::describe() const {
  json j = config_.to_json();
  j["name"] = name_;
  return j;
}

}  // namespace arena
