#include "arena/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

#include "arena/baselines.hpp"

namespace arena {

using nlohmann::json;

// ---- agents ----

namespace {

PolicyFactory baseline_factory(const std::string& name) {
  if (name == "random") return [](std::uint64_t seed, Side) { return std::make_unique<RandomPolicy>(seed); };
  if (name == "maxpower") return [](std::uint64_t, Side) { return std::make_unique<MaxPowerPolicy>(); };
  if (name == "bot") return [](std::uint64_t, Side) { return std::make_unique<BotPolicy>(); };
  return nullptr;
}

PolicyConfig llm_config(PolicyConfig c, const AgentOptions& o) {
  c.icrl = o.icrl;
  c.kag = o.kag;
  c.temperature = o.temperature;
  c.history_window = o.history_window;
  c.retry_budget = o.retry_budget;
  c.validate();
  return c;
}

}  // namespace

bool is_llm_spec(const std::string& spec) {
  return spec == "io" || spec == "cot" || spec.rfind("sc", 0) == 0 || spec.rfind("tot", 0) == 0;
}

PolicyFactory policy_factory(const std::string& spec, const AgentOptions& options) {
  if (auto f = baseline_factory(spec)) return f;

  if (spec.rfind("oracle:", 0) == 0) {
    const std::string inner_name = spec.substr(7);
    PolicyFactory inner = baseline_factory(inner_name);
    if (!inner) throw ConfigError("oracle needs a baseline (random, maxpower or bot): " + spec);
    const PolicyConfig config = llm_config(PolicyConfig{}, options);
    return [inner, config, spec](std::uint64_t seed, Side side) -> std::unique_ptr<Policy> {
      auto endpoint = std::make_shared<PolicyOracleEndpoint>(inner(seed, side));
      return std::make_unique<LlmAgent>(config, endpoint, spec);
    };
  }

  if (!is_llm_spec(spec)) throw ConfigError("unknown agent: " + spec);
  const PolicyConfig config = llm_config(PolicyConfig::parse(spec), options);
  if (!options.endpoint) {
    throw ConfigError("agent '" + spec + "' needs a completion endpoint (--endpoint-url and --model)");
  }
  auto endpoint = options.endpoint;
  return [config, endpoint, spec](std::uint64_t, Side) -> std::unique_ptr<Policy> {
    return std::make_unique<LlmAgent>(config, endpoint(), spec);
  };
}

// ---- battles ----

BattleResult play_battle(std::shared_ptr<const Pokedex> dex, const PolicyFactory& a, const PolicyFactory& b,
                         const BattleSetup& setup, std::ostream* out) {
  BattleResult res;
  Rng team_rng(setup.seed);
  Team team_a = random_team(team_rng, *dex);
  Team team_b = random_team(team_rng, *dex);
  std::unique_ptr<Policy> pa = a(mix_seed(setup.seed, 1), Side::A);
  std::unique_ptr<Policy> pb = b(mix_seed(setup.seed, 2), Side::B);
  const std::array<Policy*, 2> policies{pa.get(), pb.get()};

  LogHeader& h = res.log.header;
  h.seed = setup.seed;
  h.battle_index = setup.index;
  h.turn_cap = setup.turn_cap;
  h.teams = {team_a, team_b};
  h.agents = {pa->describe(), pb->describe()};
  std::optional<LogWriter> writer;
  if (out) {
    writer.emplace(*out);
    writer->header(h);
  }

  BattleState state = new_battle(dex, std::move(team_a), std::move(team_b), setup.seed, {setup.turn_cap});
  auto push = [&](const TurnRecord& rec, std::array<json, 2> decisions) {
    if (writer) writer->record(rec, decisions);
    res.log.records.push_back({rec, std::move(decisions)});
    for (Side s : {Side::A, Side::B}) policies[idx(s)]->observe(state, s, rec);
  };
  push(state.log.back(), {});

  try {
    while (!state.finished()) {
      std::array<std::optional<Action>, 2> acts;
      std::array<json, 2> decisions;
      const bool forced = state.phase.kind == PhaseKind::AwaitingForcedSwitch;
      for (Side s : {Side::A, Side::B}) {
        if (forced && !state.forced_pending(s)) continue;
        PolicyChoice c = policies[idx(s)]->choose(state, s);
        if (c.fallback) ++res.fallbacks[idx(s)];
        acts[idx(s)] = std::move(c.action);
        decisions[idx(s)] = std::move(c.trace);
      }
      const TurnRecord& rec = forced ? resolve_forced_switches(state, acts[0], acts[1]) : step(state, *acts[0], *acts[1]);
      push(rec, std::move(decisions));
    }
  } catch (const EndpointExhausted& e) {
    end_battle(state, std::nullopt, FinishReason::Aborted);
    res.aborted = true;
    res.abort_reason = e.what();
  }

  res.log.footer = make_footer(state);
  if (writer) writer->footer(*res.log.footer);
  return res;
}

SwitchStats& SwitchStats::operator+=(const SwitchStats& o) {
  active_switches += o.active_switches;
  cs1 += o.cs1;
  cs2 += o.cs2;
  turns += o.turns;
  return *this;
}

SwitchStats switch_stats(std::span<const TurnChoice> sequence) {
  std::vector<bool> switched;
  for (TurnChoice c : sequence) {
    if (c != TurnChoice::Forced) switched.push_back(c == TurnChoice::Switch);
  }
  SwitchStats s;
  s.turns = static_cast<int>(switched.size());
  for (std::size_t t = 0; t < switched.size(); ++t) {
    if (!switched[t]) continue;
    ++s.active_switches;
    const bool prev1 = t >= 1 && switched[t - 1];
    const bool prev2 = t >= 2 && switched[t - 2];
    if (prev1) ++s.cs1;
    if (prev1 || prev2) ++s.cs2;
  }
  return s;
}

std::vector<TurnChoice> choice_sequence(const BattleLog& log, Side side) {
  std::vector<TurnChoice> out;
  for (const auto& lr : log.records) {
    const auto& act = lr.record.actions[idx(side)];
    if (!act) continue;
    if (lr.record.kind == RecordKind::Turn) out.push_back(act->is_switch() ? TurnChoice::Switch : TurnChoice::Move);
    else if (lr.record.kind == RecordKind::ForcedSwitch) out.push_back(TurnChoice::Forced);
  }
  return out;
}

SwitchStats switch_metrics(std::span<const BattleLog> logs, Side side) {
  if (logs.empty()) throw ArenaError("switch_metrics needs at least one battle log");
  SwitchStats total;
  for (const auto& log : logs) total += switch_stats(choice_sequence(log, side));
  return total;
}

bool classify_attrition(const BattleLog& log, Side opponent, const Pokedex& dex, const AttritionConfig& config) {
  int recoveries = 0;
  for (const auto& lr : log.records) {
    for (const auto& e : lr.record.events) {
      if (e.kind != EventKind::MoveUsed || e.side != opponent) continue;
      const MoveDef* m = dex.find_move(e.move);
      if (!m) continue;
      const bool heals = std::any_of(m->effects.begin(), m->effects.end(),
                                     [](const MoveEffect& fx) { return std::holds_alternative<HealEffect>(fx); });
      if (heals) ++recoveries;
    }
  }
  int turns = log.footer ? log.footer->turns : 0;
  if (!log.footer && !log.records.empty()) turns = log.records.back().record.turn;
  return recoveries >= config.min_recoveries && turns >= config.min_turns;
}

// ---- reports ----

double MetricsReport::win_rate(bool draws_as_losses) const {
  const int denom = draws_as_losses ? wins + losses + draws : wins + losses;
  return denom ? static_cast<double>(wins) / denom : 0.0;
}

MetricsReport report_from_logs(std::span<const BattleLog> logs, const Pokedex& dex, int requested,
                               const AttritionConfig& attrition) {
  MetricsReport r;
  r.requested = requested;
  if (!logs.empty()) {
    r.agent = logs.front().header.agents[0].value("name", "");
    r.opponent = logs.front().header.agents[1].value("name", "");
  }
  for (const auto& log : logs) {
    for (const auto& lr : log.records) {
      for (std::size_t s = 0; s < 2; ++s) {
        const json& d = lr.decisions[s];
        if (d.is_object() && d.value("fallback", false)) ++r.fallbacks[s];
      }
    }
    if (!log.footer || log.footer->reason == FinishReason::Aborted) {
      ++r.aborted;
      continue;
    }
    const LogFooter& f = *log.footer;
    ++r.battles;
    if (!f.winner) ++r.draws;
    else if (*f.winner == Side::A) ++r.wins;
    else ++r.losses;
    r.score_sum += f.scores[0];
    r.turns_sum += f.turns;
    for (Side s : {Side::A, Side::B}) r.switches[idx(s)] += switch_stats(choice_sequence(log, s));

    OutcomeSplit& split = classify_attrition(log, Side::B, dex, attrition) ? r.with_attrition : r.without_attrition;
    ++split.battles;
    split.turns_sum += f.turns;
    if (f.winner) {
      ++split.decided;
      if (*f.winner == Side::A) ++split.wins;
    }
  }
  r.partial = r.aborted > 0 || static_cast<int>(logs.size()) < requested;
  return r;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pct(double v) { return fmt("%.1f%%", 100.0 * v); }

std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

json switch_json(const SwitchStats& s) {
  return {{"active_switches", s.active_switches}, {"cs1", s.cs1}, {"cs2", s.cs2}, {"turns", s.turns},
          {"switch_rate", s.switch_rate()}, {"cs1_rate", s.cs1_rate()}, {"cs2_rate", s.cs2_rate()}};
}

json split_json(const OutcomeSplit& s) {
  return {{"battles", s.battles}, {"wins", s.wins}, {"decided", s.decided}, {"win_rate", s.win_rate()},
          {"mean_turns", s.mean_turns()}};
}

}  // namespace

json MetricsReport::to_json() const {
  return {{"agent", agent},
          {"opponent", opponent},
          {"requested", requested},
          {"battles", battles},
          {"wins", wins},
          {"losses", losses},
          {"draws", draws},
          {"aborted", aborted},
          {"partial", partial},
          {"win_rate", win_rate(false)},
          {"win_rate_draws_as_losses", win_rate(true)},
          {"mean_score", mean_score()},
          {"mean_turns", mean_turns()},
          {"fallbacks", fallbacks},
          {"switches", {{"agent", switch_json(switches[0])}, {"opponent", switch_json(switches[1])}}},
          {"attrition", {{"with", split_json(with_attrition)}, {"without", split_json(without_attrition)}}}};
}

std::string MetricsReport::render(bool draws_as_losses) const {
  std::ostringstream os;
  const std::size_t w = std::max<std::size_t>({10, agent.size() + 2, opponent.size() + 2});
  os << pad("Agent", w) << pad("Opponent", w) << "Win rate  Draws  Score  Turn #  Battle #\n";
  os << pad(agent, w) << pad(opponent, w) << pad(pct(win_rate(draws_as_losses)), 10) << pad(std::to_string(draws), 7)
     << pad(fmt("%.2f", mean_score()), 7) << pad(fmt("%.2f", mean_turns()), 8) << battles << "\n";
  if (partial) os << "partial run: " << aborted << " aborted, " << battles << " of " << requested << " completed\n";
  os << "\n" << pad("Player", w) << "Switch rate  CS1     CS2     Fallbacks\n";
  for (std::size_t s = 0; s < 2; ++s) {
    os << pad(s == 0 ? agent : opponent, w) << pad(pct(switches[s].switch_rate()), 13)
       << pad(pct(switches[s].cs1_rate()), 8) << pad(pct(switches[s].cs2_rate()), 8) << fallbacks[s] << "\n";
  }
  os << "\nAttrition  Battles  Win rate  Turn #\n";
  for (const auto& [label, split] : {std::pair{"with", &with_attrition}, std::pair{"without", &without_attrition}}) {
    os << pad(label, 11) << pad(std::to_string(split->battles), 9) << pad(pct(split->win_rate()), 10)
       << fmt("%.2f", split->mean_turns()) << "\n";
  }
  return os.str();
}

std::string log_file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "battle-%05d.jsonl", index);
  return buf;
}

RunResult run_battles(std::shared_ptr<const Pokedex> dex, const PolicyFactory& a, const PolicyFactory& b,
                      const RunConfig& config) {
  if (config.n < 1) throw ConfigError("n must be at least 1");
  if (config.log_dir) std::filesystem::create_directories(*config.log_dir);

  std::vector<std::optional<BattleResult>> slots(static_cast<std::size_t>(config.n));
  std::atomic<int> next{0};
  std::atomic<bool> stop{false};
  std::mutex err_mu;
  std::exception_ptr error;

  auto worker = [&] {
    for (int i = next++; i < config.n && !stop; i = next++) {
      try {
        const BattleSetup setup{mix_seed(config.seed, static_cast<std::uint64_t>(i)), i, config.turn_cap};
        BattleResult res;
        if (config.log_dir) {
          std::ofstream file(*config.log_dir / log_file_name(i), std::ios::binary | std::ios::trunc);
          if (!file) throw ArenaError("cannot write log in " + config.log_dir->string());
          res = play_battle(dex, a, b, setup, &file);
        } else {
          res = play_battle(dex, a, b, setup);
        }
        if (res.aborted) stop = true;
        slots[static_cast<std::size_t>(i)] = std::move(res);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!error) error = std::current_exception();
        stop = true;
      }
    }
  };

  const int workers = std::clamp(config.parallel, 1, config.n);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  RunResult out;
  std::vector<BattleLog> logs;
  for (auto& slot : slots) {
    if (!slot) continue;
    logs.push_back(slot->log);
    out.battles.push_back(std::move(*slot));
  }
  out.report = report_from_logs(logs, *dex, config.n, config.attrition);
  return out;
}

// ---- replay ----

namespace {

std::array<std::array<int, kTeamSize>, 2> hp_of(const BattleState& s) {
  std::array<std::array<int, kTeamSize>, 2> hp{};
  for (std::size_t side = 0; side < 2; ++side) {
    for (std::size_t i = 0; i < kTeamSize; ++i) hp[side][i] = s.sides[side].team[i].hp;
  }
  return hp;
}

}  // namespace

ReplayResult replay(const BattleLog& log, std::shared_ptr<const Pokedex> dex) {
  ReplayResult r;
  const LogHeader& h = log.header;
  const BattleOptions opts{h.turn_cap};
  BattleState sim = new_battle(dex, h.teams[0], h.teams[1], h.seed, opts);
  BattleState applied = initial_state(dex, h.teams[0], h.teams[1], h.seed, opts);
  auto miss = [&](std::size_t i, const std::string& what) {
    r.mismatches.push_back("record " + std::to_string(i) + ": " + what);
  };

  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const TurnRecord& rec = log.records[i].record;
    if (i == 0) {
      if (rec.kind != RecordKind::Start) {
        miss(i, "expected the start record");
        break;
      }
      if (!(sim.log.front() == rec)) miss(i, "start record differs from the simulation");
    } else if (rec.kind == RecordKind::Start) {
      miss(i, "unexpected start record");
      break;
    } else if (sim.finished()) {
      miss(i, "record after the battle ended");
      break;
    } else {
      try {
        const TurnRecord& got = rec.kind == RecordKind::Turn
                                    ? (rec.actions[0] && rec.actions[1]
                                           ? step(sim, *rec.actions[0], *rec.actions[1])
                                           : throw BattleError("turn record without both actions"))
                                    : resolve_forced_switches(sim, rec.actions[0], rec.actions[1]);
        if (!(got == rec)) miss(i, "turn " + std::to_string(rec.turn) + " differs from the simulation");
      } catch (const BattleError& e) {
        miss(i, e.what());
        break;
      }
    }
    apply_record(applied, rec);
    if (hp_of(applied) != rec.hp_after) miss(i, "HP after applying events differs from the recorded snapshot");
  }

  if (!log.footer) {
    r.mismatches.push_back("missing result footer");
  } else {
    const LogFooter& f = *log.footer;
    if ((f.reason == FinishReason::Forfeit || f.reason == FinishReason::Aborted) && !sim.finished()) {
      end_battle(sim, f.winner, f.reason);
      end_battle(applied, f.winner, f.reason);
    }
    if (!sim.finished()) {
      r.mismatches.push_back("battle did not finish on replay");
    } else {
      const LogFooter g = make_footer(sim);
      if (g.winner != f.winner) r.mismatches.push_back("winner differs");
      if (g.reason != f.reason) r.mismatches.push_back("finish reason differs");
      if (g.scores != f.scores) r.mismatches.push_back("scores differ");
      if (g.turns != f.turns) r.mismatches.push_back("turn count differs");
      if (g.digest != f.digest) r.mismatches.push_back("final state digest differs");
    }
  }
  if (!applied.same_game_state(sim)) r.mismatches.push_back("event application diverges from the simulation");
  r.state = std::move(sim);
  return r;
}

// ---- hallucination test ----

int ConfusionMatrix::total() const {
  int t = 0;
  for (const auto& row : counts) {
    for (int c : row) t += c;
  }
  return t;
}

int ConfusionMatrix::correct() const {
  int c = 0;
  for (std::size_t i = 0; i < 4; ++i) c += counts[i][i];
  return c;
}

int ConfusionMatrix::invalid() const {
  int c = 0;
  for (const auto& row : counts) c += row[4];
  return c;
}

std::array<int, 4> ConfusionMatrix::row_sums() const {
  std::array<int, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    for (int c : counts[i]) out[i] += c;
  }
  return out;
}

json ConfusionMatrix::to_json() const {
  return {{"labels", {"A", "B", "C", "D"}},
          {"columns", {"A", "B", "C", "D", "invalid"}},
          {"counts", counts},
          {"row_sums", row_sums()},
          {"total", total()},
          {"correct", correct()},
          {"invalid", invalid()},
          {"accuracy", accuracy()}};
}

std::string ConfusionMatrix::render() const {
  static const char* kRows[] = {"A (2x)", "B (1x)", "C (0.5x)", "D (0x)"};
  std::ostringstream os;
  os << "Type advantage prediction (rows: truth, columns: answer)\n";
  os << pad("", 10) << pad("A", 6) << pad("B", 6) << pad("C", 6) << pad("D", 6) << pad("Invalid", 9) << "Total\n";
  const auto sums = row_sums();
  for (std::size_t i = 0; i < 4; ++i) {
    os << pad(kRows[i], 10);
    for (std::size_t j = 0; j < 4; ++j) os << pad(std::to_string(counts[i][j]), 6);
    os << pad(std::to_string(counts[i][4]), 9) << sums[i] << "\n";
  }
  os << "Accuracy: " << fmt("%.2f%%", 100.0 * accuracy()) << " (" << correct() << "/" << total() << ")";
  if (invalid()) os << ", invalid answers: " << invalid();
  os << "\n";
  return os.str();
}

namespace {

std::string capitalized(std::string_view s) {
  std::string out(s);
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

}  // namespace

std::string hallucination_prompt(Type attack, Type defend) {
  return "In a Pokémon battle, is a " + capitalized(type_name(attack)) + "-type attack against a " +
         capitalized(type_name(defend)) +
         "-type Pokémon A. super-effective (2x damage), B. standard (1x damage), C. ineffective (0.5x damage) or "
         "D. no effect (0x damage)? Answer with one letter.";
}

std::optional<EffectClass> parse_class_answer(std::string_view answer) {
  const std::string text(answer);
  auto letter = [](char c) { return static_cast<EffectClass>(c - 'A'); };
  std::smatch m;
  static const std::regex lead(R"(^[\s"'*(\[]*([ABCD])(?![A-Za-z]))");
  if (std::regex_search(text, m, lead)) return letter(m[1].str()[0]);
  static const std::regex stated(R"((?:answer|option|choice)\W{0,3}(?:is\W{0,3})?\(?([ABCD])(?![A-Za-z]))",
                                 std::regex::icase);
  if (std::regex_search(text, m, stated)) return letter(static_cast<char>(std::toupper(m[1].str()[0])));

  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::optional<EffectClass> found;
  int hits = 0;
  const std::pair<const char*, EffectClass> names[] = {{"super-effective", EffectClass::SuperEffective},
                                                       {"super effective", EffectClass::SuperEffective},
                                                       {"standard", EffectClass::Standard},
                                                       {"ineffective", EffectClass::Ineffective},
                                                       {"not very effective", EffectClass::Ineffective},
                                                       {"no effect", EffectClass::NoEffect}};
  for (const auto& [name, cls] : names) {
    if (lower.find(name) != std::string::npos && found != cls) {
      found = cls;
      ++hits;
    }
  }
  if (hits == 1) return found;
  return std::nullopt;
}

ConfusionMatrix hallucination_test(CompletionEndpoint& endpoint, const Pokedex& dex, double temperature) {
  ConfusionMatrix cm;
  for (Type atk : all_types()) {
    for (Type def : all_types()) {
      const auto truth = static_cast<std::size_t>(dex.chart().at(atk, def).effect_class());
      std::optional<EffectClass> guess;
      try {
        guess = parse_class_answer(endpoint.complete(hallucination_prompt(atk, def), temperature, 16));
      } catch (const EndpointExhausted&) {
        throw;
      } catch (const EndpointError&) {
      }
      ++cm.counts[truth][guess ? static_cast<std::size_t>(*guess) : 4];
    }
  }
  return cm;
}

std::string ChartOracleEndpoint::complete(const std::string& prompt, double, int) {
  static const std::regex pair_re(R"(is an? (\w+)-type attack against an? (\w+)-type)");
  std::smatch m;
  if (!std::regex_search(prompt, m, pair_re)) throw EndpointError("oracle: no type pair in prompt");
  const auto atk = parse_type(m[1].str());
  const auto def = parse_type(m[2].str());
  if (!atk || !def) throw EndpointError("oracle: unknown type in prompt");
  return std::string(1, effect_class_letter(dex_->chart().at(*atk, *def).effect_class()));
}

}  // namespace arena
