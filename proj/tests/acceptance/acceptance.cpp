// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "../unit/helpers.hpp"
#include "arena/agent.hpp"
#include "arena/baselines.hpp"
#include "arena/cli.hpp"
#include "arena/harness.hpp"
#include "arena/knowledge.hpp"
#include "arena/protocol.hpp"
#include "arena/rng.hpp"
#include "json.hpp"

using namespace arena;
using arena::testing::bundled_dex;
using arena::testing::duel;
using arena::testing::random_battle;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

// Collects the first few failures of a criterion.
class Check {
 public:
  void expect(bool cond, const std::string& what) {
    if (cond) return;
    ++failures_;
    if (failures_ <= 3) notes_ += (notes_.empty() ? "" : "; ") + what;
  }
  Outcome done(std::string summary) const {
    if (failures_ == 0) return {true, std::move(summary)};
    return {false, std::to_string(failures_) + " failure(s): " + notes_};
  }

 private:
  int failures_ = 0;
  std::string notes_;
};

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string directive(const std::string& kind, const std::string& name) {
  return json{{"action", kind}, {"name", name}}.dump();
}

RunResult run(const std::string& a, const std::string& b, int n, std::uint64_t seed) {
  RunConfig cfg;
  cfg.n = n;
  cfg.seed = seed;
  cfg.parallel = 4;
  return run_battles(bundled_dex(), policy_factory(a), policy_factory(b), cfg);
}

std::string fixed(double x, int digits = 3) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

// ---- criteria ----

Outcome chart_counts() {
  const CliRun r = cli({"validate-data", ARENA_DATA_DIR});
  Check c;
  c.expect(r.code == 0, "exit " + std::to_string(r.code));
  c.expect(r.out == "51/204/61/8\n", "got " + r.out);
  return c.done("counts " + r.out.substr(0, r.out.find('\n')));
}

Outcome hallucination() {
  const auto dex = bundled_dex();
  Check c;
  ChartOracleEndpoint oracle(dex);
  const ConfusionMatrix m = hallucination_test(oracle, *dex);
  c.expect(m.accuracy() == 1.0, "oracle accuracy " + fixed(m.accuracy()));
  const std::array<int, 4> want{51, 204, 61, 8};
  for (int i = 0; i < 4; ++i) c.expect(m.counts[i][i] == want[i], "diagonal " + std::to_string(i));

  FunctionEndpoint constant([](const std::string&, double) { return std::string("B"); });
  const ConfusionMatrix b = hallucination_test(constant, *dex);
  c.expect(b.correct() == 204 && b.total() == 324, "constant B " + std::to_string(b.correct()));
  return c.done("oracle " + std::to_string(m.correct()) + "/324, constant B " + std::to_string(b.correct()) + "/324");
}

Outcome score_identity() {
  const RunResult r = run("random", "random", 500, 1);
  Check c;
  int finished = 0;
  for (const auto& b : r.battles) {
    if (b.aborted || !b.log.footer) continue;
    ++finished;
    const auto& f = *b.log.footer;
    c.expect(f.scores[0] + f.scores[1] == 12, "sum " + std::to_string(f.scores[0] + f.scores[1]));
    if (f.winner) {
      const int w = f.scores[idx(*f.winner)];
      c.expect(w >= 7 && w <= 12, "winner score " + std::to_string(w));
    }
  }
  c.expect(finished >= 500, "finished " + std::to_string(finished));
  return c.done(std::to_string(finished) + " battles");
}

Outcome determinism() {
  Check c;
  std::vector<fs::path> dirs;
  std::vector<CliRun> runs;
  for (const char* name : {"arena_accept_det_a", "arena_accept_det_b"}) {
    const fs::path d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    dirs.push_back(d);
    runs.push_back(cli({"battle", "--agent", "maxpower", "--opponent", "bot", "--n", "50", "--seed", "1",
                        "--log-dir", d.string()}));
  }
  c.expect(runs[0].code == 0 && runs[1].code == 0, "exit codes");
  c.expect(runs[0].out == runs[1].out, "stdout differs");
  int files = 0;
  for (const auto& e : fs::directory_iterator(dirs[0])) {
    ++files;
    const fs::path twin = dirs[1] / e.path().filename();
    c.expect(fs::exists(twin) && slurp(e.path()) == slurp(twin), e.path().filename().string() + " differs");
  }
  c.expect(files == 51, std::to_string(files) + " files");
  c.expect(std::distance(fs::directory_iterator(dirs[1]), fs::directory_iterator{}) == files, "file sets differ");
  for (const auto& d : dirs) fs::remove_all(d);
  return c.done(std::to_string(files) + " files identical");
}

Outcome baseline_ordering() {
  Check c;
  const double bot_random = run("bot", "random", 200, 1).report.win_rate();
  const double bot_max = run("bot", "maxpower", 200, 1).report.win_rate();
  const double max_random = run("maxpower", "random", 200, 1).report.win_rate();
  c.expect(bot_random >= 0.90, "bot/random " + fixed(bot_random));
  c.expect(bot_max >= 0.65, "bot/maxpower " + fixed(bot_max));
  c.expect(max_random >= 0.65, "maxpower/random " + fixed(max_random));
  return c.done("bot>random " + fixed(bot_random) + ", bot>maxpower " + fixed(bot_max) + ", maxpower>random " +
                fixed(max_random));
}

Outcome cs_metrics() {
  constexpr TurnChoice M = TurnChoice::Move, S = TurnChoice::Switch, F = TurnChoice::Forced;
  struct Case {
    std::vector<TurnChoice> seq;
    int active, cs1, cs2;
  };
  // Worked by hand; F entries are forced replacements and never count.
  const std::vector<Case> cases{
      {{M, S, S, M, S}, 3, 1, 2}, {{S, S, S}, 3, 2, 2},    {{M, M, M}, 0, 0, 0},
      {{S, F, S}, 2, 1, 1},       {{S, M, M, S}, 2, 0, 0}, {{F, S, M, F, S}, 2, 0, 1},
  };
  Check c;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const SwitchStats s = switch_stats(cases[i].seq);
    c.expect(s.active_switches == cases[i].active && s.cs1 == cases[i].cs1 && s.cs2 == cases[i].cs2,
             "fixture " + std::to_string(i));
  }
  const SwitchStats first = switch_stats(cases[0].seq);
  c.expect(first.cs1_rate() == 1.0 / 3 && first.cs2_rate() == 2.0 / 3, "rates of the first fixture");
  return c.done(std::to_string(cases.size()) + " fixtures");
}

// Opponent that only ever uses one move when it can.
class Stubborn : public Policy {
 public:
  explicit Stubborn(std::string move) : move_(std::move(move)) {}
  std::string name() const override { return "stubborn"; }
  PolicyChoice choose(const BattleState& s, Side side) override {
    const auto legal = legal_actions(s, side);
    for (const auto& a : legal) {
      if (a.is_move() && a.move == move_) return {a, nullptr, false};
    }
    return {legal.front(), nullptr, false};
  }

 private:
  std::string move_;
};

Outcome icrl_plumbing() {
  auto run_scenario = [](bool icrl) {
    auto ep = std::make_shared<FunctionEndpoint>([](const std::string& prompt, double) {
      if (prompt.find("had no effect on the opposing Toxicroak") != std::string::npos) {
        return directive("switch", "Blissey");
      }
      return directive("move", "Crabhammer");
    });
    auto s = duel({"Kingler", {"Crabhammer", "Swords Dance", "X-Scissor", "Rock Slide"}},
                  {"Toxicroak", {"Swords Dance", "Gunk Shot", "Drain Punch", "Ice Punch"}});
    PolicyConfig cfg;
    cfg.icrl = icrl;
    LlmAgent agent(cfg, ep);
    Stubborn foe("Swords Dance");
    std::vector<Action> chosen;
    for (int turn = 1; turn <= 4 && !s.finished(); ++turn) {
      const Action mine = agent.choose(s, Side::A).action;
      const TurnRecord& rec = step(s, mine, foe.choose(s, Side::B).action);
      agent.observe(s, Side::A, rec);
      chosen.push_back(mine);
    }
    bool stated = false;
    for (const auto& f : agent.memory().feedback()) stated |= f.text.find("had no effect") != std::string::npos;
    return std::pair{chosen, stated};
  };
  Check c;
  const auto [off, _] = run_scenario(false);
  int repeats = 0;
  while (repeats < static_cast<int>(off.size()) && off[repeats] == Action::use("Crabhammer")) ++repeats;
  c.expect(repeats >= 3, "icrl off repeated " + std::to_string(repeats));
  const auto [on, stated] = run_scenario(true);
  c.expect(on.size() >= 2 && on[0] == Action::use("Crabhammer") && on[1].is_switch(), "icrl on did not switch on turn 2");
  c.expect(stated, "no no-effect feedback");
  return c.done("off repeats " + std::to_string(repeats) + " turns, on switches on turn 2");
}

std::set<std::string> parse_types(const std::string& list) {
  static const std::regex word(R"((\w+)-type)");
  std::set<std::string> out;
  for (std::sregex_iterator it(list.begin(), list.end(), word), end; it != end; ++it) out.insert((*it)[1]);
  return out;
}

Outcome kag_soundness() {
  const auto dex = bundled_dex();
  static const std::regex strong_re(R"(is strong against (.*?) Pokémon)");
  static const std::regex weak_re(R"(weak to the (.*?) moves\.)");
  Check c;
  long pairs = 0;
  for (const auto& x : dex->all_species()) {
    // Expected clause sets for x as the opposing active Pokémon.
    std::set<std::string> strong, weak;
    for (Type t : all_types()) {
      if (dex->effectiveness(t, x.types).quarters() >= 8) weak.insert(std::string(type_name(t)));
      for (Type mine : x.types) {
        if (dex->chart().at(mine, t).quarters() >= 8) strong.insert(std::string(type_name(t)));
      }
    }
    for (const auto& y : dex->all_species()) {
      ++pairs;
      auto s = duel({x.name, {}}, {y.name, {}});
      const auto ann = annotate_types(view_of(s, Side::B), *dex);
      if (ann.empty() || ann.front().subject != x.name) {
        c.expect(false, "no annotation for " + x.name);
        continue;
      }
      std::smatch m;
      std::set<std::string> said_strong, said_weak;
      if (std::regex_search(ann.front().text, m, strong_re)) said_strong = parse_types(m[1]);
      if (std::regex_search(ann.front().text, m, weak_re)) said_weak = parse_types(m[1]);
      c.expect(said_strong == strong && said_weak == weak, x.name + " vs " + y.name);
    }
  }
  return c.done(std::to_string(pairs) + " species pairs");
}

Outcome sc_voting() {
  Check c;
  // Plurality with earliest tie-break against a brute-force count.
  Rng rng(42);
  const std::vector<Action> pool{Action::use("a"), Action::use("b"), Action::use("c"), Action::switch_to(1),
                                 Action::switch_to(4)};
  for (int trial = 0; trial < 5000; ++trial) {
    std::vector<Action> xs(1 + rng.below(9));
    for (auto& x : xs) x = pool[rng.below(pool.size())];
    std::size_t best = 0;
    long best_count = -1;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const long n = std::count(xs.begin(), xs.end(), xs[i]);
      if (n > best_count) {
        best_count = n;
        best = i;
      }
    }
    c.expect(vote(xs) == xs[best], "vote trial " + std::to_string(trial));
  }

  // sc with one sample against io, and hostile endpoints, over live battle states.
  int states = 0;
  const std::vector<std::string> nasty{"", "{", "null", R"({"action":"move"})", R"({"action":"switch","name":"Mewtwo"})",
                                       R"({"action":"move","name":"Struggle"})", "\xff\xfe garbage",
                                       std::string(3000, '{')};
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    Rng junk(mix_seed(seed, 99));
    random_battle(seed, 40, [&](const BattleState& st) {
      if (st.finished()) return;
      for (Side side : {Side::A, Side::B}) {
        const auto legal = legal_actions(st, side);
        if (legal.empty()) continue;
        ++states;
        const Observation obs = describe(st, side);
        Rng pick(mix_seed(seed, st.log.size() * 2 + idx(side)));
        std::vector<std::string> transcript;
        for (int i = 0; i < 3; ++i) {
          transcript.push_back(pick.below(3) == 0 ? "??" : directive("move", obs.actions[pick.below(obs.actions.size())].label.substr(5)));
        }
        PolicyConfig io = PolicyConfig::parse("io"), sc1 = PolicyConfig::parse("sc:1");
        io.temperature = sc1.temperature = 0.5;
        ScriptedEndpoint ea(transcript), eb(transcript);
        const Decision da = decide(io, obs, IcrlMemory(), ea);
        const Decision db = decide(sc1, obs, IcrlMemory(), eb);
        c.expect(da.action == db.action && ea.prompts() == eb.prompts(), "sc(1) differs from io");

        for (const char* spec : {"io", "cot", "sc:3", "tot:3"}) {
          FunctionEndpoint ep([&](const std::string&, double) {
            if (junk.below(2)) return nasty[junk.below(nasty.size())];
            const auto& team = st.side(junk.below(2) ? Side::A : Side::B).team;
            const auto& mon = team[junk.below(team.size())];
            return junk.below(2) ? directive("move", mon.moves[junk.below(mon.moves.size())])
                                 : directive("switch", mon.species);
          });
          const Decision d = decide(PolicyConfig::parse(spec), obs, IcrlMemory(), ep);
          c.expect(std::find(legal.begin(), legal.end(), d.action) != legal.end(), std::string("illegal from ") + spec);
        }
      }
    });
  }
  return c.done("5000 vote trials, " + std::to_string(states) + " states fuzzed");
}

Outcome protocol_fixtures() {
  const fs::path dir = fs::path(ARENA_FIXTURE_DIR) / "protocol";
  Check c;
  int files = 0, lines = 0;
  std::vector<fs::path> paths;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".log") paths.push_back(e.path());
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) {
    ++files;
    KnownState st;
    std::ifstream in(p);
    for (std::string line; std::getline(in, line);) {
      ++lines;
      try {
        const ProtocolMessage m = parse_line(line);
        track(st, m);
        for (Side s : {Side::A, Side::B}) {
          for (const auto& mon : st.side(s).mons) {
            c.expect(mon.hp_fraction >= 0.0 && mon.hp_fraction <= 1.0, p.filename().string() + ": hp out of range");
          }
        }
        if (const auto* sw = std::get_if<proto::SwitchIn>(&m)) {
          c.expect(st.active(sw->side) && st.active(sw->side)->name == sw->pokemon,
                   p.filename().string() + ": no active after switch");
        }
      } catch (const std::exception& e) {
        c.expect(false, p.filename().string() + ": " + e.what());
      }
    }
    if (p.filename() != "anomalies.log") c.expect(st.anomalies.empty(), p.filename().string() + ": anomalies");
  }
  c.expect(files >= 4, "corpus has " + std::to_string(files) + " files");

  Rng rng(7);
  const std::vector<std::string> tokens{"|", "switch", "move", "-damage", "p1a: X", "p2a", "100/100", "0 fnt",
                                        "-boost", "atk", "request", "{", "turn", "win", "\n", "-1"};
  for (int i = 0; i < 20000; ++i) {
    std::string s;
    const auto n = rng.below(60);
    for (std::uint64_t k = 0; k < n; ++k) {
      s += rng.below(2) ? std::string(1, static_cast<char>(rng.below(256))) : tokens[rng.below(tokens.size())];
    }
    try {
      (void)parse_line(s);
    } catch (const std::exception& e) {
      c.expect(false, std::string("fuzz threw: ") + e.what());
    }
  }
  return c.done(std::to_string(files) + " files, " + std::to_string(lines) + " lines, 20000 fuzz inputs");
}

Outcome oracle_end_to_end() {
  const RunResult direct = run("maxpower", "bot", 20, 1);
  const RunResult adapted = run("oracle:maxpower", "bot", 20, 1);
  Check c;
  c.expect(direct.battles.size() == 20 && adapted.battles.size() == 20, "battle counts");
  int fallbacks = 0;
  for (std::size_t i = 0; i < std::min(direct.battles.size(), adapted.battles.size()); ++i) {
    const auto& d = direct.battles[i].log;
    const auto& o = adapted.battles[i].log;
    fallbacks += adapted.battles[i].fallbacks[0];
    c.expect(!adapted.battles[i].aborted, "battle " + std::to_string(i) + " aborted");
    bool same = d.records.size() == o.records.size();
    for (std::size_t k = 0; same && k < d.records.size(); ++k) same = d.records[k].record == o.records[k].record;
    c.expect(same, "battle " + std::to_string(i) + " diverged");
    c.expect(d.footer && o.footer && d.footer->digest == o.footer->digest, "battle " + std::to_string(i) + " digest");
  }
  c.expect(fallbacks == 0, std::to_string(fallbacks) + " fallbacks");
  return c.done("20 battles identical, 0 fallbacks");
}

struct Criterion {
  const char* name;
  double budget_seconds;  // 0: no time bound
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"chart oracle", 1, chart_counts},
      {"hallucination test", 5, hallucination},
      {"score identity", 60, score_identity},
      {"determinism", 0, determinism},
      {"baseline ordering", 300, baseline_ordering},
      {"cs metrics", 0, cs_metrics},
      {"icrl plumbing", 0, icrl_plumbing},
      {"kag soundness", 0, kag_soundness},
      {"sc voting", 0, sc_voting},
      {"protocol fixtures", 0, protocol_fixtures},
      {"oracle end-to-end", 0, oracle_end_to_end},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& cr = criteria[i];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.ok && cr.budget_seconds > 0 && secs > cr.budget_seconds) {
      o = {false, "over time budget of " + fixed(cr.budget_seconds, 0) + " s; " + o.detail};
    }
    failed += !o.ok;
    std::cout << (o.ok ? "PASS" : "FAIL") << " [" << i + 1 << "] " << cr.name << ": " << o.detail << " ("
              << fixed(secs, 2) << " s)" << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed ? 1 : 0;
}
