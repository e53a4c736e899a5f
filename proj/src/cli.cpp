#include "arena/cli.hpp"

#include <algorithm>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "CLI11.hpp"

#include "arena/harness.hpp"
#include "arena/knowledge.hpp"
#include "arena/server.hpp"

namespace arena {

using nlohmann::json;

namespace {

struct EndpointFlags {
  std::string url;
  std::string model;
  std::string key_file;  // path only; the key itself never appears on the command line

  void add_to(CLI::App& app) {
    app.add_option("--endpoint-url", url, "Chat-completions base URL (or ARENA_ENDPOINT_URL)");
    app.add_option("--model", model, "Model name (or ARENA_MODEL)");
    app.add_option("--key-file", key_file, "File holding the API key; ARENA_API_KEY takes precedence")
        ->check(CLI::ExistingFile);
  }

  // Environment fills whatever the flags left empty.
  void resolve() {
    if (url.empty()) {
      if (const char* v = std::getenv("ARENA_ENDPOINT_URL")) url = v;
    }
    if (model.empty()) {
      if (const char* v = std::getenv("ARENA_MODEL")) model = v;
    }
  }

  bool configured() const { return !url.empty(); }

  std::function<std::shared_ptr<CompletionEndpoint>()> factory() const {
    if (!configured()) return {};
    const HttpEndpointConfig cfg = http_config(url, model, key_file);
    HttpEndpoint probe(cfg);  // validates the URL up front
    return [cfg] { return std::make_shared<HttpEndpoint>(cfg); };
  }
};

struct AgentFlags {
  bool icrl = false;
  std::string kag = "none";
  std::optional<double> temperature;
  int history_window = 5;
  int retry_budget = 2;

  void add_to(CLI::App& app) {
    app.add_flag("--icrl", icrl, "Feed turn feedback back into the prompt");
    app.add_option("--kag", kag, "Knowledge augmentation")
        ->check(CLI::IsMember({"none", "type", "effect", "both"}));
    app.add_option("--temperature", temperature, "Sampling temperature override")->check(CLI::Range(0.0, 2.0));
    app.add_option("--history-window", history_window, "Turns of history in the prompt")->check(CLI::NonNegativeNumber);
    app.add_option("--retry-budget", retry_budget, "Retries per sample on unparseable output")
        ->check(CLI::NonNegativeNumber);
  }

  AgentOptions options(const EndpointFlags& ep) const {
    AgentOptions o;
    o.icrl = icrl;
    o.kag = *parse_kag_mode(kag);
    o.temperature = temperature;
    o.history_window = history_window;
    o.retry_budget = retry_budget;
    o.endpoint = ep.factory();
    return o;
  }
};

// Refuses LLM strategies before any endpoint work so the message names the problem.
void require_endpoint(const std::string& spec, const EndpointFlags& ep) {
  if (is_llm_spec(spec) && !ep.configured()) {
    throw ConfigError("strategy '" + spec +
                      "' needs an LLM endpoint: pass --endpoint-url and --model (or set ARENA_ENDPOINT_URL and "
                      "ARENA_MODEL), with the key in ARENA_API_KEY or --key-file");
  }
}

std::shared_ptr<const Pokedex> load_dex(const std::string& dir) {
  return std::make_shared<const Pokedex>(load_pokedex(dir));
}

volatile std::sig_atomic_t g_stop = 0;

extern "C" void on_signal(int) { g_stop = 1; }

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pokémon battle arena for LLM agents", "arena"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string data_dir = ARENA_DATA_DIR;
  bool as_json = false;
  app.add_option("--data-dir", data_dir, "Pokédex data directory")->capture_default_str();
  app.add_flag("--json", as_json, "Machine-readable output");

  // battle
  auto* battle = app.add_subcommand("battle", "Run seeded battles between two agents");
  std::string agent = "maxpower", opponent = "bot";
  RunConfig run;
  run.n = 10;
  run.seed = 1;
  std::string log_dir = "arena-logs";
  bool draws_as_losses = false;
  EndpointFlags battle_ep;
  AgentFlags battle_agent;
  battle->add_option("--agent", agent, "Side A: io|cot|sc:K|tot:K|random|maxpower|bot|oracle:X")->capture_default_str();
  battle->add_option("--opponent", opponent, "Side B, same vocabulary")->capture_default_str();
  battle->add_option("--n", run.n, "Number of battles")->check(CLI::PositiveNumber)->capture_default_str();
  battle->add_option("--seed", run.seed, "Master seed")->capture_default_str();
  battle->add_option("--parallel", run.parallel, "Worker threads")->check(CLI::Range(1, 256))->capture_default_str();
  battle->add_option("--turn-cap", run.turn_cap, "Turn cap per battle")->check(CLI::PositiveNumber)->capture_default_str();
  battle->add_option("--log-dir", log_dir, "Where battle logs are written")->capture_default_str();
  battle->add_option("--attrition-recoveries", run.attrition.min_recoveries,
                     "Healing moves that mark an attrition battle")->check(CLI::PositiveNumber);
  battle->add_option("--attrition-turns", run.attrition.min_turns, "Minimum turns of an attrition battle")
      ->check(CLI::PositiveNumber);
  battle->add_flag("--draws-as-losses", draws_as_losses, "Count draws in the win-rate denominator");
  battle_agent.add_to(*battle);
  battle_ep.add_to(*battle);

  // halluc
  auto* halluc = app.add_subcommand("halluc", "Type-effectiveness hallucination test");
  bool use_oracle = false;
  std::string constant;
  EndpointFlags halluc_ep;
  auto* oracle_opt = halluc->add_flag("--oracle", use_oracle, "Answer from the type chart");
  auto* constant_opt = halluc->add_option("--constant", constant, "Always answer this letter")
                           ->check(CLI::IsMember({"A", "B", "C", "D"}));
  oracle_opt->excludes(constant_opt);
  halluc_ep.add_to(*halluc);
  double halluc_temperature = 0.0;
  halluc->add_option("--temperature", halluc_temperature, "Sampling temperature")->check(CLI::Range(0.0, 2.0));

  // replay
  auto* replay_cmd = app.add_subcommand("replay", "Re-simulate a battle log");
  std::string replay_path;
  bool verify = false;
  replay_cmd->add_option("log", replay_path, "JSONL battle log")->required()->check(CLI::ExistingFile);
  replay_cmd->add_flag("--verify", verify, "Exit nonzero on any mismatch");

  // validate-data
  auto* validate = app.add_subcommand("validate-data", "Load the data files and check the type chart");
  std::string validate_dir;
  validate->add_option("dir", validate_dir, "Data directory (default: --data-dir)");

  // serve
  auto* serve = app.add_subcommand("serve", "HTTP service for human-vs-agent battles");
  std::string host = "127.0.0.1";
  int port = 8080;
  ServeConfig serve_cfg;
  std::string serve_logs;
  int timeout_s = 600;
  EndpointFlags serve_ep;
  AgentFlags serve_agent;
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--port", port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535))->capture_default_str();
  serve->add_option("--agent", serve_cfg.agent, "Default opponent for new battles")->capture_default_str();
  serve->add_option("--timeout", timeout_s, "Idle seconds before the human forfeits")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  serve->add_option("--log-dir", serve_logs, "Write finished battles here");
  serve_agent.add_to(*serve);
  serve_ep.add_to(*serve);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return 0;
    err << "\n" << app.help();
    return 2;
  }

  try {
    if (*battle) {
      battle_ep.resolve();
      require_endpoint(agent, battle_ep);
      require_endpoint(opponent, battle_ep);
      const auto opts = battle_agent.options(battle_ep);
      const auto fa = policy_factory(agent, opts);
      const auto fb = policy_factory(opponent, opts);
      const auto dex = load_dex(data_dir);
      run.log_dir = log_dir;
      const RunResult result = run_battles(dex, fa, fb, run);
      const MetricsReport& rep = result.report;
      {
        std::ofstream report_file(std::filesystem::path(log_dir) / "report.json");
        report_file << rep.to_json().dump(2) << "\n";
      }
      if (as_json) {
        out << rep.to_json().dump(2) << "\n";
      } else {
        out << rep.render(draws_as_losses);
      }
      err << "logs: " << log_dir << "\n";
      if (rep.partial) {
        err << "run stopped early: " << rep.aborted << " battle(s) aborted\n";
        return 1;
      }
      return 0;
    }

    if (*halluc) {
      halluc_ep.resolve();
      const int modes = int(use_oracle) + int(!constant.empty()) + int(halluc_ep.configured());
      if (modes != 1) {
        err << "halluc needs exactly one of --oracle, --constant X, or an endpoint\n\n" << halluc->help();
        return 2;
      }
      const auto dex = load_dex(data_dir);
      std::shared_ptr<CompletionEndpoint> ep;
      if (use_oracle) {
        ep = std::make_shared<ChartOracleEndpoint>(dex);
      } else if (!constant.empty()) {
        ep = std::make_shared<FunctionEndpoint>([constant](const std::string&, double) { return constant; });
      } else {
        ep = halluc_ep.factory()();
      }
      const ConfusionMatrix m = hallucination_test(*ep, *dex, halluc_temperature);
      if (as_json) {
        out << m.to_json().dump(2) << "\n";
      } else {
        out << m.render();
      }
      return 0;
    }

    if (*replay_cmd) {
      const auto dex = load_dex(data_dir);
      const BattleLog log = read_log_file(replay_path);
      const ReplayResult r = replay(log, dex);
      const auto& f = *log.footer;
      if (as_json) {
        out << json{{"ok", r.ok()},
                    {"records", log.records.size()},
                    {"winner", f.winner ? json(side_tag(*f.winner)) : json(nullptr)},
                    {"reason", finish_reason_name(f.reason)},
                    {"scores", f.scores},
                    {"digest", f.digest},
                    {"mismatches", r.mismatches}}
                   .dump(2)
            << "\n";
      } else {
        out << "records: " << log.records.size() << "\n"
            << "winner:  " << (f.winner ? std::string(side_tag(*f.winner)) : "draw") << " ("
            << finish_reason_name(f.reason) << ")\n"
            << "scores:  " << f.scores[0] << "-" << f.scores[1] << "\n"
            << "digest:  " << f.digest << "\n";
        for (const auto& m : r.mismatches) out << "mismatch: " << m << "\n";
        out << (r.ok() ? "replay ok" : "replay MISMATCH") << "\n";
      }
      return verify && !r.ok() ? 1 : 0;
    }

    if (*validate) {
      const std::string dir = validate_dir.empty() ? data_dir : validate_dir;
      const Pokedex dex = load_pokedex(dir);
      const ClassCounts c = validate_chart(dex.chart());
      if (as_json) {
        out << json{{"super_effective", c.super_effective},
                    {"standard", c.standard},
                    {"ineffective", c.ineffective},
                    {"no_effect", c.no_effect},
                    {"species", dex.all_species().size()},
                    {"moves", dex.all_moves().size()},
                    {"abilities", dex.all_abilities().size()}}
                   .dump(2)
            << "\n";
      } else {
        out << c.super_effective << "/" << c.standard << "/" << c.ineffective << "/" << c.no_effect << "\n";
      }
      return 0;
    }

    if (*serve) {
      serve_ep.resolve();
      require_endpoint(serve_cfg.agent, serve_ep);
      serve_cfg.agent_options = serve_agent.options(serve_ep);
      serve_cfg.session_timeout = std::chrono::seconds(timeout_s);
      if (!serve_logs.empty()) serve_cfg.log_dir = serve_logs;
      BattleService service(load_dex(data_dir), serve_cfg);
      ApiServer server(service);
      const int bound = server.bind(host, port);
      err << "listening on http://" << host << ":" << bound << "\n";
      g_stop = 0;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::atomic<bool> done{false};
      std::thread watcher([&] {
        while (!done && !g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        server.stop();
      });
      server.listen();
      done = true;
      watcher.join();
      return 0;
    }
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace arena
