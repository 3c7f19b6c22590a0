// Command-line front end. Every command delegates to a library operation;
// this file only parses flags, resolves files and maps failures to exit codes.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <thread>

#include <CLI11.hpp>

#include "uavllm/error.hpp"
#include "uavllm/gateway.hpp"
#include "uavllm/mission.hpp"
#include "uavllm/plot.hpp"
#include "uavllm/world.hpp"

namespace fs = std::filesystem;
using namespace uavllm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitMissionFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitEnvironment = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EnvironmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw UsageError(what + " is required");
  if (!fs::is_regular_file(path)) throw EnvironmentError(what + " not found: " + path);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw EnvironmentError("cannot write " + path);
  out << text;
}

struct ProviderFlags {
  std::string provider = "scripted";
  std::string fixture;
  std::string base_url = HttpProviderConfig{}.base_url;
  std::string model = ModelConfig{}.model_name;
  std::string prices;
  int call_limit = 0;
  std::int64_t seed = 0;
  bool seed_set = false;
};

/// Price table from --prices, else data/prices.json beside the missions.
PriceTable resolve_prices(const ProviderFlags& f, const std::string& mission_path) {
  std::vector<std::string> candidates;
  if (!f.prices.empty()) {
    require_file(f.prices, "price table");
    candidates.push_back(f.prices);
  } else {
    const fs::path dir = fs::path(mission_path).parent_path();
    candidates = {(dir / ".." / "prices.json").string(), (dir / "prices.json").string(),
                  "data/prices.json"};
  }
  for (const auto& c : candidates) {
    if (fs::is_regular_file(c)) return load_price_table(c);
  }
  throw UsageError("no price table found; pass --prices");
}

LlmOptions llm_options(const ProviderFlags& f, const std::string& mission_path) {
  LlmOptions o;
  o.model.model_name = f.model;
  if (f.seed_set) o.model.seed = f.seed;
  o.prices = resolve_prices(f, mission_path);
  if (f.call_limit > 0) o.call_limit = f.call_limit;
  return o;
}

/// Fixture for one mission: the --fixture file itself, or <dir>/<id>.json
/// when --fixture names a directory.
std::string fixture_for(const ProviderFlags& f, const std::string& mission_id) {
  if (f.fixture.empty()) throw UsageError("--fixture is required with --provider scripted");
  if (fs::is_directory(f.fixture)) return (fs::path(f.fixture) / (mission_id + ".json")).string();
  return f.fixture;
}

ProviderFactory provider_factory(const ProviderFlags& f) {
  if (f.provider == "http") {
    HttpProviderConfig cfg;
    cfg.base_url = f.base_url;
    return [cfg](const MissionSpec&) { return std::make_unique<HttpProvider>(cfg); };
  }
  if (f.fixture.empty()) throw UsageError("--fixture is required with --provider scripted");
  if (!fs::exists(f.fixture)) throw EnvironmentError("fixture not found: " + f.fixture);
  return [f](const MissionSpec& m) {
    const std::string path = fixture_for(f, m.id);
    if (!fs::is_regular_file(path)) {
      throw Error(ErrorCode::kInvalidArguments, "no fixture for mission " + m.id + ": " + path);
    }
    return std::make_unique<ScriptedProvider>(ScriptedProvider::load_file(path));
  };
}

void add_provider_flags(CLI::App* cmd, ProviderFlags& f) {
  cmd->add_option("--provider", f.provider, "Model provider")
      ->check(CLI::IsMember({"scripted", "http"}));
  cmd->add_option("--fixture", f.fixture,
                  "Scripted-provider fixture file, or a directory of <mission-id>.json files");
  cmd->add_option("--base-url", f.base_url, "Chat-completions endpoint (http provider)");
  cmd->add_option("--model", f.model, "Model name (must appear in the price table)");
  cmd->add_option("--prices", f.prices, "Price table (uav-prices/1)");
  cmd->add_option("--call-limit", f.call_limit, "Override the mission's API call limit")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "Sampling seed forwarded to the model provider")
      ->each([&f](const std::string&) { f.seed_set = true; });
}

// ---------------------------------------------------------------------------
// Commands

int cmd_run(const std::string& mission_path, const std::string& mode_flag,
            const ProviderFlags& flags, std::string out) {
  require_file(mission_path, "mission file");
  const MissionSpec mission = load_mission_file(mission_path);
  const MissionMode mode = parse_mode(mode_flag);
  MissionLog log;
  if (mode == MissionMode::kDirect) {
    log = run_direct(mission);
  } else {
    ProviderFactory factory = provider_factory(flags);
    const LlmOptions options = llm_options(flags, mission_path);
    std::unique_ptr<Provider> provider = factory(mission);
    log = run_llm(mission, *provider, options);
  }
  if (out.empty()) out = mission.id + "." + std::string(mode_name(mode)) + ".ndjson";
  write_log_file(log, out);
  const MissionMetrics m = evaluate(log);
  nlohmann::json summary = {{"mission", mission.id},
                            {"mode", mode_name(mode)},
                            {"status", status_name(log.status)},
                            {"halt_reason", log.halt_reason},
                            {"log", out},
                            {"metrics", metrics_to_json(m)}};
  std::cout << summary.dump(2) << "\n";
  return log.status == MissionStatus::kReached && m.net_collisions == 0 ? kExitOk
                                                                       : kExitMissionFailure;
}

int cmd_plot(const std::string& log_path, std::string prefix) {
  require_file(log_path, "log file");
  const MissionLog log = read_log_file(log_path);
  if (prefix.empty()) prefix = (fs::path(log_path).parent_path() / fs::path(log_path).stem()).string();
  const PlotFiles files = write_plot(log, prefix);
  std::cout << files.svg_path << "\n" << files.csv_path << "\n";
  return kExitOk;
}

int cmd_validate(const std::string& world_path) {
  require_file(world_path, "world file");
  const WorldDescription world = load_world_file(world_path);
  GridCheck check;
  try {
    check = check_grid(world);
  } catch (const Error& e) {
    std::cout << nlohmann::json{{"ok", false}, {"error", e.code_name()}, {"message", e.what()}}
                     .dump(2)
              << "\n";
    return kExitMissionFailure;
  }
  std::cout << grid_check_to_json(check).dump(2) << "\n";
  return check.ok() ? kExitOk : kExitMissionFailure;
}

int cmd_replay(const std::string& log_path, const std::string& out) {
  require_file(log_path, "log file");
  const MissionLog log = read_log_file(log_path);
  const MissionLog again = replay(log);
  if (!out.empty()) write_log_file(again, out);
  std::cout << nlohmann::json{{"identical", true}, {"records", again.records.size()}}.dump()
            << "\n";
  return kExitOk;
}

int cmd_evaluate(const std::string& log_path) {
  require_file(log_path, "log file");
  const MissionMetrics m = evaluate(read_log_file(log_path));
  std::cout << metrics_to_json(m).dump(2) << "\n";
  return m.reached && m.net_collisions == 0 ? kExitOk : kExitMissionFailure;
}

int cmd_export_grid(const std::string& world_path, const std::string& out) {
  require_file(world_path, "world file");
  write_text(out, load_world_file(world_path).rasterize().to_csv());
  return kExitOk;
}

std::vector<MissionSpec> load_missions(const std::vector<std::string>& files,
                                       const std::string& dir) {
  std::vector<std::string> paths = files;
  if (paths.empty()) {
    if (!fs::is_directory(dir)) throw EnvironmentError("missions directory not found: " + dir);
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".json") paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
  }
  std::vector<MissionSpec> missions;
  for (const auto& p : paths) {
    require_file(p, "mission file");
    missions.push_back(load_mission_file(p));
  }
  if (missions.empty()) throw UsageError("no missions to serve");
  return missions;
}

int cmd_serve(const std::vector<std::string>& mission_files, const std::string& missions_dir,
              const ProviderFlags& flags, const std::string& host, int port) {
  GatewayOptions options;
  options.missions = load_missions(mission_files, missions_dir);
  const std::string anchor =
      mission_files.empty() ? (fs::path(missions_dir) / "x.json").string() : mission_files.front();
  if (flags.provider == "http" || !flags.fixture.empty()) {
    options.make_provider = provider_factory(flags);
    options.llm = llm_options(flags, anchor);
  }

  // Shut down cleanly on SIGINT/SIGTERM: the signals are taken synchronously
  // by a watcher thread rather than an async handler.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Gateway gateway(std::move(options));
  GatewayServer server(gateway);
  int bound = 0;
  try {
    bound = server.bind(host, port);
  } catch (const Error& e) {
    throw EnvironmentError(e.what());
  }
  std::cerr << "uavctl: gateway listening on http://" << host << ":" << bound << "\n";
  std::thread watcher([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.serve();
  gateway.shutdown();
  // Release the watcher if the server stopped for another reason.
  pthread_kill(watcher.native_handle(), SIGTERM);
  watcher.join();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uavctl: fly, replay, evaluate and serve UAV missions"};
  app.require_subcommand(0, 1);
  std::function<int()> action;

  ProviderFlags flags;
  std::string mission_path, mode = "direct", out, world_path, log_path, host = "127.0.0.1";
  std::string missions_dir = "data/missions";
  std::vector<std::string> mission_files;
  int port = 8080;
  bool serve_flag = false;

  app.add_flag("--serve", serve_flag, "Launch the gateway (same as the serve command)");
  app.add_option("--port", port, "Gateway port")->check(CLI::Range(0, 65535));

  auto* run = app.add_subcommand("run", "Fly one mission and write its log");
  run->add_option("--mission", mission_path, "Mission file")->required();
  run->add_option("--mode", mode, "Control mode")->check(CLI::IsMember({"direct", "llm"}));
  run->add_option("--out", out, "Log output path");
  add_provider_flags(run, flags);
  run->callback([&] { action = [&] { return cmd_run(mission_path, mode, flags, out); }; });

  auto* plot = app.add_subcommand("plot", "Render a log as SVG plus a CSV of samples");
  plot->add_option("log", log_path, "Mission log")->required();
  plot->add_option("--out", out, "Output prefix (default: the log path without extension)");
  plot->callback([&] { action = [&] { return cmd_plot(log_path, out); }; });

  auto* validate = app.add_subcommand("validate", "Check a world file and its grid");
  validate->add_option("world,--world", world_path, "World file")->required();
  validate->callback([&] { action = [&] { return cmd_validate(world_path); }; });

  auto* replay_cmd = app.add_subcommand("replay", "Re-execute a log and compare");
  replay_cmd->add_option("log", log_path, "Mission log")->required();
  replay_cmd->add_option("--out", out, "Write the rebuilt log here");
  replay_cmd->callback([&] { action = [&] { return cmd_replay(log_path, out); }; });

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Compute metrics from a log");
  evaluate_cmd->add_option("log", log_path, "Mission log")->required();
  evaluate_cmd->callback([&] { action = [&] { return cmd_evaluate(log_path); }; });

  auto* schemas = app.add_subcommand("schemas", "Print the stream tool schemas");
  schemas->add_option("--out", out, "Output file (default: stdout)");
  schemas->callback([&] {
    action = [&] {
      write_text(out, export_schemas().dump(2) + "\n");
      return kExitOk;
    };
  });

  auto* grid = app.add_subcommand("export-grid", "Print a world's occupancy grid as CSV");
  grid->add_option("world,--world", world_path, "World file")->required();
  grid->add_option("--out", out, "Output file (default: stdout)");
  grid->callback([&] { action = [&] { return cmd_export_grid(world_path, out); }; });

  auto* serve = app.add_subcommand("serve", "Run the HTTP gateway");
  serve->add_option("--mission", mission_files, "Mission file (repeatable)");
  serve->add_option("--missions-dir", missions_dir, "Serve every mission in this directory");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
  add_provider_flags(serve, flags);
  serve->callback([&] {
    action = [&] { return cmd_serve(mission_files, missions_dir, flags, host, port); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (!action) {
    if (!serve_flag) {
      std::cerr << app.help();
      return kExitUsage;
    }
    action = [&] { return cmd_serve(mission_files, missions_dir, flags, host, port); };
  }

  try {
    return action();
  } catch (const UsageError& e) {
    std::cerr << "uavctl: " << e.what() << "\n" << "Run with --help for usage.\n";
    return kExitUsage;
  } catch (const EnvironmentError& e) {
    std::cerr << "uavctl: " << e.what() << "\n";
    return kExitEnvironment;
  } catch (const Error& e) {
    std::cerr << "uavctl: " << e.code_name() << ": " << e.what() << "\n";
    return e.code() == ErrorCode::kProviderUnavailable ? kExitEnvironment : kExitMissionFailure;
  } catch (const std::exception& e) {
    std::cerr << "uavctl: " << e.what() << "\n";
    return kExitEnvironment;
  }
}
