// swave: experiment driver.  Exit status 0 when every check passes, 1 when
// a check fails or a suite stops on an error, 2 on bad usage or config.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include "swave/cli/suites.hpp"

namespace {

constexpr const char* kOutputRootVar = "SWAVE_OUTPUT_ROOT";

std::filesystem::path output_base(const std::optional<std::string>& flag,
                                  const swave::cli::RunConfig& cfg) {
  if (flag) return *flag;
  if (!cfg.output.empty()) return cfg.output;
  if (const char* env = std::getenv(kOutputRootVar); env && *env) return env;
  return "swave-out";
}

}  // namespace

int main(int argc, char** argv) {
  using namespace swave::cli;
  CLI::App app{"Stochastic wave equation experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kArtifactVersion);

  std::string config_path;
  std::optional<std::int64_t> seed, replicas;
  std::optional<int> workers;
  std::optional<std::string> out;
  app.add_option("--config", config_path, "key/value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "override run.seed");
  app.add_option("--replicas", replicas, "override run.replicas");
  app.add_option("--workers", workers, "override run.workers");
  app.add_option("--out", out,
                 std::string("output root (default: run.output, then $") + kOutputRootVar +
                     ", then ./swave-out)");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"check-kernel", "kernel integrability conditions"},
      {"simulate", "mild-solution moments and a sample field"},
      {"malliavin", "finite-difference gradient check and nondegeneracy"},
      {"density", "density proxies at the target point"},
      {"verify", "every property suite"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = parse_config_file(config_path);
    if (seed) cfg.seed = *seed;
    if (replicas) cfg.replicas = *replicas;
    if (workers) cfg.workers = *workers;
    validate(cfg);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  const auto root = output_base(out, cfg) / command;
  std::cout << "swave " << command << "  digest " << config_digest(cfg) << "\n"
            << "output " << root.string() << "\n";
  try {
    bool ok = run_suite(cfg, command, root, [](const SuiteOutcome& o, const CheckLog& log) {
      std::cout << (o.passed ? "PASS " : "FAIL ") << o.name;
      if (!o.passed) std::cout << "  (" << log.failures() << " failed check(s))";
      if (!o.error.empty()) std::cout << "  error: " << o.error;
      std::cout << "\n";
    });
    return ok ? 0 : 1;
  } catch (const swave::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
