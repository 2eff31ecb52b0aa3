#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "agility/cli/commands.hpp"
#include "agility/error.hpp"

namespace {

using agility::cli::Command;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream f(path);
  if (!f) throw agility::ConfigError("cannot open config file " + path);
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw agility::ConfigError(path + ": " + e.what());
  }
}

int run(Command command, const Options& opt) {
  try {
    auto cfg = agility::cli::parse_run_config(command, load_config(opt.config));
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.out) cfg.out = *opt.out;
    agility::cli::run_command(cfg, std::cout);
    return agility::cli::kExitOk;
  } catch (const agility::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return agility::cli::kExitConfig;
  } catch (const agility::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return agility::cli::kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return agility::cli::kExitFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Legged-robot perception and estimation experiments"};
  app.require_subcommand(1);
  Options opt;
  std::optional<Command> chosen;

  const std::pair<Command, const char*> commands[] = {
      {Command::simulate, "Generate a proprioceptive dataset"},
      {Command::table6, "Train and compare the velocity estimators"},
      {Command::blindzone, "Terrain memory against a memoryless baseline"},
      {Command::bench_latency, "Per-step latency of the SSM and an attention baseline"},
      {Command::gating, "Gated against fixed-weight toy distillation"},
  };
  for (const auto& [command, help] : commands) {
    auto* sub = app.add_subcommand(agility::cli::to_string(command), help);
    sub->add_option("--config", opt.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "Global seed (overrides the config)");
    sub->add_option("--out", opt.out, "Output directory (overrides the config)");
    sub->callback([&chosen, command = command] { chosen = command; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? agility::cli::kExitOk : agility::cli::kExitConfig;
  }
  return run(*chosen, opt);
}
