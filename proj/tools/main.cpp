#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "rhogap/errors.hpp"

namespace {

int fail(int code, const std::string& kind, const std::string& message) {
  std::cerr << "rhogap: " << kind << ": " << message << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Data valuation and subset selection for GP-based tracking control"};
  std::string command;
  std::string config_path;
  std::vector<std::string> overrides;
  unsigned threads = 1;
  std::string out_dir;
  cli.add_option("command", command, "Pipeline step")
      ->required()
      ->check(CLI::IsMember(rhogap::app::command_names()));
  cli.add_option("--config", config_path, "Experiment config (JSON)")->required();
  cli.add_option("--set", overrides, "Override a config value, e.g. sim.dt=0.0005");
  cli.add_option("--threads", threads, "Worker threads for rollouts")->check(CLI::PositiveNumber);
  cli.add_option("--out", out_dir, "Output directory (overrides output.dir)");
  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = cli.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (!out_dir.empty()) overrides.push_back("output.dir=\"" + out_dir + "\"");
    rhogap::app::AppConfig cfg = rhogap::app::load_config(config_path, overrides);
    cfg.experiment.threads = threads;
    rhogap::app::run_command(command, cfg);
  } catch (const rhogap::app::ConfigError& e) {
    return fail(2, "config error", e.what());
  } catch (const rhogap::InsufficientData& e) {
    return fail(4, "insufficient data", e.what());
  } catch (const rhogap::NumericalError& e) {
    return fail(3, "numerical error", e.what());
  } catch (const rhogap::DomainError& e) {
    return fail(3, "numerical error", e.what());
  } catch (const std::invalid_argument& e) {
    return fail(2, "invalid argument", e.what());
  } catch (const std::exception& e) {
    return fail(1, "error", e.what());
  }
  return 0;
}
