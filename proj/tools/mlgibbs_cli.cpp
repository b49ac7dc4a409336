#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mlgibbs/commands.hpp"

namespace {

std::optional<std::uint64_t> env_seed() {
  const char* text = std::getenv("MLGIBBS_SEED");
  if (!text || !*text) return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(text, &used);
    if (used != std::string(text).size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw mlgibbs::ConfigError("MLGIBBS_SEED", "must be an unsigned 64-bit integer");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilevel Langevin Monte Carlo for Gibbs measures"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_path;
  std::optional<double> assert_eps;
  unsigned threads = 1;
  std::vector<double> epsilons;
  std::string suite;
  std::optional<std::uint64_t> seed;

  auto* calibrate = app.add_subcommand("calibrate", "Print the calibrated plan as JSON");
  calibrate->add_option("--config", config_path, "Experiment config (JSON)")->required();

  auto* run = app.add_subcommand("run", "Run R replicates and print one CSV row");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", out_path, "Also write the CSV to this file");
  run->add_option("--assert-eps", assert_eps, "Exit 4 if rmse > epsilon * tol")->check(CLI::PositiveNumber);
  run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* sweep = app.add_subcommand("sweep", "Run over several epsilons and fit the cost slope");
  sweep->add_option("--config", config_path, "Experiment config (JSON)")->required();
  sweep->add_option("--epsilons", epsilons, "Epsilon values (default: config field epsilons)")->delimiter(',');
  sweep->add_option("--out", out_path, "Also write the CSV to this file");
  sweep->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* diag = app.add_subcommand("diag", "Run a pinned diagnostic suite");
  diag->add_option("--suite", suite, "Suite name")->required();
  diag->add_option("--seed", seed, "Seed (default: MLGIBBS_SEED or 1)");
  diag->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mlgibbs::kExitConfig;
  }

  try {
    const auto override_seed = env_seed();
    if (*diag) {
      return mlgibbs::cmd_diag(suite, seed.value_or(override_seed.value_or(1)), threads, std::cout, std::cerr);
    }
    mlgibbs::ExperimentConfig config = mlgibbs::load_config(config_path);
    if (override_seed) config.seed = *override_seed;
    mlgibbs::RunOptions options;
    options.threads = threads;
    options.assert_eps = assert_eps;
    options.out_path = out_path;
    if (*calibrate) return mlgibbs::cmd_calibrate(config, std::cout, std::cerr);
    if (*run) return mlgibbs::cmd_run(config, options, std::cout, std::cerr);
    if (epsilons.empty()) epsilons = config.epsilons;
    return mlgibbs::cmd_sweep(config, epsilons, options, std::cout, std::cerr);
  } catch (const mlgibbs::InvalidParameter& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return mlgibbs::kExitConfig;
  }
}
