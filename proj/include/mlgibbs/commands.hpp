#ifndef MLGIBBS_COMMANDS_HPP
#define MLGIBBS_COMMANDS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mlgibbs/calibration.hpp"
#include "mlgibbs/config.hpp"
#include "mlgibbs/diagnostics.hpp"

namespace mlgibbs {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitDiagFail = 1,
  kExitConfig = 2,
  kExitInfeasible = 3,
  kExitEpsAssert = 4,
  kExitOracle = 5,
};

/// Everything needed to run one configuration: the simulated potential
/// (penalized for the penalized method), the schedule, and provenance.
struct ExperimentPlan {
  explicit ExperimentPlan(PotentialModel model) : base(model), simulated(std::move(model)) {}

  Method method = Method::penalized;
  PotentialModel base;
  PotentialModel simulated;
  LevelSchedule schedule;
  std::optional<double> alpha;
  std::optional<double> m4;
  std::string m4_source;
  std::optional<RegimeConstants> constants;
  std::optional<double> delta;
  double predicted_cost = 0;
  bool statement_mode = false;
  double safety_T_multiplier = 1;
  std::vector<std::string> warnings;
};

ExperimentPlan build_plan(const ExperimentConfig& config);
nlohmann::json plan_to_json(const ExperimentPlan& plan);

/// pi(f) under the unpenalized target, choosing closed form, quadrature or
/// the long-run oracle in that order.
ReferenceValue reference_for(const ExperimentConfig& config, const PotentialModel& base);

/// Shortest round-trip decimal representation; stable across runs.
std::string format_number(double value);

const std::string& csv_header();
std::string csv_row(const ExperimentConfig& config, const ExperimentPlan& plan, const MseReport& report);

nlohmann::json report_to_json(const ExperimentConfig& config, const ExperimentPlan& plan, const MseReport& report);

struct RunOptions {
  unsigned threads = 1;
  std::optional<double> assert_eps;
  std::optional<std::string> out_path;
};

int cmd_calibrate(const ExperimentConfig& config, std::ostream& out, std::ostream& err);
int cmd_run(const ExperimentConfig& config, const RunOptions& options, std::ostream& out, std::ostream& err);
int cmd_sweep(const ExperimentConfig& config, const std::vector<double>& epsilons, const RunOptions& options,
              std::ostream& out, std::ostream& err);

struct DiagOutcome {
  bool passed = false;
  std::string metric;  // one line describing the checked quantity
};

const std::vector<std::string>& diag_suites();

/// Runs a named property suite with its pinned constants. Throws ConfigError
/// for an unknown suite.
DiagOutcome run_diag_suite(const std::string& suite, std::uint64_t seed, unsigned threads = 1);

int cmd_diag(const std::string& suite, std::uint64_t seed, unsigned threads, std::ostream& out, std::ostream& err);

}  // namespace mlgibbs

#endif  // MLGIBBS_COMMANDS_HPP
