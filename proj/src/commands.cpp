#include "mlgibbs/commands.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include "mlgibbs/estimator.hpp"
#include "mlgibbs/sde.hpp"

namespace mlgibbs {

using nlohmann::json;

namespace {

constexpr double kDefaultDeltaWeakI = 0.25;
constexpr double kDefaultDeltaWeakII = 0.1;
constexpr double kDefaultRho = 0.5;

double step_limit(const PotentialModel& model, double sigma, double c_r) {
  if (model.profile().parametric()) {
    return regime_constants(model.profile(), static_cast<int>(model.dim()), sigma, c_r).gamma_star;
  }
  return 1.0 / (4.0 * model.profile().L);
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InfeasibleCalibration& e) {
    err << "infeasible calibration: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const OracleFailure& e) {
    err << "reference oracle failed: " << e.what() << '\n';
    return kExitOracle;
  } catch (const InvalidParameter& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalOverflow& e) {
    err << "run aborted: " << e.what() << '\n';
    return kExitDiagFail;
  }
}

MseReport run_plan(const ExperimentConfig& config, const ExperimentPlan& plan, const ReferenceValue& reference,
                   unsigned threads) {
  if (config.replicates < 2) throw ConfigError("replicates", "runs need at least 2 replicates");
  MseOptions options;
  options.threads = threads;
  options.epsilon_target = config.epsilon;
  const VectorXd x0 = plan.base.minimizer();
  return run_mse_experiment(plan.simulated, config.f.function(), plan.schedule, config.sigma, x0, reference,
                            config.replicates, config.seed, options);
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw ConfigError("--out", "cannot write '" + path + "'");
  file << text;
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

ExperimentPlan build_plan(const ExperimentConfig& config) {
  ExperimentPlan plan(build_potential(config.potential));
  plan.method = config.method;
  plan.statement_mode = config.statement_mode;
  plan.safety_T_multiplier = config.safety_T_multiplier;
  const PotentialModel& base = plan.base;
  const int dim = static_cast<int>(base.dim());
  const double c_r = config.c_r.value_or(1.0);
  const double tau = config.tau.value_or(0.0);

  switch (config.method) {
    case Method::penalized: {
      auto m4 = norm_power_moment(base, config.sigma, 4);
      if (!m4) {
        m4 = long_run_reference(base, [](const VectorXd& x) { return x.squaredNorm() * x.squaredNorm(); },
                                config.sigma, config.seed);
      }
      PenalizedOptions options;
      options.statement_mode = config.statement_mode;
      options.tau = tau;
      options.alpha = config.potential.penalty_alpha;
      PenalizedPlan pen = calibrate_penalized(config.epsilon, config.sigma, dim, m4->value, base.profile().L, options);
      pen.m4_source = to_string(m4->method);
      plan.alpha = pen.alpha;
      plan.m4 = pen.m4;
      plan.m4_source = pen.m4_source;
      plan.schedule = pen.schedule;
      plan.predicted_cost = pen.predicted_cost;
      plan.warnings = pen.warnings;
      plan.simulated = penalize(base, pen.alpha);
      break;
    }
    case Method::weak_i:
    case Method::weak_ii: {
      if (!base.profile().parametric()) {
        throw ConfigError("c_lower", "method needs a parametric weak-convexity profile");
      }
      const RegimeConstants constants = regime_constants(base.profile(), dim, config.sigma, c_r);
      const double gamma0 = config.gamma0.value_or(constants.gamma_star);
      const double rho = config.rho.value_or(kDefaultRho);
      plan.constants = constants;
      if (config.method == Method::weak_i) {
        if (config.rho && *config.rho != 0.5) throw ConfigError("rho", "method weak_i fixes rho = 1/2");
        const double delta = config.delta.value_or(kDefaultDeltaWeakI);
        plan.delta = delta;
        plan.schedule = calibrate_weak_i(config.epsilon, delta, gamma0, constants, base.profile());
        plan.predicted_cost =
            complexity_bound_weak(WeakVariant::I, config.epsilon, delta, 0.5, gamma0, constants, base.profile());
      } else {
        const double delta = config.delta.value_or(kDefaultDeltaWeakII);
        plan.delta = delta;
        plan.schedule = calibrate_weak_ii(config.epsilon, delta, rho, gamma0, constants, base.profile());
        plan.predicted_cost =
            complexity_bound_weak(WeakVariant::II, config.epsilon, delta, rho, gamma0, constants, base.profile());
      }
      if (tau > 0) plan.schedule = make_schedule(gamma0, plan.schedule.J, plan.schedule.T, tau, plan.schedule.rho);
      break;
    }
    case Method::single_level: {
      // Plain Langevin occupation average: bias O(gamma) and variance O(1/T)
      // both matched to epsilon^2.
      const double gamma0 = config.gamma0.value_or(std::min(step_limit(base, config.sigma, c_r), config.epsilon));
      const double T0 = dim * (1 + config.sigma * config.sigma) / (config.epsilon * config.epsilon);
      plan.schedule = make_schedule(gamma0, 0, {T0}, tau, kDefaultRho);
      plan.predicted_cost = static_cast<double>(cost_of(plan.schedule));
      break;
    }
  }
  if (config.safety_T_multiplier != 1) plan.schedule = scale_horizons(plan.schedule, config.safety_T_multiplier);
  if (config.method == Method::single_level) plan.predicted_cost = static_cast<double>(cost_of(plan.schedule));
  return plan;
}

json plan_to_json(const ExperimentPlan& plan) {
  json j;
  j["method"] = to_string(plan.method);
  j["potential"] = plan.base.name();
  j["dim"] = plan.base.dim();
  j["alpha"] = plan.alpha ? json(*plan.alpha) : json(nullptr);
  j["J"] = plan.schedule.J;
  j["gamma"] = plan.schedule.gamma;
  j["T"] = plan.schedule.T;
  j["tau"] = plan.schedule.tau;
  j["rho"] = plan.schedule.rho;
  j["predicted_cost"] = plan.predicted_cost;
  j["scheduled_cost"] = cost_of(plan.schedule);
  j["statement_mode"] = plan.statement_mode;
  j["safety_T_multiplier"] = plan.safety_T_multiplier;
  if (plan.m4) {
    j["m4"] = *plan.m4;
    j["m4_source"] = plan.m4_source;
  }
  if (plan.constants) {
    j["gamma_star"] = plan.constants->gamma_star;
    j["psi_bar"] = plan.constants->psi_bar;
    j["c_r"] = plan.constants->c_r;
  }
  if (plan.delta) j["delta"] = *plan.delta;
  j["warnings"] = plan.warnings;
  return j;
}

ReferenceValue reference_for(const ExperimentConfig& config, const PotentialModel& base) {
  const ObservableSpec& f = config.f;
  using Kind = ObservableSpec::Kind;
  const double sigma = config.sigma;
  switch (f.kind) {
    case Kind::constant:
      return {f.constant, ReferenceMethod::closed_form, 0.0};
    case Kind::coord:
      if (base.gaussian()) return {base.gaussian()->mean(f.index), ReferenceMethod::closed_form, 0.0};
      if (base.dim() == 1) return reference_moment(base, sigma, [](double x) { return x; });
      if (base.radial()) return {0.0, ReferenceMethod::closed_form, 0.0};
      break;
    case Kind::norm2:
      if (auto m = norm_power_moment(base, sigma, 2)) return *m;
      break;
    case Kind::norm:
      if (base.dim() == 1) return reference_moment(base, sigma, [](double x) { return std::abs(x); });
      if (base.radial()) return reference_moment_radial(base, sigma, [](double r) { return r; });
      break;
  }
  return long_run_reference(base, f.function(), sigma, config.seed);
}

const std::string& csv_header() {
  static const std::string header =
      "method,potential,dim,sigma,epsilon,J,gamma0,T0,tau,R,seed,mean,bias,variance,rmse,mean_cost";
  return header;
}

std::string csv_row(const ExperimentConfig& config, const ExperimentPlan& plan, const MseReport& report) {
  std::ostringstream row;
  row << to_string(config.method) << ',' << config.potential.name << ',' << plan.base.dim() << ','
      << format_number(config.sigma) << ',' << format_number(config.epsilon) << ',' << plan.schedule.J << ','
      << format_number(plan.schedule.gamma[0]) << ',' << format_number(plan.schedule.T[0]) << ','
      << format_number(plan.schedule.tau) << ',' << report.replicates << ',' << config.seed << ','
      << format_number(report.mean) << ',' << format_number(report.bias) << ',' << format_number(report.variance)
      << ',' << format_number(report.rmse) << ',' << format_number(report.mean_cost);
  return row.str();
}

json report_to_json(const ExperimentConfig& config, const ExperimentPlan& plan, const MseReport& report) {
  json j = plan_to_json(plan);
  j["epsilon"] = config.epsilon;
  j["sigma"] = config.sigma;
  j["seed"] = config.seed;
  j["R"] = report.replicates;
  j["failed"] = report.failed;
  j["mean"] = report.mean;
  j["bias"] = report.bias;
  j["variance"] = report.variance;
  j["rmse"] = report.rmse;
  j["standard_error"] = report.standard_error;
  j["mean_cost"] = report.mean_cost;
  j["reference"] = report.reference;
  return j;
}

int cmd_calibrate(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentPlan plan = build_plan(config);
    for (const auto& w : plan.warnings) err << "warning: " << w << '\n';
    out << plan_to_json(plan).dump(2) << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_run(const ExperimentConfig& config, const RunOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentPlan plan = build_plan(config);
    for (const auto& w : plan.warnings) err << "warning: " << w << '\n';
    const ReferenceValue reference = reference_for(config, plan.base);
    const MseReport report = run_plan(config, plan, reference, options.threads);
    const std::string text = csv_header() + '\n' + csv_row(config, plan, report) + '\n';
    out << text;
    if (options.out_path) write_file(*options.out_path, text);
    if (options.assert_eps && report.rmse > config.epsilon * *options.assert_eps) {
      err << "rmse " << format_number(report.rmse) << " exceeds epsilon * tolerance = "
          << format_number(config.epsilon * *options.assert_eps) << '\n';
      return static_cast<int>(kExitEpsAssert);
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_sweep(const ExperimentConfig& config, const std::vector<double>& epsilons, const RunOptions& options,
              std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (epsilons.size() < 3) throw ConfigError("epsilons", "a sweep needs at least three values");
    std::string text = csv_header() + '\n';
    std::vector<double> eps, costs;
    const PotentialModel base = build_potential(config.potential);
    const ReferenceValue reference = reference_for(config, base);
    for (double e : epsilons) {
      ExperimentConfig point = config;
      point.epsilon = e;
      const ExperimentPlan plan = build_plan(point);
      const MseReport report = run_plan(point, plan, reference, options.threads);
      text += csv_row(point, plan, report) + '\n';
      eps.push_back(e);
      costs.push_back(report.mean_cost);
    }
    // A grid of one repeated epsilon has no slope.
    const bool distinct = std::any_of(eps.begin(), eps.end(), [&](double e) { return e != eps.front(); });
    const double slope = distinct ? loglog_slope(eps, costs) : std::numeric_limits<double>::quiet_NaN();
    text += "# cost_slope," + format_number(slope) + '\n';
    out << text;
    if (options.out_path) write_file(*options.out_path, text);
    return static_cast<int>(kExitOk);
  });
}

const std::vector<std::string>& diag_suites() {
  static const std::vector<std::string> suites = {"strong_error",   "confluence",        "moments",
                                                  "level_variance", "penalization_bias", "decreasing_penalty"};
  return suites;
}

DiagOutcome run_diag_suite(const std::string& suite, std::uint64_t seed, unsigned threads) {
  const PotentialModel power = make_power<double>(1, 0.75);
  const VectorXd origin = VectorXd::Zero(1);
  std::ostringstream metric;
  DiagOutcome outcome;

  if (suite == "strong_error") {
    std::vector<double> gammas;
    for (int k = 4; k <= 9; ++k) gammas.push_back(std::ldexp(1.0, -k));
    const StrongErrorCurve curve = strong_error_curve(power, 1.0, origin, gammas, 50.0, 2000, seed, threads);
    outcome.passed = curve.slope >= 0.7 && curve.slope <= 1.3;
    metric << "strong-error log-log slope " << format_number(curve.slope) << " (required in [0.7, 1.3])";
  } else if (suite == "confluence") {
    const VectorXd x = VectorXd::Constant(1, 3.0), y = VectorXd::Constant(1, -3.0);
    const auto curve = confluence_curve(power, 1.0, x, y, 0.05, 50.0, 500, seed, 100, threads);
    const double limit = 0.1 * (x - y).squaredNorm();
    outcome.passed = curve.back().mean_square_distance <= limit;
    metric << "terminal mean square distance " << format_number(curve.back().mean_square_distance)
           << " (required <= " << format_number(limit) << ")";
  } else if (suite == "moments") {
    const MomentEnvelopeResult r =
        moment_envelope_check(power, 1.0, origin, 1.0 / 9.0, 2.0, 100.0, 200, seed, 8.0, 1.0, threads);
    outcome.passed = r.passed;
    metric << "sup E[U^2] " << format_number(r.sup_moment) << " vs envelope " << format_number(r.envelope);
  } else if (suite == "level_variance") {
    const RegimeConstants c = regime_constants(power.profile(), 1, 1.0);
    const LevelSchedule schedule = calibrate_weak_i(0.4, 0.25, c.gamma_star, c, power.profile());
    const std::uint64_t R = 2000;
    const LevelVarianceProfile p = level_variance_profile(
        power, [](const VectorXd& x) { return x(0); }, schedule, 1.0, origin, R, seed, threads);
    const double band = 3.0 / std::sqrt(static_cast<double>(R));
    double worst_corr = 0;
    for (Eigen::Index a = 0; a < p.correlation.rows(); ++a) {
      for (Eigen::Index b = a + 1; b < p.correlation.cols(); ++b) {
        worst_corr = std::max(worst_corr, std::abs(p.correlation(a, b)));
      }
    }
    double worst_ratio = 0;
    for (std::size_t j = 1; j < p.levels.size(); ++j) {
      worst_ratio = std::max(worst_ratio, p.levels[j].variance / p.levels[j - 1].variance);
    }
    outcome.passed = worst_corr <= band && worst_ratio <= 2.0;
    metric << "max |cross-level correlation| " << format_number(worst_corr) << " (band " << format_number(band)
           << "), max Var_j/Var_{j-1} " << format_number(worst_ratio) << " (required <= 2)";
  } else if (suite == "penalization_bias") {
    const double m4 = reference_moment(power, 1.0, [](double x) { return x * x * x * x; }).value;
    outcome.passed = true;
    for (double alpha : {0.05, 0.1, 0.2}) {
      const double w1 = w1_distance_1d(power, penalize(power, alpha), 1.0);
      const double bound = penalization_bias_bounds(alpha, m4).w1;
      outcome.passed = outcome.passed && w1 < bound;
      metric << "alpha=" << format_number(alpha) << ": W1 " << format_number(w1) << " < " << format_number(bound)
             << "; ";
    }
  } else if (suite == "decreasing_penalty") {
    const PotentialModel quad = make_quadratic<double>(1, 1.0);
    const VectorXd one = VectorXd::Constant(1, 1.0);
    const PenaltyProbe probe = decreasing_penalization_probe(quad, 0.4, 0.2, 1.0, one, one, 0.005, 5.0, 500, seed,
                                                             threads);
    outcome.passed = probe.gap <= kProxySlack * probe.bound;
    metric << "empirical gap " << format_number(probe.gap) << " vs " << format_number(kProxySlack) << " x bound "
           << format_number(probe.bound);
  } else {
    throw ConfigError("suite", "unknown diagnostic suite '" + suite + "'");
  }
  outcome.metric = metric.str();
  if (outcome.metric.size() >= 2 && outcome.metric.compare(outcome.metric.size() - 2, 2, "; ") == 0) {
    outcome.metric.resize(outcome.metric.size() - 2);
  }
  return outcome;
}

int cmd_diag(const std::string& suite, std::uint64_t seed, unsigned threads, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const DiagOutcome outcome = run_diag_suite(suite, seed, threads);
    out << suite << ": " << (outcome.passed ? "PASS" : "FAIL") << " - " << outcome.metric << '\n';
    return static_cast<int>(outcome.passed ? kExitOk : kExitDiagFail);
  });
}

}  // namespace mlgibbs
