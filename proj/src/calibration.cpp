#include "mlgibbs/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mlgibbs/errors.hpp"
#include "mlgibbs/sde.hpp"

namespace mlgibbs {

namespace {

void require(bool ok, const char* message) {
  if (!ok) throw InvalidParameter(message);
}

int clamp_levels(double log2_arg) {
  const double j = std::ceil(std::log2(log2_arg));
  if (!std::isfinite(j)) throw InfeasibleCalibration("number of levels is not finite");
  return std::max(1, static_cast<int>(j));
}

const ConvexityProfile<double>& require_parametric(const ConvexityProfile<double>& profile, const char* who) {
  if (!profile.parametric()) {
    throw InvalidParameter(std::string(who) + ": profile must be ParamH1 or ParamH1H2 (c_lower and r required)");
  }
  profile.validate();
  return profile;
}

void check_gamma0(double gamma0, const RegimeConstants& constants, const char* who) {
  if (!(gamma0 > 0)) throw InvalidParameter(std::string(who) + ": gamma0 must be positive");
  if (gamma0 > constants.gamma_star * (1 + 1e-12)) {
    throw InvalidParameter(std::string(who) + ": gamma0 exceeds the admissible step gamma_star");
  }
}

void check_last_horizon(const std::vector<double>& raw_T, double gamma_last) {
  if (raw_T.back() < gamma_last) {
    throw InfeasibleCalibration("finest-level horizon T_J = " + std::to_string(raw_T.back()) +
                                " is shorter than its step " + std::to_string(gamma_last));
  }
}

}  // namespace

std::int64_t LevelSchedule::window_steps(int j) const {
  return cells_ceil(T[static_cast<std::size_t>(j)], coarse_step(j));
}

std::int64_t LevelSchedule::tau_steps(int j) const { return cells_ceil(tau, coarse_step(j)); }

void LevelSchedule::validate() const {
  require(J >= 0, "schedule: J must be nonnegative");
  require(gamma.size() == static_cast<std::size_t>(J) + 1, "schedule: need J+1 step sizes");
  require(T.size() == static_cast<std::size_t>(J) + 1, "schedule: need J+1 horizons");
  require(gamma[0] > 0, "schedule: gamma0 must be positive");
  require(tau >= 0, "schedule: tau must be nonnegative");
  require(rho > 0 && rho < 1, "schedule: rho must lie in (0,1)");
  for (int j = 0; j <= J; ++j) {
    const auto k = static_cast<std::size_t>(j);
    require(gamma[k] == std::ldexp(gamma[0], -j), "schedule: steps must halve from level to level");
    require(T[k] > 0, "schedule: horizons must be positive");
    require(tau < T[k], "schedule: tau must be smaller than every horizon");
    const double cells = T[k] / coarse_step(j);
    require(std::abs(cells - std::round(cells)) <= 1e-9 * std::max(1.0, cells),
            "schedule: horizon is not a multiple of the coarse step of its level");
  }
}

LevelSchedule make_schedule(double gamma0, int J, const std::vector<double>& raw_T, double tau, double rho) {
  require(gamma0 > 0 && std::isfinite(gamma0), "schedule: gamma0 must be positive");
  require(J >= 0, "schedule: J must be nonnegative");
  require(raw_T.size() == static_cast<std::size_t>(J) + 1, "schedule: need J+1 horizons");
  require(tau >= 0, "schedule: tau must be nonnegative");
  LevelSchedule s;
  s.J = J;
  s.rho = rho;
  s.tau = static_cast<double>(cells_ceil(tau, gamma0)) * gamma0;
  for (int j = 0; j <= J; ++j) s.gamma.push_back(std::ldexp(gamma0, -j));
  for (int j = 0; j <= J; ++j) {
    const double raw = raw_T[static_cast<std::size_t>(j)];
    require(raw > 0 && std::isfinite(raw), "schedule: horizons must be positive and finite");
    const double step = s.coarse_step(j);
    s.T.push_back(static_cast<double>(cells_ceil(raw, step)) * step);
  }
  s.validate();
  return s;
}

LevelSchedule scale_horizons(const LevelSchedule& schedule, double factor) {
  require(factor > 0, "schedule: horizon multiplier must be positive");
  std::vector<double> raw(schedule.T);
  for (double& t : raw) t *= factor;
  return make_schedule(schedule.gamma[0], schedule.J, raw, schedule.tau, schedule.rho);
}

RegimeConstants regime_constants(const ConvexityProfile<double>& profile, int dim, double sigma, double c_r) {
  require_parametric(profile, "regime_constants");
  require(dim > 0, "regime_constants: dimension must be positive");
  require(sigma >= 0, "regime_constants: sigma must be nonnegative");
  require(c_r > 0, "regime_constants: c_r must be positive");
  const double L = profile.L;
  const double c_lo = *profile.c_lower;
  const double r = *profile.r;
  const double d = dim;
  RegimeConstants out;
  out.c_r = c_r;
  if (profile.kind == ConvexityKind::ParamH1) {
    out.gamma_star = 1.0 / (4.0 * L);
    out.psi_bar = (1 + sigma * sigma) * (d * L + std::pow(1 + d * L / c_lo, 1.0 / (1 - r)));
  } else {
    const double top = std::max(*profile.c_upper, L);
    out.gamma_star = (1 - r) / (4.0 * top);
    out.psi_bar = c_r * d * (1 + sigma * sigma) * top / c_lo;
  }
  return out;
}

PenalizedPlan calibrate_penalized(double epsilon, double sigma, int dim, double m4, double L,
                                  const PenalizedOptions& options) {
  require(epsilon > 0, "calibrate_penalized: epsilon must be positive");
  require(sigma > 0, "calibrate_penalized: sigma must be positive");
  require(dim > 0, "calibrate_penalized: dimension must be positive");
  require(m4 > 0, "calibrate_penalized: m4 must be positive");
  require(L > 0, "calibrate_penalized: L must be positive");

  PenalizedPlan plan;
  plan.epsilon = epsilon;
  plan.m4 = m4;
  plan.L = L;
  plan.statement_mode = options.statement_mode;
  plan.alpha = options.alpha.value_or(2 * epsilon / std::sqrt(m4));
  require(plan.alpha > 0, "calibrate_penalized: alpha must be positive");

  const double noise = sigma * sigma * dim;
  double gamma0 = 0;
  double log2_arg = 0;
  if (options.statement_mode) {
    gamma0 = epsilon / (std::sqrt(m4) * L * L);
    log2_arg = noise * std::sqrt(m4) / (epsilon * epsilon);
  } else {
    const double L_alpha = L + plan.alpha;
    gamma0 = plan.alpha / (2 * L_alpha * L_alpha);
    log2_arg = noise / (plan.alpha * epsilon);
  }
  if (gamma0 >= 1) {
    throw InfeasibleCalibration("calibrate_penalized: gamma0 = " + std::to_string(gamma0) + " is not below 1");
  }

  double raw_J = std::ceil(2 * std::log2(log2_arg));
  if (!std::isfinite(raw_J)) throw InfeasibleCalibration("calibrate_penalized: number of levels is not finite");
  int J = static_cast<int>(raw_J);
  if (J < 1) {
    plan.warnings.push_back("epsilon too large for a multilevel correction; number of levels clamped to 1");
    J = 1;
  }

  const double log_inv_gamma = std::log(1 / gamma0);
  const double J2 = static_cast<double>(J) * J;
  std::vector<double> raw_T;
  for (int j = 0; j <= J; ++j) {
    if (options.statement_mode) {
      raw_T.push_back(noise * log_inv_gamma * m4 * std::pow(epsilon, -5) * J2 * std::ldexp(1.0, -J));
    } else {
      raw_T.push_back(noise * log_inv_gamma / (plan.alpha * plan.alpha * epsilon * epsilon) * J2 *
                      std::ldexp(1.0, -j));
    }
  }
  check_last_horizon(raw_T, std::ldexp(gamma0, -J));
  if (raw_T.back() < gamma0) {
    throw InfeasibleCalibration("calibrate_penalized: T_J is shorter than gamma0");
  }
  plan.schedule = make_schedule(gamma0, J, raw_T, options.tau, 0.5);
  plan.predicted_cost = complexity_bound_penalized(epsilon, sigma, dim, m4, L, gamma0);
  return plan;
}

double complexity_bound_penalized(double epsilon, double sigma, int dim, double m4, double L, double gamma0) {
  require(epsilon > 0 && sigma > 0 && dim > 0 && m4 > 0 && L > 0 && gamma0 > 0,
          "complexity_bound_penalized: all arguments must be positive");
  require(gamma0 < 1, "complexity_bound_penalized: gamma0 must be below 1");
  const double noise = sigma * sigma * dim;
  // The rounded-up logarithm is at least one level.
  const double levels = std::max(1.0, std::ceil(std::log2(0.5 * noise * std::sqrt(m4) * std::pow(epsilon, -3))));
  return std::log(1 / gamma0) / 3 * std::pow(m4, 1.5) * L * L * noise * std::pow(epsilon, -5) * levels * levels *
         levels;
}

LevelSchedule calibrate_weak_i(double epsilon, double delta, double gamma0, const RegimeConstants& constants,
                               const ConvexityProfile<double>& profile) {
  require_parametric(profile, "calibrate_weak_i");
  require(epsilon > 0, "calibrate_weak_i: epsilon must be positive");
  require(delta > 0 && delta <= 0.25, "calibrate_weak_i: delta must lie in (0, 1/4]");
  check_gamma0(gamma0, constants, "calibrate_weak_i");

  const double L = profile.L;
  const double c = *profile.c_lower;
  const double r = *profile.r;
  const double psi = constants.psi_bar;

  const double curvature = std::min(std::pow(c, 2 / (1 - delta)), c);
  const int J = clamp_levels(L / curvature * std::pow(psi, 1 + (3 + delta) * r) * gamma0 / (epsilon * epsilon));
  const double T0 = std::max(std::pow(c, -0.75), std::pow(c, -2.5 - delta)) *
                    std::pow(psi, 1.5 + (4.5 + delta) * r) / (epsilon * epsilon);

  std::vector<double> raw_T;
  for (int j = 0; j <= J; ++j) raw_T.push_back(T0 * std::pow(2.0, -0.5 * j));
  check_last_horizon(raw_T, std::ldexp(gamma0, -J));
  return make_schedule(gamma0, J, raw_T, 0.0, 0.5);
}

LevelSchedule calibrate_weak_ii(double epsilon, double delta, double rho, double gamma0,
                                const RegimeConstants& constants, const ConvexityProfile<double>& profile) {
  require_parametric(profile, "calibrate_weak_ii");
  require(epsilon > 0, "calibrate_weak_ii: epsilon must be positive");
  require(delta > 0 && delta <= 0.25, "calibrate_weak_ii: delta must lie in (0, 1/4]");
  require(rho > 0 && rho < 1, "calibrate_weak_ii: rho must lie in (0,1)");
  check_gamma0(gamma0, constants, "calibrate_weak_ii");

  const double L = profile.L;
  const double c = *profile.c_lower;
  const double r = *profile.r;
  const double psi = constants.psi_bar;

  const int J = clamp_levels(std::pow(c, -2 / (1 - delta)) * L * L * L * std::pow(psi, 1 + 2 * r / (1 - delta)) *
                             gamma0 / epsilon);
  const double c_factor =
      std::max(std::pow(c, -std::min(1.25 - rho, 3 * rho) + delta), std::pow(c, -2.5 - delta));
  const double T0 =
      std::pow(L, rho / 2) * c_factor * std::pow(psi, 1 + (4 - 2 * rho + delta) * r) / (epsilon * epsilon);

  std::vector<double> raw_T;
  for (int j = 0; j <= J; ++j) raw_T.push_back(T0 * std::pow(2.0, -(1 - rho) * j));
  check_last_horizon(raw_T, std::ldexp(gamma0, -J));
  return make_schedule(gamma0, J, raw_T, 0.0, rho);
}

double complexity_bound_weak(WeakVariant variant, double epsilon, double delta, double rho, double gamma0,
                             const RegimeConstants& constants, const ConvexityProfile<double>& profile) {
  require_parametric(profile, "complexity_bound_weak");
  require(epsilon > 0, "complexity_bound_weak: epsilon must be positive");
  require(delta > 0 && delta <= 0.25, "complexity_bound_weak: delta must lie in (0, 1/4]");
  check_gamma0(gamma0, constants, "complexity_bound_weak");
  const double L = profile.L;
  const double c = *profile.c_lower;
  const double r = *profile.r;
  const double psi = constants.psi_bar;
  if (variant == WeakVariant::I) {
    return std::sqrt(L) * std::min(std::pow(c, -1.25), std::pow(c, -3.5 - delta)) *
           std::pow(psi, 1.5 + (4.5 + delta) * r) * std::pow(epsilon, -3);
  }
  require(rho > 0 && rho < 1, "complexity_bound_weak: rho must lie in (0,1)");
  return std::pow(gamma0, -rho) * std::pow(L, 2 * rho) *
         std::max(std::pow(c, std::min(1.25, 2 * rho) + delta), std::pow(c, -2.5 - delta)) *
         std::pow(psi, 1 + rho / 2 + (4 - rho + delta) * r) * std::pow(epsilon, -2 - rho);
}

PenalizationBias penalization_bias_bounds(double alpha, double m4) {
  require(alpha >= 0, "penalization_bias_bounds: alpha must be nonnegative");
  require(m4 > 0, "penalization_bias_bounds: m4 must be positive");
  return {alpha * alpha * m4 / 8, alpha * std::sqrt(m4) / (2 * std::sqrt(2.0))};
}

double decreasing_penalization_gap(double alpha, double alpha_tilde, int dim, double sigma, double t,
                                   double xy_dist2) {
  require(alpha_tilde > 0, "decreasing_penalization_gap: alpha_tilde must be positive");
  require(alpha > alpha_tilde, "decreasing_penalization_gap: alpha must exceed alpha_tilde");
  require(dim > 0 && sigma >= 0 && t >= 0 && xy_dist2 >= 0, "decreasing_penalization_gap: invalid argument");
  return std::exp(-2 * alpha * t) * xy_dist2 + (alpha - alpha_tilde) * dim * sigma * sigma / alpha_tilde;
}

}  // namespace mlgibbs
