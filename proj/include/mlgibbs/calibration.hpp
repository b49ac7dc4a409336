#ifndef MLGIBBS_CALIBRATION_HPP
#define MLGIBBS_CALIBRATION_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mlgibbs/potentials.hpp"

namespace mlgibbs {

/// Dyadic step sizes and per-level horizons of a multilevel estimator.
///
/// Level 0 runs a single path with step gamma[0] over [tau, T[0]); level j
/// couples steps gamma[j-1] and gamma[j] = gamma[j-1]/2 over [tau, T[j]).
/// Horizons and tau are stored already rounded up to the coarse grid of
/// their level, so window_steps(j) is an exact integer count.
struct LevelSchedule {
  int J = 0;
  std::vector<double> gamma;
  std::vector<double> T;
  double tau = 0;
  double rho = 0.5;

  /// Step of the coarse path at level j: gamma[0] for j = 0, gamma[j-1] otherwise.
  double coarse_step(int j) const { return j == 0 ? gamma[0] : gamma[static_cast<std::size_t>(j - 1)]; }
  /// T[j] / coarse_step(j).
  std::int64_t window_steps(int j) const;
  /// tau / coarse_step(j).
  std::int64_t tau_steps(int j) const;

  /// Throws InvalidParameter if any structural invariant is violated.
  void validate() const;
};

/// Builds a schedule with gamma_j = gamma0 2^-j, rounding tau and every raw
/// horizon up to the coarse grid of its level.
LevelSchedule make_schedule(double gamma0, int J, const std::vector<double>& raw_T, double tau = 0.0,
                            double rho = 0.5);

/// Same schedule with every horizon multiplied by `factor` (then re-rounded).
LevelSchedule scale_horizons(const LevelSchedule& schedule, double factor);

/// Maximal admissible first step and moment envelope of the parametric
/// weak-convexity regimes.
struct RegimeConstants {
  double gamma_star = 0;
  double psi_bar = 0;
  double c_r = 1;
};

RegimeConstants regime_constants(const ConvexityProfile<double>& profile, int dim, double sigma, double c_r = 1.0);

struct PenalizedOptions {
  /// Reproduce the theorem display verbatim (epsilon^-5 horizons, 2^-J decay,
  /// gamma0 without the penalty increment) instead of the proof formulas.
  bool statement_mode = false;
  double tau = 0.0;
  /// Replaces the default penalty 2 epsilon / sqrt(m4).
  std::optional<double> alpha;
};

struct PenalizedPlan {
  double alpha = 0;
  double L = 0;
  double epsilon = 0;
  LevelSchedule schedule;
  double m4 = 0;
  std::string m4_source = "supplied";
  double predicted_cost = 0;
  bool statement_mode = false;
  std::vector<std::string> warnings;
};

PenalizedPlan calibrate_penalized(double epsilon, double sigma, int dim, double m4, double L,
                                  const PenalizedOptions& options = {});

/// Complexity bound of the penalized multilevel method. Uses log(1/gamma0)
/// for the leading logarithm.
double complexity_bound_penalized(double epsilon, double sigma, int dim, double m4, double L, double gamma0);

/// Schedule for C^2 potentials under the parametric lower bound (rho = 1/2).
LevelSchedule calibrate_weak_i(double epsilon, double delta, double gamma0, const RegimeConstants& constants,
                               const ConvexityProfile<double>& profile);

/// Schedule for C^3 potentials; horizons decay as 2^{-(1-rho) j}.
LevelSchedule calibrate_weak_ii(double epsilon, double delta, double rho, double gamma0,
                                const RegimeConstants& constants, const ConvexityProfile<double>& profile);

enum class WeakVariant { I, II };

double complexity_bound_weak(WeakVariant variant, double epsilon, double delta, double rho, double gamma0,
                             const RegimeConstants& constants, const ConvexityProfile<double>& profile);

struct PenalizationBias {
  double kl = 0;
  double w1 = 0;
};

/// KL and W1 bounds between the Gibbs measure and its penalized version.
PenalizationBias penalization_bias_bounds(double alpha, double m4);

/// Bound on E|X^{x,alpha}_t - X^{y,alpha_tilde}_t|^2 for two penalty levels
/// alpha > alpha_tilde driven by the same noise.
double decreasing_penalization_gap(double alpha, double alpha_tilde, int dim, double sigma, double t,
                                   double xy_dist2);

}  // namespace mlgibbs

#endif  // MLGIBBS_CALIBRATION_HPP
