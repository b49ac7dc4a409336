#ifndef MLGIBBS_DIAGNOSTICS_HPP
#define MLGIBBS_DIAGNOSTICS_HPP

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mlgibbs/calibration.hpp"
#include "mlgibbs/estimator.hpp"
#include "mlgibbs/potentials.hpp"

namespace mlgibbs {

// Multiplier applied to continuous-time bounds when they are checked
// through fine-step Euler proxies.
inline constexpr double kProxySlack = 1.25;

enum class ReferenceMethod { closed_form, quadrature_1d, long_run_oracle };

const char* to_string(ReferenceMethod method);

/// Ground-truth value of pi(f) (or a moment of pi), pi ∝ exp(-2U/sigma^2).
struct ReferenceValue {
  double value = 0;
  ReferenceMethod method = ReferenceMethod::closed_form;
  double error_estimate = 0;
};

/// pi(f) for a one-dimensional model by adaptive Gauss-Kronrod quadrature of
/// f exp(-2U/sigma^2) over a truncated domain.
ReferenceValue reference_moment(const PotentialModel& model, double sigma, const std::function<double(double)>& f,
                                double tolerance = 1e-12);

/// pi(g(|x|)) for a radially symmetric model in any dimension, reduced to a
/// one-dimensional integral in the radius.
ReferenceValue reference_moment_radial(const PotentialModel& model, double sigma,
                                       const std::function<double(double)>& g, double tolerance = 1e-12);

/// pi(|x|^k) for k = 2 or 4: closed form for Gaussian models, quadrature for
/// one-dimensional or radial ones.
std::optional<ReferenceValue> norm_power_moment(const PotentialModel& model, double sigma, int k);

/// Statistical fallback: one long Euler chain with a small step and
/// batch-means standard error. Always labeled long_run_oracle.
ReferenceValue long_run_reference(const PotentialModel& model, const Observable& f, double sigma,
                                  std::uint64_t seed);

struct W1Result {
  double value = 0;
  double error_estimate = 0;
};

/// W1 between the Gibbs measures of two one-dimensional models, computed as
/// the integral of |F_A - F_B| with quadrature CDFs.
W1Result w1_distance_1d_detailed(const PotentialModel& a, const PotentialModel& b, double sigma);
double w1_distance_1d(const PotentialModel& a, const PotentialModel& b, double sigma);

struct MseOptions {
  unsigned threads = 1;
  double epsilon_target = 1;
  /// Test hook: every replicate reuses replicate id 0.
  bool identical_streams = false;
};

struct MseReport {
  std::uint64_t replicates = 0;
  std::uint64_t failed = 0;
  double mean = 0;
  double variance = 0;  // unbiased sample variance
  double bias = 0;
  double rmse = 0;
  double standard_error = 0;
  double mean_cost = 0;
  double epsilon_target = 0;
  double reference = 0;
  std::vector<double> values;  // per successful replicate, in replicate order
};

/// Runs R independent multilevel estimates and summarizes their error
/// against `reference`. Aborts with NumericalOverflow when more than 1% of
/// the replicates overflow.
MseReport run_mse_experiment(const PotentialModel& model, const Observable& f, const LevelSchedule& schedule,
                             double sigma, const VectorXd& x0, const ReferenceValue& reference, std::uint64_t R,
                             std::uint64_t seed, const MseOptions& options = {});

struct StrongErrorPoint {
  double gamma = 0;
  double mean_square_gap = 0;
  double standard_error = 0;
};

struct StrongErrorCurve {
  std::vector<StrongErrorPoint> points;
  double slope = 0;  // least-squares slope of log gap against log gamma
};

/// E|X^gamma_T - X^{gamma/2}_T|^2 of coupled pairs started at x0, per gamma.
StrongErrorCurve strong_error_curve(const PotentialModel& model, double sigma, const VectorXd& x0,
                                    const std::vector<double>& gammas, double horizon, std::uint64_t R,
                                    std::uint64_t seed, unsigned threads = 1);

struct ConfluencePoint {
  double time = 0;
  double mean_square_distance = 0;
  double standard_error = 0;
};

/// E|X^x_t - X^y_t|^2 for Euler paths sharing their noise, recorded every
/// `record_every` steps and at the horizon.
std::vector<ConfluencePoint> confluence_curve(const PotentialModel& model, double sigma, const VectorXd& x,
                                              const VectorXd& y, double gamma, double horizon, std::uint64_t R,
                                              std::uint64_t seed, std::int64_t record_every = 1,
                                              unsigned threads = 1);

struct MomentEnvelopeResult {
  bool passed = false;
  double envelope = 0;    // c_margin (U(x0) + psi_bar)^p
  double sup_moment = 0;  // max over n of the empirical E[U^p(X_n)]
  double max_ratio = 0;   // sup_moment / envelope
  std::vector<double> trace;
};

MomentEnvelopeResult moment_envelope_check(const PotentialModel& model, double sigma, const VectorXd& x0,
                                           double gamma, double p, double horizon, std::uint64_t R,
                                           std::uint64_t seed, double c_margin, double c_r = 1.0,
                                           unsigned threads = 1);

struct LevelVariance {
  int level = 0;
  double variance = 0;
  double T = 0;
  double gamma = 0;
};

struct LevelVarianceProfile {
  std::vector<LevelVariance> levels;
  double total_variance = 0;
  double total_variance_se = 0;
  double sum_level_variance_se = 0;
  Eigen::MatrixXd correlation;  // cross-level sample correlations
  std::uint64_t replicates = 0;
};

LevelVarianceProfile level_variance_profile(const PotentialModel& model, const Observable& f,
                                            const LevelSchedule& schedule, double sigma, const VectorXd& x0,
                                            std::uint64_t R, std::uint64_t seed, unsigned threads = 1);

struct PenaltyProbe {
  double gap = 0;
  double standard_error = 0;
  double bound = 0;
};

/// Shared-noise Euler paths of U + alpha/2|x|^2 from x and U + alpha_tilde/2|x|^2
/// from y; terminal mean square distance against the analytic bound.
PenaltyProbe decreasing_penalization_probe(const PotentialModel& base, double alpha, double alpha_tilde,
                                           double sigma, const VectorXd& x, const VectorXd& y, double gamma,
                                           double horizon, std::uint64_t R, std::uint64_t seed,
                                           unsigned threads = 1);

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Rethrows the
/// first exception by index.
void parallel_for(std::uint64_t count, unsigned threads, const std::function<void(std::uint64_t)>& fn);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mlgibbs

#endif  // MLGIBBS_DIAGNOSTICS_HPP
