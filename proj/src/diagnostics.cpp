#include "mlgibbs/diagnostics.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "mlgibbs/errors.hpp"
#include "mlgibbs/noise.hpp"
#include "mlgibbs/sde.hpp"

namespace mlgibbs {

namespace {

using boost::math::quadrature::gauss;
using boost::math::quadrature::gauss_kronrod;

// Integrand magnitudes below this fraction of the weight peak are dropped.
constexpr double kTruncationLog = -41.4465316739;  // log(1e-18)
constexpr double kMaxReach = 1e8;

using LogWeight = std::function<double(double)>;

double find_edge(const LogWeight& log_integrand, double center, double direction) {
  double h = 1.0;
  while (log_integrand(center + direction * h) > kTruncationLog) {
    h *= 2;
    if (h > kMaxReach) throw OracleFailure("quadrature: integrand does not decay; cannot truncate the domain");
  }
  return center + direction * h;
}

struct Integral {
  double value;
  double error;
};

Integral adaptive(const std::function<double(double)>& fn, double a, double b, double tolerance) {
  double error = 0;
  double l1 = 0;
  const double value = gauss_kronrod<double, 61>::integrate(fn, a, b, 20, tolerance, &error, &l1);
  if (!std::isfinite(value) || !std::isfinite(error) || error > 1e-6 * std::max(l1, 1e-300)) {
    throw OracleFailure("quadrature: adaptive Gauss-Kronrod did not converge");
  }
  return {value, error};
}

Integral adaptive_split(const std::function<double(double)>& fn, double lo, double mid, double hi, double tolerance) {
  Integral left = adaptive(fn, lo, mid, tolerance);
  Integral right = adaptive(fn, mid, hi, tolerance);
  return {left.value + right.value, left.error + right.error};
}

ReferenceValue ratio(const Integral& num, const Integral& den, ReferenceMethod method) {
  if (!(den.value > 0)) throw OracleFailure("quadrature: normalizing constant is not positive");
  ReferenceValue out;
  out.method = method;
  out.value = num.value / den.value;
  out.error_estimate = num.error / den.value + std::abs(num.value) * den.error / (den.value * den.value);
  return out;
}

double log_magnitude(double v) { return std::log(std::max(1.0, std::abs(v))); }

void require(bool ok, const char* message) {
  if (!ok) throw InvalidParameter(message);
}

// Per-panel mass of exp(log_w) with a fixed 10-point Gauss-Legendre rule.
double panel_mass(const LogWeight& log_w, double a, double b) {
  return gauss<double, 10>::integrate([&](double t) { return std::exp(log_w(t)); }, a, b);
}

double cdf_gap_integral(const LogWeight& la, const LogWeight& lb, double lo, double hi, int panels) {
  const double h = (hi - lo) / panels;
  std::vector<double> mass_a(static_cast<std::size_t>(panels)), mass_b(static_cast<std::size_t>(panels));
  double za = 0, zb = 0;
  for (int i = 0; i < panels; ++i) {
    const double x = lo + i * h;
    mass_a[static_cast<std::size_t>(i)] = panel_mass(la, x, x + h);
    mass_b[static_cast<std::size_t>(i)] = panel_mass(lb, x, x + h);
    za += mass_a[static_cast<std::size_t>(i)];
    zb += mass_b[static_cast<std::size_t>(i)];
  }
  if (!(za > 0) || !(zb > 0)) throw OracleFailure("w1_distance_1d: normalizing constant is not positive");
  double cum_a = 0, cum_b = 0, total = 0;
  for (int i = 0; i < panels; ++i) {
    const double x = lo + i * h;
    auto gap = [&](double t) {
      const double fa = (cum_a + panel_mass(la, x, t)) / za;
      const double fb = (cum_b + panel_mass(lb, x, t)) / zb;
      return std::abs(fa - fb);
    };
    total += gauss<double, 10>::integrate(gap, x, x + h);
    cum_a += mass_a[static_cast<std::size_t>(i)];
    cum_b += mass_b[static_cast<std::size_t>(i)];
  }
  return total;
}

LogWeight gibbs_log_weight(const PotentialModel& model, double sigma) {
  const double floor_value = model.value(model.minimizer());
  const double scale = 2 / (sigma * sigma);
  return [&model, floor_value, scale](double x) {
    VectorXd point(1);
    point(0) = x;
    return -scale * (model.value(point) - floor_value);
  };
}

struct SampleStats {
  double mean = 0;
  double variance = 0;  // unbiased
  double variance_se = 0;
};

SampleStats sample_stats(const std::vector<double>& v) {
  SampleStats s;
  const double n = static_cast<double>(v.size());
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= n;
  if (v.size() < 2) return s;
  double m2 = 0, m4 = 0;
  for (double x : v) {
    const double d = x - s.mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  s.variance = m2 / (n - 1);
  const double pop2 = m2 / n;
  s.variance_se = std::sqrt(std::max(0.0, (m4 / n - pop2 * pop2) / n));
  return s;
}

double regime_step_limit(const PotentialModel& model, double sigma) {
  if (model.profile().parametric()) {
    return regime_constants(model.profile(), static_cast<int>(model.dim()), sigma).gamma_star;
  }
  return 1.0 / (4.0 * model.profile().L);
}

}  // namespace

const char* to_string(ReferenceMethod method) {
  switch (method) {
    case ReferenceMethod::closed_form: return "closed_form";
    case ReferenceMethod::quadrature_1d: return "quadrature_1d";
    case ReferenceMethod::long_run_oracle: return "long_run_oracle";
  }
  return "unknown";
}

void parallel_for(std::uint64_t count, unsigned threads, const std::function<void(std::uint64_t)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::uint64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::mutex guard;
  std::uint64_t failed_index = std::numeric_limits<std::uint64_t>::max();
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::uint64_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(guard);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  const unsigned n = static_cast<unsigned>(std::min<std::uint64_t>(threads, count));
  std::vector<std::thread> pool;
  pool.reserve(n);
  for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "loglog_slope: need at least two matching points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0 && y[i] > 0, "loglog_slope: values must be positive");
    sx += std::log(x[i]);
    sy += std::log(y[i]);
  }
  const double mx = sx / n, my = sy / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  require(sxx > 0, "loglog_slope: abscissae must not all coincide");
  return sxy / sxx;
}

ReferenceValue reference_moment(const PotentialModel& model, double sigma, const std::function<double(double)>& f,
                                double tolerance) {
  require(model.dim() == 1, "reference_moment: model must be one-dimensional");
  require(sigma > 0, "reference_moment: sigma must be positive");
  const LogWeight log_w = gibbs_log_weight(model, sigma);
  const double center = model.minimizer()(0);
  auto log_integrand = [&](double x) { return log_w(x) + log_magnitude(f(x)); };
  const double lo = find_edge(log_integrand, center, -1);
  const double hi = find_edge(log_integrand, center, +1);
  const Integral den = adaptive_split([&](double x) { return std::exp(log_w(x)); }, lo, center, hi, tolerance);
  const Integral num =
      adaptive_split([&](double x) { return f(x) * std::exp(log_w(x)); }, lo, center, hi, tolerance);
  return ratio(num, den, ReferenceMethod::quadrature_1d);
}

ReferenceValue reference_moment_radial(const PotentialModel& model, double sigma,
                                       const std::function<double(double)>& g, double tolerance) {
  require(model.radial().has_value(), "reference_moment_radial: model is not radially symmetric");
  require(sigma > 0, "reference_moment_radial: sigma must be positive");
  const auto& radial = *model.radial();
  const double scale = 2 / (sigma * sigma);
  const double floor_value = radial(0.0);
  const double dim_power = static_cast<double>(model.dim() - 1);
  auto log_w = [&](double rho) { return -scale * (radial(rho) - floor_value); };
  auto shell = [&](double rho) { return dim_power == 0 ? 1.0 : std::pow(rho, dim_power); };
  auto log_integrand = [&](double rho) { return log_w(rho) + log_magnitude(g(rho) * shell(rho)); };
  const double hi = find_edge(log_integrand, 0.0, +1);
  // The radial density peaks away from zero in higher dimension; split there.
  const double mid = std::min(hi / 2, std::sqrt(std::max(1.0, dim_power) * sigma * sigma));
  const Integral den = adaptive_split([&](double r) { return shell(r) * std::exp(log_w(r)); }, 0.0, mid, hi, tolerance);
  const Integral num =
      adaptive_split([&](double r) { return g(r) * shell(r) * std::exp(log_w(r)); }, 0.0, mid, hi, tolerance);
  return ratio(num, den, ReferenceMethod::quadrature_1d);
}

std::optional<ReferenceValue> norm_power_moment(const PotentialModel& model, double sigma, int k) {
  require(k == 2 || k == 4, "norm_power_moment: only second and fourth moments are supported");
  require(sigma > 0, "norm_power_moment: sigma must be positive");
  if (model.gaussian()) {
    const auto& g = *model.gaussian();
    const double d = static_cast<double>(model.dim());
    const double v = sigma * sigma / (2 * g.precision);
    const double m2 = g.mean.squaredNorm();
    ReferenceValue out;
    out.method = ReferenceMethod::closed_form;
    out.value = k == 2 ? m2 + d * v : (m2 + d * v) * (m2 + d * v) + 2 * d * v * v + 4 * v * m2;
    return out;
  }
  if (model.dim() == 1) {
    return reference_moment(model, sigma, [k](double x) { return std::pow(x, k); });
  }
  if (model.radial()) {
    return reference_moment_radial(model, sigma, [k](double r) { return std::pow(r, k); });
  }
  return std::nullopt;
}

ReferenceValue long_run_reference(const PotentialModel& model, const Observable& f, double sigma,
                                  std::uint64_t seed) {
  require(sigma > 0, "long_run_reference: sigma must be positive");
  const double gamma_star = regime_step_limit(model, sigma);
  const double gamma = gamma_star / 64;
  const std::int64_t steps = cells_ceil(1e5 * gamma_star, gamma);
  constexpr std::int64_t kBatches = 50;
  const std::int64_t per_batch = steps / kBatches;
  NoiseStream noise(seed, 0xFFFF'FFFF'FFFFull);
  EulerPath<double> path(model, model.minimizer(), gamma, sigma);
  std::vector<double> batch_means;
  for (std::int64_t b = 0; b < kBatches; ++b) {
    double sum = 0;
    for (std::int64_t k = 0; k < per_batch; ++k) {
      path.advance(noise);
      sum += f(path.position());
    }
    batch_means.push_back(sum / static_cast<double>(per_batch));
  }
  const SampleStats s = sample_stats(batch_means);
  ReferenceValue out;
  out.method = ReferenceMethod::long_run_oracle;
  out.value = s.mean;
  out.error_estimate = std::sqrt(s.variance / kBatches);
  return out;
}

W1Result w1_distance_1d_detailed(const PotentialModel& a, const PotentialModel& b, double sigma) {
  require(a.dim() == 1 && b.dim() == 1, "w1_distance_1d: both models must be one-dimensional");
  require(sigma > 0, "w1_distance_1d: sigma must be positive");
  const LogWeight la = gibbs_log_weight(a, sigma);
  const LogWeight lb = gibbs_log_weight(b, sigma);
  const double lo = std::min(find_edge(la, a.minimizer()(0), -1), find_edge(lb, b.minimizer()(0), -1));
  const double hi = std::max(find_edge(la, a.minimizer()(0), +1), find_edge(lb, b.minimizer()(0), +1));
  constexpr int kPanels = 4096;
  const double fine = cdf_gap_integral(la, lb, lo, hi, kPanels);
  const double coarse = cdf_gap_integral(la, lb, lo, hi, kPanels / 2);
  if (!std::isfinite(fine)) throw OracleFailure("w1_distance_1d: quadrature produced a non-finite value");
  return {fine, std::abs(fine - coarse)};
}

double w1_distance_1d(const PotentialModel& a, const PotentialModel& b, double sigma) {
  return w1_distance_1d_detailed(a, b, sigma).value;
}

MseReport run_mse_experiment(const PotentialModel& model, const Observable& f, const LevelSchedule& schedule,
                             double sigma, const VectorXd& x0, const ReferenceValue& reference, std::uint64_t R,
                             std::uint64_t seed, const MseOptions& options) {
  require(R >= 2, "run_mse_experiment: need at least two replicates");
  schedule.validate();
  std::vector<EstimatorOutput> outputs(R);
  std::vector<char> overflowed(R, 0);
  std::vector<std::exception_ptr> errors(R);
  parallel_for(R, options.threads, [&](std::uint64_t i) {
    try {
      outputs[i] = multilevel_estimate(model, f, schedule, sigma, x0, seed, options.identical_streams ? 0 : i);
    } catch (const NumericalOverflow&) {
      overflowed[i] = 1;
      errors[i] = std::current_exception();
    }
  });

  MseReport report;
  report.replicates = R;
  report.reference = reference.value;
  report.epsilon_target = options.epsilon_target;
  std::exception_ptr first_failure;
  double cost = 0;
  for (std::uint64_t i = 0; i < R; ++i) {
    if (overflowed[i]) {
      ++report.failed;
      if (!first_failure) first_failure = errors[i];
      continue;
    }
    report.values.push_back(outputs[i].value);
    cost += static_cast<double>(outputs[i].gradient_evals);
  }
  if (report.failed * 100 > R || report.values.size() < 2) std::rethrow_exception(first_failure);

  const SampleStats s = sample_stats(report.values);
  const double n = static_cast<double>(report.values.size());
  report.mean = s.mean;
  report.variance = s.variance;
  report.bias = s.mean - reference.value;
  double squared = 0;
  for (double v : report.values) squared += (v - reference.value) * (v - reference.value);
  report.rmse = std::sqrt(squared / n);
  report.standard_error = std::sqrt(s.variance / n);
  report.mean_cost = cost / n;
  return report;
}

StrongErrorCurve strong_error_curve(const PotentialModel& model, double sigma, const VectorXd& x0,
                                    const std::vector<double>& gammas, double horizon, std::uint64_t R,
                                    std::uint64_t seed, unsigned threads) {
  require(R >= 2, "strong_error_curve: need at least two replicates");
  require(horizon > 0, "strong_error_curve: horizon must be positive");
  require(!gammas.empty(), "strong_error_curve: need at least one step size");
  StrongErrorCurve curve;
  std::vector<double> xs, ys;
  for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
    const double gamma = gammas[gi];
    require(gamma > 0, "strong_error_curve: step sizes must be positive");
    if (model.profile().parametric() && gamma > regime_step_limit(model, sigma) * (1 + 1e-12)) {
      throw InvalidParameter("strong_error_curve: step size exceeds gamma_star");
    }
    const std::int64_t n = cells_ceil(horizon, gamma);
    std::vector<double> gaps(R);
    parallel_for(R, threads, [&](std::uint64_t r) {
      NoiseStream noise(seed, level_stream_id(r, static_cast<unsigned>(gi)));
      CoupledEuler<double> pair(model, x0, gamma, sigma);
      for (std::int64_t k = 0; k < n; ++k) pair.advance(noise);
      gaps[r] = (pair.fine() - pair.coarse()).squaredNorm();
    });
    const SampleStats s = sample_stats(gaps);
    curve.points.push_back({gamma, s.mean, std::sqrt(s.variance / static_cast<double>(R))});
    xs.push_back(gamma);
    ys.push_back(s.mean);
  }
  if (xs.size() >= 2 && std::all_of(ys.begin(), ys.end(), [](double v) { return v > 0; })) {
    curve.slope = loglog_slope(xs, ys);
  } else {
    curve.slope = std::numeric_limits<double>::quiet_NaN();
  }
  return curve;
}

namespace {

// Per-replicate traces reduced in replicate order so results do not depend
// on the thread count.
std::vector<SampleStats> reduce_traces(const std::vector<std::vector<double>>& traces) {
  const std::size_t len = traces.empty() ? 0 : traces.front().size();
  std::vector<SampleStats> out(len);
  std::vector<double> column(traces.size());
  for (std::size_t k = 0; k < len; ++k) {
    for (std::size_t r = 0; r < traces.size(); ++r) column[r] = traces[r][k];
    out[k] = sample_stats(column);
  }
  return out;
}

}  // namespace

std::vector<ConfluencePoint> confluence_curve(const PotentialModel& model, double sigma, const VectorXd& x,
                                              const VectorXd& y, double gamma, double horizon, std::uint64_t R,
                                              std::uint64_t seed, std::int64_t record_every, unsigned threads) {
  require(R >= 2, "confluence_curve: need at least two replicates");
  require(gamma > 0 && horizon > 0, "confluence_curve: gamma and horizon must be positive");
  require(record_every >= 1, "confluence_curve: record_every must be at least 1");
  require(x.size() == model.dim() && y.size() == model.dim(), "confluence_curve: start points have wrong dimension");
  if (model.profile().parametric() && gamma > regime_step_limit(model, sigma) * (1 + 1e-12)) {
    throw InvalidParameter("confluence_curve: step size exceeds gamma_star");
  }
  const std::int64_t n = cells_ceil(horizon, gamma);
  std::vector<std::int64_t> record_steps;
  for (std::int64_t k = 0; k <= n; k += record_every) record_steps.push_back(k);
  if (record_steps.back() != n) record_steps.push_back(n);

  std::vector<std::vector<double>> traces(R);
  const double scale = sigma * std::sqrt(gamma);
  parallel_for(R, threads, [&](std::uint64_t r) {
    NoiseStream noise(seed, level_stream_id(r, 0));
    VectorXd px = x, py = y, grad(model.dim()), z(model.dim());
    auto& trace = traces[r];
    trace.reserve(record_steps.size());
    std::size_t next = 0;
    for (std::int64_t k = 0; k <= n; ++k) {
      if (next < record_steps.size() && record_steps[next] == k) {
        trace.push_back((px - py).squaredNorm());
        ++next;
      }
      if (k == n) break;
      noise.fill(z);
      euler_update<double>(model, px, gamma, scale * z, grad, k + 1);
      euler_update<double>(model, py, gamma, scale * z, grad, k + 1);
    }
  });

  const auto stats = reduce_traces(traces);
  std::vector<ConfluencePoint> curve;
  for (std::size_t i = 0; i < record_steps.size(); ++i) {
    curve.push_back({static_cast<double>(record_steps[i]) * gamma, stats[i].mean,
                     std::sqrt(stats[i].variance / static_cast<double>(R))});
  }
  return curve;
}

MomentEnvelopeResult moment_envelope_check(const PotentialModel& model, double sigma, const VectorXd& x0,
                                           double gamma, double p, double horizon, std::uint64_t R,
                                           std::uint64_t seed, double c_margin, double c_r, unsigned threads) {
  require(model.profile().parametric(), "moment_envelope_check: model needs a parametric convexity profile");
  require(p >= 0, "moment_envelope_check: p must be nonnegative");
  require(c_margin > 0, "moment_envelope_check: c_margin must be positive");
  require(R >= 1, "moment_envelope_check: need at least one replicate");
  const RegimeConstants constants = regime_constants(model.profile(), static_cast<int>(model.dim()), sigma, c_r);
  require(gamma > 0 && gamma <= constants.gamma_star * (1 + 1e-12), "moment_envelope_check: need 0 < gamma <= gamma_star");

  MomentEnvelopeResult result;
  result.envelope = c_margin * std::pow(model.value(x0) + constants.psi_bar, p);
  const std::int64_t n = cells_ceil(horizon, gamma);
  std::vector<std::vector<double>> traces(R);
  parallel_for(R, threads, [&](std::uint64_t r) {
    NoiseStream noise(seed, level_stream_id(r, 0));
    EulerPath<double> path(model, x0, gamma, sigma);
    auto& trace = traces[r];
    trace.reserve(static_cast<std::size_t>(n) + 1);
    trace.push_back(std::pow(model.value(path.position()), p));
    for (std::int64_t k = 0; k < n; ++k) {
      path.advance(noise);
      trace.push_back(std::pow(model.value(path.position()), p));
    }
  });
  for (const auto& s : reduce_traces(traces)) {
    result.trace.push_back(s.mean);
    result.sup_moment = std::max(result.sup_moment, s.mean);
  }
  result.max_ratio = result.sup_moment / result.envelope;
  result.passed = result.sup_moment <= result.envelope;
  return result;
}

LevelVarianceProfile level_variance_profile(const PotentialModel& model, const Observable& f,
                                            const LevelSchedule& schedule, double sigma, const VectorXd& x0,
                                            std::uint64_t R, std::uint64_t seed, unsigned threads) {
  require(R >= 100, "level_variance_profile: need at least 100 replicates");
  schedule.validate();
  std::vector<EstimatorOutput> outputs(R);
  parallel_for(R, threads,
               [&](std::uint64_t i) { outputs[i] = multilevel_estimate(model, f, schedule, sigma, x0, seed, i); });

  const int levels = schedule.J + 1;
  Eigen::MatrixXd values(static_cast<Eigen::Index>(R), levels);
  std::vector<double> totals(R);
  for (std::uint64_t i = 0; i < R; ++i) {
    for (int j = 0; j < levels; ++j) values(static_cast<Eigen::Index>(i), j) = outputs[i].level_values[static_cast<std::size_t>(j)];
    totals[i] = outputs[i].value;
  }

  LevelVarianceProfile profile;
  profile.replicates = R;
  double sum_se2 = 0;
  for (int j = 0; j < levels; ++j) {
    std::vector<double> column(R);
    for (std::uint64_t i = 0; i < R; ++i) column[i] = values(static_cast<Eigen::Index>(i), j);
    const SampleStats s = sample_stats(column);
    profile.levels.push_back({j, s.variance, schedule.T[static_cast<std::size_t>(j)],
                              schedule.gamma[static_cast<std::size_t>(j)]});
    sum_se2 += s.variance_se * s.variance_se;
  }
  const SampleStats total = sample_stats(totals);
  profile.total_variance = total.variance;
  profile.total_variance_se = total.variance_se;
  profile.sum_level_variance_se = std::sqrt(sum_se2);

  const Eigen::MatrixXd centered = values.rowwise() - values.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(R - 1);
  profile.correlation = Eigen::MatrixXd::Identity(levels, levels);
  for (int a = 0; a < levels; ++a) {
    for (int b = 0; b < levels; ++b) {
      if (a == b) continue;
      const double denom = std::sqrt(cov(a, a) * cov(b, b));
      profile.correlation(a, b) = denom > 0 ? cov(a, b) / denom : 0.0;
    }
  }
  return profile;
}

PenaltyProbe decreasing_penalization_probe(const PotentialModel& base, double alpha, double alpha_tilde,
                                           double sigma, const VectorXd& x, const VectorXd& y, double gamma,
                                           double horizon, std::uint64_t R, std::uint64_t seed, unsigned threads) {
  require(alpha_tilde > 0 && alpha > alpha_tilde, "decreasing_penalization_probe: need alpha > alpha_tilde > 0");
  require(R >= 2, "decreasing_penalization_probe: need at least two replicates");
  require(gamma > 0 && horizon > 0, "decreasing_penalization_probe: gamma and horizon must be positive");
  require(x.size() == base.dim() && y.size() == base.dim(), "decreasing_penalization_probe: wrong dimension");
  const PotentialModel strong = penalize(base, alpha);
  const PotentialModel weak = penalize(base, alpha_tilde);
  const std::int64_t n = cells_ceil(horizon, gamma);
  const double scale = sigma * std::sqrt(gamma);
  std::vector<double> gaps(R);
  parallel_for(R, threads, [&](std::uint64_t r) {
    NoiseStream noise(seed, level_stream_id(r, 0));
    VectorXd px = x, py = y, grad(base.dim()), z(base.dim());
    for (std::int64_t k = 0; k < n; ++k) {
      noise.fill(z);
      euler_update<double>(strong, px, gamma, scale * z, grad, k + 1);
      euler_update<double>(weak, py, gamma, scale * z, grad, k + 1);
    }
    gaps[r] = (px - py).squaredNorm();
  });
  const SampleStats s = sample_stats(gaps);
  PenaltyProbe probe;
  probe.gap = s.mean;
  probe.standard_error = std::sqrt(s.variance / static_cast<double>(R));
  probe.bound = decreasing_penalization_gap(alpha, alpha_tilde, static_cast<int>(base.dim()), sigma,
                                            static_cast<double>(n) * gamma, (x - y).squaredNorm());
  return probe;
}

}  // namespace mlgibbs
