#include "mlgibbs/estimator.hpp"

#include "mlgibbs/errors.hpp"
#include "mlgibbs/noise.hpp"
#include "mlgibbs/sde.hpp"

namespace mlgibbs {

namespace {

struct LevelResult {
  double value;
  std::uint64_t gradient_evals;
};

LevelResult coarse_level(const PotentialModel& model, const Observable& f, const LevelSchedule& s, double sigma,
                         const VectorXd& x0, NoiseStream& noise) {
  const std::int64_t n = s.window_steps(0);
  const std::int64_t first = s.tau_steps(0);
  EulerPath<double> path(model, x0, s.gamma[0], sigma);
  double sum = 0;
  for (std::int64_t k = 0; k < n; ++k) {
    if (k >= first) sum += f(path.position());
    path.advance(noise);
  }
  return {sum / static_cast<double>(n - first), static_cast<std::uint64_t>(path.step_index())};
}

LevelResult correction_level(const PotentialModel& model, const Observable& f, const LevelSchedule& s, int j,
                             double sigma, const VectorXd& x0, NoiseStream& noise) {
  const std::int64_t n = s.window_steps(j);
  const std::int64_t first = s.tau_steps(j);
  CoupledEuler<double> pair(model, x0, s.coarse_step(j), sigma);
  double sum = 0;
  for (std::int64_t k = 0; k < n; ++k) {
    if (k >= first) sum += f(pair.fine()) - f(pair.coarse());
    pair.advance(noise);
  }
  // two fine gradient evaluations and one coarse per coarse step
  return {sum / static_cast<double>(n - first), 3 * static_cast<std::uint64_t>(pair.coarse_steps())};
}

}  // namespace

EstimatorOutput multilevel_estimate(const PotentialModel& model, const Observable& f, const LevelSchedule& schedule,
                                    double sigma, const VectorXd& x0, std::uint64_t seed,
                                    std::uint64_t replicate_id) {
  schedule.validate();
  if (!(sigma > 0)) throw InvalidParameter("multilevel_estimate: sigma must be positive");
  if (x0.size() != model.dim() || !x0.allFinite()) {
    throw InvalidParameter("multilevel_estimate: start point must be finite with the model dimension");
  }

  EstimatorOutput out;
  out.level_values.reserve(static_cast<std::size_t>(schedule.J) + 1);
  for (int j = 0; j <= schedule.J; ++j) {
    NoiseStream noise(seed, level_stream_id(replicate_id, static_cast<unsigned>(j)));
    LevelResult level{};
    try {
      level = j == 0 ? coarse_level(model, f, schedule, sigma, x0, noise)
                     : correction_level(model, f, schedule, j, sigma, x0, noise);
    } catch (const NumericalOverflow& e) {
      throw e.at_level(j);
    }
    out.level_values.push_back(level.value);
    out.gradient_evals += level.gradient_evals;
    out.gaussians_drawn += noise.cursor();
  }
  for (double v : out.level_values) out.value += v;
  return out;
}

std::uint64_t cost_of(const LevelSchedule& schedule) {
  schedule.validate();
  std::uint64_t cost = static_cast<std::uint64_t>(schedule.window_steps(0));
  for (int j = 1; j <= schedule.J; ++j) cost += 3 * static_cast<std::uint64_t>(schedule.window_steps(j));
  return cost;
}

}  // namespace mlgibbs
