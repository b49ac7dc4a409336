#ifndef MLGIBBS_ESTIMATOR_HPP
#define MLGIBBS_ESTIMATOR_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "mlgibbs/calibration.hpp"
#include "mlgibbs/potentials.hpp"

namespace mlgibbs {

using Observable = std::function<double(const VectorXd&)>;

struct EstimatorOutput {
  double value = 0;
  /// Coarse occupation average followed by the J correcting layers.
  std::vector<double> level_values;
  std::uint64_t gradient_evals = 0;
  std::uint64_t gaussians_drawn = 0;
};

/// Multilevel occupation-measure estimate of pi(f).
///
/// Every level runs a fresh path from x0 on its own noise stream
/// level_stream_id(replicate_id, j). Level j >= 1 averages
/// f(fine) - f(coarse) of a synchronously coupled (gamma_{j-1}, gamma_j)
/// pair at coarse grid times in [tau, T_j).
EstimatorOutput multilevel_estimate(const PotentialModel& model, const Observable& f, const LevelSchedule& schedule,
                                    double sigma, const VectorXd& x0, std::uint64_t seed,
                                    std::uint64_t replicate_id);

/// Number of gradient evaluations a run with this schedule performs:
/// T_0/gamma_0 + sum_j (T_j/gamma_j + T_j/gamma_{j-1}).
std::uint64_t cost_of(const LevelSchedule& schedule);

}  // namespace mlgibbs

#endif  // MLGIBBS_ESTIMATOR_HPP
