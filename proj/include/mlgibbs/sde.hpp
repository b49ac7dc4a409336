#ifndef MLGIBBS_SDE_HPP
#define MLGIBBS_SDE_HPP

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <type_traits>
#include <vector>

#include "mlgibbs/errors.hpp"
#include "mlgibbs/noise.hpp"
#include "mlgibbs/potentials.hpp"

namespace mlgibbs {

/// Largest grid time gamma * floor(t / gamma) not exceeding t. Defined for
/// every t >= 0, including t < gamma where it returns 0.
template <typename Scalar>
Scalar floor_time(Scalar t, Scalar gamma) {
  if (!(gamma > 0)) throw InvalidParameter("floor_time: gamma must be positive");
  if (!(t >= 0)) throw InvalidParameter("floor_time: t must be nonnegative");
  using std::floor;
  return gamma * floor(t / gamma);
}

/// Number of grid cells of width `step` needed to cover `t`, rounding up.
/// Values within a relative 1e-9 of a grid point snap to it.
inline std::int64_t cells_ceil(double t, double step) {
  const double q = t / step;
  const double nearest = std::round(q);
  if (std::abs(q - nearest) <= 1e-9 * std::max(1.0, nearest)) return static_cast<std::int64_t>(nearest);
  return static_cast<std::int64_t>(std::ceil(q));
}

template <typename Scalar>
struct PathState {
  Vector<Scalar> position;
  std::int64_t step_index = 0;
  Scalar gamma = Scalar(0);

  Scalar time() const { return static_cast<Scalar>(step_index) * gamma; }
};

template <typename Scalar>
struct CoupledPathState {
  PathState<Scalar> fine;    // step gamma / 2
  PathState<Scalar> coarse;  // step gamma
};

/// x <- x - gamma grad U(x) + increment, in place. `grad` is scratch space.
/// Throws NumericalOverflow carrying `step_index` if the result is not finite.
template <typename Scalar, typename Inc>
void euler_update(const Potential<Scalar>& model, Eigen::Ref<Vector<Scalar>> x, Scalar gamma,
                  const Eigen::MatrixBase<Inc>& increment, Eigen::Ref<Vector<Scalar>> grad,
                  std::int64_t step_index) {
  model.gradient(x, grad);
  x += increment - gamma * grad;
  if (!x.allFinite()) throw NumericalOverflow(step_index);
}

/// One Euler-Maruyama step X' = X - gamma grad U(X) + sigma sqrt(gamma) z.
template <typename Scalar>
PathState<Scalar> euler_step(const Potential<Scalar>& model, const PathState<Scalar>& state,
                             std::type_identity_t<Scalar> sigma, const Vector<std::type_identity_t<Scalar>>& z) {
  if (z.size() != model.dim() || state.position.size() != model.dim()) {
    throw InvalidParameter("euler_step: dimension mismatch");
  }
  using std::sqrt;
  PathState<Scalar> next{state.position, state.step_index + 1, state.gamma};
  Vector<Scalar> grad(model.dim());
  euler_update<Scalar>(model, next.position, state.gamma, (sigma * sqrt(state.gamma)) * z, grad,
                       next.step_index);
  return next;
}

/// Streaming Euler scheme with constant step. Keeps only the current state,
/// so long horizons run in O(d) memory.
template <typename Scalar>
class EulerPath {
 public:
  EulerPath(const Potential<Scalar>& model, const Vector<Scalar>& x0, Scalar gamma, Scalar sigma)
      : model_(&model),
        x_(x0),
        grad_(model.dim()),
        z_(model.dim()),
        gamma_(gamma),
        scale_(sigma * std::sqrt(gamma)) {
    if (!(gamma > 0)) throw InvalidParameter("Euler path: gamma must be positive");
    if (!(sigma >= 0)) throw InvalidParameter("Euler path: sigma must be nonnegative");
    if (x0.size() != model.dim()) throw InvalidParameter("Euler path: start point has wrong dimension");
  }

  void advance(NoiseStream& noise) {
    noise.fill(z_);
    ++step_;
    euler_update<Scalar>(*model_, x_, gamma_, scale_ * z_, grad_, step_);
  }

  const Vector<Scalar>& position() const { return x_; }
  std::int64_t step_index() const { return step_; }
  Scalar gamma() const { return gamma_; }
  PathState<Scalar> state() const { return {x_, step_, gamma_}; }

 private:
  const Potential<Scalar>* model_;
  Vector<Scalar> x_;
  Vector<Scalar> grad_;
  Vector<Scalar> z_;
  Scalar gamma_;
  Scalar scale_;
  std::int64_t step_ = 0;
};

/// Noise consumed by one coarse step of a coupled pair, for auditing.
template <typename Scalar>
struct CouplingRecord {
  Vector<Scalar> z1, z2;             // fine Gaussians
  Vector<Scalar> coarse_z;           // (z1 + z2) / sqrt(2)
  Vector<Scalar> fine_increment1;    // sigma sqrt(gamma/2) z1
  Vector<Scalar> fine_increment2;    // sigma sqrt(gamma/2) z2
  Vector<Scalar> coarse_increment;   // sigma sqrt(gamma) coarse_z
};

/// Synchronously coupled Euler schemes with steps gamma (coarse) and
/// gamma/2 (fine). Each coarse step draws two fine Gaussians; the coarse
/// Brownian increment is the sum of the two fine ones.
template <typename Scalar>
class CoupledEuler {
 public:
  CoupledEuler(const Potential<Scalar>& model, const Vector<Scalar>& x0, Scalar gamma_coarse, Scalar sigma)
      : model_(&model),
        fine_(x0),
        coarse_(x0),
        grad_(model.dim()),
        z1_(model.dim()),
        z2_(model.dim()),
        inc1_(model.dim()),
        inc2_(model.dim()),
        gamma_(gamma_coarse),
        fine_scale_(sigma * std::sqrt(gamma_coarse / 2)) {
    if (!(gamma_coarse > 0)) throw InvalidParameter("coupled Euler: gamma must be positive");
    if (!(sigma >= 0)) throw InvalidParameter("coupled Euler: sigma must be nonnegative");
    if (x0.size() != model.dim()) throw InvalidParameter("coupled Euler: start point has wrong dimension");
  }

  void advance(NoiseStream& noise, CouplingRecord<Scalar>* audit = nullptr) {
    noise.fill(z1_);
    noise.fill(z2_);
    inc1_.noalias() = fine_scale_ * z1_;
    inc2_.noalias() = fine_scale_ * z2_;
    const Scalar half = gamma_ / 2;
    euler_update<Scalar>(*model_, fine_, half, inc1_, grad_, 2 * coarse_steps_ + 1);
    euler_update<Scalar>(*model_, fine_, half, inc2_, grad_, 2 * coarse_steps_ + 2);
    ++coarse_steps_;
    euler_update<Scalar>(*model_, coarse_, gamma_, inc1_ + inc2_, grad_, coarse_steps_);
    if (audit) {
      using std::sqrt;
      audit->z1 = z1_;
      audit->z2 = z2_;
      audit->coarse_z = (z1_ + z2_) / sqrt(Scalar(2));
      audit->fine_increment1 = inc1_;
      audit->fine_increment2 = inc2_;
      audit->coarse_increment = inc1_ + inc2_;
    }
  }

  const Vector<Scalar>& fine() const { return fine_; }
  const Vector<Scalar>& coarse() const { return coarse_; }
  std::int64_t coarse_steps() const { return coarse_steps_; }
  Scalar gamma_coarse() const { return gamma_; }

  CoupledPathState<Scalar> state() const {
    return {{fine_, 2 * coarse_steps_, gamma_ / 2}, {coarse_, coarse_steps_, gamma_}};
  }

 private:
  const Potential<Scalar>* model_;
  Vector<Scalar> fine_, coarse_;
  Vector<Scalar> grad_, z1_, z2_, inc1_, inc2_;
  Scalar gamma_;
  Scalar fine_scale_;
  std::int64_t coarse_steps_ = 0;
};

/// The n_steps + 1 grid states of an Euler path started at x0.
template <typename Scalar>
std::vector<PathState<Scalar>> simulate_path(const Potential<Scalar>& model,
                                             const Vector<std::type_identity_t<Scalar>>& x0,
                                             std::type_identity_t<Scalar> gamma, std::type_identity_t<Scalar> sigma,
                                             std::int64_t n_steps, NoiseStream& noise) {
  if (n_steps < 0) throw InvalidParameter("simulate_path: negative step count");
  EulerPath<Scalar> path(model, x0, gamma, sigma);
  std::vector<PathState<Scalar>> states;
  states.reserve(static_cast<std::size_t>(n_steps) + 1);
  states.push_back(path.state());
  for (std::int64_t n = 0; n < n_steps; ++n) {
    path.advance(noise);
    states.push_back(path.state());
  }
  return states;
}

/// Coupled (gamma, gamma/2) pair observed at the n_coarse_steps + 1 coarse grid times.
template <typename Scalar>
std::vector<CoupledPathState<Scalar>> simulate_coupled(const Potential<Scalar>& model,
                                                       const Vector<std::type_identity_t<Scalar>>& x0,
                                                       std::type_identity_t<Scalar> gamma_coarse,
                                                       std::type_identity_t<Scalar> sigma,
                                                       std::int64_t n_coarse_steps, NoiseStream& noise,
                                                       std::vector<CouplingRecord<Scalar>>* audit = nullptr) {
  if (n_coarse_steps < 0) throw InvalidParameter("simulate_coupled: negative step count");
  CoupledEuler<Scalar> pair(model, x0, gamma_coarse, sigma);
  std::vector<CoupledPathState<Scalar>> states;
  states.reserve(static_cast<std::size_t>(n_coarse_steps) + 1);
  states.push_back(pair.state());
  if (audit) audit->clear();
  for (std::int64_t n = 0; n < n_coarse_steps; ++n) {
    CouplingRecord<Scalar> record;
    pair.advance(noise, audit ? &record : nullptr);
    if (audit) audit->push_back(std::move(record));
    states.push_back(pair.state());
  }
  return states;
}

/// Time average gamma/(T - tau) * sum f(X_k) over grid indices with
/// tau <= k gamma < T. tau and T are first rounded up to the grid.
template <typename Scalar>
Scalar occupation_average(const std::function<Scalar(const Vector<Scalar>&)>& f,
                          const std::vector<PathState<Scalar>>& states, std::type_identity_t<Scalar> gamma,
                          std::type_identity_t<Scalar> tau, std::type_identity_t<Scalar> T) {
  if (!(gamma > 0)) throw InvalidParameter("occupation_average: gamma must be positive");
  if (!(tau >= 0) || !(T > 0)) throw InvalidParameter("occupation_average: need tau >= 0 and T > 0");
  const std::int64_t first = cells_ceil(static_cast<double>(tau), static_cast<double>(gamma));
  const std::int64_t last = cells_ceil(static_cast<double>(T), static_cast<double>(gamma));
  if (last <= first) throw InvalidParameter("occupation_average: empty summation window");
  if (static_cast<std::int64_t>(states.size()) < last) {
    throw InvalidParameter("occupation_average: path does not cover [0, T)");
  }
  Scalar sum = 0;
  for (std::int64_t k = first; k < last; ++k) sum += f(states[static_cast<std::size_t>(k)].position);
  return sum / static_cast<Scalar>(last - first);
}

}  // namespace mlgibbs

#endif  // MLGIBBS_SDE_HPP
