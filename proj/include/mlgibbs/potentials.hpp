#ifndef MLGIBBS_POTENTIALS_HPP
#define MLGIBBS_POTENTIALS_HPP

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "mlgibbs/errors.hpp"

namespace mlgibbs {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using VectorXd = Vector<double>;

enum class ConvexityKind { WeaklyConvex, ParamH1, ParamH1H2, StronglyConvex };

inline const char* to_string(ConvexityKind kind) {
  switch (kind) {
    case ConvexityKind::WeaklyConvex: return "WeaklyConvex";
    case ConvexityKind::ParamH1: return "ParamH1";
    case ConvexityKind::ParamH1H2: return "ParamH1H2";
    case ConvexityKind::StronglyConvex: return "StronglyConvex";
  }
  return "unknown";
}

/// Curvature metadata of a convex potential.
///
/// For the parametric kinds the smallest Hessian eigenvalue is bounded below
/// by c_lower * U(x)^(-r); ParamH1H2 also bounds the largest one above by
/// c_upper * U(x)^(-r).
template <typename Scalar>
struct ConvexityProfile {
  ConvexityKind kind = ConvexityKind::WeaklyConvex;
  Scalar L = Scalar(1);
  std::optional<Scalar> c_lower;
  std::optional<Scalar> c_upper;
  std::optional<Scalar> r;
  Scalar alpha = Scalar(0);

  bool parametric() const {
    return kind == ConvexityKind::ParamH1 || kind == ConvexityKind::ParamH1H2;
  }

  void validate() const {
    if (!(L > 0)) throw InvalidParameter("convexity profile: L must be positive");
    if (parametric()) {
      if (!c_lower) throw InvalidParameter("convexity profile: c_lower required for parametric kinds");
      if (!r) throw InvalidParameter("convexity profile: r required for parametric kinds");
      if (!(*c_lower > 0)) throw InvalidParameter("convexity profile: c_lower must be positive");
      if (!(*r >= 0 && *r < 1)) throw InvalidParameter("convexity profile: r must lie in [0,1)");
    }
    if (kind == ConvexityKind::ParamH1H2) {
      if (!c_upper) throw InvalidParameter("convexity profile: c_upper required for ParamH1H2");
      if (!(*c_upper >= *c_lower)) throw InvalidParameter("convexity profile: c_upper < c_lower");
    }
    if (kind == ConvexityKind::StronglyConvex && !(alpha > 0)) {
      throw InvalidParameter("convexity profile: strongly convex profile needs alpha > 0");
    }
  }
};

/// U(x) = scale/2 |x - center|^2 (+ alpha/2 |x|^2 once penalized). Kept so
/// that Gaussian targets can be handled in closed form.
template <typename Scalar>
struct GaussianForm {
  Vector<Scalar> mean;
  Scalar precision;  // Hessian of U, a multiple of the identity
};

/// A convex potential U on R^d together with its gradient and curvature
/// metadata. Immutable once built; copies share the underlying callables.
template <typename Scalar>
class Potential {
 public:
  using VectorType = Vector<Scalar>;
  using ConstRef = Eigen::Ref<const VectorType>;
  using ValueFn = std::function<Scalar(ConstRef)>;
  using GradientFn = std::function<void(ConstRef, Eigen::Ref<VectorType>)>;
  /// U as a function of |x| for radially symmetric potentials.
  using RadialFn = std::function<Scalar(Scalar)>;

  Potential(std::string name, Eigen::Index dim, ValueFn value, GradientFn gradient,
            ConvexityProfile<Scalar> profile, VectorType minimizer)
      : name_(std::move(name)),
        dim_(dim),
        value_(std::move(value)),
        gradient_(std::move(gradient)),
        profile_(std::move(profile)),
        minimizer_(std::move(minimizer)) {
    if (dim_ <= 0) throw InvalidParameter("potential: dimension must be positive");
    if (minimizer_.size() != dim_) throw InvalidParameter("potential: minimizer has wrong dimension");
  }

  const std::string& name() const { return name_; }
  Eigen::Index dim() const { return dim_; }
  const ConvexityProfile<Scalar>& profile() const { return profile_; }
  const VectorType& minimizer() const { return minimizer_; }

  Scalar value(ConstRef x) const { return value_(x); }

  void gradient(ConstRef x, Eigen::Ref<VectorType> out) const { gradient_(x, out); }

  VectorType gradient(ConstRef x) const {
    VectorType g(dim_);
    gradient_(x, g);
    return g;
  }

  const std::optional<RadialFn>& radial() const { return radial_; }
  const std::optional<GaussianForm<Scalar>>& gaussian() const { return gaussian_; }

  Potential with_radial(RadialFn fn) const {
    Potential copy = *this;
    copy.radial_ = std::move(fn);
    return copy;
  }

  Potential with_gaussian(GaussianForm<Scalar> form) const {
    Potential copy = *this;
    copy.gaussian_ = std::move(form);
    return copy;
  }

 private:
  std::string name_;
  Eigen::Index dim_;
  ValueFn value_;
  GradientFn gradient_;
  ConvexityProfile<Scalar> profile_;
  VectorType minimizer_;
  std::optional<RadialFn> radial_;
  std::optional<GaussianForm<Scalar>> gaussian_;
};

using PotentialModel = Potential<double>;

namespace detail {

template <typename Scalar>
Potential<Scalar> quadratic_unchecked(const Vector<Scalar>& center, Scalar scale) {
  const Eigen::Index dim = center.size();
  auto value = [center, scale](Eigen::Ref<const Vector<Scalar>> x) {
    return scale / 2 * (x - center).squaredNorm();
  };
  auto gradient = [center, scale](Eigen::Ref<const Vector<Scalar>> x, Eigen::Ref<Vector<Scalar>> g) {
    g.noalias() = scale * (x - center);
  };
  ConvexityProfile<Scalar> profile;
  profile.kind = scale > 0 ? ConvexityKind::StronglyConvex : ConvexityKind::WeaklyConvex;
  profile.L = scale > 0 ? scale : Scalar(1);
  profile.alpha = scale;
  Potential<Scalar> model("quadratic", dim, value, gradient, profile, center);
  model = model.with_gaussian({center, scale});
  if (center.isZero(0)) {
    model = model.with_radial([scale](Scalar rho) { return scale / 2 * rho * rho; });
  }
  return model;
}

}  // namespace detail

/// U(x) = scale/2 |x - center|^2, the canonical strongly convex target.
template <typename Scalar>
Potential<Scalar> make_quadratic(Eigen::Index dim, const Vector<Scalar>& center, Scalar scale) {
  if (!(scale > 0)) throw InvalidParameter("make_quadratic: scale must be positive");
  if (center.size() != dim) throw InvalidParameter("make_quadratic: center has wrong dimension");
  return detail::quadratic_unchecked<Scalar>(center, scale);
}

template <typename Scalar>
Potential<Scalar> make_quadratic(Eigen::Index dim, Scalar scale = Scalar(1)) {
  return make_quadratic<Scalar>(dim, Vector<Scalar>::Zero(dim), scale);
}

/// U = 0. Not a valid Gibbs potential; only useful to isolate the noise in
/// coupling tests.
template <typename Scalar>
Potential<Scalar> make_flat(Eigen::Index dim) {
  return detail::quadratic_unchecked<Scalar>(Vector<Scalar>::Zero(dim), Scalar(0));
}

/// U(x) = (1 + |x|^2)^p with 1/2 < p <= 1. Satisfies both parametric
/// weak-convexity bounds with r = (1-p)/p, c_lower = 2p(2p-1), c_upper = 2p.
template <typename Scalar>
Potential<Scalar> make_power(Eigen::Index dim, Scalar p) {
  if (!(p > Scalar(0.5) && p <= Scalar(1))) {
    throw InvalidParameter("make_power: exponent p must lie in (1/2, 1]");
  }
  if (dim <= 0) throw InvalidParameter("make_power: dimension must be positive");
  using std::pow;
  auto value = [p](Eigen::Ref<const Vector<Scalar>> x) { return pow(Scalar(1) + x.squaredNorm(), p); };
  auto gradient = [p](Eigen::Ref<const Vector<Scalar>> x, Eigen::Ref<Vector<Scalar>> g) {
    const Scalar s = Scalar(1) + x.squaredNorm();
    g.noalias() = (2 * p * pow(s, p - 1)) * x;
  };
  ConvexityProfile<Scalar> profile;
  profile.kind = ConvexityKind::ParamH1H2;
  profile.r = (1 - p) / p;
  profile.c_lower = 2 * p * (2 * p - 1);
  profile.c_upper = 2 * p;
  using std::max;
  profile.L = max(Scalar(2) * p, Scalar(1));
  Potential<Scalar> model("power", dim, value, gradient, profile, Vector<Scalar>::Zero(dim));
  return model.with_radial([p](Scalar rho) { return pow(Scalar(1) + rho * rho, p); });
}

/// Gradient-descent search for the minimizer of a strongly convex model.
/// Stops once |grad U| <= tol.
template <typename Scalar>
Vector<Scalar> find_minimizer(const Potential<Scalar>& model, const Vector<Scalar>& start, Scalar step,
                              Scalar tol = Scalar(1e-10), long max_iter = 1'000'000) {
  Vector<Scalar> x = start;
  Vector<Scalar> g(model.dim());
  for (long it = 0; it < max_iter; ++it) {
    model.gradient(x, g);
    if (g.norm() <= tol) return x;
    x -= step * g;
  }
  throw ConvergenceError("minimizer search did not converge in " + std::to_string(max_iter) + " iterations");
}

/// Penalized potential U(x) + alpha/2 |x|^2, which is alpha-strongly convex.
template <typename Scalar>
Potential<Scalar> penalize(const Potential<Scalar>& base, Scalar alpha) {
  if (!(alpha > 0)) throw InvalidParameter("penalize: alpha must be positive");
  auto shared = std::make_shared<const Potential<Scalar>>(base);
  auto value = [shared, alpha](Eigen::Ref<const Vector<Scalar>> x) {
    return shared->value(x) + alpha / 2 * x.squaredNorm();
  };
  auto gradient = [shared, alpha](Eigen::Ref<const Vector<Scalar>> x, Eigen::Ref<Vector<Scalar>> g) {
    shared->gradient(x, g);
    g += alpha * x;
  };
  ConvexityProfile<Scalar> profile;
  profile.kind = ConvexityKind::StronglyConvex;
  profile.alpha = alpha;
  profile.L = base.profile().L + alpha;

  // Provisional model to run the minimizer search on.
  Potential<Scalar> draft(base.name() + "+penalty", base.dim(), value, gradient, profile, base.minimizer());
  Vector<Scalar> xstar = find_minimizer(draft, base.minimizer(), Scalar(1) / profile.L);

  Potential<Scalar> model(base.name() + "+penalty", base.dim(), value, gradient, profile, std::move(xstar));
  if (base.radial()) {
    auto radial = *base.radial();
    model = model.with_radial([radial, alpha](Scalar rho) { return radial(rho) + alpha / 2 * rho * rho; });
  }
  if (base.gaussian()) {
    const auto& g = *base.gaussian();
    const Scalar precision = g.precision + alpha;
    model = model.with_gaussian({Vector<Scalar>(g.precision / precision * g.mean), precision});
  }
  return model;
}

}  // namespace mlgibbs

#endif  // MLGIBBS_POTENTIALS_HPP
