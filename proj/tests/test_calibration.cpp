#include <cmath>

#include "doctest.h"
#include "mlgibbs/calibration.hpp"

using namespace mlgibbs;

namespace {

ConvexityProfile<double> power_profile() { return make_power<double>(1, 0.75).profile(); }

RegimeConstants power_constants() { return regime_constants(power_profile(), 1, 1.0); }

void check_schedule_invariants(const LevelSchedule& s) {
  REQUIRE(s.gamma.size() == static_cast<std::size_t>(s.J) + 1);
  for (int j = 0; j <= s.J; ++j) {
    CHECK(s.gamma[static_cast<std::size_t>(j)] == std::ldexp(s.gamma[0], -j));
    const double cells = s.T[static_cast<std::size_t>(j)] / s.coarse_step(j);
    CHECK(std::abs(cells - std::round(cells)) <= 1e-9 * cells);
    CHECK(s.tau < s.T[static_cast<std::size_t>(j)]);
  }
}

}  // namespace

// Golden numbers below were evaluated independently in double precision
// from the closed-form expressions.

TEST_CASE("regime constants") {
  ConvexityProfile<double> h1;
  h1.kind = ConvexityKind::ParamH1;
  h1.L = 1;
  h1.c_lower = 1;
  h1.r = 0.5;
  RegimeConstants c = regime_constants(h1, 1, 1.0);
  CHECK(c.gamma_star == 0.25);
  CHECK(c.psi_bar == doctest::Approx(10.0));

  h1.r = 0.0;
  c = regime_constants(h1, 1, 0.0);
  CHECK(c.psi_bar == doctest::Approx(3.0));
  CHECK(c.gamma_star == 0.25);

  const RegimeConstants pc = power_constants();
  CHECK(pc.gamma_star == doctest::Approx(1.0 / 9.0).epsilon(1e-15));
  CHECK(pc.psi_bar == 4.0);
  CHECK(pc.gamma_star <= 1 / (4 * power_profile().L));

  // linear in d, gamma* independent of d
  const RegimeConstants p3 = regime_constants(power_profile(), 3, 1.0);
  CHECK(p3.psi_bar == doctest::Approx(12.0));
  CHECK(p3.gamma_star == pc.gamma_star);
  CHECK(regime_constants(power_profile(), 1, 1.0, 2.5).psi_bar == doctest::Approx(10.0));

  CHECK_THROWS_AS(regime_constants(make_quadratic<double>(1, 1.0).profile(), 1, 1.0), InvalidParameter);
}

TEST_CASE("penalized calibration goldens") {
  const PenalizedPlan plan = calibrate_penalized(0.1, 1.0, 1, 0.75, 1.0);
  CHECK(plan.alpha == doctest::Approx(0.23094010767585033).epsilon(1e-14));
  CHECK(plan.schedule.J == 11);
  CHECK(plan.schedule.gamma[0] == doctest::Approx(0.07620711545124112).epsilon(1e-14));
  // raw horizons rounded up to the coarse grid of their level
  CHECK(plan.schedule.T[0] >= 584044.4127841579);
  CHECK(plan.schedule.T[0] < 584044.4127841579 + plan.schedule.gamma[0]);
  CHECK(plan.schedule.T[11] >= 285.1779359297646);
  CHECK(plan.schedule.T[11] < 285.1779359297646 + plan.schedule.gamma[10]);
  CHECK(plan.predicted_cost == doctest::Approx(40630989.591238126).epsilon(1e-12));
  CHECK(plan.schedule.tau == 0.0);
  check_schedule_invariants(plan.schedule);

  const PenalizedPlan half = calibrate_penalized(0.05, 1.0, 1, 0.75, 1.0);
  CHECK(half.alpha == doctest::Approx(plan.alpha / 2).epsilon(1e-15));
  CHECK(half.schedule.J >= plan.schedule.J);
}

TEST_CASE("penalized calibration clamps J and honours overrides") {
  const PenalizedPlan big = calibrate_penalized(0.8, 1.0, 1, 0.75, 1.0);
  CHECK(big.schedule.J == 1);
  CHECK_FALSE(big.warnings.empty());

  PenalizedOptions options;
  options.alpha = 0.5;
  const PenalizedPlan fixed = calibrate_penalized(0.1, 1.0, 1, 0.75, 1.0, options);
  CHECK(fixed.alpha == 0.5);

  options = {};
  options.statement_mode = true;
  const PenalizedPlan stmt = calibrate_penalized(0.1, 1.0, 1, 0.75, 1.0, options);
  CHECK(stmt.schedule.gamma[0] == doctest::Approx(0.1 / std::sqrt(0.75)));
  // every horizon carries the same 2^-J factor
  CHECK(stmt.schedule.T[0] == doctest::Approx(stmt.schedule.T[1]).epsilon(1e-6));

  CHECK_THROWS_AS(calibrate_penalized(0.0, 1.0, 1, 0.75, 1.0), InvalidParameter);
  CHECK_THROWS_AS(calibrate_penalized(0.1, 1.0, 1, -1.0, 1.0), InvalidParameter);
}

TEST_CASE("penalized complexity bound") {
  const double b = complexity_bound_penalized(0.1, 1.0, 1, 0.75, 1.0, 0.07620711545124112);
  CHECK(b == doctest::Approx(40630989.591238126).epsilon(1e-12));
  // linear in d apart from the rounded level count: ceil(log2 433) = 9, ceil(log2 866) = 10
  CHECK(complexity_bound_penalized(0.1, 1.0, 2, 0.75, 1.0, 0.1155) ==
        doctest::Approx(2 * std::pow(10.0 / 9.0, 3) * complexity_bound_penalized(0.1, 1.0, 1, 0.75, 1.0, 0.1155)));
  const double b4 = complexity_bound_penalized(0.4, 1.0, 1, 0.75, 1.0, 0.1155);
  const double b2 = complexity_bound_penalized(0.2, 1.0, 1, 0.75, 1.0, 0.1155);
  const double b1 = complexity_bound_penalized(0.1, 1.0, 1, 0.75, 1.0, 0.1155);
  CHECK(b4 < b2);
  CHECK(b2 < b1);
}

TEST_CASE("weak_i calibration goldens") {
  const RegimeConstants c = power_constants();
  const LevelSchedule s = calibrate_weak_i(0.2, 0.25, c.gamma_star, c, power_profile());
  CHECK(s.J == 8);
  CHECK(s.rho == 0.5);
  CHECK(s.T[0] >= 3961.6232725405307);
  CHECK(s.T[0] < 3961.6232725405307 + s.gamma[0]);
  check_schedule_invariants(s);
  CHECK(complexity_bound_weak(WeakVariant::I, 0.2, 0.25, 0.5, c.gamma_star, c, power_profile()) ==
        doctest::Approx(15757.260077924162).epsilon(1e-12));

  const LevelSchedule half = calibrate_weak_i(0.1, 0.25, c.gamma_star, c, power_profile());
  CHECK(half.T[0] == doctest::Approx(4 * 3961.6232725405307).epsilon(1e-4));
  CHECK(half.J >= s.J);
  CHECK_THROWS_AS(calibrate_weak_i(0.2, 0.25, 2 * c.gamma_star, c, power_profile()), InvalidParameter);
  CHECK_THROWS_AS(calibrate_weak_i(0.2, 0.5, c.gamma_star, c, power_profile()), InvalidParameter);
}

TEST_CASE("weak_i with r = 0 drops delta from the psi exponent") {
  const PotentialModel p1 = make_power<double>(1, 1.0);
  const RegimeConstants c = regime_constants(p1.profile(), 1, 1.0);
  const LevelSchedule a = calibrate_weak_i(0.2, 0.1, c.gamma_star, c, p1.profile());
  const LevelSchedule b = calibrate_weak_i(0.2, 0.2, c.gamma_star, c, p1.profile());
  // c_lower = 2, so the c factor is 2^-3/4 for every delta
  CHECK(a.T[0] == doctest::Approx(b.T[0]).epsilon(1e-3));
}

TEST_CASE("weak_ii calibration goldens") {
  const RegimeConstants c = power_constants();
  const LevelSchedule s = calibrate_weak_ii(0.2, 0.1, 0.5, c.gamma_star, c, power_profile());
  CHECK(s.J == 6);
  CHECK(s.T[0] >= 979.4723659153782);
  CHECK(s.T[0] < 979.4723659153782 + s.gamma[0]);
  CHECK(s.T[1] == doctest::Approx(979.4723659153782 * std::pow(2.0, -0.5)).epsilon(1e-3));
  check_schedule_invariants(s);
  CHECK(complexity_bound_weak(WeakVariant::II, 0.2, 0.1, 0.5, c.gamma_star, c, power_profile()) ==
        doctest::Approx(15868.110589962409).epsilon(1e-12));

  const LevelSchedule si = calibrate_weak_i(0.2, 0.1, c.gamma_star, c, power_profile());
  CHECK(s.J <= si.J);
}

TEST_CASE("weak_ii c factor is one when c_lower is one") {
  ConvexityProfile<double> prof;
  prof.kind = ConvexityKind::ParamH1;
  prof.L = 1;
  prof.c_lower = 1;
  prof.r = 0.0;
  const RegimeConstants c = regime_constants(prof, 1, 1.0);
  for (double rho : {0.3, 0.5, 0.7}) {
    const LevelSchedule s = calibrate_weak_ii(0.2, 0.1, rho, c.gamma_star, c, prof);
    // T0 = psi_bar / eps^2 exactly, up to grid rounding
    CHECK(s.T[0] == doctest::Approx(c.psi_bar / 0.04).epsilon(1e-3));
  }
}

TEST_CASE("weak complexity bounds follow their epsilon power laws") {
  const RegimeConstants c = power_constants();
  const auto prof = power_profile();
  const double i1 = complexity_bound_weak(WeakVariant::I, 0.2, 0.25, 0.5, c.gamma_star, c, prof);
  const double i2 = complexity_bound_weak(WeakVariant::I, 0.1, 0.25, 0.5, c.gamma_star, c, prof);
  CHECK(i2 / i1 == doctest::Approx(8.0));
  const double ii1 = complexity_bound_weak(WeakVariant::II, 0.2, 0.1, 0.5, c.gamma_star, c, prof);
  const double ii2 = complexity_bound_weak(WeakVariant::II, 0.1, 0.1, 0.5, c.gamma_star, c, prof);
  CHECK(ii2 / ii1 == doctest::Approx(std::pow(2.0, 2.5)));
}

TEST_CASE("penalization bias bounds") {
  const PenalizationBias zero = penalization_bias_bounds(0.0, 1.0);
  CHECK(zero.kl == 0.0);
  CHECK(zero.w1 == 0.0);
  CHECK(penalization_bias_bounds(0.2, 0.75).kl == doctest::Approx(0.00375));
  CHECK(penalization_bias_bounds(0.4, 0.75).w1 == doctest::Approx(2 * penalization_bias_bounds(0.2, 0.75).w1));
}

TEST_CASE("decreasing penalization gap") {
  CHECK(decreasing_penalization_gap(0.4, 0.2, 1, 1.0, 1.0, 4.0) == doctest::Approx(2.7973158564688863));
  CHECK(decreasing_penalization_gap(0.4, 0.4 - 1e-12, 1, 1.0, 1.0, 4.0) ==
        doctest::Approx(std::exp(-0.8) * 4));
  CHECK(decreasing_penalization_gap(0.4, 0.2, 1, 1.0, 1e4, 4.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(decreasing_penalization_gap(0.2, 0.4, 1, 1.0, 1.0, 4.0), InvalidParameter);
}

TEST_CASE("schedules round horizons up to their coarse grid") {
  const LevelSchedule s = make_schedule(0.1, 2, {1.05, 0.51, 0.26}, 0.15);
  CHECK(s.tau == doctest::Approx(0.2));
  CHECK(s.window_steps(0) == 11);
  CHECK(s.window_steps(1) == 6);
  CHECK(s.window_steps(2) == 6);
  CHECK(s.tau_steps(2) == 4);
  const LevelSchedule scaled = scale_horizons(s, 4);
  CHECK(scaled.T[0] == doctest::Approx(4.4));
  CHECK_THROWS_AS(make_schedule(0.1, 1, {1.0}), InvalidParameter);
  CHECK_THROWS_AS(make_schedule(0.1, 0, {1.0}, 2.0), InvalidParameter);
}
