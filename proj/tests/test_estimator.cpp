#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mlgibbs/estimator.hpp"
#include "mlgibbs/noise.hpp"
#include "mlgibbs/sde.hpp"

using namespace mlgibbs;

namespace {

const Observable first = [](const VectorXd& x) { return x(0); };

}  // namespace

TEST_CASE("level 0 is the occupation average of one Euler path") {
  const PotentialModel q = make_quadratic<double>(1, 1.0);
  const LevelSchedule s = make_schedule(0.1, 0, {50.0}, 5.0);
  const VectorXd x0 = VectorXd::Constant(1, 2.0);
  const EstimatorOutput out = multilevel_estimate(q, first, s, 1.0, x0, 17, 3);

  NoiseStream noise(17, level_stream_id(3, 0));
  const auto path = simulate_path(q, x0, 0.1, 1.0, s.window_steps(0), noise);
  const std::function<double(const VectorXd&)> f = first;
  CHECK(out.value == doctest::Approx(occupation_average(f, path, 0.1, 5.0, 50.0)).epsilon(1e-13));
  CHECK(out.gradient_evals == 500);
  CHECK(out.gaussians_drawn == 500);
}

TEST_CASE("correction levels use coupled pairs observed at coarse times") {
  const PotentialModel p = make_power<double>(1, 0.75);
  const LevelSchedule s = make_schedule(0.1, 1, {20.0, 10.0});
  const VectorXd x0 = VectorXd::Zero(1);
  const EstimatorOutput out = multilevel_estimate(p, first, s, 1.0, x0, 5, 0);
  REQUIRE(out.level_values.size() == 2);

  NoiseStream noise(5, level_stream_id(0, 1));
  const auto pairs = simulate_coupled(p, x0, 0.1, 1.0, s.window_steps(1), noise);
  double sum = 0;
  for (std::int64_t k = 0; k < s.window_steps(1); ++k) {
    sum += pairs[static_cast<std::size_t>(k)].fine.position(0) - pairs[static_cast<std::size_t>(k)].coarse.position(0);
  }
  CHECK(out.level_values[1] == doctest::Approx(sum / 100).epsilon(1e-12));
  CHECK(out.value == doctest::Approx(out.level_values[0] + out.level_values[1]));
}

TEST_CASE("gradient evaluation count matches the cost formula") {
  const PotentialModel p = make_power<double>(1, 0.75);
  const LevelSchedule s = make_schedule(1.0 / 9, 3, {40.0, 30.0, 20.0, 10.0});
  const EstimatorOutput out = multilevel_estimate(p, first, s, 1.0, VectorXd::Zero(1), 1, 0);
  std::uint64_t expected = static_cast<std::uint64_t>(std::llround(40.0 * 9));
  expected += 3 * static_cast<std::uint64_t>(std::llround(30.0 * 9));
  expected += 3 * static_cast<std::uint64_t>(std::llround(20.0 * 18));
  expected += 3 * static_cast<std::uint64_t>(std::llround(10.0 * 36));
  CHECK(out.gradient_evals == expected);
  CHECK(cost_of(s) == expected);
}

TEST_CASE("estimates are deterministic per replicate and differ across replicates") {
  const PotentialModel p = make_power<double>(2, 0.75);
  const LevelSchedule s = make_schedule(0.1, 2, {10.0, 8.0, 6.0});
  const VectorXd x0 = VectorXd::Zero(2);
  const EstimatorOutput a = multilevel_estimate(p, first, s, 1.0, x0, 9, 4);
  const EstimatorOutput b = multilevel_estimate(p, first, s, 1.0, x0, 9, 4);
  const EstimatorOutput c = multilevel_estimate(p, first, s, 1.0, x0, 9, 5);
  CHECK(a.level_values == b.level_values);
  CHECK(a.value == b.value);
  CHECK(a.value != c.value);
}

TEST_CASE("constant observables have zero corrections") {
  const PotentialModel q = make_quadratic<double>(1, 1.0);
  const LevelSchedule s = make_schedule(0.1, 3, {5.0, 4.0, 3.0, 2.0});
  const Observable c = [](const VectorXd&) { return 2.5; };
  const EstimatorOutput out = multilevel_estimate(q, c, s, 1.0, VectorXd::Zero(1), 1, 1);
  CHECK(out.level_values[0] == doctest::Approx(2.5));
  for (int j = 1; j <= 3; ++j) CHECK(out.level_values[static_cast<std::size_t>(j)] == 0.0);
  CHECK(out.value == doctest::Approx(2.5));
}

TEST_CASE("multilevel estimate of the Gaussian mean is unbiased on average") {
  const VectorXd center = VectorXd::Constant(1, 1.0);
  const PotentialModel q = make_quadratic<double>(1, center, 1.0);
  const LevelSchedule s = make_schedule(0.2, 2, {200.0, 100.0, 50.0}, 10.0);
  double sum = 0;
  const int R = 40;
  for (int r = 0; r < R; ++r) sum += multilevel_estimate(q, first, s, 1.0, VectorXd::Zero(1), 3, r).value;
  CHECK(std::abs(sum / R - 1.0) < 0.05);
}

TEST_CASE("overflow reports the level") {
  const PotentialModel q = make_quadratic<double>(1, 100.0);
  // gamma far above 2/L makes the scheme explode
  const LevelSchedule s = make_schedule(0.5, 1, {2000.0, 2000.0});
  try {
    multilevel_estimate(q, first, s, 1.0, VectorXd::Zero(1), 1, 0);
    FAIL("expected overflow");
  } catch (const NumericalOverflow& e) {
    CHECK(e.level() == 0);
    CHECK(e.step_index() > 0);
  }
}

TEST_CASE("estimator input validation") {
  const PotentialModel q = make_quadratic<double>(1, 1.0);
  const LevelSchedule s = make_schedule(0.1, 0, {1.0});
  CHECK_THROWS_AS(multilevel_estimate(q, first, s, 0.0, VectorXd::Zero(1), 1, 0), InvalidParameter);
  CHECK_THROWS_AS(multilevel_estimate(q, first, s, 1.0, VectorXd::Zero(2), 1, 0), InvalidParameter);
}

TEST_CASE("cost_of examples") {
  CHECK(cost_of(make_schedule(0.1, 0, {10.0})) == 100);
  CHECK(cost_of(make_schedule(1.0, 1, {8.0, 4.0})) == 20);
  const LevelSchedule s = make_schedule(0.25, 2, {10.0, 6.0, 3.0});
  CHECK(cost_of(scale_horizons(s, 2)) == 2 * cost_of(s));
}

TEST_CASE("level-0 bias decays with the horizon") {
  const PotentialModel q = make_quadratic<double>(1, 1.0);
  const VectorXd x0 = VectorXd::Constant(1, 3.0);
  const int R = 400;
  std::vector<double> bias;
  for (double T : {25.0, 50.0, 100.0}) {
    const LevelSchedule s = make_schedule(0.05, 0, {T});
    double sum = 0;
    for (int r = 0; r < R; ++r) sum += multilevel_estimate(q, first, s, 1.0, x0, 31, r).value;
    bias.push_back(std::abs(sum / R));
  }
  CHECK(bias[1] < bias[0]);
  CHECK(bias[2] < bias[1]);
}
