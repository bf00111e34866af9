#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "extprof/errors.hpp"
#include "extprof/profile.hpp"
#include "oracle.hpp"

using namespace extprof;

TEST_CASE("adaptive profile agrees with the fixed-step reference") {
  struct Case {
    double p, a, r;
  };
  // One slowly decaying run per exponent, heights well below threshold.
  const Case cases[] = {{1.2, 1.0, 2.0}, {1.5, 1.0, 2.0}, {1.8, 0.03, 2.0}};
  for (const Case& c : cases) {
    CAPTURE(c.p);
    const Params pr = Params::make(c.p);
    const ProfileTrajectory traj = integrate_profile(pr, c.a, c.r + 1.0);
    const auto ref = oracle::profile_at(pr, c.a, default_profile_r0(c.a), c.r, 400000);
    CHECK(std::abs(traj.f(c.r) - ref[0]) < 5e-9);
    CHECK(std::abs(traj.g(c.r) - ref[1]) < 5e-9);
  }
}

TEST_CASE("series start is insensitive to the launch radius") {
  // Halving r0 moves the reference value by far less than the integration
  // tolerance, so the truncated expansion is not the accuracy bottleneck.
  const Params pr = Params::make(1.5);
  const double r0 = default_profile_r0(1.0);
  const auto a0 = oracle::profile_at(pr, 1.0, r0, 1.0, 200000);
  const auto a1 = oracle::profile_at(pr, 1.0, 0.1 * r0, 1.0, 200000);
  CHECK(std::abs(a0[0] - a1[0]) < 1e-12);
  CHECK(std::abs(a0[1] - a1[1]) < 1e-12);
}

TEST_CASE("large heights cross zero at finite radius with negative slope") {
  const Params pr = Params::make(1.5);
  const ProfileTrajectory traj = integrate_profile(pr, 11.0);
  REQUIRE(traj.crossing.has_value());
  CHECK(traj.crossing->radius > 0.0);
  CHECK(traj.crossing->radius < 100.0);
  CHECK(traj.crossing->slope < 0.0);
  CHECK(traj.r_end == traj.crossing->radius);
  CHECK(std::abs(traj.f(traj.crossing->radius)) < 1e-9);
}

TEST_CASE("small heights stay positive and decrease") {
  const Params pr = Params::make(1.5);
  const ProfileTrajectory traj = integrate_profile(pr, 0.1, 30.0);
  CHECK(!traj.crossing.has_value());
  CHECK(traj.r_end == 30.0);
  double prev = traj.path.state(0, 0);
  for (std::size_t i = 1; i < traj.path.size(); ++i) {
    const double f = traj.path.state(i, 0);
    CHECK(f > 0.0);
    CHECK(f <= prev);
    CHECK(traj.path.state(i, 1) > 0.0);
    prev = f;
  }
}

TEST_CASE("gradient bound holds along the trajectory") {
  // g' = f - g with f <= a gives g <= a(1 - e^{-r}) pointwise.
  const Params pr = Params::make(1.5);
  for (const double a : {2.0, 11.0}) {
    const ProfileTrajectory traj = integrate_profile(pr, a, 30.0);
    for (std::size_t i = 1; i < traj.path.size(); ++i) {
      const double r = traj.path.time(i);
      const double g = traj.path.state(i, 1);
      const double bound = a * (1.0 - std::exp(-r));
      CHECK(g <= bound * (1.0 + 1e-9) + 1e-300);
    }
  }
}

TEST_CASE("slope accessor matches the momentum component") {
  const Params pr = Params::make(1.5);
  const ProfileTrajectory traj = integrate_profile(pr, 1.0, 10.0);
  for (double r : {0.5, 1.0, 3.0, 7.0}) {
    const double expect = -std::pow(traj.g(r), pr.exp_fast);
    CHECK(traj.fprime(r) == doctest::Approx(expect).epsilon(1e-13));
    CHECK(traj.fprime(r) < 0.0);
  }
}

TEST_CASE("residual probe is small for a converged run") {
  for (double p : {1.2, 1.5, 1.8}) {
    CAPTURE(p);
    const Params pr = Params::make(p);
    const ProfileTrajectory traj = integrate_profile(pr, 1.0, 30.0);
    const ResidualReport rep = check_residuals(traj);
    CHECK(rep.nodes_checked >= 3);
    CHECK(rep.max_ode_residual < 1e-6);
    CHECK(rep.max_identity_defect < 1e-6);
  }
}

TEST_CASE("profile runs are bit-identical across repeats") {
  const Params pr = Params::make(1.5);
  const ProfileTrajectory one = integrate_profile(pr, 1.0, 30.0);
  const ProfileTrajectory two = integrate_profile(pr, 1.0, 30.0);
  REQUIRE(one.path.size() == two.path.size());
  for (std::size_t i = 0; i < one.path.size(); ++i) {
    CHECK(one.path.time(i) == two.path.time(i));
    CHECK(one.path.state(i, 0) == two.path.state(i, 0));
    CHECK(one.path.state(i, 1) == two.path.state(i, 1));
  }
}

TEST_CASE("evaluation outside the integrated span raises") {
  const Params pr = Params::make(1.5);
  const ProfileTrajectory traj = integrate_profile(pr, 1.0, 5.0);
  try {
    traj.f(6.0);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.code() == Errc::out_of_span);
  }
}

TEST_CASE("invalid heights are rejected") {
  const Params pr = Params::make(1.5);
  CHECK_THROWS_AS(integrate_profile(pr, 0.0), std::exception);
  CHECK_THROWS_AS(integrate_profile(pr, -1.0), std::exception);
}
