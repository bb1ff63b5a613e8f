#include <doctest.h>

#include "eqfree/integrators.hpp"

#include <cmath>

using namespace eqfree;

namespace {

Rhs<double> decay() {
  return [](double, const VectorX<double>& u) { return (-u).eval(); };
}

double exp_err(const Trajectory<double>& traj) {
  return std::abs(traj.back_state()[0] - std::exp(-traj.back_time()));
}

}  // namespace

TEST_CASE("rk4_fixed integrates cubic-in-time rhs exactly") {
  // RK4's quadrature is exact through degree-3 polynomials in t
  Rhs<double> f = [](double t, const VectorX<double>&) {
    VectorX<double> du(1);
    du << 3 * t * t - 2 * t;
    return du;
  };
  VectorX<double> u0(1);
  u0 << 1.0;
  const auto traj = rk4_fixed<double>(f, 0.0, u0, 0.2, 5);
  CHECK(traj.size() == 6);
  CHECK(traj.back_time() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(traj.back_state()[0] ==
        doctest::Approx(1.0 * 1.0 * 1.0 - 1.0 + 1.0).epsilon(1e-14));
}

TEST_CASE("rk4_fixed uses exactly four evaluations per step") {
  Rhs<double> f = decay();
  VectorX<double> u0(1);
  u0 << 1.0;
  rk4_fixed<double>(f, 0.0, u0, 0.1, 7);
  CHECK(f.evaluations() == 4 * 7);
}

TEST_CASE("rk4_fixed converges at fourth order on exponential decay") {
  VectorX<double> u0(1);
  u0 << 1.0;
  const double e1 = exp_err(rk4_fixed<double>(decay(), 0.0, u0, 0.1, 10));
  const double e2 = exp_err(rk4_fixed<double>(decay(), 0.0, u0, 0.05, 20));
  CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.15));
}

TEST_CASE("rk4_fixed validates its arguments") {
  VectorX<double> u0(1);
  u0 << 1.0;
  CHECK_THROWS_AS(rk4_fixed<double>(decay(), 0.0, u0, 0.0, 3),
                  std::invalid_argument);
  CHECK_THROWS_AS(rk4_fixed<double>(decay(), 0.0, u0, 0.1, 0),
                  std::invalid_argument);
}

TEST_CASE("rk4_fixed reports non-finite blow-up with the partial trajectory") {
  // du/dt = u^2 from u(0) = 1 blows up at t = 1
  Rhs<double> f = [](double, const VectorX<double>& u) {
    return (u.array() * u.array()).matrix().eval();
  };
  VectorX<double> u0(1);
  u0 << 1.0;
  try {
    rk4_fixed<double>(f, 0.0, u0, 0.05, 40);
    FAIL("expected IntegrationError");
  } catch (const IntegrationError<double>& e) {
    CHECK(e.time_reached() > 0.5);
    CHECK(e.time_reached() < 1.35);
    CHECK(e.partial.size() >= 2);
  }
}

TEST_CASE("rk45_adaptive tracks exponential decay within tolerance") {
  VectorX<double> u0(1);
  u0 << 1.0;
  const auto traj = rk45_adaptive<double>(decay(), 0.0, 2.0, u0, 1e-8, 1e-12);
  CHECK(traj.back_time() == 2.0);  // final step clamps exactly to tf
  CHECK(exp_err(traj) < 1e-7);
}

TEST_CASE("rk45_adaptive error decreases with tolerance") {
  VectorX<double> u0(2);
  u0 << 1.0, 0.0;
  Rhs<double> osc = [](double, const VectorX<double>& u) {
    VectorX<double> du(2);
    du << u[1], -u[0];
    return du;
  };
  auto err = [&](double rtol) {
    const auto traj = rk45_adaptive<double>(osc, 0.0, 10.0, u0, rtol, 1e-14);
    VectorX<double> exact(2);
    exact << std::cos(10.0), -std::sin(10.0);
    return (traj.back_state() - exact).norm();
  };
  const double loose = err(1e-5), tight = err(1e-9);
  CHECK(tight < loose);
  CHECK(tight < 1e-7);
}

TEST_CASE("rk45_adaptive takes a single step on a zero field") {
  VectorX<double> u0(3);
  u0 << 1.0, -2.0, 0.5;
  Rhs<double> zero = [](double, const VectorX<double>& u) {
    return VectorX<double>::Zero(u.size()).eval();
  };
  const auto traj = rk45_adaptive<double>(zero, 0.0, 5.0, u0, 1e-6, 1e-9);
  CHECK(traj.size() == 2);
  CHECK(traj.back_time() == 5.0);
  CHECK((traj.back_state() - u0).norm() == 0.0);
}

TEST_CASE("rk45_adaptive integrates backwards in time") {
  VectorX<double> u0(1);
  u0 << std::exp(-2.0);
  const auto traj = rk45_adaptive<double>(decay(), 2.0, 0.0, u0, 1e-9, 1e-12);
  CHECK(traj.back_time() == 0.0);
  CHECK(traj.back_state()[0] == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("rk45_adaptive surfaces finite-time blow-up") {
  Rhs<double> f = [](double, const VectorX<double>& u) {
    return (u.array() * u.array()).matrix().eval();
  };
  VectorX<double> u0(1);
  u0 << 1.0;
  try {
    rk45_adaptive<double>(f, 0.0, 2.0, u0, 1e-6, 1e-9);
    FAIL("expected IntegrationError");
  } catch (const IntegrationError<double>& e) {
    CHECK(e.time_reached() > 0.9);
    CHECK(e.time_reached() < 1.05);
  }
}

TEST_CASE("rk45_adaptive validates tolerances and span") {
  VectorX<double> u0(1);
  u0 << 1.0;
  CHECK_THROWS_AS(rk45_adaptive<double>(decay(), 1.0, 1.0, u0, 1e-6, 1e-9),
                  std::invalid_argument);
  CHECK_THROWS_AS(rk45_adaptive<double>(decay(), 0.0, 1.0, u0, -1e-6, 1e-9),
                  std::invalid_argument);
  CHECK_THROWS_AS(rk45_adaptive<double>(decay(), 0.0, 1.0, u0, 1e-6, -1.0),
                  std::invalid_argument);
}

TEST_CASE("end_derivative differences the final trajectory interval") {
  Trajectory<double> traj;
  VectorX<double> a(2), b(2);
  a << 0.0, 1.0;
  b << 0.2, 0.6;
  traj.push_back(0.0, a);
  traj.push_back(0.1, b);
  const auto d = end_derivative(traj);
  CHECK(d[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(d[1] == doctest::Approx(-4.0).epsilon(1e-14));
}

TEST_CASE("end_derivative rejects degenerate trajectories") {
  Trajectory<double> traj;
  VectorX<double> a(1);
  a << 1.0;
  traj.push_back(0.0, a);
  CHECK_THROWS_AS(end_derivative(traj), std::invalid_argument);
  traj.push_back(0.0, a);  // duplicate time
  CHECK_THROWS_AS(end_derivative(traj), std::invalid_argument);
}

TEST_CASE("Rhs counts evaluations and resets") {
  Rhs<double> f = decay();
  VectorX<double> u0(1);
  u0 << 1.0;
  CHECK(f.evaluations() == 0);
  f(0.0, u0);
  f(0.0, u0);
  CHECK(f.evaluations() == 2);
  f.reset_evaluations();
  CHECK(f.evaluations() == 0);
}
