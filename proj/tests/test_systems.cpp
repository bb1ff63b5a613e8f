#include <doctest.h>

#include "eqfree/integrators.hpp"
#include "eqfree/systems.hpp"

#include <cmath>

using namespace eqfree;

TEST_CASE("slow-fast pair: field values and invariant manifold") {
  Rhs<double> f = slowfast_rhs<double>(1e5);

  VectorX<double> u(2);
  u << 0.0, 0.0;
  VectorX<double> du = f(0.0, u);
  CHECK(du[0] == 0.0);
  CHECK(du[1] == 1e5);

  // on u2 = cos(u1) the fast component is at rest
  u << 0.7, std::cos(0.7);
  CHECK(f(0.3, u)[1] == 0.0);

  u << 1.0, std::cos(1.0);
  du = f(0.0, u);
  CHECK(du[0] ==
        doctest::Approx(std::cos(1.0) * std::sin(std::cos(1.0))).epsilon(1e-12));
  CHECK(du[0] == doctest::Approx(0.2779356).epsilon(1e-5));
}

TEST_CASE("slow-fast pair collapses onto u2 = cos(u1)") {
  const double beta = 1e5;
  Rhs<double> f = slowfast_rhs<double>(beta);
  VectorX<double> u0(2);
  u0 << 1.0, 0.0;  // starts a distance cos(1) off the manifold
  // nine fast time constants shrink the gap by e^-9 ~ 1.2e-4
  const auto traj = rk45_adaptive<double>(f, 0.0, 9.0 / beta, u0, 1e-8, 1e-10);
  const auto& u = traj.states.back();
  CHECK(std::abs(u[1] - std::cos(u[0])) < 1e-3);
  CHECK(std::abs(u[0] - 1.0) < 1e-3);  // the slow variable has barely moved
}

TEST_CASE("random_stiff_system draws the documented spectrum") {
  const auto sys = random_stiff_system(5, 42);
  REQUIRE(sys.dim() == 15);
  REQUIRE(sys.n_slow == 10);

  CHECK((sys.q.transpose() * sys.q -
         MatrixX<double>::Identity(15, 15)).lpNorm<Eigen::Infinity>() < 1e-12);
  for (Eigen::Index k = 0; k < sys.dim(); ++k) {
    CHECK((sys.a * sys.q.col(k) - sys.eigs[k] * sys.q.col(k))
              .lpNorm<Eigen::Infinity>() < 1e-8);
    if (k < sys.n_slow)
      CHECK(std::abs(sys.eigs[k]) <= 0.1);
    else {
      CHECK(sys.eigs[k] <= -10000.0);
      CHECK(sys.eigs[k] >= -20000.0);
    }
  }
  CHECK_THROWS_AS(random_stiff_system(-1, 0), std::invalid_argument);
}

TEST_CASE("random_stiff_system is pinned by its seed") {
  const auto a = random_stiff_system(3, 42);
  const auto b = random_stiff_system(3, 42);
  CHECK(a.a == b.a);
  CHECK(a.b == b.b);
  CHECK(a.u0 == b.u0);
  const auto c = random_stiff_system(3, 43);
  CHECK(a.a != c.a);
}

TEST_CASE("zero fast modes leaves a mild ten-dimensional system") {
  const auto sys = random_stiff_system(0, 7);
  CHECK(sys.dim() == 10);
  CHECK(sys.eigs.cwiseAbs().maxCoeff() <= 0.1);
}

TEST_CASE("exact_solution solves the linear system") {
  const auto sys = random_stiff_system(2, 11);
  CHECK((exact_solution(sys, 0.0) - sys.u0).lpNorm<Eigen::Infinity>() < 1e-10);

  // independent cross-check: adaptive integration of the same rhs
  Rhs<double> f = sys.rhs();
  const double t_end = 0.3;
  const auto traj =
      rk45_adaptive<double>(f, 0.0, t_end, sys.u0, 1e-9, 1e-12);
  const VectorX<double> want = exact_solution(sys, t_end);
  CHECK((traj.states.back() - want).lpNorm<Eigen::Infinity>() <
        1e-6 * want.lpNorm<Eigen::Infinity>());

  // rhs agrees with the assembled matrices
  CHECK((f(0.0, sys.u0) - (sys.a * sys.u0 + sys.b))
            .lpNorm<Eigen::Infinity>() == 0.0);

  auto singular = sys;
  singular.eigs[0] = 0.0;
  CHECK_THROWS_AS(exact_solution(singular, 1.0), std::invalid_argument);
}

TEST_CASE("slow restriction inverts slow lifting") {
  const auto sys = random_stiff_system(4, 5);
  const auto r = slow_restrict(sys);
  const auto l = slow_lift(sys);

  VectorX<double> x(sys.n_slow), donor(sys.dim());
  for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = std::sin(double(k) + 1);
  for (Eigen::Index k = 0; k < donor.size(); ++k)
    donor[k] = std::cos(2.0 * double(k));

  const VectorX<double> lifted = l(x, donor);
  CHECK((r(lifted) - x).lpNorm<Eigen::Infinity>() < 1e-12);

  // lifting preserves the donor's fast eigen-components
  const MatrixX<double> qf = sys.q.rightCols(sys.dim() - sys.n_slow);
  CHECK((qf.transpose() * lifted - qf.transpose() * donor)
            .lpNorm<Eigen::Infinity>() < 1e-12);
}
