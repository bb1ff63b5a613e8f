#include <doctest.h>

#include "eqfree/patches1.hpp"
#include "eqfree/random.hpp"
#include "eqfree/systems.hpp"

#include <cmath>
#include <numbers>

using namespace eqfree;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

TEST_CASE("lagrange_weights reproduces the quadratic stencil at s = 1/2") {
  const auto w = lagrange_weights<double>(2, 0.5);
  REQUIRE(w.size() == 3);
  CHECK(w[0] == doctest::Approx(-0.125).epsilon(1e-14));
  CHECK(w[1] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(w[2] == doctest::Approx(0.375).epsilon(1e-14));
}

TEST_CASE("lagrange_weights form a partition of unity and shift polynomials") {
  for (const int ord : {2, 4, 6, 8}) {
    const double s = 0.3;
    const auto w = lagrange_weights<double>(ord, s);
    REQUIRE(w.size() == ord + 1);
    CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-13));
    // exact on t^ord across the integer nodes -ord/2 .. ord/2
    double acc = 0;
    for (int k = 0; k <= ord; ++k)
      acc += w[k] * std::pow(double(k - ord / 2), ord);
    CHECK(acc == doctest::Approx(std::pow(s, ord)).epsilon(1e-10));
  }
  CHECK_THROWS_AS(lagrange_weights<double>(3, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(lagrange_weights<double>(2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(lagrange_weights<double>(2, 1.0), std::invalid_argument);
}

TEST_CASE("spectral_edge_values shifts resolvable Fourier modes exactly") {
  const Eigen::Index n = 8;
  const double s = 0.375;
  for (const int k : {1, 2, 3}) {
    VectorX<double> mids(n), want(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      mids[j] = std::cos(kTwoPi * k * double(j) / double(n) + 0.7);
      want[j] = std::cos(kTwoPi * k * (double(j) + s) / double(n) + 0.7);
    }
    const auto got = spectral_edge_values<double>(mids, s);
    CHECK((got - want).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("spectral_edge_values treats the even-size alternating mode as real") {
  // at the resolution limit the shifted mode keeps the real convention
  // cos(pi (j+s)) -> cos(pi s) * (-1)^j
  const Eigen::Index n = 8;
  const double s = 0.25;
  VectorX<double> mids(n);
  for (Eigen::Index j = 0; j < n; ++j) mids[j] = (j % 2 == 0) ? 1.0 : -1.0;
  const auto got = spectral_edge_values<double>(mids, s);
  for (Eigen::Index j = 0; j < n; ++j)
    CHECK(got[j] == doctest::Approx(std::cos(std::numbers::pi * s) * mids[j])
                        .epsilon(1e-12));
}

TEST_CASE("spectral_shift_matrix agrees with the direct transform") {
  const Eigen::Index n = 9;
  const double s = -0.25;
  const auto m = spectral_shift_matrix<double>(n, s);
  Rng rng(7);
  VectorX<double> v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  CHECK((m * v - spectral_edge_values<double>(v, s))
            .lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("config_patches1 lays out the documented geometry") {
  const auto cfg = config_patches1<double>(heat_rhs1<double>(), {0.0, 10.0},
                                           5, 0.25, 2, 5);
  CHECK(cfg.H == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(cfg.d == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(cfg.i0 == 2);
  REQUIRE(cfg.centers.size() == 5);
  CHECK(cfg.centers[0] == doctest::Approx(1.0));
  CHECK(cfg.centers[4] == doctest::Approx(9.0));
  // patch 0 spans [0.5, 1.5]: edges at the center +- ratio*H
  CHECK(cfg.x(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(cfg.x(2, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(cfg.x(4, 0) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(cfg.flat_size() == 25);
}

TEST_CASE("config_patches1 rejects invalid requests") {
  const auto heat = heat_rhs1<double>();
  using P = std::pair<double, double>;
  CHECK_THROWS_AS(config_patches1<double>(heat, P{1.0, 0.0}, 5, 0.25, 2, 5),
                  std::invalid_argument);
  CHECK_THROWS_AS(config_patches1<double>(heat, P{0.0, 1.0}, 2, 0.25, 2, 5),
                  std::invalid_argument);
  CHECK_THROWS_AS(config_patches1<double>(heat, P{0.0, 1.0}, 5, 0.6, 2, 5),
                  std::invalid_argument);
  CHECK_THROWS_AS(config_patches1<double>(heat, P{0.0, 1.0}, 5, 0.25, 3, 5),
                  std::invalid_argument);
  CHECK_THROWS_AS(config_patches1<double>(heat, P{0.0, 1.0}, 5, 0.25, 2, 4),
                  std::invalid_argument);  // even n needs edgy coupling
  CHECK_THROWS_AS(config_patches1<double>(heat, P{0.0, 1.0}, 5, 0.25, 6, 5),
                  std::invalid_argument);  // stencil wider than patch count
  CHECK_THROWS_AS(
      config_patches1<double>(heat, P{0.0, 1.0}, 5, 0.25, 2, 5, false, false),
      std::invalid_argument);  // only periodic domains
}

TEST_CASE("Lagrange coupling is exact on macro polynomials of its degree") {
  for (const int ord : {2, 4}) {
    const auto cfg = config_patches1<double>(heat_rhs1<double>(), {0.0, 8.0},
                                             8, 0.25, ord, 5);
    auto poly = [ord](double x) { return std::pow(x - 4.0, ord) + 2.0 * x; };
    MatrixX<double> u(cfg.n_sub, cfg.n_patch);
    for (Eigen::Index j = 0; j < cfg.n_patch; ++j)
      for (Eigen::Index i = 0; i < cfg.n_sub; ++i)
        u(i, j) = poly(cfg.x(i, j));
    const auto filled = patch_edge_int1<double>(cfg, u);
    // interior patches only: the periodic wrap is not polynomial
    for (Eigen::Index j = ord / 2; j < cfg.n_patch - ord / 2; ++j) {
      CHECK(std::abs(filled(0, j) - poly(cfg.x(0, j))) < 1e-10);
      CHECK(std::abs(filled(cfg.n_sub - 1, j) -
                     poly(cfg.x(cfg.n_sub - 1, j))) < 1e-10);
    }
  }
}

TEST_CASE("spectral coupling is exact on resolvable Fourier modes") {
  const auto cfg = config_patches1<double>(heat_rhs1<double>(), {0.0, kTwoPi},
                                           8, 0.25, 0, 5);
  for (const int k : {1, 2, 3}) {
    MatrixX<double> u(cfg.n_sub, cfg.n_patch);
    for (Eigen::Index j = 0; j < cfg.n_patch; ++j)
      for (Eigen::Index i = 0; i < cfg.n_sub; ++i)
        u(i, j) = std::sin(k * cfg.x(i, j) + 0.3);
    const auto filled = patch_edge_int1<double>(cfg, u);
    for (Eigen::Index j = 0; j < cfg.n_patch; ++j) {
      CHECK(std::abs(filled(0, j) - std::sin(k * cfg.x(0, j) + 0.3)) < 1e-10);
      CHECK(std::abs(filled(cfg.n_sub - 1, j) -
                     std::sin(k * cfg.x(cfg.n_sub - 1, j) + 0.3)) < 1e-10);
    }
  }
}

TEST_CASE("patch_edge_int1 is idempotent") {
  for (const int ord : {0, 2, 4}) {
    const auto cfg = config_patches1<double>(heat_rhs1<double>(), {0.0, 1.0},
                                             9, 0.2, ord, 7);
    Rng rng(17);
    MatrixX<double> u(cfg.n_sub, cfg.n_patch);
    for (Eigen::Index j = 0; j < cfg.n_patch; ++j)
      for (Eigen::Index i = 0; i < cfg.n_sub; ++i) u(i, j) = rng.normal();
    const auto once = patch_edge_int1<double>(cfg, u);
    const auto twice = patch_edge_int1<double>(cfg, once);
    CHECK((twice - once).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("edge interpolation commutes with domain reflection") {
  // mirror-symmetric grids: reflecting the field then coupling equals
  // coupling then reflecting, for standard and edgy variants alike
  struct Case {
    int ord;
    Eigen::Index n_sub;
    bool edgy;
  };
  for (const auto& c : {Case{2, 5, false}, Case{4, 5, false}, Case{0, 5, false},
                        Case{2, 6, true}, Case{4, 6, true}, Case{0, 6, true}}) {
    const auto cfg = config_patches1<double>(heat_rhs1<double>(), {-1.0, 1.0},
                                             8, 0.25, c.ord, c.n_sub, c.edgy);
    Rng rng(23 + c.ord);
    MatrixX<double> u(cfg.n_sub, cfg.n_patch);
    for (Eigen::Index j = 0; j < cfg.n_patch; ++j)
      for (Eigen::Index i = 0; i < cfg.n_sub; ++i) u(i, j) = rng.normal();

    const auto reflect = [&cfg](const MatrixX<double>& v) {
      return MatrixX<double>(v.reverse());
    };
    const auto a = patch_edge_int1<double>(cfg, reflect(u));
    const auto b = reflect(patch_edge_int1<double>(cfg, u));
    CHECK((a - b).lpNorm<Eigen::Infinity>() < 1e-13);
  }
}

TEST_CASE("patch_rhs1 evaluates the heat stencil and zeroes the edge rows") {
  const auto cfg = config_patches1<double>(heat_rhs1<double>(), {0.0, kTwoPi},
                                           8, 0.25, 0, 5);
  MatrixX<double> u(cfg.n_sub, cfg.n_patch);
  for (Eigen::Index j = 0; j < cfg.n_patch; ++j)
    for (Eigen::Index i = 0; i < cfg.n_sub; ++i)
      u(i, j) = std::sin(cfg.x(i, j));
  const auto du = unpack1<double>(cfg, patch_rhs1<double>(cfg, 0.0, pack1<double>(u)));
  // sin is an exact eigenvector of the coupled lattice laplacian
  const double lam = -(4.0 / (cfg.d * cfg.d)) *
                     std::pow(std::sin(cfg.d / 2.0), 2);
  for (Eigen::Index j = 0; j < cfg.n_patch; ++j) {
    CHECK(du(0, j) == 0.0);
    CHECK(du(cfg.n_sub - 1, j) == 0.0);
    for (Eigen::Index i = 1; i < cfg.n_sub - 1; ++i)
      CHECK(std::abs(du(i, j) - lam * std::sin(cfg.x(i, j))) < 1e-9);
  }
}

TEST_CASE("patch_rhs1 surfaces non-finite micro derivatives with the patch") {
  MicroRhs1<double> bad = [](double, const MatrixX<double>& u,
                             const MatrixX<double>&) {
    MatrixX<double> du = MatrixX<double>::Zero(u.rows(), u.cols());
    du(1, 2) = std::numeric_limits<double>::quiet_NaN();
    return du;
  };
  const auto cfg =
      config_patches1<double>(bad, {0.0, 1.0}, 5, 0.25, 2, 5);
  const VectorX<double> flat = VectorX<double>::Ones(cfg.flat_size());
  try {
    patch_rhs1<double>(cfg, 0.0, flat);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("patch 2") != std::string::npos);
  }
}

TEST_CASE("full-domain reference field matches the coupled lattice") {
  // constant field: zero derivative; sine: lattice dispersion eigenvalue
  const Eigen::Index p = 64;
  Rhs<double> f =
      full_domain_rhs1<double>(heat_rhs1<double>(), {0.0, kTwoPi}, p);
  const double d = kTwoPi / double(p);
  VectorX<double> c = VectorX<double>::Constant(p, 2.5);
  CHECK(f(0.0, c).lpNorm<Eigen::Infinity>() < 1e-12);

  VectorX<double> s(p), want(p);
  const double lam = -(4.0 / (d * d)) * std::pow(std::sin(d / 2.0), 2);
  for (Eigen::Index i = 0; i < p; ++i) {
    s[i] = std::sin(d * double(i));
    want[i] = lam * s[i];
  }
  CHECK((f(0.0, s) - want).lpNorm<Eigen::Infinity>() < 1e-9);
}
