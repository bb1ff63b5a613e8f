#include <doctest.h>

#include "eqfree/patches2.hpp"
#include "eqfree/random.hpp"

#include <cmath>
#include <numbers>

using namespace eqfree;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Field2<double> random_field(const PatchConfig2<double>& cfg,
                            std::uint64_t seed) {
  Field2<double> u = cfg.make_field();
  for (Eigen::Index k = 0; k < u.size(); ++k)
    u.data[k] = uniform_at(seed, std::uint64_t(k));
  return u;
}

PatchConfig2<double> demo_config() {
  return config_patches2<double>(
      nonlinear_diffusion_rhs2<double>,
      AxisSpec<double>{{0.0, kTwoPi}, 8, 0.25, 0, 5},
      AxisSpec<double>{{0.0, kTwoPi}, 6, 0.2, 0, 5});
}

}  // namespace

TEST_CASE("Field2 stores i fastest, then j, then patch column, then row") {
  Field2<double> u(3, 4, 5, 6);
  CHECK(u.size() == 3 * 4 * 5 * 6);
  CHECK(u.offset(0, 0, 0, 0) == 0);
  CHECK(u.offset(1, 0, 0, 0) == 1);
  CHECK(u.offset(0, 1, 0, 0) == 3);
  CHECK(u.offset(0, 0, 1, 0) == 12);
  CHECK(u.offset(0, 0, 0, 1) == 60);
  u(2, 3, 4, 5) = 7.0;
  CHECK(u.data[u.size() - 1] == 7.0);
}

TEST_CASE("config_patches2 replicates the per-axis coordinates") {
  const auto cfg = demo_config();
  CHECK(cfg.flat_size() == 5 * 5 * 8 * 6);
  for (Eigen::Index jy : {0, 5})
    for (Eigen::Index jx : {0, 3, 7})
      for (Eigen::Index j : {0, 2, 4})
        for (Eigen::Index i : {0, 2, 4}) {
          CHECK(cfg.x(i, j, jx, jy) == cfg.ax.x(i, jx));
          CHECK(cfg.y(i, j, jx, jy) == cfg.ay.x(j, jy));
        }
  // 2D construction has no edgy variant, so even n_sub is rejected
  CHECK_THROWS_AS(config_patches2<double>(
                      nonlinear_diffusion_rhs2<double>,
                      AxisSpec<double>{{0.0, 1.0}, 4, 0.25, 2, 5},
                      AxisSpec<double>{{0.0, 1.0}, 4, 0.25, 2, 4}),
                  std::invalid_argument);
}

TEST_CASE("patch_edge_int2 reproduces separable band-limited fields") {
  const auto cfg = demo_config();
  auto f = [](double x) { return std::sin(2.0 * x + 0.3); };
  auto g = [](double y) { return std::cos(y) + 0.5; };
  Field2<double> u = cfg.make_field();
  for (Eigen::Index k = 0; k < u.size(); ++k)
    u.data[k] = f(cfg.x.data[k]) * g(cfg.y.data[k]);

  const auto filled = patch_edge_int2(cfg, u);
  double worst = 0;
  for (Eigen::Index k = 0; k < u.size(); ++k)
    worst = std::max(std::abs(filled.data[k] -
                              f(cfg.x.data[k]) * g(cfg.y.data[k])),
                     worst);
  CHECK(worst < 1e-10);
}

TEST_CASE("patch_edge_int2 is idempotent") {
  const auto cfg = config_patches2<double>(
      nonlinear_diffusion_rhs2<double>,
      AxisSpec<double>{{-3.0, 3.0}, 5, 0.25, 2, 5},
      AxisSpec<double>{{-2.0, 2.0}, 4, 0.25, 0, 7});
  const auto u = random_field(cfg, 11);
  const auto once = patch_edge_int2(cfg, u);
  const auto twice = patch_edge_int2(cfg, once);
  CHECK((twice.data - once.data).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("patch_rhs2 commutes with reflecting both axes") {
  const auto cfg = config_patches2<double>(
      nonlinear_diffusion_rhs2<double>,
      AxisSpec<double>{{-3.0, 3.0}, 5, 0.25, 2, 5},
      AxisSpec<double>{{-2.0, 2.0}, 4, 0.25, 0, 7});
  const auto u = random_field(cfg, 29);

  const auto reflect = [&cfg](const Field2<double>& v) {
    Field2<double> r = cfg.make_field();
    for (Eigen::Index jy = 0; jy < v.npy; ++jy)
      for (Eigen::Index jx = 0; jx < v.npx; ++jx)
        for (Eigen::Index j = 0; j < v.ny; ++j)
          for (Eigen::Index i = 0; i < v.nx; ++i)
            r(i, j, jx, jy) = v(v.nx - 1 - i, v.ny - 1 - j, v.npx - 1 - jx,
                                v.npy - 1 - jy);
    return r;
  };

  Field2<double> ru = reflect(u);
  const VectorX<double> a = patch_rhs2(cfg, 0.0, ru.data);
  Field2<double> du = cfg.make_field();
  du.data = patch_rhs2(cfg, 0.0, u.data);
  const VectorX<double> b = reflect(du).data;
  CHECK((a - b).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("nonlinear diffusion stencil: cubed five-point differences") {
  Field2<double> u(5, 5, 1, 1), x(5, 5, 1, 1), y(5, 5, 1, 1);
  for (Eigen::Index j = 0; j < 5; ++j)
    for (Eigen::Index i = 0; i < 5; ++i) {
      x(i, j, 0, 0) = 0.1 * double(i);
      y(i, j, 0, 0) = 0.1 * double(j);
    }

  // constant field: interior derivative vanishes identically
  u.data.setConstant(1.0);
  CHECK(nonlinear_diffusion_rhs2<double>(0.0, u, x, y)
            .data.lpNorm<Eigen::Infinity>() == 0.0);

  // single spike of height 2: centre loses 2 * 2^3 per axis, each of the
  // four neighbours gains 2^3, all over d^2 = 0.01
  u.data.setZero();
  u(2, 2, 0, 0) = 2.0;
  const auto du = nonlinear_diffusion_rhs2<double>(0.0, u, x, y);
  CHECK(du(2, 2, 0, 0) == doctest::Approx(-3200.0));
  CHECK(du(1, 2, 0, 0) == doctest::Approx(800.0));
  CHECK(du(3, 2, 0, 0) == doctest::Approx(800.0));
  CHECK(du(2, 1, 0, 0) == doctest::Approx(800.0));
  CHECK(du(2, 3, 0, 0) == doctest::Approx(800.0));
  CHECK(du(1, 1, 0, 0) == 0.0);
}

TEST_CASE("patch_rhs2 zeroes every edge face") {
  const auto cfg = demo_config();
  const auto u = random_field(cfg, 41);
  Field2<double> du = cfg.make_field();
  du.data = patch_rhs2(cfg, 0.0, u.data);
  for (Eigen::Index jy = 0; jy < du.npy; ++jy)
    for (Eigen::Index jx = 0; jx < du.npx; ++jx)
      for (Eigen::Index j = 0; j < du.ny; ++j)
        for (Eigen::Index i = 0; i < du.nx; ++i)
          if (i == 0 || i == du.nx - 1 || j == 0 || j == du.ny - 1)
            CHECK(du(i, j, jx, jy) == 0.0);
}

TEST_CASE("full-domain reference lattice conserves total mass") {
  const Eigen::Index p1 = 12, p2 = 10;
  Rhs<double> f = full_domain_rhs2<double>(nonlinear_diffusion_rhs2<double>,
                                           {-3.0, 3.0}, {-2.0, 2.0}, p1, p2);
  VectorX<double> u(p1 * p2);
  for (Eigen::Index k = 0; k < u.size(); ++k)
    u[k] = 0.5 + uniform_at(3, std::uint64_t(k));
  const VectorX<double> du = f(0.0, u);
  // periodic second differences telescope to zero in every direction
  CHECK(std::abs(du.sum()) < 1e-12 * du.cwiseAbs().sum());
  CHECK(f(0.0, VectorX<double>::Constant(p1 * p2, 0.7))
            .lpNorm<Eigen::Infinity>() == 0.0);
}
