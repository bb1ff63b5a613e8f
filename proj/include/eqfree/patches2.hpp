#pragma once
// 2D patch scheme: a rectangular array of rectangular patches on a doubly
// periodic macro domain, coupled axis by axis with the 1D machinery.  Fields
// carry four indices u(i, j, jx, jy) — micro x, micro y, patch column, patch
// row — stored flat (i fastest) so integrators see a plain vector.

#include "eqfree/patches1.hpp"
#include "eqfree/types.hpp"

#include <utility>

namespace eqfree {

template <typename Scalar>
struct Field2 {
  Eigen::Index nx{}, ny{}, npx{}, npy{};
  VectorX<Scalar> data;

  Field2() = default;
  Field2(Eigen::Index nx_, Eigen::Index ny_, Eigen::Index npx_,
         Eigen::Index npy_)
      : nx(nx_), ny(ny_), npx(npx_), npy(npy_),
        data(VectorX<Scalar>::Zero(nx_ * ny_ * npx_ * npy_)) {}

  [[nodiscard]] Eigen::Index size() const { return data.size(); }
  [[nodiscard]] Eigen::Index offset(Eigen::Index i, Eigen::Index j,
                                    Eigen::Index jx, Eigen::Index jy) const {
    return i + nx * (j + ny * (jx + npx * jy));
  }
  Scalar& operator()(Eigen::Index i, Eigen::Index j, Eigen::Index jx,
                     Eigen::Index jy) {
    return data[offset(i, j, jx, jy)];
  }
  const Scalar& operator()(Eigen::Index i, Eigen::Index j, Eigen::Index jx,
                           Eigen::Index jy) const {
    return data[offset(i, j, jx, jy)];
  }
  [[nodiscard]] bool same_shape(const Field2& o) const {
    return nx == o.nx && ny == o.ny && npx == o.npx && npy == o.npy;
  }
};

/// Vectorised 2D micro dynamics: (t, u, x, y) -> du/dt, all of the same
/// shape.  Only interior (non-edge-face) entries of the result are used.
template <typename Scalar>
using MicroRhs2 = std::function<Field2<Scalar>(
    Scalar, const Field2<Scalar>&, const Field2<Scalar>&,
    const Field2<Scalar>&)>;

/// Per-axis parameters for config_patches2; semantics as config_patches1.
template <typename Scalar>
struct AxisSpec {
  std::pair<Scalar, Scalar> domain;
  Eigen::Index n_patch{};
  Scalar ratio{};
  int ord_cc{};
  Eigen::Index n_sub{};
};

template <typename Scalar>
struct PatchConfig2 {
  MicroRhs2<Scalar> micro_rhs;
  PatchConfig1<Scalar> ax, ay;  ///< per-axis geometry and coupling operators
  Field2<Scalar> x, y;          ///< micro coordinates, field-shaped

  [[nodiscard]] Eigen::Index flat_size() const {
    return ax.n_sub * ay.n_sub * ax.n_patch * ay.n_patch;
  }
  [[nodiscard]] Field2<Scalar> make_field() const {
    return Field2<Scalar>(ax.n_sub, ay.n_sub, ax.n_patch, ay.n_patch);
  }
};

/// Build a 2D patch configuration by applying the 1D geometry independently
/// to each axis.  Edgy coupling is not available in 2D, so n_sub must be odd
/// on both axes.
template <typename Scalar>
PatchConfig2<Scalar> config_patches2(MicroRhs2<Scalar> micro_rhs,
                                     const AxisSpec<Scalar>& x_axis,
                                     const AxisSpec<Scalar>& y_axis) {
  PatchConfig2<Scalar> cfg;
  cfg.micro_rhs = std::move(micro_rhs);
  cfg.ax = config_patches1<Scalar>({}, x_axis.domain, x_axis.n_patch,
                                   x_axis.ratio, x_axis.ord_cc, x_axis.n_sub);
  cfg.ay = config_patches1<Scalar>({}, y_axis.domain, y_axis.n_patch,
                                   y_axis.ratio, y_axis.ord_cc, y_axis.n_sub);
  cfg.x = cfg.make_field();
  cfg.y = cfg.make_field();
  for (Eigen::Index jy = 0; jy < cfg.ay.n_patch; ++jy)
    for (Eigen::Index jx = 0; jx < cfg.ax.n_patch; ++jx)
      for (Eigen::Index j = 0; j < cfg.ay.n_sub; ++j)
        for (Eigen::Index i = 0; i < cfg.ax.n_sub; ++i) {
          cfg.x(i, j, jx, jy) = cfg.ax.x(i, jx);
          cfg.y(i, j, jx, jy) = cfg.ay.x(j, jy);
        }
  return cfg;
}

/// Fill all four edge faces of every patch.  Pass 1 couples along x for each
/// interior micro row; pass 2 couples along y for every micro column, edges
/// included, so corner points take their values from the pass-1 output.
/// Idempotent: both passes read only mid-patch data that they never write.
template <typename Scalar>
Field2<Scalar> patch_edge_int2(const PatchConfig2<Scalar>& cfg,
                               Field2<Scalar> u) {
  const Eigen::Index nx = cfg.ax.n_sub, ny = cfg.ay.n_sub;
  const Eigen::Index npx = cfg.ax.n_patch, npy = cfg.ay.n_patch;
  if (u.nx != nx || u.ny != ny || u.npx != npx || u.npy != npy)
    throw std::invalid_argument("patch_edge_int2: field has the wrong shape");

  VectorX<Scalar> src;
  for (Eigen::Index jy = 0; jy < npy; ++jy)
    for (Eigen::Index j = 1; j < ny - 1; ++j) {
      src.resize(npx);
      for (Eigen::Index jx = 0; jx < npx; ++jx)
        src[jx] = u(cfg.ax.i0, j, jx, jy);
      auto [left, right] = detail::edge_rows(cfg.ax, src, src);
      for (Eigen::Index jx = 0; jx < npx; ++jx) {
        u(0, j, jx, jy) = left[jx];
        u(nx - 1, j, jx, jy) = right[jx];
      }
    }
  for (Eigen::Index jx = 0; jx < npx; ++jx)
    for (Eigen::Index i = 0; i < nx; ++i) {
      src.resize(npy);
      for (Eigen::Index jy = 0; jy < npy; ++jy)
        src[jy] = u(i, cfg.ay.i0, jx, jy);
      auto [lo, hi] = detail::edge_rows(cfg.ay, src, src);
      for (Eigen::Index jy = 0; jy < npy; ++jy) {
        u(i, 0, jx, jy) = lo[jy];
        u(i, ny - 1, jx, jy) = hi[jy];
      }
    }
  return u;
}

/// Coupled-system rhs on the flat state: interpolate edges, evaluate the
/// micro rhs, zero all four edge faces, flatten.
template <typename Scalar>
VectorX<Scalar> patch_rhs2(const PatchConfig2<Scalar>& cfg, Scalar t,
                           const VectorX<Scalar>& u_flat) {
  if (!cfg.micro_rhs)
    throw std::invalid_argument("patch_rhs2: config carries no micro rhs");
  if (u_flat.size() != cfg.flat_size())
    throw std::invalid_argument("patch_rhs2: flat field has the wrong size");

  Field2<Scalar> u = cfg.make_field();
  u.data = u_flat;
  u = patch_edge_int2(cfg, std::move(u));

  Field2<Scalar> du;
  try {
    du = cfg.micro_rhs(t, u, cfg.x, cfg.y);
  } catch (const NumericalError&) {
    throw;
  } catch (const std::exception& e) {
    throw NumericalError(std::string("patch_rhs2: micro rhs failed: ") +
                             e.what(),
                         static_cast<double>(t));
  }
  if (!du.same_shape(u))
    throw std::invalid_argument(
        "patch_rhs2: micro rhs returned the wrong shape");

  const Eigen::Index nx = u.nx, ny = u.ny;
  for (Eigen::Index jy = 0; jy < u.npy; ++jy)
    for (Eigen::Index jx = 0; jx < u.npx; ++jx) {
      for (Eigen::Index j = 0; j < ny; ++j) {
        du(0, j, jx, jy) = 0;
        du(nx - 1, j, jx, jy) = 0;
      }
      for (Eigen::Index i = 0; i < nx; ++i) {
        du(i, 0, jx, jy) = 0;
        du(i, ny - 1, jx, jy) = 0;
      }
      if (!du.data.segment(du.offset(0, 0, jx, jy), nx * ny).allFinite())
        throw NumericalError("patch_rhs2: non-finite derivative in patch (" +
                                 std::to_string(jx) + ", " +
                                 std::to_string(jy) + ")",
                             static_cast<double>(t));
    }
  return du.data;
}

/// Lattice form of du/dt = laplacian(u^3): per-axis second differences of
/// u^3 over the squared micro spacings, on patch interiors.  Edge-face
/// entries of the result stay zero (they are derived data).
template <typename Scalar>
Field2<Scalar> nonlinear_diffusion_rhs2(Scalar /*t*/, const Field2<Scalar>& u,
                                        const Field2<Scalar>& x,
                                        const Field2<Scalar>& y) {
  const Scalar dx = x(1, 0, 0, 0) - x(0, 0, 0, 0);
  const Scalar dy = y(0, 1, 0, 0) - y(0, 0, 0, 0);
  const Scalar rx = 1 / (dx * dx), ry = 1 / (dy * dy);
  const auto cube = [](Scalar v) { return v * v * v; };

  Field2<Scalar> du(u.nx, u.ny, u.npx, u.npy);
  for (Eigen::Index jy = 0; jy < u.npy; ++jy)
    for (Eigen::Index jx = 0; jx < u.npx; ++jx)
      for (Eigen::Index j = 1; j < u.ny - 1; ++j)
        for (Eigen::Index i = 1; i < u.nx - 1; ++i) {
          const Scalar c = cube(u(i, j, jx, jy));
          du(i, j, jx, jy) =
              rx * (cube(u(i + 1, j, jx, jy)) - 2 * c +
                    cube(u(i - 1, j, jx, jy))) +
              ry * (cube(u(i, j + 1, jx, jy)) - 2 * c +
                    cube(u(i, j - 1, jx, jy)));
        }
  return du;
}

/// Counted rhs of the full doubly periodic lattice, presented to the
/// vectorised micro rhs as one ghost-padded pseudo-patch.  The flat state
/// indexes the p1 x p2 lattice with i fastest.  Ghost corners are never read
/// by the five-point stencils the micro models use.
template <typename Scalar>
Rhs<Scalar> full_domain_rhs2(const MicroRhs2<Scalar>& micro_rhs,
                             std::pair<Scalar, Scalar> domain_x,
                             std::pair<Scalar, Scalar> domain_y,
                             Eigen::Index p1, Eigen::Index p2) {
  if (!micro_rhs)
    throw std::invalid_argument("full_domain_rhs2: micro rhs is required");
  if (p1 < 3 || p2 < 3)
    throw std::invalid_argument(
        "full_domain_rhs2: need >= 3 lattice points per axis");

  const Scalar d1 = (domain_x.second - domain_x.first) / Scalar(p1);
  const Scalar d2 = (domain_y.second - domain_y.first) / Scalar(p2);
  Field2<Scalar> xf(p1 + 2, p2 + 2, 1, 1), yf(p1 + 2, p2 + 2, 1, 1);
  for (Eigen::Index j = 0; j < p2 + 2; ++j)
    for (Eigen::Index i = 0; i < p1 + 2; ++i) {
      xf(i, j, 0, 0) = domain_x.first + Scalar(i - 1) * d1;
      yf(i, j, 0, 0) = domain_y.first + Scalar(j - 1) * d2;
    }

  return Rhs<Scalar>([micro_rhs, xf, yf, p1, p2](Scalar t,
                                                 const VectorX<Scalar>& u) {
    Field2<Scalar> ext(p1 + 2, p2 + 2, 1, 1);
    for (Eigen::Index j = 0; j < p2; ++j) {
      for (Eigen::Index i = 0; i < p1; ++i)
        ext(i + 1, j + 1, 0, 0) = u[i + p1 * j];
      ext(0, j + 1, 0, 0) = u[(p1 - 1) + p1 * j];
      ext(p1 + 1, j + 1, 0, 0) = u[0 + p1 * j];
    }
    for (Eigen::Index i = 0; i < p1; ++i) {
      ext(i + 1, 0, 0, 0) = u[i + p1 * (p2 - 1)];
      ext(i + 1, p2 + 1, 0, 0) = u[i];
    }
    Field2<Scalar> du = micro_rhs(t, ext, xf, yf);
    VectorX<Scalar> out(p1 * p2);
    for (Eigen::Index j = 0; j < p2; ++j)
      for (Eigen::Index i = 0; i < p1; ++i)
        out[i + p1 * j] = du(i + 1, j + 1, 0, 0);
    return out;
  });
}

/// Reference micro simulation over the whole doubly periodic lattice.
template <typename Scalar>
Trajectory<Scalar> full_domain_oracle2(const MicroRhs2<Scalar>& micro_rhs,
                                       std::pair<Scalar, Scalar> domain_x,
                                       std::pair<Scalar, Scalar> domain_y,
                                       Eigen::Index p1, Eigen::Index p2,
                                       std::pair<Scalar, Scalar> t_span,
                                       const VectorX<Scalar>& u0, Scalar tol) {
  if (u0.size() != p1 * p2)
    throw std::invalid_argument(
        "full_domain_oracle2: initial state has the wrong size");
  if (!(tol > Scalar(0)))
    throw std::invalid_argument("full_domain_oracle2: tol must be positive");
  Rhs<Scalar> f = full_domain_rhs2(micro_rhs, domain_x, domain_y, p1, p2);
  return rk45_adaptive<Scalar>(f, t_span.first, t_span.second, u0, tol, tol);
}

}  // namespace eqfree
