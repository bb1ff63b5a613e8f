#pragma once
// One-dimensional patch (gap-tooth) scheme on a periodic macro domain: small
// lattice patches around equispaced centers, coupled by interpolating
// mid-patch (or next-to-edge) values across patches onto the patch edges.
// Interior lattice dynamics come from a user-supplied vectorised micro rhs;
// edge rows are derived data and carry zero time derivative.

#include "eqfree/integrators.hpp"
#include "eqfree/types.hpp"

#include <cmath>
#include <complex>
#include <utility>

namespace eqfree {

/// Vectorised micro dynamics on a patch array: (t, u, x) -> du/dt, all of
/// shape n_sub x n_patch.  Only interior rows of the result are used.
template <typename Scalar>
using MicroRhs1 = std::function<MatrixX<Scalar>(Scalar, const MatrixX<Scalar>&,
                                                const MatrixX<Scalar>&)>;

/// Centred Lagrange interpolation weights: the degree-ord polynomial through
/// nodes at integer offsets -ord/2..ord/2 (in macro-spacing units),
/// evaluated at offset s in (0, 1).  ord must be even and >= 2.  The
/// mirrored evaluation at -s uses these weights reversed.
template <typename Scalar>
VectorX<Scalar> lagrange_weights(int ord, Scalar s) {
  if (ord < 2 || ord % 2 != 0)
    throw std::invalid_argument(
        "lagrange_weights: ord must be an even integer >= 2");
  if (!(s > Scalar(0) && s < Scalar(1)))
    throw std::invalid_argument("lagrange_weights: s must lie in (0, 1)");
  const int half = ord / 2;
  VectorX<Scalar> w(ord + 1);
  for (int k = -half; k <= half; ++k) {
    Scalar num = 1, den = 1;
    for (int m = -half; m <= half; ++m) {
      if (m == k) continue;
      num *= s - Scalar(m);
      den *= Scalar(k - m);
    }
    w[k + half] = num / den;
  }
  return w;
}

/// Spectral shift of a periodic sequence: returns the trigonometric
/// interpolant of mids evaluated s macro-spacings to the right of each node.
/// Exact for sequences band-limited below the sampling limit.  For even
/// length the unpaired highest mode keeps a real cos(pi*s) factor so real
/// input yields real output.
template <typename Scalar>
VectorX<Scalar> spectral_edge_values(const VectorX<Scalar>& mids, Scalar s) {
  const Eigen::Index n = mids.size();
  if (n < 1)
    throw std::invalid_argument("spectral_edge_values: empty sequence");
  using C = std::complex<Scalar>;
  const Scalar two_pi = Scalar(2) * Scalar(EIGEN_PI);

  std::vector<C> coef(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    C acc(0, 0);
    for (Eigen::Index j = 0; j < n; ++j)
      acc += mids[j] *
             std::polar(Scalar(1), -two_pi * Scalar(j) * Scalar(k) / Scalar(n));
    coef[static_cast<std::size_t>(k)] = acc / Scalar(n);
  }

  VectorX<Scalar> out(n);
  for (Eigen::Index m = 0; m < n; ++m) {
    C acc(0, 0);
    for (Eigen::Index k = 0; k < n; ++k) {
      C rho;
      if (2 * k == n) {
        rho = C(std::cos(Scalar(EIGEN_PI) * s), 0);  // Nyquist stays real
      } else {
        const Scalar kk = (2 * k < n) ? Scalar(k) : Scalar(k - n);
        rho = std::polar(Scalar(1), two_pi * kk * s / Scalar(n));
      }
      acc += coef[static_cast<std::size_t>(k)] * rho *
             std::polar(Scalar(1), two_pi * Scalar(m) * Scalar(k) / Scalar(n));
    }
    out[m] = acc.real();
  }
  return out;
}

/// Dense operator form of the spectral shift: out = S * src applies
/// spectral_edge_values(src, s).  Built once per configuration so repeated
/// edge fills are matrix-vector products instead of O(n^2) trig sums.
template <typename Scalar>
MatrixX<Scalar> spectral_shift_matrix(Eigen::Index n, Scalar s) {
  MatrixX<Scalar> m(n, n);
  VectorX<Scalar> e = VectorX<Scalar>::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e[j] = 1;
    m.col(j) = spectral_edge_values(e, s);
    e[j] = 0;
  }
  return m;
}

/// Geometry and coupling data for a 1D patch grid.  Immutable after
/// construction; all operations take it by const reference.
template <typename Scalar>
struct PatchConfig1 {
  MicroRhs1<Scalar> micro_rhs;
  Scalar a{}, b{};         ///< periodic macro domain
  Eigen::Index n_patch{};  ///< number of patches N
  Scalar ratio{};          ///< patch half-width / patch spacing, in (0, 0.5]
  int ord_cc{};            ///< coupling order: 0 spectral, else even Lagrange
  Eigen::Index n_sub{};    ///< lattice points per patch
  bool edgy{};             ///< couple via next-to-edge values instead of mids

  Scalar H{};              ///< patch spacing (b - a) / N
  Scalar d{};              ///< micro lattice spacing within a patch
  Eigen::Index i0{};       ///< mid-patch row (defined for odd n_sub)
  VectorX<Scalar> centers; ///< patch centres X_j
  MatrixX<Scalar> x;       ///< micro coordinates, n_sub x n_patch

  VectorX<Scalar> w_right;    ///< Lagrange weights for the +shift edge
  Scalar shift{};             ///< interpolation offset in H units (right side)
  MatrixX<Scalar> spec_right; ///< spectral +shift operator (ord_cc == 0 only)
  MatrixX<Scalar> spec_left;  ///< spectral -shift operator (ord_cc == 0 only)

  [[nodiscard]] Eigen::Index flat_size() const { return n_sub * n_patch; }
};

/// Build a 1D patch configuration.  The macro domain is periodic (the only
/// supported closure; pass periodic = false to get an explicit error).
/// Lagrange coupling of order ord interpolates through ord+1 consecutive
/// mid-patch values, so it needs n_patch >= ord + 1; non-edgy coupling needs
/// odd n_sub so a mid-patch value exists.
template <typename Scalar>
PatchConfig1<Scalar> config_patches1(MicroRhs1<Scalar> micro_rhs,
                                     std::pair<Scalar, Scalar> domain,
                                     Eigen::Index n_patch, Scalar ratio,
                                     int ord_cc, Eigen::Index n_sub,
                                     bool edgy = false, bool periodic = true) {
  if (!periodic)
    throw std::invalid_argument(
        "config_patches1: only periodic macro domains are supported");
  if (!(domain.second > domain.first) ||
      !std::isfinite(static_cast<double>(domain.second - domain.first)))
    throw std::invalid_argument("config_patches1: invalid domain");
  if (n_patch < 3)
    throw std::invalid_argument("config_patches1: need at least 3 patches");
  if (!(ratio > Scalar(0)) || !(ratio <= Scalar(0.5)))
    throw std::invalid_argument("config_patches1: ratio must be in (0, 0.5]");
  if (ord_cc % 2 != 0)
    throw std::invalid_argument(
        "config_patches1: odd coupling orders (staggered grids) are not "
        "supported");
  if (ord_cc < 0 || ord_cc > 8)
    throw std::invalid_argument(
        "config_patches1: coupling order must be 0, 2, 4, 6 or 8");
  if (n_sub < 3)
    throw std::invalid_argument(
        "config_patches1: need at least 3 lattice points per patch");
  if (!edgy && n_sub % 2 == 0)
    throw std::invalid_argument(
        "config_patches1: n_sub must be odd unless edgy coupling is used (a "
        "mid-patch value must exist)");
  if (ord_cc >= 2 && n_patch < ord_cc + 1)
    throw std::invalid_argument(
        "config_patches1: n_patch too small for the interpolation stencil");

  PatchConfig1<Scalar> cfg;
  cfg.micro_rhs = std::move(micro_rhs);
  cfg.a = domain.first;
  cfg.b = domain.second;
  cfg.n_patch = n_patch;
  cfg.ratio = ratio;
  cfg.ord_cc = ord_cc;
  cfg.n_sub = n_sub;
  cfg.edgy = edgy;

  cfg.H = (cfg.b - cfg.a) / Scalar(n_patch);
  cfg.d = 2 * ratio * cfg.H / Scalar(n_sub - 1);
  cfg.i0 = (n_sub - 1) / 2;
  cfg.centers.resize(n_patch);
  for (Eigen::Index j = 0; j < n_patch; ++j)
    cfg.centers[j] = cfg.a + (Scalar(j) + Scalar(0.5)) * cfg.H;

  cfg.x.resize(n_sub, n_patch);
  for (Eigen::Index j = 0; j < n_patch; ++j)
    for (Eigen::Index i = 0; i < n_sub; ++i) {
      // integer offsets keep the mid-patch coordinate exactly at the centre
      const Scalar off = (n_sub % 2 == 1) ? Scalar(i - cfg.i0)
                                          : Scalar(i) - Scalar(n_sub - 1) / 2;
      cfg.x(i, j) = cfg.centers[j] + cfg.d * off;
    }

  // Edges sit r*H from the centre.  Standard coupling resamples mid-patch
  // values (offset r); edgy coupling resamples next-to-edge values, whose
  // offset from the target edge of the neighbouring patch follows from the
  // literal micro coordinates.
  cfg.shift = edgy ? 2 * ratio - cfg.d / cfg.H : ratio;
  if (ord_cc >= 2) {
    cfg.w_right = lagrange_weights<Scalar>(ord_cc, cfg.shift);
  } else {
    cfg.spec_right = spectral_shift_matrix<Scalar>(n_patch, cfg.shift);
    cfg.spec_left = spectral_shift_matrix<Scalar>(n_patch, -cfg.shift);
  }
  return cfg;
}

namespace detail {

/// Shared per-axis edge kernel: interpolate periodic per-patch source values
/// onto both edges (right edges at +shift in patch-spacing units, left at
/// -shift).  src_r feeds right edges and src_l left edges; they differ only
/// for edgy coupling.  The -shift Lagrange stencil uses w_right reversed.
template <typename Scalar>
std::pair<VectorX<Scalar>, VectorX<Scalar>> edge_rows(
    const PatchConfig1<Scalar>& axis, const VectorX<Scalar>& src_r,
    const VectorX<Scalar>& src_l) {
  const Eigen::Index np = axis.n_patch;
  VectorX<Scalar> left(np), right(np);
  if (axis.ord_cc == 0) {
    right = axis.spec_right * src_r;
    left = axis.spec_left * src_l;
  } else {
    const int half = axis.ord_cc / 2;
    for (Eigen::Index j = 0; j < np; ++j) {
      Scalar acc_r = 0, acc_l = 0;
      for (int k = -half; k <= half; ++k) {
        const Eigen::Index jj = ((j + k) % np + np) % np;
        acc_r += axis.w_right[k + half] * src_r[jj];
        acc_l += axis.w_right[half - k] * src_l[jj];  // mirrored weights
      }
      right[j] = acc_r;
      left[j] = acc_l;
    }
  }
  return {std::move(left), std::move(right)};
}

}  // namespace detail

/// Fill the two edge rows of every patch by periodic interpolation across
/// patches.  Standard coupling reads mid-patch values; edgy coupling reads
/// the next-to-opposite-edge row.  Interior rows pass through untouched, so
/// the operation is idempotent.
template <typename Scalar>
MatrixX<Scalar> patch_edge_int1(const PatchConfig1<Scalar>& cfg,
                                MatrixX<Scalar> u) {
  const Eigen::Index n = cfg.n_sub, np = cfg.n_patch;
  if (u.rows() != n || u.cols() != np)
    throw std::invalid_argument("patch_edge_int1: field has the wrong shape");

  VectorX<Scalar> src_r, src_l;
  if (cfg.edgy) {
    src_r = u.row(1).transpose();      // next-to-left-edge values
    src_l = u.row(n - 2).transpose();  // next-to-right-edge values
  } else {
    src_r = u.row(cfg.i0).transpose();
    src_l = src_r;
  }

  auto [left, right] = detail::edge_rows(cfg, src_r, src_l);
  u.row(0) = left.transpose();
  u.row(n - 1) = right.transpose();
  return u;
}

/// Column-major (patch-major) flattening: patch 0's lattice values first.
template <typename Scalar>
VectorX<Scalar> pack1(const MatrixX<Scalar>& u) {
  return Eigen::Map<const VectorX<Scalar>>(u.data(), u.size());
}

template <typename Scalar>
MatrixX<Scalar> unpack1(const PatchConfig1<Scalar>& cfg,
                        const VectorX<Scalar>& flat) {
  if (flat.size() != cfg.flat_size())
    throw std::invalid_argument("unpack1: flat field has the wrong size");
  return Eigen::Map<const MatrixX<Scalar>>(flat.data(), cfg.n_sub,
                                           cfg.n_patch);
}

/// Right-hand side of the coupled patch system on the flat state: apply edge
/// interpolation, evaluate the micro rhs on the coupled field, zero the edge
/// rows (edge values are derived data, not dynamic variables).
template <typename Scalar>
VectorX<Scalar> patch_rhs1(const PatchConfig1<Scalar>& cfg, Scalar t,
                           const VectorX<Scalar>& u_flat) {
  if (!cfg.micro_rhs)
    throw std::invalid_argument("patch_rhs1: config carries no micro rhs");
  MatrixX<Scalar> u = patch_edge_int1(cfg, unpack1(cfg, u_flat));

  MatrixX<Scalar> du;
  try {
    du = cfg.micro_rhs(t, u, cfg.x);
  } catch (const NumericalError&) {
    throw;
  } catch (const std::exception& e) {
    throw NumericalError(std::string("patch_rhs1: micro rhs failed: ") +
                             e.what(),
                         static_cast<double>(t));
  }
  if (du.rows() != cfg.n_sub || du.cols() != cfg.n_patch)
    throw std::invalid_argument(
        "patch_rhs1: micro rhs returned the wrong shape");

  du.row(0).setZero();
  du.row(cfg.n_sub - 1).setZero();
  for (Eigen::Index j = 0; j < cfg.n_patch; ++j)
    if (!du.col(j).allFinite())
      throw NumericalError(
          "patch_rhs1: non-finite derivative in patch " + std::to_string(j),
          static_cast<double>(t));
  return pack1(du);
}

/// Counted rhs of the full periodic micro lattice at total_points sites,
/// spacing (b - a) / total_points starting at a: the lattice is presented to
/// the vectorised micro rhs as one ghost-padded pseudo-patch whose edge
/// values wrap around periodically.
template <typename Scalar>
Rhs<Scalar> full_domain_rhs1(const MicroRhs1<Scalar>& micro_rhs,
                             std::pair<Scalar, Scalar> domain,
                             Eigen::Index total_points) {
  if (!micro_rhs)
    throw std::invalid_argument("full_domain_rhs1: micro rhs is required");
  if (total_points < 3)
    throw std::invalid_argument("full_domain_rhs1: need >= 3 lattice points");

  const Eigen::Index p = total_points;
  const Scalar d = (domain.second - domain.first) / Scalar(p);
  MatrixX<Scalar> x_ext(p + 2, 1);
  for (Eigen::Index i = 0; i < p + 2; ++i)
    x_ext(i, 0) = domain.first + Scalar(i - 1) * d;

  return Rhs<Scalar>([micro_rhs, x_ext, p](Scalar t,
                                           const VectorX<Scalar>& u) {
    MatrixX<Scalar> ext(p + 2, 1);
    ext(0, 0) = u[p - 1];
    ext.block(1, 0, p, 1) = u;
    ext(p + 1, 0) = u[0];
    MatrixX<Scalar> du = micro_rhs(t, ext, x_ext);
    return VectorX<Scalar>(du.block(1, 0, p, 1));
  });
}

/// Reference micro simulation over the whole periodic lattice.
template <typename Scalar>
Trajectory<Scalar> full_domain_oracle(const MicroRhs1<Scalar>& micro_rhs,
                                      std::pair<Scalar, Scalar> domain,
                                      Eigen::Index total_points,
                                      std::pair<Scalar, Scalar> t_span,
                                      const VectorX<Scalar>& u0, Scalar tol) {
  if (u0.size() != total_points)
    throw std::invalid_argument(
        "full_domain_oracle: initial state has the wrong size");
  if (!(tol > Scalar(0)))
    throw std::invalid_argument("full_domain_oracle: tol must be positive");
  Rhs<Scalar> f = full_domain_rhs1(micro_rhs, domain, total_points);
  return rk45_adaptive<Scalar>(f, t_span.first, t_span.second, u0, tol, tol);
}

}  // namespace eqfree
