#pragma once
// Example models: the coupled slow-fast pair, 1D lattice diffusion for the
// patch scheme, and randomly generated stiff linear systems with a
// closed-form solution used as an error oracle.

#include "eqfree/patches1.hpp"
#include "eqfree/projective.hpp"
#include "eqfree/random.hpp"
#include "eqfree/types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <utility>

namespace eqfree {

/// Coupled slow-fast pair: u1' = cos(u1) sin(u2) cos(t) drifts slowly while
/// u2' = beta (cos(u1) - u2) relaxes u2 onto the manifold u2 ~ cos(u1) at
/// rate beta.
template <typename Scalar>
Rhs<Scalar> slowfast_rhs(Scalar beta = Scalar(1e5)) {
  return Rhs<Scalar>([beta](Scalar t, const VectorX<Scalar>& u) {
    VectorX<Scalar> du(2);
    du[0] = std::cos(u[0]) * std::sin(u[1]) * std::cos(t);
    du[1] = beta * (std::cos(u[0]) - u[1]);
    return du;
  });
}

/// 1D lattice diffusion du_i/dt = (u_{i+1} - 2 u_i + u_{i-1}) / dx^2 on
/// patch interiors; the micro spacing comes from the coordinate array.
template <typename Scalar>
MicroRhs1<Scalar> heat_rhs1() {
  return [](Scalar, const MatrixX<Scalar>& u, const MatrixX<Scalar>& x) {
    const Scalar dx = x(1, 0) - x(0, 0);
    const Eigen::Index n = u.rows();
    MatrixX<Scalar> du = MatrixX<Scalar>::Zero(n, u.cols());
    du.middleRows(1, n - 2) =
        (u.topRows(n - 2) - 2 * u.middleRows(1, n - 2) + u.bottomRows(n - 2)) /
        (dx * dx);
    return du;
  };
}

/// Random stiff linear system u' = A u + b with A = Q diag(eigs) Q^T:
/// n_slow eigenvalues in [-0.1, 0.1] and n_fast in [-20000, -10000], all
/// real, with an orthonormal eigenbasis so the closed-form solution is
/// numerically trustworthy.
struct LinearSystem {
  MatrixX<double> a;
  VectorX<double> b;
  VectorX<double> u0;
  MatrixX<double> q;     ///< orthogonal; slow eigenvector columns first
  VectorX<double> eigs;  ///< matching eigenvalues, slow entries first
  Eigen::Index n_slow{};

  [[nodiscard]] Eigen::Index dim() const { return eigs.size(); }

  /// Counted rhs u' = A u + b.
  [[nodiscard]] Rhs<double> rhs() const {
    const MatrixX<double> a_ = a;
    const VectorX<double> b_ = b;
    return Rhs<double>([a_, b_](double, const VectorX<double>& u) {
      return VectorX<double>(a_ * u + b_);
    });
  }
};

/// Draw order is fixed (basis matrix, eigenvalues, b, u0) so a seed pins the
/// whole system.  QR column signs are normalised so the basis is unique.
inline LinearSystem random_stiff_system(Eigen::Index n_fast,
                                        std::uint64_t seed) {
  if (n_fast < 0)
    throw std::invalid_argument("random_stiff_system: n_fast must be >= 0");
  LinearSystem sys;
  sys.n_slow = 10;
  const Eigen::Index n = sys.n_slow + n_fast;
  Rng rng(seed);

  MatrixX<double> g(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = rng.normal();
  Eigen::HouseholderQR<MatrixX<double>> qr(g);
  sys.q = qr.householderQ() * MatrixX<double>::Identity(n, n);
  for (Eigen::Index k = 0; k < n; ++k)
    if (qr.matrixQR()(k, k) < 0) sys.q.col(k) = -sys.q.col(k);

  sys.eigs.resize(n);
  for (Eigen::Index k = 0; k < sys.n_slow; ++k)
    sys.eigs[k] = rng.uniform(-0.1, 0.1);
  for (Eigen::Index k = sys.n_slow; k < n; ++k)
    sys.eigs[k] = rng.uniform(-20000.0, -10000.0);

  sys.b.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) sys.b[k] = rng.normal();
  sys.u0.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) sys.u0[k] = rng.normal();

  sys.a = sys.q * sys.eigs.asDiagonal() * sys.q.transpose();
  return sys;
}

/// Closed-form solution u(t) = e^{At}(u0 + A^{-1}b) - A^{-1}b through the
/// cached eigendecomposition.
inline VectorX<double> exact_solution(const LinearSystem& sys, double t) {
  if (sys.eigs.size() == 0)
    throw std::invalid_argument("exact_solution: empty system");
  if (sys.eigs.cwiseAbs().minCoeff() < 1e-12)
    throw std::invalid_argument("exact_solution: system is near-singular");
  const VectorX<double> ainv_b =
      sys.q * (sys.q.transpose() * sys.b)
                  .cwiseQuotient(sys.eigs);
  const VectorX<double> c = sys.q.transpose() * (sys.u0 + ainv_b);
  const VectorX<double> expc =
      ((sys.eigs.array() * t).exp() * c.array()).matrix();
  return sys.q * expc - ainv_b;
}

/// Macro view for projective integration of a LinearSystem: the slow
/// eigen-coordinates.
inline RestrictFn<double> slow_restrict(const LinearSystem& sys) {
  const MatrixX<double> qs = sys.q.leftCols(sys.n_slow);
  return [qs](const VectorX<double>& u) {
    return VectorX<double>(qs.transpose() * u);
  };
}

/// Lifting keeps the fast eigen-components of the donor micro state and
/// replaces the slow ones from the macro state.
inline LiftFn<double> slow_lift(const LinearSystem& sys) {
  const MatrixX<double> qs = sys.q.leftCols(sys.n_slow);
  return [qs](const VectorX<double>& x, const VectorX<double>& donor) {
    return VectorX<double>(qs * x + donor - qs * (qs.transpose() * donor));
  };
}

}  // namespace eqfree
