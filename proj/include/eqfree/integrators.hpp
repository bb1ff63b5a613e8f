#pragma once
// Time integrators for the micro and macro scales: a classical fixed-step
// fourth-order Runge–Kutta and an adaptive Dormand–Prince 5(4) pair.  Both
// support backward time (dt < 0 / tf < t0) and report failures through
// IntegrationError, keeping the partial trajectory.

#include "eqfree/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace eqfree {

/// Classical fourth-order Runge–Kutta with n_steps uniform steps of size dt.
/// Sample times are computed fused as t0 + k*dt (not accumulated), so the
/// final time equals t0 + n_steps*dt to round-off.  Exactly 4 rhs
/// evaluations per step.
template <typename Scalar>
Trajectory<Scalar> rk4_fixed(const Rhs<Scalar>& f, Scalar t0,
                             const VectorX<Scalar>& u0, Scalar dt,
                             Eigen::Index n_steps) {
  if (!(dt != Scalar(0)))
    throw std::invalid_argument("rk4_fixed: dt must be nonzero");
  if (n_steps < 1)
    throw std::invalid_argument("rk4_fixed: n_steps must be >= 1");

  Trajectory<Scalar> out;
  out.times.reserve(static_cast<std::size_t>(n_steps) + 1);
  out.states.reserve(static_cast<std::size_t>(n_steps) + 1);
  out.push_back(t0, u0);

  VectorX<Scalar> u = u0;
  for (Eigen::Index k = 0; k < n_steps; ++k) {
    const Scalar t = t0 + Scalar(k) * dt;
    const Scalar t_next = t0 + Scalar(k + 1) * dt;
    const VectorX<Scalar> k1 = f(t, u);
    const VectorX<Scalar> k2 = f(t + dt / 2, u + (dt / 2) * k1);
    const VectorX<Scalar> k3 = f(t + dt / 2, u + (dt / 2) * k2);
    const VectorX<Scalar> k4 = f(t_next, u + dt * k3);
    u += (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    if (!u.allFinite())
      throw IntegrationError<Scalar>(
          "rk4_fixed: non-finite state after step " + std::to_string(k) +
              " (t = " + std::to_string(static_cast<double>(t_next)) + ")",
          static_cast<double>(t_next), std::move(out), k);
    out.push_back(t_next, u);
  }
  return out;
}

namespace detail {

// Dormand–Prince 5(4) tableau.  e[] is the embedded error row b5 - b4; the
// seventh stage equals f at the accepted endpoint (FSAL), so an accepted
// step costs six evaluations.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0,
                          c5 = 8.0 / 9.0;
  static constexpr double a21 = 1.0 / 5.0;
  static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0,
                          a43 = 32.0 / 9.0;
  static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                          a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
  static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0,
                          a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                          a65 = -5103.0 / 18656.0;
  static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0,
                          b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                          b6 = 11.0 / 84.0;
  static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0,
                          e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                          e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
};

template <typename Scalar>
Scalar weighted_rms(const VectorX<Scalar>& v, const VectorX<Scalar>& scale) {
  if (v.size() == 0) return Scalar(0);
  return std::sqrt((v.array() / scale.array()).square().mean());
}

}  // namespace detail

/// Adaptive Dormand–Prince 5(4) integration of u' = f(t, u) from t0 to tf
/// (either direction).  Local error per step is held below
/// atol + rtol*|u| componentwise (weighted RMS).  Step control is the
/// standard proportional-integral rule with safety factor 0.9 and step-ratio
/// clamp [0.2, 5.0]; the initial step comes from the classical curvature
/// heuristic.  The final sample lands on tf exactly.  Persistent step
/// collapse below 1e3*eps*|t| aborts with the time reached.
template <typename Scalar>
Trajectory<Scalar> rk45_adaptive(const Rhs<Scalar>& f, Scalar t0, Scalar tf,
                                 const VectorX<Scalar>& u0, Scalar rtol,
                                 Scalar atol) {
  using T = detail::Dopri5;
  if (!(t0 != tf))
    throw std::invalid_argument("rk45_adaptive: t0 and tf must differ");
  if (!(rtol > Scalar(0)) || !(atol > Scalar(0)))
    throw std::invalid_argument("rk45_adaptive: tolerances must be positive");

  const Scalar dir = (tf > t0) ? Scalar(1) : Scalar(-1);
  const Scalar span = std::abs(tf - t0);

  Trajectory<Scalar> out;
  out.push_back(t0, u0);

  Scalar t = t0;
  VectorX<Scalar> u = u0;
  VectorX<Scalar> k1 = f(t0, u0);

  // Initial step: probe the local curvature (an Euler step of size h0, then
  // compare derivatives).  A field flat to both probes gets the full span —
  // the error estimate takes over from there.
  Scalar h;
  {
    VectorX<Scalar> sc = (atol + rtol * u0.array().abs()).matrix();
    const Scalar d0 = detail::weighted_rms<Scalar>(u0, sc);
    const Scalar d1 = detail::weighted_rms<Scalar>(k1, sc);
    Scalar h0 = (d0 < Scalar(1e-5) || d1 < Scalar(1e-5))
                    ? Scalar(1e-6)
                    : Scalar(0.01) * d0 / d1;
    h0 = std::min(h0, span);
    const VectorX<Scalar> u1 = u0 + dir * h0 * k1;
    const VectorX<Scalar> f1 = f(t0 + dir * h0, u1);
    const Scalar d2 = detail::weighted_rms<Scalar>((f1 - k1).eval(), sc) / h0;
    if (d1 <= Scalar(1e-15) && d2 <= Scalar(1e-15)) {
      h = span;
    } else {
      const Scalar h1 =
          std::pow(Scalar(0.01) / std::max(d1, d2), Scalar(1) / Scalar(5));
      h = std::min({Scalar(100) * h0, h1, span});
    }
  }

  const Scalar safety = Scalar(0.9);
  const Scalar k_i = Scalar(0.7) / Scalar(5);  // PI: integral exponent
  const Scalar k_p = Scalar(0.4) / Scalar(5);  // PI: proportional memory
  Scalar err_old = Scalar(1e-4);
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  long long step_budget = 20'000'000;

  VectorX<Scalar> k2, k3, k4, k5, k6, k7, u_new, err_vec;
  while (dir * (tf - t) > Scalar(0)) {
    if (--step_budget < 0)
      throw IntegrationError<Scalar>(
          "rk45_adaptive: step budget exhausted near t = " +
              std::to_string(static_cast<double>(t)),
          static_cast<double>(t), std::move(out));
    if (h < Scalar(1e3) * eps * std::max(std::abs(t), span))
      throw IntegrationError<Scalar>(
          "rk45_adaptive: step size underflow at t = " +
              std::to_string(static_cast<double>(t)) +
              " (system too stiff for an explicit method here)",
          static_cast<double>(t), std::move(out));

    bool last = false;
    if (dir * (t + dir * h - tf) >= Scalar(0)) {
      h = std::abs(tf - t);
      last = true;
    }
    const Scalar hd = dir * h;

    k2 = f(t + T::c2 * hd, (u + hd * (T::a21 * k1)).eval());
    k3 = f(t + T::c3 * hd, (u + hd * (T::a31 * k1 + T::a32 * k2)).eval());
    k4 = f(t + T::c4 * hd,
           (u + hd * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3)).eval());
    k5 = f(t + T::c5 * hd, (u + hd * (T::a51 * k1 + T::a52 * k2 +
                                      T::a53 * k3 + T::a54 * k4))
                               .eval());
    const Scalar t_stage6 = last ? tf : t + hd;
    k6 = f(t_stage6, (u + hd * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 +
                                T::a64 * k4 + T::a65 * k5))
                         .eval());
    u_new = u + hd * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 + T::b5 * k5 +
                      T::b6 * k6);
    k7 = f(t_stage6, u_new);
    err_vec = hd * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 +
                    T::e6 * k6 + T::e7 * k7);

    VectorX<Scalar> sc =
        (atol + rtol * u.array().abs().max(u_new.array().abs())).matrix();
    const Scalar err = detail::weighted_rms<Scalar>(err_vec, sc);

    if (err <= Scalar(1) && u_new.allFinite()) {
      t = last ? tf : t + hd;
      u = u_new;
      k1 = k7;  // FSAL
      out.push_back(t, u);
      Scalar fac = (err > Scalar(0))
                       ? safety * std::pow(err, -k_i) * std::pow(err_old, k_p)
                       : Scalar(5);
      fac = std::clamp(fac, Scalar(0.2), Scalar(5));
      h *= fac;
      err_old = std::max(err, Scalar(1e-4));
    } else {
      const Scalar shrink =
          (err > Scalar(0) && std::isfinite(static_cast<double>(err)))
              ? std::clamp(safety * std::pow(err, Scalar(-0.2)), Scalar(0.2),
                           Scalar(0.9))
              : Scalar(0.2);
      h *= shrink;
    }
  }
  return out;
}

/// Backward difference over the last sampled interval: the slow-derivative
/// estimate (u_M - u_{M-1}) / (t_M - t_{M-1}).
template <typename Scalar>
VectorX<Scalar> end_derivative(const Trajectory<Scalar>& traj) {
  if (traj.size() < 2)
    throw std::invalid_argument("end_derivative: need at least two samples");
  const auto m = static_cast<std::size_t>(traj.size()) - 1;
  const Scalar dt = traj.times[m] - traj.times[m - 1];
  if (!(dt != Scalar(0)) || !std::isfinite(static_cast<double>(dt)))
    throw std::invalid_argument(
        "end_derivative: final sample times must be distinct");
  return (traj.states[m] - traj.states[m - 1]) / dt;
}

}  // namespace eqfree
