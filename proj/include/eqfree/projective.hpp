#pragma once
// Projective integration: run short micro-scale bursts, read the slow time
// derivative off their tails, and take long macro steps with it.  Provides
// the two-burst constraint-defined-manifold derivative (constr_deriv), a
// general adaptive projective integrator (pig), and second-/fourth-order
// projective Runge–Kutta steppers (pirk2, pirk4).

#include "eqfree/integrators.hpp"
#include "eqfree/types.hpp"

#include <cmath>
#include <memory>
#include <utility>

namespace eqfree {

/// A micro burst simulates the detailed system from (t0, u0) for a duration
/// delta and returns the sampled trajectory.  Contract: at least two
/// samples, starting at (t0, u0) and ending at t0 + delta (within 1e-12
/// relative).  The tail spacing sets the backward-difference quality of the
/// derivative estimates, so bursts should sample finely near their end.
template <typename Scalar>
using MicroBurst =
    std::function<Trajectory<Scalar>(Scalar, const VectorX<Scalar>&, Scalar)>;

/// Restriction maps a micro state down to macro variables.
template <typename Scalar>
using RestrictFn = std::function<VectorX<Scalar>(const VectorX<Scalar>&)>;

/// Lifting reconstructs a micro state from macro variables X plus a donor
/// micro state that supplies the unresolved (fast) components.
template <typename Scalar>
using LiftFn = std::function<VectorX<Scalar>(const VectorX<Scalar>&,
                                             const VectorX<Scalar>&)>;

template <typename Scalar>
RestrictFn<Scalar> identity_restrict() {
  return [](const VectorX<Scalar>& u) { return u; };
}
template <typename Scalar>
LiftFn<Scalar> identity_lift() {
  return [](const VectorX<Scalar>& x, const VectorX<Scalar>&) { return x; };
}

template <typename Scalar>
struct PiConfig {
  Scalar delta = Scalar(0);   ///< burst length (time units), must be > 0
  bool record_bursts = false; ///< keep every micro burst in the result
  bool record_svf = false;    ///< keep (time, slow derivative) samples
};

template <typename Scalar>
struct SvfSample {
  Scalar t;
  VectorX<Scalar> dxdt;
};

/// Output of a projective integration run.  Macro samples always present;
/// bursts and svf filled when the corresponding PiConfig flags are set.
template <typename Scalar>
struct PiResult {
  std::vector<Scalar> times;
  std::vector<VectorX<Scalar>> states;
  std::vector<Trajectory<Scalar>> bursts;
  std::vector<SvfSample<Scalar>> svf;

  [[nodiscard]] Eigen::Index size() const {
    return static_cast<Eigen::Index>(times.size());
  }
  [[nodiscard]] MatrixX<Scalar> states_matrix() const {
    MatrixX<Scalar> m(size(), states.empty() ? 0 : states.front().size());
    for (Eigen::Index k = 0; k < size(); ++k)
      m.row(k) = states[static_cast<std::size_t>(k)].transpose();
    return m;
  }
};

/// Projective run abort carrying whatever was computed before the failure.
template <typename Scalar>
class PiRunError : public NumericalError {
 public:
  PiRunError(const std::string& what, double time_reached,
             PiResult<Scalar> partial_result)
      : NumericalError(what, time_reached), partial(std::move(partial_result)) {}
  PiResult<Scalar> partial;
};

namespace detail {

template <typename Scalar>
void check_burst(const Trajectory<Scalar>& traj, Scalar t0,
                 const VectorX<Scalar>& u0, Scalar delta, const char* who) {
  if (traj.size() < 2)
    throw std::invalid_argument(std::string(who) +
                                ": burst must return at least two samples");
  const Scalar scale = std::max({std::abs(t0), std::abs(t0 + delta),
                                 std::abs(delta), Scalar(1e-300)});
  if (std::abs(traj.times.front() - t0) > Scalar(1e-12) * scale)
    throw std::invalid_argument(
        std::string(who) + ": burst must start at the requested time");
  if (std::abs(traj.back_time() - (t0 + delta)) > Scalar(1e-12) * scale)
    throw std::invalid_argument(std::string(who) +
                                ": burst must end at t0 + delta");
  const Scalar u_scale = Scalar(1) + u0.template lpNorm<Eigen::Infinity>();
  if ((traj.states.front() - u0).template lpNorm<Eigen::Infinity>() >
      Scalar(1e-12) * u_scale)
    throw std::invalid_argument(
        std::string(who) + ": burst must start from the requested state");
  if (!traj.back_state().allFinite())
    throw NumericalError(std::string(who) + ": burst produced a non-finite state",
                         static_cast<double>(traj.back_time()));
}

// Divergence guard shared by the projective steppers: a macro state this
// large means the projective step is amplifying unresolved fast modes, i.e.
// the burst length sits below the stability minimum log(beta*DT)/beta.
template <typename Scalar>
void check_macro_state(const VectorX<Scalar>& x, Scalar t) {
  if (!x.allFinite() ||
      x.template lpNorm<Eigen::Infinity>() > Scalar(1e12))
    throw NumericalError(
        "projective integration diverged near t = " +
            std::to_string(static_cast<double>(t)) +
            " (macro state norm exceeds 1e12): burst length is likely below "
            "the stability minimum log(beta*DT)/beta — lengthen the burst or "
            "shorten the macro step",
        static_cast<double>(t));
}

}  // namespace detail

template <typename Scalar>
struct ConstrDerivResult {
  VectorX<Scalar> dudt;             ///< slow-field estimate at t0
  Trajectory<Scalar> first_burst;   ///< forward burst from (t0, u0)
  Trajectory<Scalar> second_burst;  ///< burst from the back-projection, ends at t0
};

/// Derivative on the constraint-defined slow manifold.  Bursts forward from
/// (t0, u0) for delta, projects the end state backward over 2*delta with the
/// burst-end derivative (landing at t0 - delta), bursts forward again, and
/// returns that second burst's end derivative — an estimate of the slow
/// field at t0 itself with the fast transient damped twice.
template <typename Scalar>
ConstrDerivResult<Scalar> constr_deriv(const MicroBurst<Scalar>& burst,
                                       Scalar t0, const VectorX<Scalar>& u0,
                                       Scalar delta) {
  if (!burst) throw std::invalid_argument("constr_deriv: burst is required");
  if (!(delta > Scalar(0)))
    throw std::invalid_argument("constr_deriv: delta must be positive");

  Trajectory<Scalar> b1 = burst(t0, u0, delta);
  detail::check_burst(b1, t0, u0, delta, "constr_deriv");
  const VectorX<Scalar> g1 = end_derivative(b1);

  VectorX<Scalar> v0 = b1.back_state() - 2 * delta * g1;
  if (!v0.allFinite())
    throw NumericalError(
        "constr_deriv: back-projected state is not finite; reduce the burst "
        "length",
        static_cast<double>(t0));

  Trajectory<Scalar> b2 = burst(t0 - delta, v0, delta);
  detail::check_burst(b2, t0 - delta, v0, delta, "constr_deriv");

  ConstrDerivResult<Scalar> r;
  r.dudt = end_derivative(b2);
  r.first_burst = std::move(b1);
  r.second_burst = std::move(b2);
  return r;
}

/// Handle to an adaptive macro integrator: integrates the supplied (counted)
/// derivative field from t0 to tf starting at x0.
template <typename Scalar>
using MacroIntegrator = std::function<Trajectory<Scalar>(
    const Rhs<Scalar>&, Scalar, Scalar, const VectorX<Scalar>&)>;

template <typename Scalar>
MacroIntegrator<Scalar> make_rk45_macro(Scalar rtol, Scalar atol) {
  return [rtol, atol](const Rhs<Scalar>& f, Scalar a, Scalar b,
                      const VectorX<Scalar>& x0) {
    return rk45_adaptive<Scalar>(f, a, b, x0, rtol, atol);
  };
}

/// Micro burst backed by rk4_fixed with n_steps uniform sub-steps.
template <typename Scalar>
MicroBurst<Scalar> make_rk4_burst(Rhs<Scalar> f, Eigen::Index n_steps) {
  if (n_steps < 1)
    throw std::invalid_argument("make_rk4_burst: n_steps must be >= 1");
  return [f, n_steps](Scalar t0, const VectorX<Scalar>& u0, Scalar delta) {
    return rk4_fixed<Scalar>(f, t0, u0, delta / Scalar(n_steps), n_steps);
  };
}

/// Micro burst backed by the adaptive Dormand–Prince integrator.
template <typename Scalar>
MicroBurst<Scalar> make_rk45_burst(Rhs<Scalar> f, Scalar rtol, Scalar atol) {
  return [f, rtol, atol](Scalar t0, const VectorX<Scalar>& u0, Scalar delta) {
    return rk45_adaptive<Scalar>(f, t0, t0 + delta, u0, rtol, atol);
  };
}

/// Projective integration, general macro integrator (adaptive).  Every
/// derivative request of the macro integrator triggers exactly one
/// constr_deriv (two micro bursts): F(t, X) = restrict(constr_deriv at the
/// lifted state).  Lifting reuses the final micro state of the most recent
/// completed burst as the fast-component donor, starting from u0.  Works
/// backward in time when tspan.second < tspan.first; a degenerate tspan
/// yields the single initial sample.  Burst failures abort with a PiRunError
/// retaining partial results and naming the macro time reached.
template <typename Scalar>
PiResult<Scalar> pig(const MacroIntegrator<Scalar>& macro,
                     const MicroBurst<Scalar>& burst,
                     std::pair<Scalar, Scalar> tspan,
                     const VectorX<Scalar>& u0,
                     RestrictFn<Scalar> restrict = nullptr,
                     LiftFn<Scalar> lift = nullptr,
                     PiConfig<Scalar> cfg = {}) {
  if (!macro) throw std::invalid_argument("pig: macro integrator is required");
  if (!burst) throw std::invalid_argument("pig: burst is required");
  if (!(cfg.delta > Scalar(0)))
    throw std::invalid_argument("pig: config.delta must be positive");
  if (!restrict) restrict = identity_restrict<Scalar>();
  if (!lift) lift = identity_lift<Scalar>();

  const VectorX<Scalar> x0 = restrict(u0);
  if (tspan.first == tspan.second) {
    PiResult<Scalar> out;
    out.times = {tspan.first};
    out.states = {x0};
    return out;
  }

  auto u_prev = std::make_shared<VectorX<Scalar>>(u0);
  auto rec = std::make_shared<PiResult<Scalar>>();

  Rhs<Scalar> field([=](Scalar t, const VectorX<Scalar>& X) {
    detail::check_macro_state(X, t);
    auto cd = constr_deriv<Scalar>(burst, t, lift(X, *u_prev), cfg.delta);
    *u_prev = cd.second_burst.back_state();
    VectorX<Scalar> dx = restrict(cd.dudt);
    if (cfg.record_bursts) {
      rec->bursts.push_back(std::move(cd.first_burst));
      rec->bursts.push_back(std::move(cd.second_burst));
    }
    if (cfg.record_svf) rec->svf.push_back({t, dx});
    return dx;
  });

  PiResult<Scalar> out;
  try {
    Trajectory<Scalar> mac = macro(field, tspan.first, tspan.second, x0);
    out.times = std::move(mac.times);
    out.states = std::move(mac.states);
  } catch (IntegrationError<Scalar>& e) {
    PiResult<Scalar> partial;
    partial.times = std::move(e.partial.times);
    partial.states = std::move(e.partial.states);
    partial.bursts = std::move(rec->bursts);
    partial.svf = std::move(rec->svf);
    throw PiRunError<Scalar>(std::string("pig: ") + e.what(), e.time_reached(),
                             std::move(partial));
  } catch (const NumericalError& e) {
    PiResult<Scalar> partial;
    partial.bursts = std::move(rec->bursts);
    partial.svf = std::move(rec->svf);
    throw PiRunError<Scalar>(std::string("pig: ") + e.what(), e.time_reached(),
                             std::move(partial));
  }
  out.bursts = std::move(rec->bursts);
  out.svf = std::move(rec->svf);
  return out;
}

namespace detail {

// One projective Runge–Kutta stage: burst from (t, lift(X)), record it,
// thread the donor state, and return the restricted end state/derivative.
template <typename Scalar>
struct PirkStage {
  VectorX<Scalar> x_end;  // restricted burst-end state
  VectorX<Scalar> dxdt;   // restricted end derivative (at t_end)
  Scalar t_end;
};

template <typename Scalar>
class PirkRunner {
 public:
  PirkRunner(const MicroBurst<Scalar>& burst, RestrictFn<Scalar> restrict,
             LiftFn<Scalar> lift, const PiConfig<Scalar>& cfg,
             const VectorX<Scalar>& u0, PiResult<Scalar>* out)
      : burst_(burst), restrict_(std::move(restrict)), lift_(std::move(lift)),
        cfg_(cfg), u_prev_(u0), out_(out) {}

  PirkStage<Scalar> stage(Scalar t, const VectorX<Scalar>& x) {
    check_macro_state(x, t);
    const VectorX<Scalar> lifted = lift_(x, u_prev_);
    Trajectory<Scalar> b = burst_(t, lifted, cfg_.delta);
    check_burst(b, t, lifted, cfg_.delta, "pirk");
    u_prev_ = b.back_state();

    const auto m = static_cast<std::size_t>(b.size()) - 1;
    const Scalar dt = b.times[m] - b.times[m - 1];
    if (!(dt != Scalar(0)))
      throw std::invalid_argument("pirk: burst tail times must be distinct");
    PirkStage<Scalar> s;
    s.x_end = restrict_(b.states[m]);
    s.dxdt = (s.x_end - restrict_(b.states[m - 1])) / dt;
    s.t_end = b.back_time();
    if (cfg_.record_svf) out_->svf.push_back({s.t_end, s.dxdt});
    if (cfg_.record_bursts) out_->bursts.push_back(std::move(b));
    return s;
  }

 private:
  const MicroBurst<Scalar>& burst_;
  RestrictFn<Scalar> restrict_;
  LiftFn<Scalar> lift_;
  const PiConfig<Scalar>& cfg_;
  VectorX<Scalar> u_prev_;
  PiResult<Scalar>* out_;
};

template <typename Scalar>
void validate_pirk_times(const std::vector<Scalar>& macro_times,
                         Scalar delta) {
  if (macro_times.empty())
    throw std::invalid_argument("pirk: macro_times must be non-empty");
  for (std::size_t i = 1; i < macro_times.size(); ++i) {
    const Scalar dT = macro_times[i] - macro_times[i - 1];
    if (!(std::abs(dT) > delta))
      throw std::invalid_argument(
          "pirk: consecutive macro times must differ by more than the burst "
          "length (a projective step must actually project)");
    if (i >= 2 && !((macro_times[i] > macro_times[i - 1]) ==
                    (macro_times[i - 1] > macro_times[i - 2])))
      throw std::invalid_argument("pirk: macro_times must be monotone");
  }
}

}  // namespace detail

/// Second-order (Heun-type) projective Runge–Kutta over the given macro
/// times.  Each macro step runs one burst from the current lifted state, an
/// Euler projective step over the remaining gap DT - delta, and one burst
/// from the predicted endpoint; the corrector weights account for the
/// burst-end offsets exactly, so macro samples land on macro_times and the
/// global error stays O(DT^2) uniformly in delta.
template <typename Scalar>
PiResult<Scalar> pirk2(const MicroBurst<Scalar>& burst,
                       const std::vector<Scalar>& macro_times,
                       const VectorX<Scalar>& u0,
                       RestrictFn<Scalar> restrict = nullptr,
                       LiftFn<Scalar> lift = nullptr,
                       PiConfig<Scalar> cfg = {}) {
  if (!burst) throw std::invalid_argument("pirk2: burst is required");
  if (!(cfg.delta > Scalar(0)))
    throw std::invalid_argument("pirk2: config.delta must be positive");
  detail::validate_pirk_times(macro_times, cfg.delta);
  if (!restrict) restrict = identity_restrict<Scalar>();
  if (!lift) lift = identity_lift<Scalar>();

  PiResult<Scalar> out;
  detail::PirkRunner<Scalar> run(burst, restrict, lift, cfg, u0, &out);
  VectorX<Scalar> x = restrict(u0);
  out.times.push_back(macro_times.front());
  out.states.push_back(x);

  try {
    for (std::size_t i = 0; i + 1 < macro_times.size(); ++i) {
      const Scalar t_next = macro_times[i + 1];
      const Scalar big_dt = t_next - macro_times[i];

      auto s1 = run.stage(macro_times[i], x);     // derivative at T + delta
      const Scalar g = t_next - s1.t_end;         // projective gap, signed
      auto s2 = run.stage(t_next, (s1.x_end + g * s1.dxdt).eval());
      // derivative nodes sit at offsets {0, big_dt} from the first burst
      // end; these weights integrate linear fields over the gap exactly.
      const Scalar w2 = g / (2 * big_dt);
      const Scalar w1 = Scalar(1) - w2;
      x = s1.x_end + g * (w1 * s1.dxdt + w2 * s2.dxdt);
      detail::check_macro_state(x, t_next);
      out.times.push_back(t_next);
      out.states.push_back(x);
    }
  } catch (const NumericalError& e) {
    throw PiRunError<Scalar>(std::string("pirk2: ") + e.what(),
                             e.time_reached(), std::move(out));
  }
  return out;
}

/// Fourth-order projective Runge–Kutta.  The first burst carries the state
/// to T + delta; the three remaining stage bursts start delta early so their
/// end derivatives sample the classical RK4 nodes of the gap exactly.
template <typename Scalar>
PiResult<Scalar> pirk4(const MicroBurst<Scalar>& burst,
                       const std::vector<Scalar>& macro_times,
                       const VectorX<Scalar>& u0,
                       RestrictFn<Scalar> restrict = nullptr,
                       LiftFn<Scalar> lift = nullptr,
                       PiConfig<Scalar> cfg = {}) {
  if (!burst) throw std::invalid_argument("pirk4: burst is required");
  if (!(cfg.delta > Scalar(0)))
    throw std::invalid_argument("pirk4: config.delta must be positive");
  detail::validate_pirk_times(macro_times, cfg.delta);
  if (!restrict) restrict = identity_restrict<Scalar>();
  if (!lift) lift = identity_lift<Scalar>();

  PiResult<Scalar> out;
  detail::PirkRunner<Scalar> run(burst, restrict, lift, cfg, u0, &out);
  VectorX<Scalar> x = restrict(u0);
  out.times.push_back(macro_times.front());
  out.states.push_back(x);

  try {
    for (std::size_t i = 0; i + 1 < macro_times.size(); ++i) {
      const Scalar t_next = macro_times[i + 1];
      const Scalar d = cfg.delta;

      auto s1 = run.stage(macro_times[i], x);  // k1 at t_a = T + delta
      const Scalar t_a = s1.t_end;
      const Scalar g = t_next - t_a;

      auto s2 = run.stage(t_a + g / 2 - d,
                          (s1.x_end + (g / 2 - d) * s1.dxdt).eval());
      auto s3 = run.stage(t_a + g / 2 - d,
                          (s1.x_end + (g / 2 - d) * s2.dxdt).eval());
      auto s4 = run.stage(t_next - d, (s1.x_end + (g - d) * s3.dxdt).eval());

      x = s1.x_end +
          (g / 6) * (s1.dxdt + 2 * s2.dxdt + 2 * s3.dxdt + s4.dxdt);
      detail::check_macro_state(x, t_next);
      out.times.push_back(t_next);
      out.states.push_back(x);
    }
  } catch (const NumericalError& e) {
    throw PiRunError<Scalar>(std::string("pirk4: ") + e.what(),
                             e.time_reached(), std::move(out));
  }
  return out;
}

template <typename Scalar>
struct BurstBound {
  Scalar delta_min;  ///< shortest stable burst for the given macro step
  bool projective;   ///< false: fast modes decay within the macro step anyway
};

/// Stability lower bound on the burst length for fast decay rate >= beta and
/// macro step dt_macro: delta >= log|beta*dt_macro| / beta.  When
/// |beta*dt_macro| <= 1 projective integration brings no speedup and the
/// bound degenerates to zero (flagged).
template <typename Scalar>
BurstBound<Scalar> burst_length_min(Scalar beta, Scalar dt_macro) {
  if (!(beta > Scalar(0)))
    throw std::invalid_argument("burst_length_min: beta must be positive");
  const Scalar p = std::abs(beta * dt_macro);
  if (!(p > Scalar(1))) return {Scalar(0), false};
  return {std::log(p) / beta, true};
}

/// Macro-step guidance at accuracy eps for slow rate alpha: second order
/// keeps alpha*DT below sqrt(6*eps), fourth order below eps^(1/4).
template <typename Scalar>
Scalar suggest_macro_step(Scalar alpha, Scalar eps, int order) {
  if (!(alpha > Scalar(0)) || !(eps > Scalar(0)))
    throw std::invalid_argument(
        "suggest_macro_step: alpha and eps must be positive");
  if (order == 2) return std::sqrt(Scalar(6) * eps) / alpha;
  if (order == 4) return std::pow(eps, Scalar(0.25)) / alpha;
  throw std::invalid_argument("suggest_macro_step: order must be 2 or 4");
}

/// Uniform macro grid t0 + k*dt, k = 0..n_steps (fused arithmetic).
template <typename Scalar>
std::vector<Scalar> uniform_times(Scalar t0, Scalar dt, Eigen::Index n_steps) {
  std::vector<Scalar> t(static_cast<std::size_t>(n_steps) + 1);
  for (Eigen::Index k = 0; k <= n_steps; ++k)
    t[static_cast<std::size_t>(k)] = t0 + Scalar(k) * dt;
  return t;
}

}  // namespace eqfree
