#include "eqfree/experiments.hpp"

#include "eqfree/io.hpp"

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <string_view>
#include <thread>

namespace eqfree {

namespace {

using nlohmann::json;

double positive_or(double v, double dflt, const char* name) {
  if (v == 0) return dflt;
  if (!(v > 0) || !std::isfinite(v))
    throw std::invalid_argument(std::string(name) + " must be positive");
  return v;
}

std::pair<double, double> span_or(std::pair<double, double> v,
                                  std::pair<double, double> dflt,
                                  const char* name) {
  if (v.first == v.second) return dflt;
  if (!(v.second > v.first) || !std::isfinite(v.first) ||
      !std::isfinite(v.second))
    throw std::invalid_argument(std::string(name) +
                                " must be an increasing finite interval");
  return v;
}

std::vector<KeyValue> spec_echo(const ExperimentSpec& s) {
  return {{"experiment", s.experiment},
          {"algorithm", s.algorithm},
          {"beta", format_float(s.beta)},
          {"burst", format_float(s.burst)},
          {"dt_macro", format_float(s.dt_macro)},
          {"tspan",
           format_float(s.tspan.first) + ":" + format_float(s.tspan.second)},
          {"rtol", format_float(s.rtol)},
          {"seed", std::to_string(s.seed)},
          {"format", s.format},
          {"parallel", std::to_string(s.parallel)}};
}

// The timestamp comment is the one line reruns may differ by; every other
// byte of a CSV is determined by (spec, seed).
void csv_preamble(CsvWriter& w, const ExperimentSpec& spec,
                  const std::vector<KeyValue>& extra) {
  w.comment("eqfree " + spec.experiment);
  w.comment("generated: " + utc_timestamp());
  w.meta(spec_echo(spec));
  w.meta(extra);
}

json params_json(const ExperimentSpec& s) {
  json j;
  for (const auto& kv : spec_echo(s)) j[kv.key] = kv.value;
  return j;
}

double quantile(std::vector<double> v, double p) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

std::string sanitize_cell(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n') c = ';';
  return s;
}

}  // namespace

// ================================================================ slowfast

SlowfastReport run_slowfast_pig(const ExperimentSpec& spec) {
  SlowfastReport rep;
  rep.algorithm = spec.algorithm.empty() ? std::string("pig") : spec.algorithm;
  if (rep.algorithm != "pig" && rep.algorithm != "pirk2" &&
      rep.algorithm != "pirk4")
    throw std::invalid_argument(
        "slowfast-pig: algorithm must be pig, pirk2 or pirk4");
  rep.beta = positive_or(spec.beta, 1e5, "beta");
  rep.delta =
      positive_or(spec.burst, 2.0 / rep.beta * std::log(rep.beta), "burst");
  rep.rtol_macro = positive_or(spec.rtol, 1e-6, "rtol");
  rep.rtol_baseline = 1e-8;
  const auto tspan = span_or(spec.tspan, {0.0, 6.0}, "tspan");

  VectorX<double> u0(2);
  u0 << 1.0, 0.0;
  Rhs<double> micro = slowfast_rhs<double>(rep.beta);
  // rk4 sub-step short enough for the fast rate (|beta*dt| well inside the
  // rk4 stability interval)
  const double steps = std::ceil(rep.beta * rep.delta / 1.8);
  if (!(steps >= 1.0) || steps > 2e6)
    throw std::invalid_argument(
        "slowfast-pig: burst length out of range for the fixed-step micro "
        "integrator");
  rep.burst_steps = static_cast<long long>(steps);
  MicroBurst<double> burst = make_rk4_burst<double>(micro, rep.burst_steps);

  PiConfig<double> cfg;
  cfg.delta = rep.delta;
  cfg.record_svf = true;
  cfg.record_bursts = true;

  if (rep.algorithm == "pig") {
    // macro state: the slow variable u1; lifting reuses the donor's u2
    RestrictFn<double> res = [](const VectorX<double>& u) {
      return VectorX<double>(u.head(1));
    };
    LiftFn<double> lif = [](const VectorX<double>& x,
                            const VectorX<double>& donor) {
      VectorX<double> u(2);
      u << x[0], donor[1];
      return u;
    };
    rep.pi = pig<double>(
        make_rk45_macro<double>(rep.rtol_macro, rep.rtol_macro * 1e-3), burst,
        tspan, u0, res, lif, cfg);
  } else {
    // full-state projective Runge-Kutta on a uniform macro grid
    rep.dt_macro = positive_or(spec.dt_macro, 0.01, "dt-macro");
    const auto n = static_cast<Eigen::Index>(
        std::llround((tspan.second - tspan.first) / rep.dt_macro));
    if (n < 1)
      throw std::invalid_argument(
          "slowfast-pig: macro step exceeds the time span");
    const auto times =
        uniform_times(tspan.first, (tspan.second - tspan.first) / double(n), n);
    rep.pi = rep.algorithm == "pirk2"
                 ? pirk2<double>(burst, times, u0, nullptr, nullptr, cfg)
                 : pirk4<double>(burst, times, u0, nullptr, nullptr, cfg);
  }
  rep.rhs_evals_pi = micro.evaluations();
  rep.macro_samples = rep.pi.size();

  // brute-force baseline, re-simulated segment by segment through the same
  // macro times so endpoints line up exactly
  Rhs<double> base = slowfast_rhs<double>(rep.beta);
  VectorX<double> cur = u0;
  double t_cur = rep.pi.times.front();
  rep.baseline_u1.push_back(cur[0]);
  for (std::size_t k = 1; k < rep.pi.times.size(); ++k) {
    Trajectory<double> seg = rk45_adaptive<double>(
        base, t_cur, rep.pi.times[k], cur, rep.rtol_baseline, 1e-11);
    cur = seg.back_state();
    t_cur = rep.pi.times[k];
    rep.baseline_u1.push_back(cur[0]);
  }
  rep.rhs_evals_baseline = base.evaluations();
  rep.max_error = 0;
  for (std::size_t k = 0; k < rep.pi.times.size(); ++k)
    rep.max_error = std::max(
        rep.max_error, std::abs(rep.pi.states[k][0] - rep.baseline_u1[k]));
  return rep;
}

std::string render_csv(const SlowfastReport& r, const ExperimentSpec& spec) {
  CsvWriter w;
  csv_preamble(
      w, spec,
      {{"algorithm_effective", r.algorithm},
       {"beta_effective", format_float(r.beta)},
       {"delta", format_float(r.delta)},
       {"dt_macro_effective", format_float(r.dt_macro)},
       {"rtol_macro", format_float(r.rtol_macro)},
       {"rtol_baseline", format_float(r.rtol_baseline)},
       {"burst_steps", std::to_string(r.burst_steps)},
       {"macro_samples", std::to_string(r.macro_samples)},
       {"max_error", format_float(r.max_error)},
       {"rhs_evals_pi", std::to_string(r.rhs_evals_pi)},
       {"rhs_evals_baseline", std::to_string(r.rhs_evals_baseline)},
       {"eval_ratio",
        format_float(static_cast<double>(r.rhs_evals_pi) /
                     static_cast<double>(std::max(1LL, r.rhs_evals_baseline)))}});

  const Eigen::Index dim = r.pi.states.empty() ? 0 : r.pi.states.front().size();
  std::vector<std::string> names{"t"};
  for (Eigen::Index j = 0; j < dim; ++j)
    names.push_back("x" + std::to_string(j));
  names.emplace_back("baseline_u1");
  names.emplace_back("abs_error");
  w.header(names);
  for (std::size_t k = 0; k < r.pi.times.size(); ++k) {
    std::vector<double> row{r.pi.times[k]};
    for (Eigen::Index j = 0; j < dim; ++j) row.push_back(r.pi.states[k][j]);
    row.push_back(r.baseline_u1[k]);
    row.push_back(std::abs(r.pi.states[k][0] - r.baseline_u1[k]));
    w.row(row);
  }

  w.blank();
  w.comment("slow vector field samples (one per derivative request)");
  const Eigen::Index sdim = r.pi.svf.empty() ? 0 : r.pi.svf.front().dxdt.size();
  std::vector<std::string> snames{"t"};
  for (Eigen::Index j = 0; j < sdim; ++j)
    snames.push_back("dXdt" + std::to_string(j));
  w.header(snames);
  for (const auto& s : r.pi.svf) {
    std::vector<double> row{s.t};
    for (Eigen::Index j = 0; j < sdim; ++j) row.push_back(s.dxdt[j]);
    w.row(row);
  }

  w.blank();
  w.comment("micro bursts (blank line between bursts)");
  const Eigen::Index bdim =
      r.pi.bursts.empty() ? 0 : r.pi.bursts.front().dim();
  std::vector<std::string> bnames{"burst", "t"};
  for (Eigen::Index j = 0; j < bdim; ++j)
    bnames.push_back("u" + std::to_string(j));
  w.header(bnames);
  for (std::size_t b = 0; b < r.pi.bursts.size(); ++b) {
    const auto& traj = r.pi.bursts[b];
    for (Eigen::Index k = 0; k < traj.size(); ++k) {
      std::vector<std::string> cells{std::to_string(b),
                                     format_float(traj.times[k])};
      const auto& u = traj.states[static_cast<std::size_t>(k)];
      for (Eigen::Index j = 0; j < bdim; ++j)
        cells.push_back(format_float(u[j]));
      w.row_cells(cells);
    }
    if (b + 1 < r.pi.bursts.size()) w.blank();
  }
  return w.text();
}

std::string render_json(const SlowfastReport& r, const ExperimentSpec& spec) {
  json j;
  j["experiment"] = spec.experiment;
  j["params"] = params_json(spec);
  j["effective"] = {{"algorithm", r.algorithm},
                    {"beta", r.beta},
                    {"delta", r.delta},
                    {"dt_macro", r.dt_macro},
                    {"rtol_macro", r.rtol_macro},
                    {"rtol_baseline", r.rtol_baseline},
                    {"burst_steps", r.burst_steps}};
  j["summary"] = {
      {"max_error", r.max_error},
      {"rhs_evals_pi", r.rhs_evals_pi},
      {"rhs_evals_baseline", r.rhs_evals_baseline},
      {"eval_ratio", static_cast<double>(r.rhs_evals_pi) /
                         static_cast<double>(std::max(1LL, r.rhs_evals_baseline))},
      {"macro_samples", r.macro_samples},
      {"n_bursts", r.pi.bursts.size()}};
  j["T"] = r.pi.times;
  json xs = json::array();
  for (const auto& x : r.pi.states)
    xs.push_back(std::vector<double>(x.data(), x.data() + x.size()));
  j["X"] = std::move(xs);
  j["baseline_u1"] = r.baseline_u1;
  json svf_t = json::array(), svf_dx = json::array();
  for (const auto& s : r.pi.svf) {
    svf_t.push_back(s.t);
    svf_dx.push_back(
        std::vector<double>(s.dxdt.data(), s.dxdt.data() + s.dxdt.size()));
  }
  j["svf"] = {{"t", std::move(svf_t)}, {"dXdt", std::move(svf_dx)}};
  return j.dump(2) + "\n";
}

// =========================================================== stiff scaling

namespace {

struct ScalingParams {
  std::vector<double> macro_times;
  double t_final{}, delta{}, rtol{};
  long long burst_steps{};
};

ScalingRow scaling_cell(Eigen::Index n_fast, int repeat, const char* alg,
                        std::uint64_t seed, const ScalingParams& p) {
  ScalingRow row;
  row.n_fast = n_fast;
  row.repeat = repeat;
  row.algorithm = alg;
  const std::uint64_t cell_seed = hash_index(
      seed ^ hash_index(static_cast<std::uint64_t>(n_fast) * 1000 +
                        static_cast<std::uint64_t>(repeat)));
  const auto t0 = std::chrono::steady_clock::now();
  try {
    LinearSystem sys = random_stiff_system(n_fast, cell_seed);
    Rhs<double> f = sys.rhs();
    MicroBurst<double> burst = make_rk4_burst<double>(f, p.burst_steps);
    PiConfig<double> cfg;
    cfg.delta = p.delta;

    PiResult<double> res;
    if (std::string_view(alg) == "pirk4")
      res = pirk4<double>(burst, p.macro_times, sys.u0, slow_restrict(sys),
                          slow_lift(sys), cfg);
    else
      res = pig<double>(make_rk45_macro<double>(p.rtol, p.rtol * 1e-3), burst,
                        {0.0, p.t_final}, sys.u0, slow_restrict(sys),
                        slow_lift(sys), cfg);

    const VectorX<double> x_exact =
        slow_restrict(sys)(exact_solution(sys, p.t_final));
    row.rel_error = (res.states.back() - x_exact).norm() /
                    std::max(x_exact.norm(), 1e-12);
    row.rhs_evals = f.evaluations();
  } catch (const std::exception& e) {
    row.status = std::string("error: ") + e.what();
    row.rel_error = std::numeric_limits<double>::quiet_NaN();
  }
  row.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return row;
}

}  // namespace

ScalingReport run_stiff_scaling(const ExperimentSpec& spec) {
  if (spec.parallel < 1)
    throw std::invalid_argument("stiff-scaling: parallel must be >= 1");
  ScalingReport rep;
  rep.n_fast_values = {0, 10, 20, 40};
  rep.repeats = 4;
  const auto tspan = span_or(spec.tspan, {0.0, 10.0}, "tspan");
  if (tspan.first != 0.0)
    throw std::invalid_argument("stiff-scaling: tspan must start at 0");
  rep.t_final = tspan.second;
  rep.dt_macro = positive_or(spec.dt_macro, 0.5, "dt-macro");
  // fast eigenvalues lie in [-2e4, -1e4] by construction; the default burst
  // doubles the stability minimum for the slowest fast mode
  const double delta_default = 2.0 * std::log(1e4 * rep.dt_macro) / 1e4;
  if (spec.burst == 0 && !(delta_default > 0))
    throw std::invalid_argument(
        "stiff-scaling: macro step too small for a stable default burst; "
        "pass --burst");
  rep.delta = positive_or(spec.burst, delta_default, "burst");

  ScalingParams p;
  p.t_final = rep.t_final;
  p.delta = rep.delta;
  p.rtol = positive_or(spec.rtol, 1e-6, "rtol");
  const double steps = std::ceil(2e4 * rep.delta / 1.8);
  if (!(steps >= 1.0) || steps > 2e6)
    throw std::invalid_argument("stiff-scaling: burst length out of range");
  p.burst_steps = static_cast<long long>(steps);
  const auto n_macro =
      static_cast<Eigen::Index>(std::llround(rep.t_final / rep.dt_macro));
  if (n_macro < 1)
    throw std::invalid_argument(
        "stiff-scaling: macro step exceeds the time span");
  p.macro_times = uniform_times(0.0, rep.t_final / double(n_macro), n_macro);

  struct Cell {
    Eigen::Index n_fast;
    int repeat;
    const char* alg;
  };
  static constexpr std::array<const char*, 2> kAlgs{"pig", "pirk4"};
  std::vector<Cell> cells;
  for (const auto nf : rep.n_fast_values)
    for (const char* alg : kAlgs)
      for (int r = 0; r < rep.repeats; ++r) cells.push_back({nf, r, alg});

  rep.rows.resize(cells.size());
  // warm-up run, discarded: first timed cells would otherwise pay the
  // one-off cache/allocator cost
  (void)scaling_cell(cells.front().n_fast, cells.front().repeat,
                     cells.front().alg, spec.seed, p);

  std::atomic<std::size_t> next{0};
  auto drain = [&cells, &rep, &spec, &p, &next] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      rep.rows[i] = scaling_cell(cells[i].n_fast, cells[i].repeat,
                                 cells[i].alg, spec.seed, p);
    }
  };
  const int workers =
      std::min<int>(spec.parallel, static_cast<int>(cells.size()));
  if (workers <= 1) {
    drain();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int k = 0; k < workers; ++k) pool.emplace_back(drain);
    for (auto& th : pool) th.join();
  }
  return rep;
}

std::string render_csv(const ScalingReport& r, const ExperimentSpec& spec) {
  CsvWriter w;
  csv_preamble(w, spec,
               {{"t_final", format_float(r.t_final)},
                {"dt_macro_effective", format_float(r.dt_macro)},
                {"delta", format_float(r.delta)},
                {"repeats", std::to_string(r.repeats)}});
  // wall-clock notes live in comments only: data rows must be reproducible
  for (const auto nf : r.n_fast_values)
    for (const char* alg : {"pig", "pirk4"}) {
      std::vector<double> times;
      for (const auto& row : r.rows)
        if (row.n_fast == nf && row.algorithm == alg && row.status == "ok")
          times.push_back(row.wall_ms);
      w.comment("wall_ms n_fast=" + std::to_string(nf) + " algorithm=" + alg +
                " q1=" + format_float(quantile(times, 0.25)) +
                " median=" + format_float(median(times)) +
                " q3=" + format_float(quantile(times, 0.75)));
    }
  w.header({"n_fast", "repeat", "algorithm", "rel_error", "rhs_evals",
            "status"});
  for (const auto& row : r.rows)
    w.row_cells({std::to_string(row.n_fast), std::to_string(row.repeat),
                 row.algorithm, format_float(row.rel_error),
                 std::to_string(row.rhs_evals), sanitize_cell(row.status)});

  w.blank();
  w.comment("per-group medians over repeats (successful rows only)");
  w.header({"n_fast", "algorithm", "median_rel_error", "median_rhs_evals"});
  for (const auto nf : r.n_fast_values)
    for (const char* alg : {"pig", "pirk4"}) {
      std::vector<double> errs, evals;
      for (const auto& row : r.rows)
        if (row.n_fast == nf && row.algorithm == alg && row.status == "ok") {
          errs.push_back(row.rel_error);
          evals.push_back(static_cast<double>(row.rhs_evals));
        }
      w.row_cells({std::to_string(nf), alg, format_float(median(errs)),
                   format_float(median(evals))});
    }
  return w.text();
}

std::string render_json(const ScalingReport& r, const ExperimentSpec& spec) {
  json j;
  j["experiment"] = spec.experiment;
  j["params"] = params_json(spec);
  j["effective"] = {{"t_final", r.t_final},
                    {"dt_macro", r.dt_macro},
                    {"delta", r.delta},
                    {"repeats", r.repeats}};
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"n_fast", row.n_fast},
                    {"repeat", row.repeat},
                    {"algorithm", row.algorithm},
                    {"rel_error", row.rel_error},
                    {"rhs_evals", row.rhs_evals},
                    {"status", row.status}});
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

// ====================================================== 2D patch diffusion

Patch2Report run_patch_diffusion2(const ExperimentSpec& spec) {
  Patch2Report rep;
  rep.seed = spec.seed;
  rep.rtol = positive_or(spec.rtol, 1e-6, "rtol");

  const MicroRhs2<double> mrhs = &nonlinear_diffusion_rhs2<double>;
  const AxisSpec<double> ax{{-3.0, 3.0}, 9, 0.25, 0, 5};
  const AxisSpec<double> ay{{-2.0, 2.0}, 7, 0.25, 0, 5};
  rep.cfg = config_patches2<double>(mrhs, ax, ay);
  const auto& cfg = rep.cfg;

  // the patch micro lattices embed exactly in a full lattice with the same
  // spacing; noise is addressed by full-lattice site index so both runs see
  // identical values at shared sites
  const auto p1 =
      static_cast<Eigen::Index>(std::llround((cfg.ax.b - cfg.ax.a) / cfg.ax.d));
  const auto p2 =
      static_cast<Eigen::Index>(std::llround((cfg.ay.b - cfg.ay.a) / cfg.ay.d));
  const auto site_x = [&cfg](Eigen::Index i, Eigen::Index jx) {
    return static_cast<Eigen::Index>(
        std::llround((cfg.ax.x(i, jx) - cfg.ax.a) / cfg.ax.d));
  };
  const auto site_y = [&cfg](Eigen::Index j, Eigen::Index jy) {
    return static_cast<Eigen::Index>(
        std::llround((cfg.ay.x(j, jy) - cfg.ay.a) / cfg.ay.d));
  };
  const auto noisy_gaussian = [&rep, p1](double x, double y,
                                         Eigen::Index sx, Eigen::Index sy) {
    const auto site = static_cast<std::uint64_t>(sx) +
                      static_cast<std::uint64_t>(p1) *
                          static_cast<std::uint64_t>(sy);
    return std::exp(-x * x - y * y) * (0.9 + 0.1 * uniform_at(rep.seed, site));
  };

  Field2<double> u0f = cfg.make_field();
  for (Eigen::Index jy = 0; jy < cfg.ay.n_patch; ++jy)
    for (Eigen::Index jx = 0; jx < cfg.ax.n_patch; ++jx)
      for (Eigen::Index j = 0; j < cfg.ay.n_sub; ++j)
        for (Eigen::Index i = 0; i < cfg.ax.n_sub; ++i)
          u0f(i, j, jx, jy) =
              noisy_gaussian(cfg.x(i, j, jx, jy), cfg.y(i, j, jx, jy),
                             site_x(i, jx), site_y(j, jy));

  const std::vector<double> snap_t{0.0, 0.33, 1.0, 3.0};
  const PatchConfig2<double>* cp = &rep.cfg;
  Rhs<double> fp([cp](double t, const VectorX<double>& u) {
    return patch_rhs2(*cp, t, u);
  });

  VectorX<double> state = u0f.data;
  {
    Field2<double> s0 = u0f;
    rep.snaps.push_back({0.0, patch_edge_int2(cfg, std::move(s0))});
  }
  double t_cur = 0.0;
  for (std::size_t k = 1; k < snap_t.size(); ++k) {
    Trajectory<double> seg = rk45_adaptive<double>(
        fp, t_cur, snap_t[k], state, rep.rtol, rep.rtol * 1e-3);
    state = seg.back_state();
    t_cur = snap_t[k];
    Field2<double> f = cfg.make_field();
    f.data = state;
    rep.snaps.push_back({t_cur, patch_edge_int2(cfg, std::move(f))});
  }
  rep.rhs_evals_patch = fp.evaluations();

  // full-lattice reference run with the same site noise
  VectorX<double> full0(p1 * p2);
  for (Eigen::Index sy = 0; sy < p2; ++sy)
    for (Eigen::Index sx = 0; sx < p1; ++sx)
      full0[sx + p1 * sy] =
          noisy_gaussian(cfg.ax.a + double(sx) * cfg.ax.d,
                         cfg.ay.a + double(sy) * cfg.ay.d, sx, sy);
  Rhs<double> fo = full_domain_rhs2<double>(mrhs, {cfg.ax.a, cfg.ax.b},
                                            {cfg.ay.a, cfg.ay.b}, p1, p2);
  const double mass0 = full0.sum();
  rep.oracle_mass_drift.push_back(0.0);
  VectorX<double> ostate = full0;
  VectorX<double> oracle_t1;
  t_cur = 0.0;
  for (std::size_t k = 1; k < snap_t.size(); ++k) {
    Trajectory<double> seg = rk45_adaptive<double>(
        fo, t_cur, snap_t[k], ostate, rep.rtol, rep.rtol * 1e-3);
    ostate = seg.back_state();
    t_cur = snap_t[k];
    rep.oracle_mass_drift.push_back(std::abs(ostate.sum() - mass0) /
                                    std::abs(mass0));
    if (snap_t[k] == 1.0) oracle_t1 = ostate;
  }
  rep.rhs_evals_oracle = fo.evaluations();

  // mid-patch agreement at t = 1, normalised by the largest oracle mid value
  const Field2<double>& s1 = rep.snaps[2].u;
  double scale = 0.0, worst = 0.0;
  for (Eigen::Index jy = 0; jy < cfg.ay.n_patch; ++jy)
    for (Eigen::Index jx = 0; jx < cfg.ax.n_patch; ++jx) {
      const double o =
          oracle_t1[site_x(cfg.ax.i0, jx) + p1 * site_y(cfg.ay.i0, jy)];
      scale = std::max(scale, std::abs(o));
      worst =
          std::max(worst, std::abs(s1(cfg.ax.i0, cfg.ay.i0, jx, jy) - o));
    }
  rep.max_mid_mismatch = worst / scale;
  return rep;
}

std::string render_csv(const Patch2Report& r, const ExperimentSpec& spec) {
  const auto& cfg = r.cfg;
  CsvWriter w;
  std::vector<KeyValue> extra{
      {"n_patch", std::to_string(cfg.ax.n_patch) + "x" +
                      std::to_string(cfg.ay.n_patch)},
      {"n_sub", std::to_string(cfg.ax.n_sub) + "x" +
                    std::to_string(cfg.ay.n_sub)},
      {"ratio", format_float(cfg.ax.ratio)},
      {"H", format_float(cfg.ax.H) + "," + format_float(cfg.ay.H)},
      {"d", format_float(cfg.ax.d) + "," + format_float(cfg.ay.d)},
      {"rtol_effective", format_float(r.rtol)},
      {"max_mid_mismatch_t1", format_float(r.max_mid_mismatch)},
      {"rhs_evals_patch", std::to_string(r.rhs_evals_patch)},
      {"rhs_evals_oracle", std::to_string(r.rhs_evals_oracle)}};
  for (std::size_t k = 0; k < r.snaps.size(); ++k)
    extra.push_back({"oracle_mass_drift_t" + format_float(r.snaps[k].t),
                     format_float(r.oracle_mass_drift[k])});
  csv_preamble(w, spec, extra);

  for (const auto& snap : r.snaps) {
    w.blank();
    w.comment("snapshot t=" + format_float(snap.t));
    w.header({"x", "y", "patch_jx", "patch_jy", "u"});
    for (Eigen::Index jy = 0; jy < cfg.ay.n_patch; ++jy)
      for (Eigen::Index jx = 0; jx < cfg.ax.n_patch; ++jx) {
        for (Eigen::Index j = 0; j < cfg.ay.n_sub; ++j)
          for (Eigen::Index i = 0; i < cfg.ax.n_sub; ++i)
            w.row_cells({format_float(cfg.x(i, j, jx, jy)),
                         format_float(cfg.y(i, j, jx, jy)),
                         std::to_string(jx), std::to_string(jy),
                         format_float(snap.u(i, j, jx, jy))});
        if (!(jy == cfg.ay.n_patch - 1 && jx == cfg.ax.n_patch - 1))
          w.blank();  // gap between patches, plot-friendly
      }
  }
  return w.text();
}

std::string render_json(const Patch2Report& r, const ExperimentSpec& spec) {
  const auto& cfg = r.cfg;
  json j;
  j["experiment"] = spec.experiment;
  j["params"] = params_json(spec);
  j["geometry"] = json::parse(render_patch2_manifest_json(r));
  j["summary"] = {{"max_mid_mismatch_t1", r.max_mid_mismatch},
                  {"oracle_mass_drift", r.oracle_mass_drift},
                  {"rhs_evals_patch", r.rhs_evals_patch},
                  {"rhs_evals_oracle", r.rhs_evals_oracle}};
  json snaps = json::array();
  for (const auto& s : r.snaps)
    snaps.push_back(
        {{"t", s.t},
         {"u", std::vector<double>(s.u.data.data(),
                                   s.u.data.data() + s.u.data.size())}});
  j["shape"] = {{"n_sub", {cfg.ax.n_sub, cfg.ay.n_sub}},
                {"n_patch", {cfg.ax.n_patch, cfg.ay.n_patch}},
                {"layout", "i fastest, then j, then patch_jx, then patch_jy"}};
  j["snapshots"] = std::move(snaps);
  return j.dump(2) + "\n";
}

std::string render_patch2_manifest_json(const Patch2Report& r) {
  const auto& cfg = r.cfg;
  const auto axis = [](const PatchConfig1<double>& a) {
    return json{{"domain", {a.a, a.b}},
                {"n_patch", a.n_patch},
                {"ratio", a.ratio},
                {"ord_cc", a.ord_cc},
                {"n_sub", a.n_sub},
                {"H", a.H},
                {"d", a.d},
                {"centers",
                 std::vector<double>(a.centers.data(),
                                     a.centers.data() + a.centers.size())}};
  };
  json m;
  m["x"] = axis(cfg.ax);
  m["y"] = axis(cfg.ay);
  m["seed"] = r.seed;
  json times = json::array();
  for (const auto& s : r.snaps) times.push_back(s.t);
  m["snapshot_times"] = std::move(times);
  return m.dump(2) + "\n";
}

// ========================================================== consistency fit

ConvergenceReport run_convergence(const ExperimentSpec& spec) {
  (void)spec;
  ConvergenceReport rep;
  const double two_pi = 2.0 * std::numbers::pi;
  const std::vector<Eigen::Index> patch_counts{8, 16, 32};
  const Eigen::Index n_sub = 5;
  const double ratio = 0.25;
  const double k_mode = 1.0;

  for (const int ord : {2, 4, 0})
    for (const auto n_patch : patch_counts) {
      const auto cfg =
          config_patches1<double>(heat_rhs1<double>(), {0.0, two_pi}, n_patch,
                                  ratio, ord, n_sub);
      const Eigen::Index m = cfg.flat_size();
      MatrixX<double> jac(m, m);
      VectorX<double> e = VectorX<double>::Zero(m);
      for (Eigen::Index c = 0; c < m; ++c) {
        e[c] = 1.0;
        jac.col(c) = patch_rhs1<double>(cfg, 0.0, e);
        e[c] = 0.0;
      }
      Eigen::EigenSolver<MatrixX<double>> es(jac);
      if (es.info() != Eigen::Success)
        throw NumericalError("convergence: eigen-solve failed", 0.0);

      // reference: dispersion of the full micro lattice at the same spacing
      const double lam_ref =
          -(4.0 / (cfg.d * cfg.d)) *
          std::pow(std::sin(k_mode * cfg.d / 2.0), 2);
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m; ++i)
        best = std::min(best, std::abs(es.eigenvalues()[i] - lam_ref));
      rep.rows.push_back({ord, n_patch, cfg.H, best});
    }

  const auto slope_for = [&rep](int ord) {
    std::vector<double> xs, ys;
    for (const auto& row : rep.rows)
      if (row.ord_cc == ord) {
        xs.push_back(std::log(row.h));
        ys.push_back(std::log(std::max(row.err, 1e-18)));
      }
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
  };
  rep.slope2 = slope_for(2);
  rep.slope4 = slope_for(4);
  rep.spectral_max_err = 0;
  for (const auto& row : rep.rows)
    if (row.ord_cc == 0)
      rep.spectral_max_err = std::max(rep.spectral_max_err, row.err);
  return rep;
}

std::string render_csv(const ConvergenceReport& r, const ExperimentSpec& spec) {
  CsvWriter w;
  csv_preamble(w, spec,
               {{"slope_ord2", format_float(r.slope2)},
                {"slope_ord4", format_float(r.slope4)},
                {"spectral_max_err", format_float(r.spectral_max_err)}});
  w.header({"ord_cc", "n_patch", "H", "eigenvalue_error"});
  for (const auto& row : r.rows)
    w.row_cells({std::to_string(row.ord_cc), std::to_string(row.n_patch),
                 format_float(row.h), format_float(row.err)});
  return w.text();
}

std::string render_json(const ConvergenceReport& r,
                        const ExperimentSpec& spec) {
  json j;
  j["experiment"] = spec.experiment;
  j["params"] = params_json(spec);
  j["summary"] = {{"slope_ord2", r.slope2},
                  {"slope_ord4", r.slope4},
                  {"spectral_max_err", r.spectral_max_err}};
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"ord_cc", row.ord_cc},
                    {"n_patch", row.n_patch},
                    {"H", row.h},
                    {"eigenvalue_error", row.err}});
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

// ============================================================ stability map

StabilityMapReport run_stability_map(const ExperimentSpec& spec) {
  (void)spec;
  StabilityMapReport rep;
  const double lo = 2.7, hi = 1000.0;
  const int npts = 60;
  for (int i = 0; i < npts; ++i) {
    const double x = lo * std::pow(hi / lo, double(i) / double(npts - 1));
    rep.rows.emplace_back(x, burst_length_min<double>(x, 1.0).delta_min);
  }
  return rep;
}

std::string render_csv(const StabilityMapReport& r,
                       const ExperimentSpec& spec) {
  CsvWriter w;
  csv_preamble(w, spec, {});
  w.header({"beta_dt", "delta_min_over_dt"});
  for (const auto& [x, y] : r.rows) w.row({x, y});
  return w.text();
}

std::string render_json(const StabilityMapReport& r,
                        const ExperimentSpec& spec) {
  json j;
  j["experiment"] = spec.experiment;
  j["params"] = params_json(spec);
  json rows = json::array();
  for (const auto& [x, y] : r.rows)
    rows.push_back({{"beta_dt", x}, {"delta_min_over_dt", y}});
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

}  // namespace eqfree
