#pragma once
// Batch experiments behind the CLI: each run_* function executes one
// experiment from an ExperimentSpec and returns a typed report; the render_*
// functions serialize reports to CSV (with '#' metadata comments and a single
// timestamp line) or JSON (timestamp-free, byte-reproducible).

#include "eqfree/patches2.hpp"
#include "eqfree/projective.hpp"
#include "eqfree/systems.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace eqfree {

/// Parsed CLI request.  Zero-valued numeric fields mean "use the
/// experiment's default"; every effective value is validated against the
/// target module's preconditions before any computation starts.
struct ExperimentSpec {
  std::string experiment;
  std::string algorithm{"pig"};
  double beta{0};
  double burst{0};
  double dt_macro{0};
  std::pair<double, double> tspan{0.0, 0.0};
  double rtol{0};
  std::uint64_t seed{1};
  std::string out_path;
  std::string format{"csv"};
  int parallel{1};
};

// ---------------------------------------------------------------- slowfast

struct SlowfastReport {
  std::string algorithm;
  double beta{}, delta{}, dt_macro{};  ///< dt_macro 0 for the adaptive pig
  double rtol_macro{}, rtol_baseline{};
  PiResult<double> pi;                 ///< macro trajectory with svf samples
  std::vector<double> baseline_u1;     ///< baseline u1 at the macro times
  double max_error{};
  long long rhs_evals_pi{}, rhs_evals_baseline{};
  long long burst_steps{};             ///< rk4 sub-steps per micro burst
  Eigen::Index macro_samples{};
};

/// Slow-fast demonstration: projective integration of the coupled pair with
/// the slow variable as the macro state (algorithm "pig"), or full-state
/// pirk2/pirk4 on a uniform macro grid, against a brute-force adaptive
/// baseline re-simulated across the same macro times.
SlowfastReport run_slowfast_pig(const ExperimentSpec& spec);

// ------------------------------------------------------------ stiff scaling

struct ScalingRow {
  Eigen::Index n_fast{};
  int repeat{};
  std::string algorithm;
  double rel_error{};       ///< slow-coordinate error vs the exact solution
  long long rhs_evals{};
  double wall_ms{};         ///< informational only; never in data rows
  std::string status{"ok"};
};

struct ScalingReport {
  std::vector<Eigen::Index> n_fast_values;
  int repeats{};
  double t_final{}, dt_macro{}, delta{};
  std::vector<ScalingRow> rows;  ///< deterministic order, failures included
};

/// Random stiff linear systems swept over the number of fast modes; PIRK4
/// and PIG integrate the ten slow eigen-coordinates and are scored against
/// the closed-form solution.  Cells run independently (optionally in
/// parallel) and a cell failure is recorded without stopping the sweep.
ScalingReport run_stiff_scaling(const ExperimentSpec& spec);

// ------------------------------------------------------- 2D patch diffusion

struct PatchSnapshot {
  double t{};
  Field2<double> u;  ///< edge faces re-interpolated for export
};

struct Patch2Report {
  PatchConfig2<double> cfg;
  std::uint64_t seed{};
  double rtol{};
  std::vector<PatchSnapshot> snaps;      ///< at t = 0, 0.33, 1, 3
  std::vector<double> oracle_mass_drift; ///< per snapshot, relative to t = 0
  double max_mid_mismatch{};             ///< patch vs oracle mids at t = 1
  long long rhs_evals_patch{}, rhs_evals_oracle{};
};

/// Nonlinear diffusion on a 9x7 patch grid with spectral coupling, plus a
/// full-lattice reference run at the same micro spacing sharing the same
/// site-hashed initial noise.
Patch2Report run_patch_diffusion2(const ExperimentSpec& spec);

// ---------------------------------------------------------- consistency fit

struct ConvergenceRow {
  int ord_cc{};
  Eigen::Index n_patch{};
  double h{};
  double err{};  ///< |leading macro eigenvalue - lattice reference|
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  double slope2{}, slope4{};   ///< fitted log-log error slopes
  double spectral_max_err{};
};

/// Lattice diffusion consistency: dense Jacobian of the coupled patch system
/// per (coupling order, patch count), leading macro eigenvalue against the
/// full-lattice dispersion value at the same micro spacing, log-log slope
/// across patch counts.
ConvergenceReport run_convergence(const ExperimentSpec& spec);

// ------------------------------------------------------------ stability map

struct StabilityMapReport {
  std::vector<std::pair<double, double>> rows;  ///< (beta*DT, delta_min/DT)
};

/// Relative burst-length bound delta_min/DT = log(beta*DT)/(beta*DT) sampled
/// log-uniformly over beta*DT in [2.7, 1000].
StabilityMapReport run_stability_map(const ExperimentSpec& spec);

// ------------------------------------------------------------------ render

std::string render_csv(const SlowfastReport& r, const ExperimentSpec& spec);
std::string render_json(const SlowfastReport& r, const ExperimentSpec& spec);
std::string render_csv(const ScalingReport& r, const ExperimentSpec& spec);
std::string render_json(const ScalingReport& r, const ExperimentSpec& spec);
std::string render_csv(const Patch2Report& r, const ExperimentSpec& spec);
std::string render_json(const Patch2Report& r, const ExperimentSpec& spec);
std::string render_csv(const ConvergenceReport& r, const ExperimentSpec& spec);
std::string render_json(const ConvergenceReport& r,
                        const ExperimentSpec& spec);
std::string render_csv(const StabilityMapReport& r,
                       const ExperimentSpec& spec);
std::string render_json(const StabilityMapReport& r,
                        const ExperimentSpec& spec);

/// Geometry manifest for plotting patch snapshots with inter-patch gaps.
std::string render_patch2_manifest_json(const Patch2Report& r);

}  // namespace eqfree
