// eqfree: batch driver for the equation-free experiments.
//
// Exit codes: 0 success, 1 internal failure, 2 bad usage, 3 numerical
// failure (e.g. a burst shorter than the stability minimum blew up).

#include "eqfree/experiments.hpp"
#include "eqfree/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <stdexcept>
#include <string>

namespace {

using eqfree::ExperimentSpec;

void add_common_flags(CLI::App* cmd, ExperimentSpec& spec,
                      std::string& tspan_raw) {
  cmd->add_option("--beta", spec.beta, "time-scale separation parameter");
  cmd->add_option("--burst", spec.burst, "micro burst length (delta)");
  cmd->add_option("--dt-macro", spec.dt_macro, "macro step");
  cmd->add_option("--tspan", tspan_raw, "integration span as a:b");
  cmd->add_option("--rtol", spec.rtol, "relative tolerance");
  cmd->add_option("--seed", spec.seed, "rng seed");
  cmd->add_option("--out", spec.out_path, "output path (default: stdout)");
  cmd->add_option("--format", spec.format, "output format")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--parallel", spec.parallel, "worker threads");
}

std::pair<double, double> parse_tspan(const std::string& raw) {
  const auto colon = raw.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == raw.size())
    throw std::invalid_argument("--tspan must look like a:b");
  std::size_t pos_a = 0, pos_b = 0;
  const std::string sa = raw.substr(0, colon), sb = raw.substr(colon + 1);
  double a, b;
  try {
    a = std::stod(sa, &pos_a);
    b = std::stod(sb, &pos_b);
  } catch (const std::exception&) {
    throw std::invalid_argument("--tspan must look like a:b with numbers");
  }
  if (pos_a != sa.size() || pos_b != sb.size())
    throw std::invalid_argument("--tspan must look like a:b with numbers");
  return {a, b};
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty())
    std::cout << text;
  else
    eqfree::write_text_file(out_path, text);
}

int run(const ExperimentSpec& spec) {
  const bool csv = spec.format == "csv";
  if (spec.experiment == "slowfast-pig") {
    const auto rep = eqfree::run_slowfast_pig(spec);
    emit(csv ? render_csv(rep, spec) : render_json(rep, spec), spec.out_path);
  } else if (spec.experiment == "stiff-scaling") {
    const auto rep = eqfree::run_stiff_scaling(spec);
    emit(csv ? render_csv(rep, spec) : render_json(rep, spec), spec.out_path);
  } else if (spec.experiment == "patch-diffusion2d") {
    const auto rep = eqfree::run_patch_diffusion2(spec);
    emit(csv ? render_csv(rep, spec) : render_json(rep, spec), spec.out_path);
    // CSV output to a file gets a JSON geometry sidecar for plotting
    if (csv && !spec.out_path.empty())
      eqfree::write_text_file(spec.out_path + ".manifest.json",
                              eqfree::render_patch2_manifest_json(rep));
  } else if (spec.experiment == "convergence") {
    const auto rep = eqfree::run_convergence(spec);
    emit(csv ? render_csv(rep, spec) : render_json(rep, spec), spec.out_path);
  } else if (spec.experiment == "stability-map") {
    const auto rep = eqfree::run_stability_map(spec);
    emit(csv ? render_csv(rep, spec) : render_json(rep, spec), spec.out_path);
  } else {
    throw std::invalid_argument("unknown experiment " + spec.experiment);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"equation-free multiscale experiments"};
  app.require_subcommand(1);

  ExperimentSpec spec;
  std::string tspan_raw;

  struct Sub {
    const char* name;
    const char* help;
  };
  static constexpr Sub kSubs[] = {
      {"slowfast-pig",
       "projective integration of the slow-fast pair vs a brute-force "
       "baseline (--algorithm pig|pirk2|pirk4)"},
      {"stiff-scaling",
       "error and rhs-evaluation scaling over random stiff linear systems"},
      {"patch-diffusion2d",
       "nonlinear diffusion on a 2D patch grid vs a full-lattice reference"},
      {"convergence",
       "patch coupling consistency orders from macro eigenvalues"},
      {"stability-map", "relative burst-length bound over beta*DT"},
  };
  for (const auto& s : kSubs) {
    CLI::App* cmd = app.add_subcommand(s.name, s.help);
    add_common_flags(cmd, spec, tspan_raw);
    if (std::string(s.name) == "slowfast-pig")
      cmd->add_option("--algorithm", spec.algorithm,
                      "macro scheme: pig, pirk2 or pirk4");
    cmd->callback([&spec, name = std::string(s.name)] { spec.experiment = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the usage error
    return code == 0 ? 0 : 2;
  }

  try {
    if (!tspan_raw.empty()) spec.tspan = parse_tspan(tspan_raw);
    return run(spec);
  } catch (const std::invalid_argument& e) {
    std::cerr << "eqfree: " << e.what() << "\n";
    return 2;
  } catch (const eqfree::NumericalError& e) {
    std::cerr << "eqfree: numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "eqfree: " << e.what() << "\n";
    return 1;
  }
}
