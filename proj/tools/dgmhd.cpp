// Command-line front end: run, convergence and check subcommands.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dgmhd/dgmhd.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;

struct CommonOptions {
  dgmhd::RunConfig config;
  std::string config_file;
  std::string integrator = "rk3";
  std::string output_dir = "dgmhd-out";
};

void add_common(CLI::App* sub, CommonOptions& o) {
  auto& c = o.config;
  sub->add_option("--config", o.config_file, "Flat key=value file; command-line flags override it");
  sub->add_option("--scenario", c.scenario, "taylor-green, orszag-tang or kelvin-helmholtz")->capture_default_str();
  sub->add_option("--Re", c.Re, "Reynolds number (inf for inviscid)")->capture_default_str();
  sub->add_option("--eta", c.eta, "Magnetic diffusivity")->capture_default_str();
  sub->add_option("--mach-alfven", c.mach_alfven, "Alfven Mach number M_A (kelvin-helmholtz)")->capture_default_str();
  sub->add_option("--k", c.k, "Polynomial degree, 0..3")->capture_default_str();
  sub->add_option("--cfl-conv", c.cfl_conv, "Convective CFL number (default 0.1/(2k+1))");
  sub->add_option("--cfl-visc", c.cfl_visc, "Viscous CFL number (default 0.05/(2k+1)^2)");
  sub->add_option("--dt-max", c.dt_max, "Upper bound on the step size");
  sub->add_option("--integrator", o.integrator, "rk3 or euler")->capture_default_str();
  sub->add_option("--threads", c.threads, "Worker threads for assembly")->capture_default_str();
  sub->add_option("--output-dir", o.output_dir, "Directory for artifacts")
      ->envname("DGMHD_OUTPUT_DIR")
      ->capture_default_str();
}

// Feeds key=value entries into the subcommand's options unless the same
// option was given on the command line.
void apply_config_file(CLI::App* sub, const std::string& path) {
  if (path.empty()) return;
  if (!std::filesystem::exists(path)) throw dgmhd::InvalidArgument("config file '" + path + "' not found");
  for (const CLI::ConfigItem& item : CLI::ConfigINI().from_file(path)) {
    const std::string key = item.name;
    if (key.empty() || key == "config") continue;
    CLI::Option* opt = nullptr;
    try {
      opt = sub->get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw dgmhd::InvalidArgument("config file '" + path + "': unknown key '" + key + "'");
    }
    if (opt->count() > 0) continue;
    for (const auto& v : item.inputs) opt->add_result(v);
    opt->run_callback();
  }
}

void finish_common(CommonOptions& o) {
  o.config.integrator = dgmhd::parse_integrator(o.integrator);
  o.config.output_dir = o.output_dir;
}

int do_run(CommonOptions& o) {
  finish_common(o);
  const auto summary = dgmhd::run(o.config);
  std::cout << summary.to_json().dump(2) << '\n';
  if (!summary.ok) {
    std::cerr << "error: " << summary.message << " (last good time " << summary.last_good_time << ")\n";
    return kExitNumerical;
  }
  return kExitOk;
}

int do_convergence(CommonOptions& o, const std::vector<int>& meshes) {
  finish_common(o);
  const auto rows = dgmhd::convergence(o.config, meshes);
  std::filesystem::create_directories(o.config.output_dir);
  const auto path = o.config.output_dir / "convergence.csv";
  dgmhd::write_convergence_csv(path, rows);
  std::printf("%6s %12s %14s %8s %14s %8s\n", "n", "h", "error_u", "order", "error_B", "order");
  for (const auto& r : rows)
    std::printf("%6d %12.5e %14.6e %8.2f %14.6e %8.2f\n", r.n, r.h, r.error_u, r.order_u, r.error_B, r.order_B);
  std::printf("wrote %s\n", path.string().c_str());
  return kExitOk;
}

int do_check(unsigned seed) {
  bool all = true;
  for (const auto& r : dgmhd::run_property_checks(seed)) {
    std::printf("[%s] %-40s value %.3e  tol %.1e\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.value, r.tolerance);
    all = all && r.passed;
  }
  return all ? kExitOk : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Divergence-free DG solver for 2D incompressible MHD"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  auto* run = app.add_subcommand("run", "Integrate one scenario and write energy.csv, snapshots and summary.json");
  add_common(run, run_opts);
  run->add_option("--nx", run_opts.config.nx, "Elements in x")->capture_default_str();
  run->add_option("--ny", run_opts.config.ny, "Elements in y")->capture_default_str();
  run->add_option("--tend", run_opts.config.t_end, "End time (default: scenario end time)");
  run->add_option("--tbar", run_opts.config.t_bar, "End time in scaled units t/Gamma (kelvin-helmholtz)");
  run->add_option("--samples", run_opts.config.sample_times, "Snapshot times, comma separated")->delimiter(',');
  bool no_snapshots = false;
  run->add_flag("--no-snapshots", no_snapshots, "Skip VTK output");

  CommonOptions conv_opts;
  conv_opts.config.scenario = "taylor-green";
  std::vector<int> meshes{8, 16, 32};
  auto* conv = app.add_subcommand("convergence", "Mesh refinement study against the exact solution");
  add_common(conv, conv_opts);
  conv->add_option("--meshes", meshes, "Elements per axis, comma separated")->delimiter(',')->capture_default_str();
  conv->add_option("--tend", conv_opts.config.t_end, "Evaluation time (default 0.5)");

  unsigned seed = 2024;
  auto* check = app.add_subcommand("check", "Run the property suites on small meshes");
  check->add_option("--seed", seed, "Random seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*run) {
      apply_config_file(run, run_opts.config_file);
      run_opts.config.write_snapshots = !no_snapshots;
      return do_run(run_opts);
    }
    if (*conv) {
      apply_config_file(conv, conv_opts.config_file);
      return do_convergence(conv_opts, meshes);
    }
    return do_check(seed);
  } catch (const dgmhd::InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const dgmhd::BlowUpError& e) {
    std::cerr << "error: " << e.what() << " (last good time " << e.last_good_time() << ")\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}
