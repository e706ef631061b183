#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dgmhd/diagnostics.hpp"
#include "dgmhd/scenarios.hpp"

namespace dgmhd {

/// Everything one batch run needs.  Unset optionals take scenario or
/// degree-dependent defaults.
struct RunConfig {
  std::string scenario = "orszag-tang";
  double Re = std::numeric_limits<double>::infinity();
  double eta = 0.0;
  double mach_alfven = 2.5;
  int nx = 32;
  int ny = 32;
  int k = 1;
  std::optional<double> cfl_conv;
  std::optional<double> cfl_visc;
  std::optional<double> dt_max;
  std::optional<double> t_end;  // physical time
  std::optional<double> t_bar;  // scaled time, kelvin-helmholtz only
  std::vector<double> sample_times;  // physical time
  std::filesystem::path output_dir = "dgmhd-out";
  Integrator integrator = Integrator::rk3;
  int threads = 1;
  bool write_snapshots = true;

  void validate() const {
    const auto names = scenario_names();
    if (std::find(names.begin(), names.end(), scenario) == names.end())
      throw InvalidArgument("unknown scenario '" + scenario + "'");
    if (nx < 1 || ny < 1) throw InvalidArgument("nx and ny must be at least 1");
    if (k < 0 || k > kMaxDegree) throw InvalidArgument("k must be in [0, 3], got " + std::to_string(k));
    if (!(Re > 0.0)) throw InvalidArgument("Re must be positive");
    if (!(eta >= 0.0)) throw InvalidArgument("eta must be non-negative");
    if (!(mach_alfven > 0.0)) throw InvalidArgument("M_A must be positive");
    if (cfl_conv && !(*cfl_conv > 0.0)) throw InvalidArgument("cfl-conv must be positive");
    if (cfl_visc && !(*cfl_visc > 0.0)) throw InvalidArgument("cfl-visc must be positive");
    if (dt_max && !(*dt_max > 0.0)) throw InvalidArgument("dt-max must be positive");
    if (t_end && t_bar) throw InvalidArgument("give either tend or tbar, not both");
    if (t_bar && scenario != "kelvin-helmholtz") throw InvalidArgument("tbar applies to kelvin-helmholtz only");
    if (t_end && !(*t_end >= 0.0)) throw InvalidArgument("tend must be non-negative");
    if (t_bar && !(*t_bar >= 0.0)) throw InvalidArgument("tbar must be non-negative");
    for (double s : sample_times)
      if (!(s >= 0.0)) throw InvalidArgument("sample times must be non-negative");
    if (threads < 1) throw InvalidArgument("threads must be at least 1");
    if (output_dir.empty()) throw InvalidArgument("output directory must not be empty");
  }

  Scenario make() const { return make_scenario(scenario, Re, eta, mach_alfven); }

  double end_time(const Scenario& s) const {
    if (t_end) return *t_end;
    if (t_bar) return *t_bar * s.time_scale;
    return s.t_end;
  }

  StepControl control() const {
    StepControl c = StepControl::for_degree(k);
    if (cfl_conv) c.cfl_conv = *cfl_conv;
    if (cfl_visc) c.cfl_visc = *cfl_visc;
    c.dt_max = dt_max;
    return c;
  }
};

inline std::string to_string(Integrator i) { return i == Integrator::rk3 ? "rk3" : "euler"; }

inline Integrator parse_integrator(const std::string& s) {
  if (s == "rk3") return Integrator::rk3;
  if (s == "euler") return Integrator::euler;
  throw InvalidArgument("unknown integrator '" + s + "' (expected rk3 or euler)");
}

namespace detail {

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace detail

/// Resolved configuration, defaults included.
inline nlohmann::json config_json(const RunConfig& c) {
  const Scenario s = c.make();
  const StepControl ctrl = c.control();
  return {
      {"scenario", c.scenario},
      {"Re", detail::finite_or_null(c.Re)},
      {"eta", c.eta},
      {"mach_alfven", detail::finite_or_null(c.mach_alfven)},
      {"nu", s.params.nu},
      {"alpha", s.params.alpha},
      {"nx", c.nx},
      {"ny", c.ny},
      {"k", c.k},
      {"cfl_conv", ctrl.cfl_conv},
      {"cfl_visc", ctrl.cfl_visc},
      {"dt_max", detail::optional_json(c.dt_max)},
      {"t_end", c.end_time(s)},
      {"time_scale", s.time_scale},
      {"sample_times", c.sample_times},
      {"integrator", to_string(c.integrator)},
      {"threads", c.threads},
      {"output_dir", c.output_dir.string()},
  };
}

struct RunSummary {
  bool ok = true;
  std::string message;
  double t_final = 0.0;
  double last_good_time = 0.0;
  long long steps = 0;
  long long projections = 0;
  EnergyRecord initial_energy;
  EnergyRecord final_energy;
  double max_div_u = 0.0;  // over all samples
  double max_div_B = 0.0;
  double max_energy_increase = 0.0;  // largest step-to-step growth of the total
  double wall_clock_seconds = 0.0;
  std::optional<double> error_u;  // only with an exact solution
  std::optional<double> error_B;
  std::vector<std::filesystem::path> artifacts;
  nlohmann::json config;

  nlohmann::json to_json() const {
    auto energy = [](const EnergyRecord& r) {
      return nlohmann::json{{"t", r.t}, {"kinetic", r.kinetic}, {"magnetic", r.magnetic}, {"total", r.total}};
    };
    nlohmann::json artifacts_json = nlohmann::json::array();
    for (const auto& p : artifacts) artifacts_json.push_back(p.string());
    return {
        {"ok", ok},
        {"message", message},
        {"t_final", t_final},
        {"last_good_time", last_good_time},
        {"steps", steps},
        {"projections", projections},
        {"initial_energy", energy(initial_energy)},
        {"final_energy", energy(final_energy)},
        {"max_divergence", {{"u", max_div_u}, {"B", max_div_B}}},
        {"max_energy_increase", max_energy_increase},
        {"wall_clock_seconds", wall_clock_seconds},
        {"error_u", detail::optional_json(error_u)},
        {"error_B", detail::optional_json(error_B)},
        {"artifacts", artifacts_json},
        {"config", config},
    };
  }
};

/// Snapshot resolution: (k+1) samples per element per axis.
inline std::pair<int, int> snapshot_resolution(const RTSpace& space) {
  return {space.mesh().nx() * (space.degree() + 1), space.mesh().ny() * (space.degree() + 1)};
}

/// Writes vorticity, velocity and magnetic snapshots for `step` into `dir`.
inline std::vector<std::filesystem::path> write_snapshots(const std::filesystem::path& dir, const MHDState& s, long long step) {
  const auto [sx, sy] = snapshot_resolution(*s.u.space);
  const SampleGrid w = vorticity_samples(s.u, sx, sy);
  const SampleGrid u = vector_samples(s.u, sx, sy);
  const SampleGrid b = vector_samples(s.B, sx, sy);
  const std::string tag = std::to_string(step);
  std::vector<std::filesystem::path> out{dir / ("vorticity_" + tag + ".vtk"), dir / ("velocity_" + tag + ".vtk"),
                                         dir / ("magnetic_" + tag + ".vtk")};
  write_snapshot_vtk(out[0], {{"vorticity", &w}}, s.t);
  write_snapshot_vtk(out[1], {{"velocity", &u}}, s.t);
  write_snapshot_vtk(out[2], {{"magnetic", &b}}, s.t);
  return out;
}

/// Runs one scenario end to end and writes energy.csv, snapshots at the
/// sample times and summary.json under config.output_dir.  A blow-up is
/// reported through `ok = false` and `last_good_time`; the energy trace up
/// to that point is still written.
inline RunSummary run(const RunConfig& config) {
  config.validate();
  const auto wall_start = std::chrono::steady_clock::now();
  const Scenario scenario = config.make();
  const double t_end = config.end_time(scenario);
  std::filesystem::create_directories(config.output_dir);

  RTSpace space(build_mesh(config.nx, config.ny, scenario.bounds, scenario.bc_x, scenario.bc_y), config.k);
  const PressureSpace pspace(space);
  ProjectionSolver solver(space, pspace);
  const SpatialOperator op(space, scenario.params, scenario.sources, config.threads);
  TimeStepper stepper(op, solver);

  RunSummary summary;
  summary.config = config_json(config);

  MHDState state{solver.project_function(scenario.u0), solver.project_function(scenario.B0), 0.0};
  std::vector<EnergyRecord> trace{energies(state, solver.mass())};
  summary.initial_energy = trace.front();

  auto track_divergence = [&](const MHDState& s) {
    const auto d = max_divergence(s);
    summary.max_div_u = std::max(summary.max_div_u, d.u);
    summary.max_div_B = std::max(summary.max_div_B, d.B);
  };

  IntegrateOptions opt;
  opt.integrator = config.integrator;
  opt.control = config.control();
  opt.sample_times = config.sample_times;
  opt.on_step = [&](const MHDState& s, long long) {
    trace.push_back(energies(s, solver.mass()));
    summary.max_energy_increase = std::max(summary.max_energy_increase, trace.back().total - trace[trace.size() - 2].total);
    summary.last_good_time = s.t;
  };
  opt.on_sample = [&](const MHDState& s, long long step) {
    track_divergence(s);
    if (!config.write_snapshots) return;
    const bool requested = step == 0 || s.t >= t_end ||
                           std::any_of(config.sample_times.begin(), config.sample_times.end(),
                                       [&](double ts) { return ts == s.t; });
    if (!requested) return;
    for (auto& p : write_snapshots(config.output_dir, s, step)) summary.artifacts.push_back(std::move(p));
  };

  try {
    IntegrationResult result = integrate(stepper, std::move(state), t_end, opt);
    summary.steps = result.steps;
    summary.t_final = result.state.t;
    summary.last_good_time = result.state.t;
    summary.final_energy = energies(result.state, solver.mass());
    if (scenario.has_exact()) {
      const double t = result.state.t;
      summary.error_u = l2_error(result.state.u, [&](double x, double y) { return scenario.exact_u(x, y, t); });
      summary.error_B = l2_error(result.state.B, [&](double x, double y) { return scenario.exact_B(x, y, t); });
    }
  } catch (const BlowUpError& e) {
    summary.ok = false;
    summary.message = e.what();
    summary.last_good_time = e.last_good_time();
    summary.final_energy = trace.back();
    summary.t_final = trace.back().t;
    summary.steps = static_cast<long long>(trace.size()) - 1;
  }
  summary.projections = solver.projection_count();

  const auto energy_path = config.output_dir / "energy.csv";
  write_energy_csv(energy_path, trace);
  summary.artifacts.push_back(energy_path);
  const auto summary_path = config.output_dir / "summary.json";
  summary.artifacts.push_back(summary_path);
  summary.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  std::ofstream(summary_path) << summary.to_json().dump(2) << '\n';
  return summary;
}

// ---------------------------------------------------------------------------
// Convergence studies
// ---------------------------------------------------------------------------

struct ConvergenceRow {
  int n = 0;
  double h = 0.0;
  double error_u = 0.0;
  double order_u = 0.0;  // 0 on the coarsest mesh
  double error_B = 0.0;
  double order_B = 0.0;
};

inline double observed_order(double coarse_error, double fine_error, double h_coarse, double h_fine) {
  return std::log(coarse_error / fine_error) / std::log(h_coarse / h_fine);
}

/// Runs the mesh sequence n x n (the config's nx/ny are ignored) and
/// reports L2 errors against the exact solution at the end time.
inline std::vector<ConvergenceRow> convergence(const RunConfig& config, const std::vector<int>& meshes) {
  config.validate();
  const Scenario scenario = config.make();
  if (!scenario.has_exact()) throw InvalidArgument("convergence: scenario '" + scenario.name + "' has no exact solution");
  if (meshes.empty()) throw InvalidArgument("convergence: empty mesh list");
  const double t_end = config.end_time(scenario);

  std::vector<ConvergenceRow> rows;
  for (int n : meshes) {
    if (n < 1) throw InvalidArgument("convergence: mesh sizes must be at least 1");
    RTSpace space(build_mesh(n, n, scenario.bounds, scenario.bc_x, scenario.bc_y), config.k);
    const PressureSpace pspace(space);
    const ProjectionSolver solver(space, pspace);
    const SpatialOperator op(space, scenario.params, scenario.sources, config.threads);
    const TimeStepper stepper(op, solver);
    MHDState s{solver.project_function(scenario.u0), solver.project_function(scenario.B0), 0.0};
    IntegrateOptions opt;
    opt.integrator = config.integrator;
    opt.control = config.control();
    const auto result = integrate(stepper, std::move(s), t_end, opt);
    const double t = result.state.t;
    ConvergenceRow row;
    row.n = n;
    row.h = space.mesh().h();
    row.error_u = l2_error(result.state.u, [&](double x, double y) { return scenario.exact_u(x, y, t); });
    row.error_B = l2_error(result.state.B, [&](double x, double y) { return scenario.exact_B(x, y, t); });
    if (!rows.empty()) {
      row.order_u = observed_order(rows.back().error_u, row.error_u, rows.back().h, row.h);
      row.order_B = observed_order(rows.back().error_B, row.error_B, rows.back().h, row.h);
    }
    rows.push_back(row);
  }
  return rows;
}

inline constexpr const char* kConvergenceCsvHeader = "n,h,error_u,order_u,error_B,order_B";

inline void write_convergence_csv(const std::filesystem::path& path, const std::vector<ConvergenceRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << kConvergenceCsvHeader << '\n';
  for (const auto& r : rows)
    out << r.n << ',' << format_double(r.h) << ',' << format_double(r.error_u) << ',' << format_double(r.order_u) << ','
        << format_double(r.error_B) << ',' << format_double(r.order_B) << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace dgmhd
