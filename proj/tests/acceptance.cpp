// Acceptance runner: one [PASS]/[FAIL] line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "dgmhd/dgmhd.hpp"

using namespace dgmhd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double m_norm(const SparseMatrix& M, const Eigen::VectorXd& v) { return std::sqrt(v.dot(M * v)); }

struct Setup {
  RTSpace space;
  PressureSpace pspace;
  ProjectionSolver solver;
  SpatialOperator op;
  TimeStepper stepper;

  Setup(const Scenario& sc, int n, int k)
      : space(build_mesh(n, n, sc.bounds, sc.bc_x, sc.bc_y), k),
        pspace(space),
        solver(space, pspace),
        op(space, sc.params, sc.sources),
        stepper(op, solver) {}

  MHDState initial(const Scenario& sc) const {
    return {solver.project_function(sc.u0), solver.project_function(sc.B0), 0.0};
  }
};

Outcome convergence_orders() {
  double worst_margin = 1e300;
  std::string rows;
  for (int k = 1; k <= 2; ++k)
    for (double Re : {std::numeric_limits<double>::infinity(), 100.0}) {
      RunConfig c;
      c.scenario = "taylor-green";
      c.k = k;
      c.Re = Re;
      const auto table = convergence(c, {8, 16, 32});
      const auto& last = table.back();
      worst_margin = std::min({worst_margin, last.order_u - (k + 0.8), last.order_B - (k + 0.8)});
      rows += fmt(" k=%d Re=%s: %.2f/%.2f;", k, std::isinf(Re) ? "inf" : "100", last.order_u, last.order_B);
    }
  return {worst_margin >= 0.0, "orders u/B on 16->32" + rows};
}

Outcome divergence_free_stages() {
  const auto sc = orszag_tang();
  Setup s(sc, 32, 1);
  double worst = 0.0;
  long long stages = 0;
  auto check = [&](const MHDState& st) {
    ++stages;
    const auto d = max_divergence(st);
    const double su = std::max(1.0, m_norm(s.solver.mass(), st.u.values));
    const double sb = std::max(1.0, m_norm(s.solver.mass(), st.B.values));
    worst = std::max({worst, d.u / su, d.B / sb});
  };
  s.stepper.on_stage = check;
  const auto init = s.initial(sc);
  check(init);
  IntegrateOptions opt;
  opt.control = StepControl::for_degree(1);
  integrate(s.stepper, init, 0.5, opt);
  return {worst <= 1e-9, fmt("max |div|/max(1,||.||) = %.2e over %lld states", worst, stages)};
}

Outcome energy_identities() {
  std::mt19937_64 rng(31);
  double worst = 0.0;
  int pairs = 0;
  for (int k = 0; k <= 2; ++k) {
    RTSpace space(build_mesh(4, 4, {0.0, 1.0, 0.0, 1.0}, AxisBC::periodic, AxisBC::periodic), k);
    const PressureSpace pspace(space);
    const ProjectionSolver solver(space, pspace);
    for (int t = 0; t < 20; ++t, ++pairs) {
      const auto u = random_divfree(solver, rng);
      const auto B = random_divfree(solver, rng);
      const auto jd = jump_dissipation(u, B);
      worst = std::max(worst, relative_difference(eval_trilinear(ConvectiveForm::uu, u, B, u), jd.un_ujump));
      worst = std::max(worst, relative_difference(eval_trilinear(ConvectiveForm::ub, u, B, B), jd.un_bjump));
      worst = std::max(worst, relative_difference(eval_trilinear(ConvectiveForm::bb, u, B, u) +
                                                      eval_trilinear(ConvectiveForm::bu, u, B, B),
                                                  -(jd.bn_ujump + jd.bn_bjump)));
    }
  }
  return {worst <= 1e-10, fmt("%d pairs, worst relative mismatch %.2e", pairs, worst)};
}

Outcome semi_discrete_dissipation() {
  std::mt19937_64 rng(47);
  double worst = -1e300;
  for (int k = 0; k <= 2; ++k) {
    RTSpace space(build_mesh(4, 4, {0.0, 1.0, 0.0, 1.0}, AxisBC::periodic, AxisBC::periodic), k);
    const PressureSpace pspace(space);
    const ProjectionSolver solver(space, pspace);
    for (int t = 0; t < 20; ++t) {
      const auto u = random_divfree(solver, rng);
      const auto B = random_divfree(solver, rng);
      const auto r = assemble_residuals(u, B, {}, {}, 0.0);
      const auto jd = jump_dissipation(u, B);
      const double scale = jd.un_ujump + jd.un_bjump + jd.bn_ujump + jd.bn_bjump;
      worst = std::max(worst, (r.f_u.dot(u.values) + r.f_B.dot(B.values)) / scale);
    }
  }
  return {worst <= 1e-12, fmt("max rate/scale = %.2e over 60 states", worst)};
}

Outcome orszag_tang_energy() {
  const auto sc = orszag_tang();
  bool pass = true;
  std::string detail;
  for (int k = 1; k <= 2; ++k) {
    Setup s(sc, 32, k);
    const auto init = s.initial(sc);
    const auto e0 = energies(init, s.solver.mass());
    double prev = e0.total, worst_rise = -1e300;
    IntegrateOptions opt;
    opt.control = StepControl::for_degree(k);
    opt.on_step = [&](const MHDState& st, long long) {
      const double e = energies(st, s.solver.mass()).total;
      worst_rise = std::max(worst_rise, e - prev);
      prev = e;
    };
    const auto res = integrate(s.stepper, init, 2.0, opt);
    const auto e1 = energies(res.state, s.solver.mass());
    const double frac = 1.0 - e1.total / e0.total;
    const bool ok = worst_rise <= 1e-12 && frac >= 0.005 && frac <= 0.15 && e1.kinetic < e0.kinetic &&
                    e1.magnetic > e0.magnetic;
    pass = pass && ok;
    detail += fmt(" RT_%d: dissipated %.2f%%, max step rise %.1e, kinetic %.2f->%.2f, magnetic %.2f->%.2f;", k,
                  100.0 * frac, worst_rise, e0.kinetic, e1.kinetic, e0.magnetic, e1.magnetic);
  }
  return {pass, detail.substr(1)};
}

Outcome projection_contract() {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  double worst_res = 0.0, worst_idem = 0.0, worst_growth = -1e300;
  for (int k = 0; k <= 2; ++k) {
    RTSpace space(build_mesh(8, 8, {0.0, 1.0, 0.0, 1.0}, AxisBC::periodic, AxisBC::periodic), k);
    const PressureSpace pspace(space);
    const ProjectionSolver solver(space, pspace);
    const auto& M = solver.mass();
    const Eigen::SimplicialLDLT<SparseMatrix> mass_solver(M);
    for (int t = 0; t < 100; ++t) {
      Eigen::VectorXd F(space.n_dofs());
      for (auto& x : F) x = nd(rng);
      const auto sol = solver.project(F);
      const auto [res, div] = solver.relative_residuals(sol, F);
      worst_res = std::max({worst_res, res, div});
      const auto again = solver.project(M * sol.u.values).u;
      worst_idem = std::max(worst_idem, m_norm(M, again.values - sol.u.values) / m_norm(M, sol.u.values));
      // Contraction in the M-norm: ||P w|| <= ||w|| for w = M^-1 F.
      const Eigen::VectorXd w = mass_solver.solve(F);
      worst_growth = std::max(worst_growth, m_norm(M, sol.u.values) / m_norm(M, w) - 1.0);
    }
  }
  const bool pass = worst_res <= 1e-10 && worst_idem <= 1e-10 && worst_growth <= 1e-12;
  return {pass, fmt("residual %.2e, idempotency %.2e, norm growth %.2e", worst_res, worst_idem, worst_growth)};
}

Outcome stage_accounting() {
  const auto sc = orszag_tang();
  Setup s(sc, 8, 1);
  const auto init = s.initial(sc);
  s.solver.reset_projection_count();
  s.stepper.rk3_step(init, 0.01);
  const long long rk3 = s.solver.projection_count();
  s.solver.reset_projection_count();
  s.stepper.euler_step(init, 0.01);
  const long long euler = s.solver.projection_count();
  return {rk3 == 6 && euler == 2, fmt("RK3 %lld solves, Euler %lld solves", rk3, euler)};
}

Outcome temporal_order() {
  const auto sc = taylor_green_mhd(100.0, 0.0);
  Setup s(sc, 16, 2);
  const auto init = s.initial(sc);
  const auto& M = s.solver.mass();
  auto advance = [&](MHDState st, double T, int n, Integrator kind) {
    for (int i = 0; i < n; ++i) st = s.stepper.step(st, T / n, kind);
    return st;
  };
  auto dist = [&](const MHDState& a, const MHDState& b) {
    return std::hypot(m_norm(M, a.u.values - b.u.values), m_norm(M, a.B.values - b.B.values));
  };
  // RK3 local error against 16 RK3 substeps of the same interval.
  auto rk3_err = [&](double dt) {
    return dist(s.stepper.rk3_step(init, dt), advance(init, dt, 16, Integrator::rk3));
  };
  const double rk_ratio = rk3_err(0.01) / rk3_err(0.005);
  // Euler global error at T = 0.1 against a fine RK3 solution.
  const auto ref = advance(init, 0.1, 200, Integrator::rk3);
  const double eu_ratio =
      dist(advance(init, 0.1, 20, Integrator::euler), ref) / dist(advance(init, 0.1, 40, Integrator::euler), ref);
  const bool pass = rk_ratio >= 12.0 && rk_ratio <= 20.0 && eu_ratio >= 1.7 && eu_ratio <= 2.3;
  return {pass, fmt("RK3 one-step ratio %.2f, Euler final-time ratio %.2f", rk_ratio, eu_ratio)};
}

Outcome kelvin_helmholtz_smoke() {
  const auto sc = kelvin_helmholtz(2.5);
  Setup s(sc, 64, 1);
  const auto init = s.initial(sc);
  double prev = energies(init, s.solver.mass()).total, worst_rise = -1e300, wall = 0.0;
  auto wall_max = [&](const MHDState& st) {
    for (int d : s.space.constrained_dofs()) wall = std::max({wall, std::abs(st.u.values[d]), std::abs(st.B.values[d])});
  };
  wall_max(init);
  IntegrateOptions opt;
  opt.control = StepControl::for_degree(1);
  opt.on_step = [&](const MHDState& st, long long) {
    wall_max(st);
    const double e = energies(st, s.solver.mass()).total;
    worst_rise = std::max(worst_rise, e - prev);
    prev = e;
  };
  try {
    const auto res = integrate(s.stepper, init, 1.0 * sc.time_scale, opt);
    const bool pass = wall == 0.0 && worst_rise <= 1e-12;
    return {pass, fmt("%lld steps to t=%.4f, wall DOF max %.1e, max step rise %.1e", res.steps, res.state.t, wall,
                      worst_rise)};
  } catch (const BlowUpError& e) {
    return {false, fmt("blow-up after t=%.4f", e.last_good_time())};
  }
}

Outcome sip_diffusion() {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> nd;
  double sym = 0.0, min_ratio = 1e300, kernel = 0.0;
  for (int k = 0; k <= 2; ++k)
    for (auto bcy : {AxisBC::periodic, AxisBC::wall}) {
      RTSpace space(build_mesh(4, 4, {0.0, 1.0, 0.0, 1.0}, AxisBC::periodic, bcy), k);
      const auto c = interpolate(space, [](double, double) { return Vec2(1.0, 0.0); });
      for (int t = 0; t < 20; ++t) {
        CoefficientVector a(space), b(space);
        for (auto& x : a.values) x = nd(rng);
        for (auto& x : b.values) x = nd(rng);
        sym = std::max(sym, relative_difference(eval_diffusion(a, b, 2.0), eval_diffusion(b, a, 2.0)));
        min_ratio = std::min(min_ratio, eval_diffusion(a, a, 2.0) / a.values.squaredNorm());
        if (bcy == AxisBC::periodic) kernel = std::max(kernel, std::abs(eval_diffusion(c, a, 2.0)) / a.values.norm());
      }
    }
  const bool pass = sym <= 1e-12 && min_ratio >= 0.0 && kernel <= 1e-12;
  return {pass, fmt("asymmetry %.1e, min A(v,v)/|v|^2 %.3f, |A(1,v)| %.1e", sym, min_ratio, kernel)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"AC1 Taylor-Green convergence orders", convergence_orders},
      {"AC2 divergence-free stages (Orszag-Tang)", divergence_free_stages},
      {"AC3 convective energy identities", energy_identities},
      {"AC4 semi-discrete dissipativity", semi_discrete_dissipation},
      {"AC5 Orszag-Tang energy decay", orszag_tang_energy},
      {"AC6 projection contract", projection_contract},
      {"AC7 stage accounting", stage_accounting},
      {"AC8 temporal order", temporal_order},
      {"AC9 Kelvin-Helmholtz smoke test", kelvin_helmholtz_smoke},
      {"AC10 SIP diffusion", sip_diffusion},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
