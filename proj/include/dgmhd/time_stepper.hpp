#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "dgmhd/errors.hpp"
#include "dgmhd/forms.hpp"
#include "dgmhd/projection.hpp"

namespace dgmhd {

/// Velocity and magnetic field coefficients at time t.
struct MHDState {
  CoefficientVector u;
  CoefficientVector B;
  double t = 0.0;

  bool all_finite() const { return u.all_finite() && B.all_finite() && std::isfinite(t); }
};

struct StepControl {
  double cfl_conv = 0.1;
  double cfl_visc = 0.05;
  std::optional<double> dt_max;

  /// 0.1/(2k+1) and 0.05/(2k+1)^2.
  static StepControl for_degree(int k) {
    const double p = 2.0 * k + 1.0;
    return {0.1 / p, 0.05 / (p * p), std::nullopt};
  }
};

enum class Integrator { euler, rk3 };

/// Max over element quadrature points of |u_h| + |B_h|.
inline double max_signal_speed(const MHDState& state) {
  const RTSpace& space = *state.u.space;
  const auto tab = space.tabulate_element(space.degree() + 2);
  double vmax = 0.0;
  Eigen::VectorXd ul, bl;
  for (int e = 0; e < space.mesh().n_elements(); ++e) {
    gather(space, state.u.values, e, ul);
    gather(space, state.B.values, e, bl);
    for (std::size_t q = 0; q < tab.n_points(); ++q) {
      Vec2 uq = Vec2::Zero(), bq = Vec2::Zero();
      for (int i = 0; i < tab.n_local; ++i) {
        uq += ul[i] * tab.phi(q, i);
        bq += bl[i] * tab.phi(q, i);
      }
      const double v = uq.norm() + bq.norm();
      if (!std::isfinite(v)) return std::numeric_limits<double>::quiet_NaN();
      vmax = std::max(vmax, v);
    }
  }
  return vmax;
}

/// Step size from the convective and diffusive limits
///   dt = min(cfl_conv h / v_max, cfl_visc h^2 / max(nu, eta), dt_max).
/// Returns +inf when no limit applies.
inline double compute_dt(double v_max, double h, const PhysicsParams& params, const StepControl& ctrl) {
  if (!std::isfinite(v_max)) throw BlowUpError("compute_dt: non-finite signal speed", std::numeric_limits<double>::quiet_NaN());
  double dt = std::numeric_limits<double>::infinity();
  if (v_max > 0.0) dt = ctrl.cfl_conv * h / v_max;
  const double diff = std::max(params.nu, params.eta);
  if (diff > 0.0) dt = std::min(dt, ctrl.cfl_visc * h * h / diff);
  if (ctrl.dt_max) dt = std::min(dt, *ctrl.dt_max);
  return dt;
}

inline double compute_dt(const MHDState& state, const PhysicsParams& params, const StepControl& ctrl) {
  const double vmax = max_signal_speed(state);
  if (!std::isfinite(vmax)) throw BlowUpError("compute_dt: non-finite signal speed", state.t);
  return compute_dt(vmax, state.u.space->mesh().h(), params, ctrl);
}

/// Everything a step needs: the spatial operator, its mass matrix and the
/// projection solver.  `on_stage` (optional) sees every intermediate stage.
class TimeStepper {
 public:
  TimeStepper(const SpatialOperator& op, const ProjectionSolver& solver) : op_(&op), solver_(&solver) {
    if (&op.space() != &solver.space()) throw InvalidArgument("TimeStepper: operator and solver use different spaces");
  }

  std::function<void(const MHDState&)> on_stage;

  const SpatialOperator& op() const { return *op_; }
  const ProjectionSolver& solver() const { return *solver_; }

  /// u' = P(M u + dt f_u), B' = P(M B + dt f_B): two projections.
  MHDState euler_step(const MHDState& s, double dt) const {
    check_dt(dt);
    const auto& M = solver_->mass();
    const ResidualPair L = (*op_)(s.u.values, s.B.values, s.t);
    MHDState out = project_pair(M * s.u.values + dt * L.f_u, M * s.B.values + dt * L.f_B, s.t + dt, s.t);
    return out;
  }

  /// Three-stage SSP Runge-Kutta, stage abscissae t, t+dt, t+dt/2: six projections.
  MHDState rk3_step(const MHDState& s, double dt) const {
    check_dt(dt);
    const auto& M = solver_->mass();
    const Eigen::VectorXd Mu0 = M * s.u.values;
    const Eigen::VectorXd Mb0 = M * s.B.values;

    const ResidualPair L0 = (*op_)(s.u.values, s.B.values, s.t);
    const MHDState s1 = project_pair(Mu0 + dt * L0.f_u, Mb0 + dt * L0.f_B, s.t + dt, s.t);

    const ResidualPair L1 = (*op_)(s1.u.values, s1.B.values, s1.t);
    const MHDState s2 = project_pair(0.75 * Mu0 + 0.25 * (M * s1.u.values + dt * L1.f_u),
                                     0.75 * Mb0 + 0.25 * (M * s1.B.values + dt * L1.f_B), s.t + 0.5 * dt, s.t);

    const ResidualPair L2 = (*op_)(s2.u.values, s2.B.values, s2.t);
    return project_pair(Mu0 / 3.0 + (2.0 / 3.0) * (M * s2.u.values + dt * L2.f_u),
                        Mb0 / 3.0 + (2.0 / 3.0) * (M * s2.B.values + dt * L2.f_B), s.t + dt, s.t);
  }

  MHDState step(const MHDState& s, double dt, Integrator kind) const {
    return kind == Integrator::rk3 ? rk3_step(s, dt) : euler_step(s, dt);
  }

 private:
  static void check_dt(double dt) {
    if (!(dt >= 0.0) || !std::isfinite(dt)) throw InvalidArgument("time step must be finite and non-negative");
  }

  // A non-finite stage right-hand side means the step blew up from t0.
  MHDState project_pair(const Eigen::VectorXd& Fu, const Eigen::VectorXd& Fb, double t, double t0) const {
    if (!Fu.allFinite() || !Fb.allFinite()) throw BlowUpError("time step produced a non-finite right-hand side", t0);
    MHDState out{solver_->project(Fu).u, solver_->project(Fb).u, t};
    if (!out.all_finite()) throw BlowUpError("time step produced a non-finite stage", t0);
    if (on_stage) on_stage(out);
    return out;
  }

  const SpatialOperator* op_;
  const ProjectionSolver* solver_;
};

struct IntegrationResult {
  MHDState state;
  long long steps = 0;
};

/// Advances to t_end.  Each step uses compute_dt, shortened so that every
/// requested sample time (and t_end) is hit exactly.  `on_step` runs after
/// every accepted step, `on_sample` at the start time, at each sample time
/// in (t, t_end] and at t_end.
struct IntegrateOptions {
  Integrator integrator = Integrator::rk3;
  StepControl control;
  std::vector<double> sample_times;
  std::function<void(const MHDState&, long long step)> on_step;
  std::function<void(const MHDState&, long long step)> on_sample;
};

inline IntegrationResult integrate(const TimeStepper& stepper, MHDState state, double t_end, const IntegrateOptions& opt) {
  if (!(t_end >= state.t)) throw InvalidArgument("integrate: end time precedes current time");
  std::vector<double> targets;
  for (double ts : opt.sample_times)
    if (ts > state.t && ts < t_end) targets.push_back(ts);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  targets.push_back(t_end);

  IntegrationResult res{std::move(state), 0};
  if (opt.on_sample) opt.on_sample(res.state, 0);
  const auto& params = stepper.op().params();
  for (double target : targets) {
    if (target <= res.state.t) continue;
    while (res.state.t < target) {
      const double remaining = target - res.state.t;
      double dt = compute_dt(res.state, params, opt.control);
      bool last = false;
      // Avoid leaving a sliver of a step before the target.
      if (dt >= remaining * (1.0 - 1e-12)) {
        dt = remaining;
        last = true;
      }
      const double last_good = res.state.t;
      MHDState next = stepper.step(res.state, dt, opt.integrator);
      if (!next.all_finite()) throw BlowUpError("integrate: solution became non-finite", last_good);
      if (last) next.t = target;
      res.state = std::move(next);
      ++res.steps;
      if (opt.on_step) opt.on_step(res.state, res.steps);
    }
    if (opt.on_sample) opt.on_sample(res.state, res.steps);
  }
  return res;
}

}  // namespace dgmhd
