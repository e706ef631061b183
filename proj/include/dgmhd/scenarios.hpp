#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "dgmhd/errors.hpp"
#include "dgmhd/forms.hpp"
#include "dgmhd/mesh.hpp"

namespace dgmhd {

using VectorFn = std::function<Vec2(double x, double y)>;
using TimeVectorFn = std::function<Vec2(double x, double y, double t)>;

/// A fully specified experiment: domain, boundary policy, physics, data.
struct Scenario {
  std::string name;
  Bounds bounds;
  AxisBC bc_x = AxisBC::periodic;
  AxisBC bc_y = AxisBC::periodic;
  PhysicsParams params;
  VectorFn u0;
  VectorFn B0;
  Sources sources;
  TimeVectorFn exact_u;  // empty when no exact solution is known
  TimeVectorFn exact_B;
  double t_end = 1.0;
  /// Reported time is t / time_scale (Gamma for Kelvin-Helmholtz).
  double time_scale = 1.0;

  bool has_exact() const { return static_cast<bool>(exact_u) && static_cast<bool>(exact_B); }
};

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Decaying Taylor-Green vortex with u = B; Re = +inf gives the stationary
/// inviscid case.  With eta = 0 the magnetic field needs the source
/// g_B = dB/dt = -(2/Re) B to follow the same decay as u.
inline Scenario taylor_green_mhd(double Re = std::numeric_limits<double>::infinity(), double eta = 0.0) {
  if (!(Re > 0.0)) throw InvalidArgument("taylor_green_mhd: Re must be positive");
  if (!(eta >= 0.0)) throw InvalidArgument("taylor_green_mhd: eta must be non-negative");
  const double nu = std::isinf(Re) ? 0.0 : 1.0 / Re;
  const double rate = 2.0 * nu;  // 2/Re

  Scenario s;
  s.name = "taylor-green";
  s.bounds = {0.0, kTwoPi, 0.0, kTwoPi};
  s.params = {nu, eta, 2.0};
  auto exact = [rate](double x, double y, double t) {
    const double a = std::exp(-rate * t);
    return Vec2(-std::cos(x) * std::sin(y) * a, std::sin(x) * std::cos(y) * a);
  };
  s.exact_u = exact;
  s.exact_B = exact;
  s.u0 = [exact](double x, double y) { return exact(x, y, 0.0); };
  s.B0 = s.u0;
  // Momentum: nonlinear terms cancel for u = B and nu Lap u = -2 nu u = du/dt.
  // Induction: residual is dB/dt - eta Lap B = -(2/Re) B + 2 eta B.
  if (rate > 0.0 || eta > 0.0) {
    s.sources.g_B = [exact, rate, eta](double x, double y, double t) {
      return Vec2((2.0 * eta - rate) * exact(x, y, t));
    };
  }
  s.t_end = 0.5;
  return s;
}

inline Scenario orszag_tang() {
  Scenario s;
  s.name = "orszag-tang";
  s.bounds = {0.0, kTwoPi, 0.0, kTwoPi};
  s.params = {0.0, 0.0, 2.0};
  s.u0 = [](double x, double y) { return Vec2(-std::sin(y), std::sin(x)); };
  s.B0 = [](double x, double y) { return Vec2(-std::sin(y), std::sin(2.0 * x)); };
  s.t_end = 2.0;
  return s;
}

/// Constants of the Kelvin-Helmholtz set-up.
struct KelvinHelmholtzConstants {
  double L = 1.0;
  double a = 0.05;      // shear layer width, L/20
  double c_n = 1e-3;    // perturbation amplitude
  double u0 = 1.0;      // from Gamma = 0.106 u0 / (2a) = 1.06
  double gamma() const { return 0.106 * u0 / (2.0 * a); }
};

/// Stream function of the perturbation, u0 exp(-(y-L/2)^2/a^2) cos(2 pi x/L).
inline double kh_stream_function(const KelvinHelmholtzConstants& c, double x, double y) {
  const double g = (y - 0.5 * c.L) / c.a;
  return c.u0 * std::exp(-g * g) * std::cos(kTwoPi * x / c.L);
}

/// MHD Kelvin-Helmholtz: x periodic, slip walls in y, background field
/// (u0/M_A, 0).  M_A = +inf is the hydrodynamic limit.
inline Scenario kelvin_helmholtz(double mach_alfven = 2.5, KelvinHelmholtzConstants c = {}) {
  if (!(mach_alfven > 0.0)) throw InvalidArgument("kelvin_helmholtz: M_A must be positive");
  Scenario s;
  s.name = "kelvin-helmholtz";
  s.bounds = {0.0, c.L, 0.0, c.L};
  s.bc_x = AxisBC::periodic;
  s.bc_y = AxisBC::wall;
  s.params = {0.0, 0.0, 2.0};
  s.u0 = [c](double x, double y) {
    const double g = (y - 0.5 * c.L) / c.a;
    const double gauss = std::exp(-g * g);
    const double kx = kTwoPi / c.L;
    const double dpsi_dy = c.u0 * gauss * (-2.0 * g / c.a) * std::cos(kx * x);
    const double dpsi_dx = -c.u0 * gauss * kx * std::sin(kx * x);
    return Vec2(-0.5 * c.u0 * std::tanh(g) + c.c_n * dpsi_dy, -c.c_n * dpsi_dx);
  };
  const double b1 = std::isinf(mach_alfven) ? 0.0 : c.u0 / mach_alfven;
  s.B0 = [b1](double, double) { return Vec2(b1, 0.0); };
  s.time_scale = c.gamma();
  s.t_end = 6.0 * c.gamma();
  return s;
}

/// Looks a scenario up by name: taylor-green, orszag-tang, kelvin-helmholtz.
inline Scenario make_scenario(const std::string& name, double Re, double eta, double mach_alfven) {
  if (name == "taylor-green") return taylor_green_mhd(Re, eta);
  if (name == "orszag-tang") return orszag_tang();
  if (name == "kelvin-helmholtz") return kelvin_helmholtz(mach_alfven);
  throw InvalidArgument("unknown scenario '" + name + "' (expected taylor-green, orszag-tang or kelvin-helmholtz)");
}

inline std::vector<std::string> scenario_names() { return {"taylor-green", "orszag-tang", "kelvin-helmholtz"}; }

}  // namespace dgmhd
