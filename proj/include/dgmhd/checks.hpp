#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "dgmhd/diagnostics.hpp"
#include "dgmhd/forms.hpp"
#include "dgmhd/projection.hpp"

namespace dgmhd {

/// Outcome of one self-check.
struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;      // measured quantity (usually a relative error)
  double tolerance = 0.0;  // threshold it was compared to
};

/// Closed-form facet dissipation sums at the state (u, B):
///   u_jumps = 1/2 sum_F int |u.n| ([[u]]^2 + [[B]]^2)
///   b_jumps = 1/2 sum_F int |B.n| ([[u]]^2 + [[B]]^2)
/// split into their [[u]]^2 and [[B]]^2 parts.
struct JumpDissipation {
  double un_ujump = 0.0;  // 1/2 sum |u.n| [[u]]^2
  double un_bjump = 0.0;  // 1/2 sum |u.n| [[B]]^2
  double bn_ujump = 0.0;  // 1/2 sum |B.n| [[u]]^2
  double bn_bjump = 0.0;  // 1/2 sum |B.n| [[B]]^2
};

inline JumpDissipation jump_dissipation(const CoefficientVector& u, const CoefficientVector& B) {
  const RTSpace& space = *u.space;
  const auto& mesh = space.mesh();
  const auto rule = gauss_legendre(convective_quadrature_points(space.degree()));
  JumpDissipation out;
  for (const Facet& facet : mesh.facets()) {
    if (facet.sides.wall) continue;
    const auto& lo = *facet.sides.lower;
    const auto& up = *facet.sides.upper;
    const int d = facet.axis == FacetAxis::x ? 0 : 1;
    const double len = facet.axis == FacetAxis::x ? mesh.hy() : mesh.hx();
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto plo = detail::face_ref_point(lo.face, rule.points[q]);
      const auto pup = detail::face_ref_point(up.face, rule.points[q]);
      const Vec2 ul = eval_field(u, lo.element, plo).value, ur = eval_field(u, up.element, pup).value;
      const Vec2 bl = eval_field(B, lo.element, plo).value, br = eval_field(B, up.element, pup).value;
      const double w = 0.5 * rule.weights[q] * len;
      const double un = std::abs(0.5 * (ul[d] + ur[d]));
      const double bn = std::abs(0.5 * (bl[d] + br[d]));
      const double ju = (ul - ur).squaredNorm(), jb = (bl - br).squaredNorm();
      out.un_ujump += w * un * ju;
      out.un_bjump += w * un * jb;
      out.bn_ujump += w * bn * ju;
      out.bn_bjump += w * bn * jb;
    }
  }
  return out;
}

inline double relative_difference(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

/// Random divergence-free field: project a random dual vector.
template <class Rng>
CoefficientVector random_divfree(const ProjectionSolver& solver, Rng& rng) {
  std::normal_distribution<double> nd;
  Eigen::VectorXd F(solver.space().n_dofs());
  for (auto& x : F) x = nd(rng);
  return solver.project(F).u;
}

/// Property suite on small meshes, used by the `check` subcommand.
inline std::vector<CheckResult> run_property_checks(unsigned seed = 2024) {
  std::vector<CheckResult> results;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;

  for (int k = 0; k <= 2; ++k) {
    const std::string tag = " (k=" + std::to_string(k) + ")";
    RTSpace space(build_mesh(4, 4, {0.0, 1.0, 0.0, 1.0}, AxisBC::periodic, AxisBC::periodic), k);
    const PressureSpace pspace(space);
    const ProjectionSolver solver(space, pspace);

    // H(div) conformity on arbitrary (not projected) coefficients.
    {
      CoefficientVector v(space);
      for (auto& x : v.values) x = nd(rng);
      double worst = 0.0;
      const auto rule = gauss_legendre(k + 2);
      for (const Facet& f : space.mesh().facets()) {
        const int d = f.axis == FacetAxis::x ? 0 : 1;
        for (double s : rule.points) {
          const double a = eval_field(v, f.sides.lower->element, detail::face_ref_point(f.sides.lower->face, s)).value[d];
          const double b = eval_field(v, f.sides.upper->element, detail::face_ref_point(f.sides.upper->face, s)).value[d];
          worst = std::max(worst, std::abs(a - b));
        }
      }
      results.push_back({"normal continuity" + tag, worst <= 1e-12, worst, 1e-12});
    }

    // Energy identities of the convective forms.
    double worst_id = 0.0, worst_diss = -1e300;
    for (int trial = 0; trial < 5; ++trial) {
      const auto u = random_divfree(solver, rng);
      const auto B = random_divfree(solver, rng);
      const auto jd = jump_dissipation(u, B);
      worst_id = std::max(worst_id, relative_difference(eval_trilinear(ConvectiveForm::uu, u, B, u), jd.un_ujump));
      worst_id = std::max(worst_id, relative_difference(eval_trilinear(ConvectiveForm::ub, u, B, B), jd.un_bjump));
      worst_id = std::max(worst_id, relative_difference(eval_trilinear(ConvectiveForm::bb, u, B, u) +
                                                            eval_trilinear(ConvectiveForm::bu, u, B, B),
                                                        -(jd.bn_ujump + jd.bn_bjump)));
      const auto r = assemble_residuals(u, B, {}, {}, 0.0);
      const double rate = r.f_u.dot(u.values) + r.f_B.dot(B.values);
      const double scale = jd.un_ujump + jd.un_bjump + jd.bn_ujump + jd.bn_bjump;
      worst_diss = std::max(worst_diss, rate / scale);
    }
    results.push_back({"convective energy identities" + tag, worst_id <= 1e-10, worst_id, 1e-10});
    results.push_back({"semi-discrete dissipativity" + tag, worst_diss <= 1e-12, worst_diss, 1e-12});

    // Projection contract.
    {
      double worst = 0.0;
      for (int trial = 0; trial < 10; ++trial) {
        Eigen::VectorXd F(space.n_dofs());
        for (auto& x : F) x = nd(rng);
        const auto sol = solver.project(F);
        const auto [res, div] = solver.relative_residuals(sol, F);
        const auto again = solver.project(solver.mass() * sol.u.values).u;
        const double idem = (again.values - sol.u.values).norm() / std::max(sol.u.values.norm(), 1e-300);
        worst = std::max({worst, res, div, idem});
      }
      results.push_back({"projection residual/idempotency" + tag, worst <= 1e-10, worst, 1e-10});
    }

    // SIP symmetry and non-negativity.
    {
      double sym = 0.0, min_ratio = 1e300;
      for (int trial = 0; trial < 5; ++trial) {
        CoefficientVector a(space), b(space);
        for (auto& x : a.values) x = nd(rng);
        for (auto& x : b.values) x = nd(rng);
        const double ab = eval_diffusion(a, b, 2.0), ba = eval_diffusion(b, a, 2.0);
        sym = std::max(sym, relative_difference(ab, ba));
        min_ratio = std::min(min_ratio, eval_diffusion(a, a, 2.0) / a.values.squaredNorm());
      }
      results.push_back({"SIP symmetry" + tag, sym <= 1e-12, sym, 1e-12});
      results.push_back({"SIP non-negativity" + tag, min_ratio >= 0.0, min_ratio, 0.0});
    }
  }
  return results;
}

}  // namespace dgmhd
