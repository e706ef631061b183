#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "dgmhd/forms.hpp"
#include "dgmhd/mesh.hpp"
#include "dgmhd/quadrature.hpp"
#include "dgmhd/rt_space.hpp"

using namespace dgmhd;

namespace {

constexpr double kPi = std::numbers::pi;
const Bounds kUnit{0.0, 1.0, 0.0, 1.0};
const Bounds kTorus{0.0, 2.0 * kPi, 0.0, 2.0 * kPi};

std::array<double, 2> ref_on_face(LocalFace face, double s) {
  switch (face) {
    case LocalFace::left: return {0.0, s};
    case LocalFace::right: return {1.0, s};
    case LocalFace::bottom: return {s, 0.0};
    case LocalFace::top: return {s, 1.0};
  }
  return {0.0, 0.0};
}

Eigen::VectorXd random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::VectorXd v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

TEST(Quadrature, IntegratesMonomialsExactly) {
  for (int n = 1; n <= 8; ++n) {
    const auto rule = gauss_legendre(n);
    ASSERT_EQ(rule.size(), static_cast<std::size_t>(n));
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double s = 0.0;
      for (std::size_t q = 0; q < rule.size(); ++q) s += rule.weights[q] * std::pow(rule.points[q], p);
      EXPECT_NEAR(s, 1.0 / (p + 1), 1e-14) << "n=" << n << " p=" << p;
    }
  }
}

TEST(Quadrature, RejectsZeroPoints) { EXPECT_THROW(gauss_legendre(0), InvalidArgument); }

TEST(Quadrature, ShiftedLegendreMatchesClosedForms) {
  for (double t : {0.0, 0.2, 0.5, 0.9, 1.0}) {
    const double x = 2.0 * t - 1.0;
    EXPECT_NEAR(shifted_legendre(0, t).first, 1.0, 1e-15);
    EXPECT_NEAR(shifted_legendre(1, t).first, x, 1e-15);
    EXPECT_NEAR(shifted_legendre(2, t).first, 0.5 * (3 * x * x - 1), 1e-14);
    EXPECT_NEAR(shifted_legendre(3, t).first, 0.5 * (5 * x * x * x - 3 * x), 1e-14);
    EXPECT_NEAR(shifted_legendre(2, t).second, 2.0 * 3.0 * x, 1e-13);
  }
}

// ---------------------------------------------------------------------------
// Mesh
// ---------------------------------------------------------------------------

TEST(Mesh, PeriodicTwoByTwoCounts) {
  const auto m = build_mesh(2, 2, kTorus, AxisBC::periodic, AxisBC::periodic);
  EXPECT_EQ(m.n_elements(), 4);
  EXPECT_EQ(m.n_facets(), 8);
  EXPECT_EQ(m.n_wall_facets(), 0);
  EXPECT_NEAR(m.hx(), kPi, 1e-15);
  EXPECT_NEAR(m.h(), kPi, 1e-15);
}

TEST(Mesh, WallInYCounts) {
  const auto m = build_mesh(4, 4, kUnit, AxisBC::periodic, AxisBC::wall);
  EXPECT_EQ(m.n_elements(), 16);
  EXPECT_EQ(m.n_x_facets(), 16);
  EXPECT_EQ(m.n_y_facets(), 20);
  EXPECT_EQ(m.n_wall_facets(), 8);
  for (int f = 0; f < m.n_facets(); ++f) {
    const auto& facet = m.facet(f);
    if (facet.sides.wall) {
      EXPECT_EQ(facet.axis, FacetAxis::y);
      EXPECT_TRUE(facet.y == 0.0 || std::abs(facet.y - 1.0) < 1e-14);
      EXPECT_NE(facet.sides.lower.has_value(), facet.sides.upper.has_value());
    }
  }
}

TEST(Mesh, WallBothAxesCounts) {
  const auto m = build_mesh(3, 2, kUnit, AxisBC::wall, AxisBC::wall);
  EXPECT_EQ(m.n_x_facets(), 4 * 2);
  EXPECT_EQ(m.n_y_facets(), 3 * 3);
  EXPECT_EQ(m.n_wall_facets(), 2 * 2 + 2 * 3);
}

TEST(Mesh, SingleCellPeriodicIsSelfAdjacent) {
  const auto m = build_mesh(1, 1, kUnit, AxisBC::periodic, AxisBC::periodic);
  EXPECT_EQ(m.n_facets(), 2);
  EXPECT_EQ(m.element_facet(0, LocalFace::left), m.element_facet(0, LocalFace::right));
  EXPECT_EQ(m.element_facet(0, LocalFace::bottom), m.element_facet(0, LocalFace::top));
  const auto nb = facet_neighbors(m, m.element_facet(0, LocalFace::left));
  ASSERT_TRUE(nb.lower && nb.upper);
  EXPECT_EQ(nb.lower->element, 0);
  EXPECT_EQ(nb.upper->element, 0);
  EXPECT_EQ(nb.lower->face, LocalFace::right);
  EXPECT_EQ(nb.upper->face, LocalFace::left);
}

TEST(Mesh, NeighborsOrderedAlongNormal) {
  const auto m = build_mesh(2, 2, kTorus, AxisBC::periodic, AxisBC::periodic);
  const int e00 = m.element_index(0, 0), e10 = m.element_index(1, 0);
  const int f = m.element_facet(e00, LocalFace::right);
  EXPECT_EQ(f, m.element_facet(e10, LocalFace::left));
  const auto nb = facet_neighbors(m, f);
  EXPECT_EQ(m.facet(f).axis, FacetAxis::x);
  EXPECT_EQ(nb.lower->element, e00);
  EXPECT_EQ(nb.upper->element, e10);
  EXPECT_FALSE(nb.wall);
}

TEST(Mesh, WallFacetHasSingleIncidence) {
  const auto m = build_mesh(2, 2, kUnit, AxisBC::periodic, AxisBC::wall);
  const int f = m.element_facet(m.element_index(1, 0), LocalFace::bottom);
  const auto nb = facet_neighbors(m, f);
  EXPECT_TRUE(nb.wall);
  EXPECT_FALSE(nb.lower.has_value());
  ASSERT_TRUE(nb.upper.has_value());
  EXPECT_EQ(nb.upper->element, m.element_index(1, 0));
}

TEST(Mesh, EveryInteriorFacetSeenOncePerSide) {
  for (auto bcy : {AxisBC::periodic, AxisBC::wall}) {
    const auto m = build_mesh(5, 3, kUnit, AxisBC::periodic, bcy);
    std::vector<int> plus(m.n_facets(), 0), minus(m.n_facets(), 0);
    for (int e = 0; e < m.n_elements(); ++e) {
      // Outward normals: right/top agree with the global normal, left/bottom oppose it.
      ++plus[m.element_facet(e, LocalFace::right)];
      ++plus[m.element_facet(e, LocalFace::top)];
      ++minus[m.element_facet(e, LocalFace::left)];
      ++minus[m.element_facet(e, LocalFace::bottom)];
    }
    for (int f = 0; f < m.n_facets(); ++f) {
      if (m.facet(f).sides.wall) {
        EXPECT_EQ(plus[f] + minus[f], 1);
      } else {
        EXPECT_EQ(plus[f], 1);
        EXPECT_EQ(minus[f], 1);
      }
    }
  }
}

TEST(Mesh, TransposedMeshIsIsomorphic) {
  const auto a = build_mesh(4, 3, {0.0, 2.0, 0.0, 1.0}, AxisBC::periodic, AxisBC::wall);
  const auto b = build_mesh(3, 4, {0.0, 1.0, 0.0, 2.0}, AxisBC::wall, AxisBC::periodic);
  EXPECT_EQ(a.n_x_facets(), b.n_y_facets());
  EXPECT_EQ(a.n_y_facets(), b.n_x_facets());
  EXPECT_EQ(a.n_wall_facets(), b.n_wall_facets());
  EXPECT_DOUBLE_EQ(a.hx(), b.hy());
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 4; ++i) {
      const int ea = a.element_index(i, j), eb = b.element_index(j, i);
      const auto nb_a = a.facet(a.element_facet(ea, LocalFace::right)).sides;
      const auto nb_b = b.facet(b.element_facet(eb, LocalFace::top)).sides;
      EXPECT_EQ(a.element_ij(nb_a.upper->element)[0], b.element_ij(nb_b.upper->element)[1]);
      const auto wa = a.facet(a.element_facet(ea, LocalFace::bottom)).sides.wall;
      const auto wb = b.facet(b.element_facet(eb, LocalFace::left)).sides.wall;
      EXPECT_EQ(wa, wb);
    }
}

TEST(Mesh, RejectsBadInput) {
  EXPECT_THROW(build_mesh(0, 2, kUnit, AxisBC::periodic, AxisBC::periodic), InvalidArgument);
  EXPECT_THROW(build_mesh(2, -1, kUnit, AxisBC::periodic, AxisBC::periodic), InvalidArgument);
  EXPECT_THROW(build_mesh(2, 2, {1.0, 1.0, 0.0, 1.0}, AxisBC::periodic, AxisBC::periodic), InvalidArgument);
  EXPECT_THROW(build_mesh(2, 2, {0.0, 1.0, 1.0, 0.0}, AxisBC::periodic, AxisBC::periodic), InvalidArgument);
  const auto m = build_mesh(2, 2, kUnit, AxisBC::periodic, AxisBC::periodic);
  EXPECT_THROW(facet_neighbors(m, 8), InvalidArgument);
  EXPECT_THROW(facet_neighbors(m, -1), InvalidArgument);
}

// ---------------------------------------------------------------------------
// RT space: dimensions
// ---------------------------------------------------------------------------

TEST(RTSpace, DofCounts) {
  const RTSpace s0(build_mesh(4, 4, kUnit, AxisBC::periodic, AxisBC::periodic), 0);
  EXPECT_EQ(s0.n_dofs(), 32);
  EXPECT_EQ(s0.n_interior_dofs(), 0);

  const RTSpace s1(build_mesh(2, 2, kUnit, AxisBC::periodic, AxisBC::periodic), 1);
  EXPECT_EQ(s1.n_facet_dofs(), 16);
  EXPECT_EQ(s1.n_interior_dofs(), 16);
  EXPECT_EQ(s1.n_dofs(), 32);

  const RTSpace sw(build_mesh(4, 4, kUnit, AxisBC::periodic, AxisBC::wall), 1);
  EXPECT_EQ(sw.constrained_dofs().size(), 16u);
  for (int d : sw.constrained_dofs()) EXPECT_TRUE(sw.is_constrained(d));

  const RTSpace weak(build_mesh(4, 4, kUnit, AxisBC::periodic, AxisBC::wall), 1, false);
  EXPECT_TRUE(weak.constrained_dofs().empty());
}

TEST(RTSpace, LocalDimensionFormula) {
  for (int k = 0; k <= 3; ++k) {
    const RTSpace s(build_mesh(3, 2, kUnit, AxisBC::periodic, AxisBC::periodic), k);
    EXPECT_EQ(s.n_local(), 2 * (k + 1) * (k + 2));
    EXPECT_EQ(s.dofs_per_facet(), k + 1);
    EXPECT_EQ(s.n_interior_dofs(), s.mesh().n_elements() * 2 * k * (k + 1));
    const PressureSpace p(s);
    EXPECT_EQ(p.n_dofs(), 6 * (k + 1) * (k + 1));
  }
}

TEST(RTSpace, RejectsUnsupportedDegree) {
  const auto m = build_mesh(2, 2, kUnit, AxisBC::periodic, AxisBC::periodic);
  EXPECT_THROW(RTSpace(m, 4), InvalidArgument);
  EXPECT_THROW(build_space(m, -1), InvalidArgument);
  EXPECT_THROW(PressureSpace(4, 7), InvalidArgument);
}

TEST(RTSpace, ElementDofsShareFacets) {
  const RTSpace s(build_mesh(3, 3, kUnit, AxisBC::periodic, AxisBC::periodic), 2);
  std::set<int> seen;
  for (int e = 0; e < s.mesh().n_elements(); ++e)
    for (int d : s.element_dofs(e)) seen.insert(d);
  EXPECT_EQ(static_cast<int>(seen.size()), s.n_dofs());
  const int e = s.mesh().element_index(1, 1), r = s.mesh().element_index(2, 1);
  for (int j = 0; j <= 2; ++j)
    EXPECT_EQ(s.element_dofs(e)[s.face_local_dof(LocalFace::right, j)], s.element_dofs(r)[s.face_local_dof(LocalFace::left, j)]);
}

// ---------------------------------------------------------------------------
// RT space: evaluation and conformity
// ---------------------------------------------------------------------------

class RTDegree : public ::testing::TestWithParam<int> {};

TEST_P(RTDegree, NormalTraceContinuousForRandomCoefficients) {
  const int k = GetParam();
  std::mt19937_64 rng(11 + k);
  for (auto bcy : {AxisBC::periodic, AxisBC::wall}) {
    const RTSpace s(build_mesh(3, 4, {0.0, 1.5, -1.0, 1.0}, AxisBC::periodic, bcy), k);
    const Eigen::VectorXd c = random_vector(s.n_dofs(), rng);
    const auto rule = gauss_legendre(k + 2);
    for (const Facet& f : s.mesh().facets()) {
      if (f.sides.wall) continue;
      const int d = f.axis == FacetAxis::x ? 0 : 1;
      for (double t : rule.points) {
        const double lo = eval_field(s, c, f.sides.lower->element, ref_on_face(f.sides.lower->face, t)).value[d];
        const double up = eval_field(s, c, f.sides.upper->element, ref_on_face(f.sides.upper->face, t)).value[d];
        EXPECT_NEAR(lo, up, 1e-12);
      }
    }
  }
}

TEST_P(RTDegree, DivergenceIsTraceAndLiesInQk) {
  const int k = GetParam();
  std::mt19937_64 rng(7 + k);
  const RTSpace s(build_mesh(2, 2, {0.0, 2.0, 0.0, 3.0}, AxisBC::periodic, AxisBC::periodic), k);
  const PressureSpace p(s);
  const Eigen::VectorXd c = random_vector(s.n_dofs(), rng);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  // Fit div on Q_k by collocation at the tensor Gauss points, then check it
  // at unrelated random points.
  const auto rule = gauss_legendre(k + 1);
  for (int e = 0; e < s.mesh().n_elements(); ++e) {
    const int np = p.n_local();
    Eigen::MatrixXd A(np, np);
    Eigen::VectorXd b(np);
    int row = 0;
    for (double y : rule.points)
      for (double x : rule.points) {
        for (int i = 0; i < np; ++i) A(row, i) = p.eval_local(i, x, y);
        b[row++] = eval_field(s, c, e, {x, y}).divergence;
      }
    const Eigen::VectorXd coef = A.partialPivLu().solve(b);
    for (int trial = 0; trial < 5; ++trial) {
      const std::array<double, 2> r{ud(rng), ud(rng)};
      const auto fs = eval_field(s, c, e, r);
      EXPECT_NEAR(fs.divergence, fs.gradient.trace(), 1e-12);
      double q = 0.0;
      for (int i = 0; i < np; ++i) q += coef[i] * p.eval_local(i, r[0], r[1]);
      EXPECT_NEAR(fs.divergence, q, 1e-10 * (1.0 + std::abs(q)));
    }
  }
}

TEST_P(RTDegree, InterpolationReproducesRTFields) {
  const int k = GetParam();
  // Components in Q_{k+1,k} and Q_{k,k+1}: a generic RT_k member.
  const RTSpace s(build_mesh(3, 2, {0.0, 1.0, 0.0, 1.0}, AxisBC::wall, AxisBC::wall), k, false);
  auto f = [k](double x, double y) {
    return Vec2(std::pow(x, k + 1) * std::pow(y, k) + 0.5, std::pow(x, k) * std::pow(y, k + 1) - 2.0 * y);
  };
  const auto c = interpolate(s, f);
  EXPECT_LE(l2_error(c, f), 1e-12);
  const auto again = interpolate(s, [&](double x, double y) {
    // Evaluate the interpolant itself (round trip).
    const auto& m = s.mesh();
    const int i = std::min(m.nx() - 1, static_cast<int>(x / m.hx()));
    const int j = std::min(m.ny() - 1, static_cast<int>(y / m.hy()));
    const int e = m.element_index(i, j);
    const auto o = m.element_origin(e);
    return eval_field(c, e, {(x - o[0]) / m.hx(), (y - o[1]) / m.hy()}).value;
  });
  EXPECT_LE((again.values - c.values).cwiseAbs().maxCoeff(), 1e-11);
}

INSTANTIATE_TEST_SUITE_P(Degrees, RTDegree, ::testing::Values(0, 1, 2, 3));

TEST(RTSpace, ConstantAndLinearFieldsReproduced) {
  const RTSpace s(build_mesh(4, 4, kUnit, AxisBC::periodic, AxisBC::periodic), 0);
  const auto c = interpolate(s, [](double, double) { return Vec2(1.0, 0.0); });
  const auto fs = eval_field(c, 5, {0.3, 0.8});
  EXPECT_NEAR(fs.value[0], 1.0, 1e-13);
  EXPECT_NEAR(fs.value[1], 0.0, 1e-13);
  EXPECT_NEAR(fs.divergence, 0.0, 1e-13);

  for (int k = 1; k <= 3; ++k) {
    const RTSpace s1(build_mesh(4, 4, kUnit, AxisBC::wall, AxisBC::wall), k, false);
    auto f = [](double x, double y) { return Vec2(x, -y); };
    const auto c1 = interpolate(s1, f);
    EXPECT_LE(l2_error(c1, f), 1e-13);
    const int e = s1.mesh().element_index(2, 1);
    const auto o = s1.mesh().element_origin(e);
    const auto centre = eval_field(c1, e, {0.5, 0.5});
    EXPECT_NEAR(centre.value[0], o[0] + 0.125, 1e-13);
    EXPECT_NEAR(centre.value[1], -(o[1] + 0.125), 1e-13);
    EXPECT_NEAR(centre.divergence, 0.0, 1e-12);
  }
}

TEST(RTSpace, ZeroCoefficientsEvaluateToZero) {
  const RTSpace s(build_mesh(2, 2, kUnit, AxisBC::periodic, AxisBC::periodic), 2);
  const CoefficientVector z(s);
  const auto fs = eval_field(z, 3, {0.25, 0.75});
  EXPECT_EQ(fs.value.norm(), 0.0);
  EXPECT_EQ(fs.gradient.norm(), 0.0);
  EXPECT_EQ(fs.divergence, 0.0);
  EXPECT_THROW(eval_field(z, 4, {0.5, 0.5}), InvalidArgument);
  EXPECT_THROW(CoefficientVector(s, Eigen::VectorXd::Zero(3)), InvalidArgument);
}

TEST(RTSpace, InterpolationConvergesAtOrderKPlusOne) {
  auto tg = [](double x, double y) { return Vec2(-std::cos(x) * std::sin(y), std::sin(x) * std::cos(y)); };
  for (int k = 0; k <= 2; ++k) {
    double prev = 0.0;
    for (int n : {8, 16, 32}) {
      const RTSpace s(build_mesh(n, n, kTorus, AxisBC::periodic, AxisBC::periodic), k);
      const double err = l2_error(interpolate(s, tg), tg);
      if (prev > 0.0) EXPECT_GE(std::log2(prev / err), k + 1 - 0.2) << "k=" << k << " n=" << n;
      prev = err;
    }
  }
}

TEST(RTSpace, L2ErrorOfZeroAgainstUnitField) {
  const RTSpace s(build_mesh(3, 3, kUnit, AxisBC::periodic, AxisBC::periodic), 1);
  EXPECT_NEAR(l2_error(CoefficientVector(s), [](double, double) { return Vec2(1.0, 0.0); }), 1.0, 1e-14);
}

// ---------------------------------------------------------------------------
// Mass and divergence matrices
// ---------------------------------------------------------------------------

TEST(Mass, SymmetricPositiveDefinite) {
  std::mt19937_64 rng(3);
  for (int k = 0; k <= 3; ++k) {
    const RTSpace s(build_mesh(3, 3, {0.0, 1.0, 0.0, 2.0}, AxisBC::periodic, AxisBC::periodic), k);
    const Eigen::MatrixXd M(assemble_mass(s));
    EXPECT_LE((M - M.transpose()).cwiseAbs().maxCoeff(), 1e-14);
    for (int t = 0; t < 10; ++t) {
      const Eigen::VectorXd v = random_vector(s.n_dofs(), rng);
      EXPECT_GT(v.dot(M * v), 0.0);
    }
  }
}

TEST(Mass, SingleCellLowestOrderMatchesExactIntegrals) {
  // On a 1x1 periodic cell the two k=0 basis functions are (1-xi)+xi = 1 in
  // x and likewise in y: M = |Omega| I.
  const RTSpace s(build_mesh(1, 1, {0.0, 2.0, 0.0, 3.0}, AxisBC::periodic, AxisBC::periodic), 0);
  const Eigen::MatrixXd M(assemble_mass(s));
  ASSERT_EQ(M.rows(), 2);
  EXPECT_NEAR(M(0, 0), 6.0, 1e-14);
  EXPECT_NEAR(M(1, 1), 6.0, 1e-14);
  EXPECT_NEAR(M(0, 1), 0.0, 1e-14);
}

TEST(Mass, LowestOrderStripMatchesHatFunctionIntegrals) {
  // 3x1 periodic strip, hx = 1, hy = 2.  The x-facet functions are
  // periodic hats in x times 1 in y: int hat_i hat_i = 2h/3, neighbours h/6.
  const RTSpace s(build_mesh(3, 1, {0.0, 3.0, 0.0, 2.0}, AxisBC::periodic, AxisBC::periodic), 0);
  const Eigen::MatrixXd M(assemble_mass(s));
  const auto& mesh = s.mesh();
  for (int a = 0; a < mesh.n_x_facets(); ++a)
    for (int b = 0; b < mesh.n_x_facets(); ++b) {
      const int dist = std::min((a - b + 3) % 3, (b - a + 3) % 3);
      const double expected = dist == 0 ? 2.0 * 2.0 / 3.0 : 2.0 / 6.0;
      EXPECT_NEAR(M(a, b), expected, 1e-14);
    }
  for (int a = mesh.n_x_facets(); a < mesh.n_facets(); ++a) {
    EXPECT_NEAR(M(a, a), 2.0, 1e-14);
    for (int b = 0; b < mesh.n_facets(); ++b)
      if (b != a) EXPECT_NEAR(M(a, b), 0.0, 1e-14);
  }
}

TEST(Divergence, SolenoidalInterpolantIsInKernel) {
  const RTSpace s(build_mesh(4, 4, kUnit, AxisBC::wall, AxisBC::wall), 1, false);
  const PressureSpace p(s);
  const SparseMatrix D = assemble_div(s, p);
  const auto v = interpolate(s, [](double x, double y) { return Vec2(x, -y); });
  EXPECT_LE((D * v.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Divergence, UnitDivergenceMomentIsElementArea) {
  const RTSpace s(build_mesh(4, 2, {0.0, 2.0, 0.0, 1.0}, AxisBC::wall, AxisBC::wall), 1, false);
  const PressureSpace p(s);
  const SparseMatrix D = assemble_div(s, p);
  const auto v = interpolate(s, [](double x, double) { return Vec2(x, 0.0); });
  const Eigen::VectorXd Dv = D * v.values;
  const double area = s.mesh().hx() * s.mesh().hy();
  for (int e = 0; e < s.mesh().n_elements(); ++e) {
    EXPECT_NEAR(Dv[e * p.n_local()], area, 1e-13);  // q = 1
    for (int a = 1; a < p.n_local(); ++a) EXPECT_NEAR(Dv[e * p.n_local() + a], 0.0, 1e-13);
  }
}

TEST(Divergence, DegreeMismatchRejected) {
  const RTSpace s(build_mesh(2, 2, kUnit, AxisBC::periodic, AxisBC::periodic), 1);
  EXPECT_THROW(assemble_div(s, PressureSpace(4, 2)), InvalidArgument);
  EXPECT_THROW(assemble_div(s, PressureSpace(5, 1)), InvalidArgument);
}
