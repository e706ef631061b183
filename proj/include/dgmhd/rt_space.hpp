#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dgmhd/errors.hpp"
#include "dgmhd/mesh.hpp"
#include "dgmhd/quadrature.hpp"

namespace dgmhd {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using SparseMatrix = Eigen::SparseMatrix<double>;

inline constexpr int kMaxDegree = 3;

// ---------------------------------------------------------------------------
// Reference basis of RT_k on [0,1]^2 = [Q_{k+1,k}, Q_{k,k+1}].
//
// Along the normal direction of a component we use the degree k+1 family
//   N_0 = 1 - t,  N_1 = t,  N_a = P~_a - P~_{a-2}  (a = 2..k+1, vanish at 0,1)
// and along the tangential direction the shifted Legendre P~_j, j = 0..k.
// Facet DOFs are therefore the Legendre coefficients of the normal component
// on that facet, which is what makes shared facet DOFs H(div)-conforming.
//
// Local ordering: faces left, right, bottom, top (k+1 each), then x-bubbles,
// then y-bubbles (k(k+1) each).
// ---------------------------------------------------------------------------
namespace detail {

inline std::pair<double, double> normal_shape(int a, double t) {
  if (a == 0) return {1.0 - t, -1.0};
  if (a == 1) return {t, 1.0};
  const auto [p, dp] = shifted_legendre(a, t);
  const auto [q, dq] = shifted_legendre(a - 2, t);
  return {p - q, dp - dq};
}

}  // namespace detail

/// Values and reference-coordinate gradients of all local basis functions at
/// one reference point.  grad(c, d) = d(component c)/d(reference coord d).
struct LocalBasisSample {
  std::vector<Vec2> value;
  std::vector<Mat2> grad_ref;
};

inline int rt_local_dim(int k) { return 2 * (k + 1) * (k + 2); }

inline void eval_reference_basis(int k, double xi, double eta, LocalBasisSample& out) {
  const int n = rt_local_dim(k);
  out.value.assign(n, Vec2::Zero());
  out.grad_ref.assign(n, Mat2::Zero());

  std::vector<std::pair<double, double>> nx(k + 2), ny(k + 2), tx(k + 1), ty(k + 1);
  for (int a = 0; a < k + 2; ++a) {
    nx[a] = detail::normal_shape(a, xi);
    ny[a] = detail::normal_shape(a, eta);
  }
  for (int j = 0; j <= k; ++j) {
    tx[j] = shifted_legendre(j, xi);
    ty[j] = shifted_legendre(j, eta);
  }

  auto x_component = [&](int idx, int a, int j) {
    out.value[idx] = Vec2(nx[a].first * ty[j].first, 0.0);
    out.grad_ref[idx](0, 0) = nx[a].second * ty[j].first;
    out.grad_ref[idx](0, 1) = nx[a].first * ty[j].second;
  };
  auto y_component = [&](int idx, int a, int j) {
    out.value[idx] = Vec2(0.0, tx[j].first * ny[a].first);
    out.grad_ref[idx](1, 0) = tx[j].second * ny[a].first;
    out.grad_ref[idx](1, 1) = tx[j].first * ny[a].second;
  };

  const int m = k + 1;
  for (int j = 0; j <= k; ++j) {
    x_component(0 * m + j, 0, j);
    x_component(1 * m + j, 1, j);
    y_component(2 * m + j, 0, j);
    y_component(3 * m + j, 1, j);
  }
  int idx = 4 * m;
  for (int a = 2; a < k + 2; ++a)
    for (int j = 0; j <= k; ++j) x_component(idx++, a, j);
  for (int a = 2; a < k + 2; ++a)
    for (int j = 0; j <= k; ++j) y_component(idx++, a, j);
}

/// Precomputed basis data at the points of a tensor Gauss rule on the
/// reference element.  Gradients are physical (already divided by hx, hy).
struct ElementTabulation {
  int n_local = 0;
  std::vector<std::array<double, 2>> ref_points;
  std::vector<double> weights;  // reference weights, sum to 1
  std::vector<Vec2> value;      // [q * n_local + i]
  std::vector<Mat2> grad;       // [q * n_local + i]

  std::size_t n_points() const { return weights.size(); }
  const Vec2& phi(std::size_t q, int i) const { return value[q * n_local + i]; }
  const Mat2& dphi(std::size_t q, int i) const { return grad[q * n_local + i]; }
};

/// Same as ElementTabulation but on one local face; `s` is the facet
/// parameter (eta on vertical faces, xi on horizontal ones).
struct FaceTabulation : ElementTabulation {
  std::vector<double> s;
};

/// Degree-k Raviart-Thomas space on a StructuredMesh.
///
/// Facet DOFs (k+1 per facet) are shared by the incident elements; interior
/// DOFs (2k(k+1) per element) are private.  With `strong_wall` the normal DOFs
/// of wall facets are recorded as constrained to zero.  The mesh is held by
/// value; CoefficientVectors point back at the space, so it must outlive them.
class RTSpace {
 public:
  RTSpace(StructuredMesh mesh, int k, bool strong_wall = true) : mesh_(std::move(mesh)), k_(k), strong_wall_(strong_wall) {
    if (k < 0 || k > kMaxDegree)
      throw InvalidArgument("build_space: degree " + std::to_string(k) + " not in [0, " + std::to_string(kMaxDegree) + "]");
    const int m = k + 1;
    n_local_ = rt_local_dim(k);
    n_facet_dofs_ = mesh_.n_facets() * m;
    const int n_int = 2 * k * m;
    n_dofs_ = n_facet_dofs_ + mesh_.n_elements() * n_int;

    dof_map_.resize(static_cast<std::size_t>(mesh_.n_elements()) * n_local_);
    for (int e = 0; e < mesh_.n_elements(); ++e) {
      int* map = &dof_map_[static_cast<std::size_t>(e) * n_local_];
      for (int face = 0; face < 4; ++face) {
        const int f = mesh_.element_facet(e, static_cast<LocalFace>(face));
        for (int j = 0; j < m; ++j) map[face * m + j] = f * m + j;
      }
      for (int i = 0; i < n_int; ++i) map[4 * m + i] = n_facet_dofs_ + e * n_int + i;
    }

    constrained_.assign(n_dofs_, false);
    if (strong_wall_) {
      for (int f = 0; f < mesh_.n_facets(); ++f) {
        if (!mesh_.facet(f).sides.wall) continue;
        for (int j = 0; j < m; ++j) {
          constrained_[f * m + j] = true;
          constrained_list_.push_back(f * m + j);
        }
      }
    }
  }

  const StructuredMesh& mesh() const { return mesh_; }
  int degree() const { return k_; }
  bool strong_wall() const { return strong_wall_; }
  int n_dofs() const { return n_dofs_; }
  int n_local() const { return n_local_; }
  int n_facet_dofs() const { return n_facet_dofs_; }
  int n_interior_dofs() const { return n_dofs_ - n_facet_dofs_; }
  int dofs_per_facet() const { return k_ + 1; }

  /// Local-to-global DOF map of element e.
  std::span<const int> element_dofs(int e) const {
    mesh_.check_element(e);
    return {&dof_map_[static_cast<std::size_t>(e) * n_local_], static_cast<std::size_t>(n_local_)};
  }

  /// Global DOFs on facet f (the Legendre coefficients of u.n there).
  std::vector<int> facet_dofs(int f) const {
    mesh_.check_facet(f);
    std::vector<int> out(k_ + 1);
    for (int j = 0; j <= k_; ++j) out[j] = f * (k_ + 1) + j;
    return out;
  }

  bool is_constrained(int dof) const { return constrained_[dof]; }
  const std::vector<int>& constrained_dofs() const { return constrained_list_; }

  /// Local DOF indices belonging to a face of the reference element.
  int face_local_dof(LocalFace face, int j) const { return static_cast<int>(face) * (k_ + 1) + j; }

  ElementTabulation tabulate_element(int points_per_axis) const {
    const auto rule = gauss_legendre(points_per_axis);
    ElementTabulation t;
    t.n_local = n_local_;
    LocalBasisSample sample;
    for (std::size_t qy = 0; qy < rule.size(); ++qy) {
      for (std::size_t qx = 0; qx < rule.size(); ++qx) {
        const double xi = rule.points[qx], eta = rule.points[qy];
        t.ref_points.push_back({xi, eta});
        t.weights.push_back(rule.weights[qx] * rule.weights[qy]);
        append_sample(t, xi, eta, sample);
      }
    }
    return t;
  }

  FaceTabulation tabulate_face(LocalFace face, int points) const {
    const auto rule = gauss_legendre(points);
    FaceTabulation t;
    t.n_local = n_local_;
    LocalBasisSample sample;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double s = rule.points[q];
      double xi = s, eta = s;
      switch (face) {
        case LocalFace::left: xi = 0.0; break;
        case LocalFace::right: xi = 1.0; break;
        case LocalFace::bottom: eta = 0.0; break;
        case LocalFace::top: eta = 1.0; break;
      }
      t.s.push_back(s);
      t.ref_points.push_back({xi, eta});
      t.weights.push_back(rule.weights[q]);
      append_sample(t, xi, eta, sample);
    }
    return t;
  }

 private:
  void append_sample(ElementTabulation& t, double xi, double eta, LocalBasisSample& sample) const {
    eval_reference_basis(k_, xi, eta, sample);
    for (int i = 0; i < n_local_; ++i) {
      t.value.push_back(sample.value[i]);
      Mat2 g = sample.grad_ref[i];
      g.col(0) /= mesh_.hx();
      g.col(1) /= mesh_.hy();
      t.grad.push_back(g);
    }
  }

  StructuredMesh mesh_;
  int k_;
  bool strong_wall_;
  int n_local_ = 0;
  int n_facet_dofs_ = 0;
  int n_dofs_ = 0;
  std::vector<int> dof_map_;
  std::vector<bool> constrained_;
  std::vector<int> constrained_list_;
};

inline RTSpace build_space(const StructuredMesh& mesh, int k, bool strong_wall = true) {
  return RTSpace(mesh, k, strong_wall);
}

/// Discontinuous Q_k scalars, basis P~_a(xi) P~_b(eta), local index a + (k+1) b.
class PressureSpace {
 public:
  PressureSpace(int n_elements, int k) : n_elements_(n_elements), k_(k) {
    if (k < 0 || k > kMaxDegree) throw InvalidArgument("pressure space: unsupported degree");
  }
  explicit PressureSpace(const RTSpace& space) : PressureSpace(space.mesh().n_elements(), space.degree()) {}

  int degree() const { return k_; }
  int n_elements() const { return n_elements_; }
  int n_local() const { return (k_ + 1) * (k_ + 1); }
  int n_dofs() const { return n_elements_ * n_local(); }

  double eval_local(int i, double xi, double eta) const {
    const int a = i % (k_ + 1), b = i / (k_ + 1);
    return shifted_legendre(a, xi).first * shifted_legendre(b, eta).first;
  }

 private:
  int n_elements_;
  int k_;
};

/// Coefficients of a discrete field (u_h or B_h) in a given RTSpace.
struct CoefficientVector {
  const RTSpace* space = nullptr;
  Eigen::VectorXd values;

  CoefficientVector() = default;
  explicit CoefficientVector(const RTSpace& s) : space(&s), values(Eigen::VectorXd::Zero(s.n_dofs())) {}
  CoefficientVector(const RTSpace& s, Eigen::VectorXd v) : space(&s), values(std::move(v)) {
    if (values.size() != s.n_dofs()) throw InvalidArgument("coefficient vector length does not match space");
  }

  bool all_finite() const { return values.allFinite(); }
};

/// Value, physical gradient and divergence of a field at one point.
struct FieldSample {
  Vec2 value = Vec2::Zero();
  Mat2 gradient = Mat2::Zero();  // gradient(c, d) = d u_c / d x_d
  double divergence = 0.0;
};

inline FieldSample eval_field(const RTSpace& space, const Eigen::VectorXd& coeffs, int element, std::array<double, 2> ref) {
  space.mesh().check_element(element);
  if (coeffs.size() != space.n_dofs()) throw InvalidArgument("eval_field: coefficient length mismatch");
  LocalBasisSample sample;
  eval_reference_basis(space.degree(), ref[0], ref[1], sample);
  const auto dofs = space.element_dofs(element);
  FieldSample out;
  for (int i = 0; i < space.n_local(); ++i) {
    const double c = coeffs[dofs[i]];
    out.value += c * sample.value[i];
    out.gradient += c * sample.grad_ref[i];
  }
  out.gradient.col(0) /= space.mesh().hx();
  out.gradient.col(1) /= space.mesh().hy();
  out.divergence = out.gradient.trace();
  return out;
}

inline FieldSample eval_field(const CoefficientVector& f, int element, std::array<double, 2> ref) {
  return eval_field(*f.space, f.values, element, ref);
}

/// Gathers element e's local coefficients.
inline void gather(const RTSpace& space, const Eigen::VectorXd& global, int e, Eigen::VectorXd& local) {
  const auto dofs = space.element_dofs(e);
  local.resize(space.n_local());
  for (int i = 0; i < space.n_local(); ++i) local[i] = global[dofs[i]];
}

/// Physical coordinates of reference point (xi, eta) in element e.
inline Vec2 physical_point(const StructuredMesh& mesh, int e, double xi, double eta) {
  const auto o = mesh.element_origin(e);
  return {o[0] + xi * mesh.hx(), o[1] + eta * mesh.hy()};
}

// ---------------------------------------------------------------------------
// Interpolation and norms
// ---------------------------------------------------------------------------

/// Canonical RT interpolant: facet DOFs are the Legendre moments of f.n on
/// each facet, interior DOFs match the moments of f against
/// [Q_{k-1,k}, Q_{k,k-1}].  Constrained wall DOFs are set to zero.
template <class VectorFn>
CoefficientVector interpolate(const RTSpace& space, VectorFn&& f) {
  const auto& mesh = space.mesh();
  const int k = space.degree();
  const int m = k + 1;
  const int npts = k + 5;
  CoefficientVector out(space);

  const auto rule = gauss_legendre(npts);
  for (int fid = 0; fid < mesh.n_facets(); ++fid) {
    const Facet& facet = mesh.facet(fid);
    for (int j = 0; j < m; ++j) {
      double moment = 0.0;
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const double s = rule.points[q];
        const Vec2 val = facet.axis == FacetAxis::x ? Vec2(f(facet.x, facet.y + s * mesh.hy()))
                                                    : Vec2(f(facet.x + s * mesh.hx(), facet.y));
        const double fn = facet.axis == FacetAxis::x ? val[0] : val[1];
        moment += rule.weights[q] * fn * shifted_legendre(j, s).first;
      }
      out.values[fid * m + j] = (2 * j + 1) * moment;
    }
  }

  if (k > 0) {
    // Interior test functions: x-part P~_i(xi) P~_j(eta), i < k, j <= k; y-part mirrored.
    const int n_int = 2 * k * m;
    const auto tab = space.tabulate_element(npts);
    auto test_fn = [&](int t, double xi, double eta) -> Vec2 {
      const int half = k * m;
      const int r = t % half;
      const int i = r / m, j = r % m;
      if (t < half) return {shifted_legendre(i, xi).first * shifted_legendre(j, eta).first, 0.0};
      return {0.0, shifted_legendre(j, xi).first * shifted_legendre(i, eta).first};
    };
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n_int, n_int);
    std::vector<Vec2> test_vals(tab.n_points() * n_int);
    for (std::size_t q = 0; q < tab.n_points(); ++q)
      for (int t = 0; t < n_int; ++t) test_vals[q * n_int + t] = test_fn(t, tab.ref_points[q][0], tab.ref_points[q][1]);
    for (std::size_t q = 0; q < tab.n_points(); ++q)
      for (int t = 0; t < n_int; ++t)
        for (int b = 0; b < n_int; ++b) gram(t, b) += tab.weights[q] * test_vals[q * n_int + t].dot(tab.phi(q, 4 * m + b));
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(gram);

    Eigen::VectorXd rhs(n_int), local;
    for (int e = 0; e < mesh.n_elements(); ++e) {
      gather(space, out.values, e, local);
      rhs.setZero();
      for (std::size_t q = 0; q < tab.n_points(); ++q) {
        const auto& rp = tab.ref_points[q];
        const Vec2 x = physical_point(mesh, e, rp[0], rp[1]);
        Vec2 resid = Vec2(f(x[0], x[1]));
        for (int i = 0; i < 4 * m; ++i) resid -= local[i] * tab.phi(q, i);
        for (int t = 0; t < n_int; ++t) rhs[t] += tab.weights[q] * test_vals[q * n_int + t].dot(resid);
      }
      const Eigen::VectorXd c = lu.solve(rhs);
      const auto dofs = space.element_dofs(e);
      for (int b = 0; b < n_int; ++b) out.values[dofs[4 * m + b]] = c[b];
    }
  }

  for (int d : space.constrained_dofs()) out.values[d] = 0.0;
  return out;
}

/// Number of Gauss points per axis used for error and diagnostic integrals.
inline int error_quadrature_points(int k) { return k + 4; }

/// sqrt(int |u_h - exact|^2) by element quadrature.
template <class VectorFn>
double l2_error(const RTSpace& space, const Eigen::VectorXd& coeffs, VectorFn&& exact) {
  const auto& mesh = space.mesh();
  const auto tab = space.tabulate_element(error_quadrature_points(space.degree()));
  const double jac = mesh.hx() * mesh.hy();
  double sum = 0.0;
  Eigen::VectorXd local;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    gather(space, coeffs, e, local);
    for (std::size_t q = 0; q < tab.n_points(); ++q) {
      Vec2 uh = Vec2::Zero();
      for (int i = 0; i < tab.n_local; ++i) uh += local[i] * tab.phi(q, i);
      const auto& rp = tab.ref_points[q];
      const Vec2 x = physical_point(mesh, e, rp[0], rp[1]);
      const Vec2 diff = uh - Vec2(exact(x[0], x[1]));
      sum += tab.weights[q] * jac * diff.squaredNorm();
    }
  }
  return std::sqrt(sum);
}

template <class VectorFn>
double l2_error(const CoefficientVector& field, VectorFn&& exact) {
  return l2_error(*field.space, field.values, std::forward<VectorFn>(exact));
}

// ---------------------------------------------------------------------------
// Assembly of linear operators.  Every element is congruent, so local
// matrices are computed once and scattered.
// ---------------------------------------------------------------------------

/// Number of Gauss points per axis for mass and divergence integrands.
inline int mass_quadrature_points(int k) { return k + 2; }

inline Eigen::MatrixXd local_mass_matrix(const RTSpace& space) {
  const auto tab = space.tabulate_element(mass_quadrature_points(space.degree()));
  const int n = space.n_local();
  const double jac = space.mesh().hx() * space.mesh().hy();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t q = 0; q < tab.n_points(); ++q)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) += tab.weights[q] * jac * tab.phi(q, i).dot(tab.phi(q, j));
  return m;
}

/// M_ij = (phi_j, phi_i) over the whole domain, on all DOFs (constrained included).
inline SparseMatrix assemble_mass(const RTSpace& space) {
  const Eigen::MatrixXd local = local_mass_matrix(space);
  const int n = space.n_local();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(space.mesh().n_elements()) * n * n);
  for (int e = 0; e < space.mesh().n_elements(); ++e) {
    const auto dofs = space.element_dofs(e);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (local(i, j) != 0.0) triplets.emplace_back(dofs[i], dofs[j], local(i, j));
  }
  SparseMatrix mat(space.n_dofs(), space.n_dofs());
  mat.setFromTriplets(triplets.begin(), triplets.end());
  return mat;
}

/// D_qi = (div phi_i, q) over the domain; rows are pressure DOFs.
inline SparseMatrix assemble_div(const RTSpace& space, const PressureSpace& pspace) {
  if (pspace.degree() != space.degree()) throw InvalidArgument("assemble_div: degree mismatch between RT and pressure spaces");
  if (pspace.n_elements() != space.mesh().n_elements()) throw InvalidArgument("assemble_div: element count mismatch");
  const auto tab = space.tabulate_element(mass_quadrature_points(space.degree()));
  const int n = space.n_local();
  const int np = pspace.n_local();
  const double jac = space.mesh().hx() * space.mesh().hy();
  Eigen::MatrixXd local = Eigen::MatrixXd::Zero(np, n);
  for (std::size_t q = 0; q < tab.n_points(); ++q) {
    const auto& rp = tab.ref_points[q];
    for (int a = 0; a < np; ++a) {
      const double pq = pspace.eval_local(a, rp[0], rp[1]);
      for (int i = 0; i < n; ++i) local(a, i) += tab.weights[q] * jac * tab.dphi(q, i).trace() * pq;
    }
  }
  std::vector<Eigen::Triplet<double>> triplets;
  for (int e = 0; e < space.mesh().n_elements(); ++e) {
    const auto dofs = space.element_dofs(e);
    for (int a = 0; a < np; ++a)
      for (int i = 0; i < n; ++i)
        if (std::abs(local(a, i)) > 1e-15 * jac) triplets.emplace_back(e * np + a, dofs[i], local(a, i));
  }
  SparseMatrix mat(pspace.n_dofs(), space.n_dofs());
  mat.setFromTriplets(triplets.begin(), triplets.end());
  return mat;
}

/// F_i = (f, phi_i) for a vector function f(x, y).
template <class VectorFn>
Eigen::VectorXd assemble_load(const RTSpace& space, VectorFn&& f, int points_per_axis = -1) {
  const auto& mesh = space.mesh();
  if (points_per_axis < 0) points_per_axis = space.degree() + 3;
  const auto tab = space.tabulate_element(points_per_axis);
  const double jac = mesh.hx() * mesh.hy();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(space.n_dofs());
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto dofs = space.element_dofs(e);
    for (std::size_t q = 0; q < tab.n_points(); ++q) {
      const auto& rp = tab.ref_points[q];
      const Vec2 x = physical_point(mesh, e, rp[0], rp[1]);
      const Vec2 fx = Vec2(f(x[0], x[1])) * (tab.weights[q] * jac);
      for (int i = 0; i < tab.n_local; ++i) out[dofs[i]] += fx.dot(tab.phi(q, i));
    }
  }
  return out;
}

}  // namespace dgmhd
