#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "dgmhd/errors.hpp"
#include "dgmhd/parallel.hpp"
#include "dgmhd/rt_space.hpp"

namespace dgmhd {

/// Viscosity nu = 1/Re, resistivity eta, and the interior-penalty constant.
struct PhysicsParams {
  double nu = 0.0;
  double eta = 0.0;
  double alpha = 2.0;

  void validate() const {
    if (!std::isfinite(nu) || !std::isfinite(eta) || !std::isfinite(alpha))
      throw InvalidArgument("physics parameters must be finite");
    if (nu < 0.0 || eta < 0.0) throw InvalidArgument("viscosity and resistivity must be non-negative");
    if ((nu > 0.0 || eta > 0.0) && !(alpha > 0.0)) throw InvalidArgument("penalty alpha must be positive with diffusion");
  }
};

/// Dual vectors (functional coefficients) of the right-hand side.
struct ResidualPair {
  Eigen::VectorXd f_u;
  Eigen::VectorXd f_B;
};

using SourceFn = std::function<Vec2(double x, double y, double t)>;

/// Body forces for the momentum and induction equations; empty means zero.
struct Sources {
  SourceFn g_u;
  SourceFn g_B;
};

enum class ConvectiveForm { uu, bb, ub, bu };

inline const char* to_string(ConvectiveForm kind) {
  switch (kind) {
    case ConvectiveForm::uu: return "uu";
    case ConvectiveForm::bb: return "bb";
    case ConvectiveForm::ub: return "ub";
    case ConvectiveForm::bu: return "bu";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Pointwise flux rules.  `un` and `bn` are u_h.n and B_h.n with n the fixed
// global facet normal (+x or +y), which points from the lower to the upper side.
// ---------------------------------------------------------------------------

/// +1 if (u.n)(B.n) > 0, -1 otherwise.
inline double flux_s(double un, double bn) { return un * bn > 0.0 ? 1.0 : -1.0; }

/// True when the upwind (minus) side for u_h is the lower element.
///
/// With u.n = 0 both sides qualify; the tie goes to the side B_h flows into,
/// so that s_F [[.]] is still the jump taken along B_h.n.  The u-upwinded
/// facet terms vanish at such points either way.
inline bool upwind_is_lower(double un, double bn) {
  if (un > 0.0) return true;
  if (un < 0.0) return false;
  return !(bn > 0.0);
}

/// All numerical fluxes at one facet quadrature point.
struct FacetFluxes {
  double un = 0.0;
  double bn = 0.0;
  Vec2 u_minus, B_minus;  // upwinded by u.n
  Vec2 u_hat, B_hat;      // mean + s_F/2 jump of the partner field
};

inline FacetFluxes facet_fluxes(const Vec2& u_lo, const Vec2& u_up, const Vec2& B_lo, const Vec2& B_up, FacetAxis axis) {
  const int d = axis == FacetAxis::x ? 0 : 1;
  FacetFluxes fl;
  fl.un = 0.5 * (u_lo[d] + u_up[d]);
  fl.bn = 0.5 * (B_lo[d] + B_up[d]);
  const bool lower_is_minus = upwind_is_lower(fl.un, fl.bn);
  const Vec2& um = lower_is_minus ? u_lo : u_up;
  const Vec2& up = lower_is_minus ? u_up : u_lo;
  const Vec2& Bm = lower_is_minus ? B_lo : B_up;
  const Vec2& Bp = lower_is_minus ? B_up : B_lo;
  const double s = flux_s(fl.un, fl.bn);
  fl.u_minus = um;
  fl.B_minus = Bm;
  fl.u_hat = 0.5 * (u_lo + u_up) + 0.5 * s * (Bp - Bm);
  fl.B_hat = 0.5 * (B_lo + B_up) + 0.5 * s * (up - um);
  return fl;
}

inline int convective_quadrature_points(int k) { return k + 3; }

/// SIP penalty factor alpha k^2 / h_perp (k^2 -> 1 when k = 0).
inline double sip_penalty(const RTSpace& space, FacetAxis axis, double alpha) {
  const int k = space.degree();
  const double k2 = k == 0 ? 1.0 : static_cast<double>(k * k);
  const double h = axis == FacetAxis::x ? space.mesh().hx() : space.mesh().hy();
  return alpha * k2 / h;
}

namespace detail {

inline void check_same_space(const CoefficientVector& a, const CoefficientVector& b, const char* who) {
  if (a.space == nullptr || a.space != b.space) throw InvalidArgument(std::string(who) + ": fields live on different spaces");
  if (a.values.size() != a.space->n_dofs() || b.values.size() != b.space->n_dofs())
    throw InvalidArgument(std::string(who) + ": coefficient length mismatch");
}

inline std::array<double, 2> face_ref_point(LocalFace face, double s) {
  switch (face) {
    case LocalFace::left: return {0.0, s};
    case LocalFace::right: return {1.0, s};
    case LocalFace::bottom: return {s, 0.0};
    case LocalFace::top: return {s, 1.0};
  }
  return {0.0, 0.0};
}

inline double facet_length(const StructuredMesh& mesh, FacetAxis axis) { return axis == FacetAxis::x ? mesh.hy() : mesh.hx(); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Scalar form evaluation, point by point through eval_field.
// ---------------------------------------------------------------------------

/// Value of one convective form with the state (u, B) supplying the transport
/// field, the transported field, upwind sides, s_F and partner jumps:
///   uu: C_uu(u; u, test)   ub: C_ub(u; B, test)
///   bb: C_bb(B; B, test)   bu: C_bu(B; u, test)
/// Volume term -int (w (x) a) : grad(test); facet term
/// sum_T int_dT (w.n)(a_flux . test).  Wall facets contribute nothing.
inline double eval_trilinear(ConvectiveForm kind, const CoefficientVector& u, const CoefficientVector& B,
                             const CoefficientVector& test) {
  detail::check_same_space(u, B, "eval_trilinear");
  detail::check_same_space(u, test, "eval_trilinear");
  const RTSpace& space = *u.space;
  const auto& mesh = space.mesh();
  const int npts = convective_quadrature_points(space.degree());
  const auto rule = gauss_legendre(npts);
  const bool w_is_u = kind == ConvectiveForm::uu || kind == ConvectiveForm::ub;
  const bool a_is_u = kind == ConvectiveForm::uu || kind == ConvectiveForm::bu;

  double volume = 0.0;
  const double jac = mesh.hx() * mesh.hy();
  for (int e = 0; e < mesh.n_elements(); ++e) {
    for (std::size_t qy = 0; qy < rule.size(); ++qy) {
      for (std::size_t qx = 0; qx < rule.size(); ++qx) {
        const std::array<double, 2> rp{rule.points[qx], rule.points[qy]};
        const auto su = eval_field(u, e, rp);
        const auto sb = eval_field(B, e, rp);
        const auto st = eval_field(test, e, rp);
        const Vec2& w = w_is_u ? su.value : sb.value;
        const Vec2& a = a_is_u ? su.value : sb.value;
        volume -= rule.weights[qx] * rule.weights[qy] * jac * a.dot(st.gradient * w);
      }
    }
  }

  double facet_sum = 0.0;
  for (const Facet& facet : mesh.facets()) {
    if (facet.sides.wall) continue;
    const auto& lo = *facet.sides.lower;
    const auto& up = *facet.sides.upper;
    const double len = detail::facet_length(mesh, facet.axis);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto plo = detail::face_ref_point(lo.face, rule.points[q]);
      const auto pup = detail::face_ref_point(up.face, rule.points[q]);
      const auto fl = facet_fluxes(eval_field(u, lo.element, plo).value, eval_field(u, up.element, pup).value,
                                   eval_field(B, lo.element, plo).value, eval_field(B, up.element, pup).value, facet.axis);
      const Vec2 jump_test = eval_field(test, lo.element, plo).value - eval_field(test, up.element, pup).value;
      double wn = 0.0;
      Vec2 flux;
      switch (kind) {
        case ConvectiveForm::uu: wn = fl.un; flux = fl.u_minus; break;
        case ConvectiveForm::ub: wn = fl.un; flux = fl.B_minus; break;
        case ConvectiveForm::bb: wn = fl.bn; flux = fl.B_hat; break;
        case ConvectiveForm::bu: wn = fl.bn; flux = fl.u_hat; break;
      }
      facet_sum += rule.weights[q] * len * wn * flux.dot(jump_test);
    }
  }
  return volume + facet_sum;
}

/// Symmetric interior penalty form
///   sum_T int grad a : grad b - sum_F int {grad a}:[b (x) n] - sum_F int {grad b}:[a (x) n]
///   + sum_F int (alpha k^2/h) [a (x) n]:[b (x) n]
/// over interior and periodic facets; wall facets carry no terms.
inline double eval_diffusion(const CoefficientVector& a, const CoefficientVector& b, double alpha) {
  detail::check_same_space(a, b, "eval_diffusion");
  if (!(alpha > 0.0)) throw InvalidArgument("eval_diffusion: alpha must be positive");
  const RTSpace& space = *a.space;
  const auto& mesh = space.mesh();
  const auto rule = gauss_legendre(convective_quadrature_points(space.degree()));
  const double jac = mesh.hx() * mesh.hy();

  double total = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    for (std::size_t qy = 0; qy < rule.size(); ++qy) {
      for (std::size_t qx = 0; qx < rule.size(); ++qx) {
        const std::array<double, 2> rp{rule.points[qx], rule.points[qy]};
        const Mat2 ga = eval_field(a, e, rp).gradient;
        const Mat2 gb = eval_field(b, e, rp).gradient;
        total += rule.weights[qx] * rule.weights[qy] * jac * (ga.array() * gb.array()).sum();
      }
    }
  }
  for (const Facet& facet : mesh.facets()) {
    if (facet.sides.wall) continue;
    const auto& lo = *facet.sides.lower;
    const auto& up = *facet.sides.upper;
    const Vec2 n = facet.axis == FacetAxis::x ? Vec2(1.0, 0.0) : Vec2(0.0, 1.0);
    const double len = detail::facet_length(mesh, facet.axis);
    const double sigma = sip_penalty(space, facet.axis, alpha);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto plo = detail::face_ref_point(lo.face, rule.points[q]);
      const auto pup = detail::face_ref_point(up.face, rule.points[q]);
      const auto alo = eval_field(a, lo.element, plo), aup = eval_field(a, up.element, pup);
      const auto blo = eval_field(b, lo.element, plo), bup = eval_field(b, up.element, pup);
      // [v (x) n] = (v_lo - v_up) (x) n, so {G}:[v (x) n] = ({G} n).(v_lo - v_up)
      const Vec2 ja = alo.value - aup.value;
      const Vec2 jb = blo.value - bup.value;
      const Vec2 mean_ga_n = 0.5 * (alo.gradient + aup.gradient) * n;
      const Vec2 mean_gb_n = 0.5 * (blo.gradient + bup.gradient) * n;
      total += rule.weights[q] * len * (-mean_ga_n.dot(jb) - mean_gb_n.dot(ja) + sigma * ja.dot(jb));
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Dual-vector assembly.
// ---------------------------------------------------------------------------

/// SIP matrix A with A(i, j) = A_d(phi_j, phi_i), assembled from one local
/// element matrix and one local facet matrix per facet orientation.
inline SparseMatrix assemble_diffusion(const RTSpace& space, double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgument("assemble_diffusion: alpha must be positive");
  const auto& mesh = space.mesh();
  const int n = space.n_local();
  const int npts = convective_quadrature_points(space.degree());
  const double jac = mesh.hx() * mesh.hy();

  const auto tab = space.tabulate_element(npts);
  Eigen::MatrixXd stiff = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t q = 0; q < tab.n_points(); ++q)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        stiff(i, j) += tab.weights[q] * jac * (tab.dphi(q, i).array() * tab.dphi(q, j).array()).sum();

  // Local 2n x 2n facet matrices; first block the lower side, second the upper.
  auto facet_matrix = [&](FacetAxis axis) {
    const LocalFace lo_face = axis == FacetAxis::x ? LocalFace::right : LocalFace::top;
    const LocalFace up_face = axis == FacetAxis::x ? LocalFace::left : LocalFace::bottom;
    const auto tlo = space.tabulate_face(lo_face, npts);
    const auto tup = space.tabulate_face(up_face, npts);
    const Vec2 nrm = axis == FacetAxis::x ? Vec2(1.0, 0.0) : Vec2(0.0, 1.0);
    const double len = detail::facet_length(mesh, axis);
    const double sigma = sip_penalty(space, axis, alpha);
    Eigen::MatrixXd fm = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    std::vector<Vec2> jump(2 * n), mean_gn(2 * n);
    for (std::size_t q = 0; q < tlo.n_points(); ++q) {
      for (int i = 0; i < n; ++i) {
        jump[i] = tlo.phi(q, i);
        jump[n + i] = -tup.phi(q, i);
        mean_gn[i] = 0.5 * tlo.dphi(q, i) * nrm;
        mean_gn[n + i] = 0.5 * tup.dphi(q, i) * nrm;
      }
      const double w = tlo.weights[q] * len;
      for (int I = 0; I < 2 * n; ++I)
        for (int J = 0; J < 2 * n; ++J)
          fm(I, J) += w * (-mean_gn[J].dot(jump[I]) - mean_gn[I].dot(jump[J]) + sigma * jump[I].dot(jump[J]));
    }
    return fm;
  };
  const Eigen::MatrixXd fx = facet_matrix(FacetAxis::x);
  const Eigen::MatrixXd fy = facet_matrix(FacetAxis::y);

  std::vector<Eigen::Triplet<double>> triplets;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto dofs = space.element_dofs(e);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (stiff(i, j) != 0.0) triplets.emplace_back(dofs[i], dofs[j], stiff(i, j));
  }
  std::vector<int> pair(2 * n);
  for (const Facet& facet : mesh.facets()) {
    if (facet.sides.wall) continue;
    const auto dlo = space.element_dofs(facet.sides.lower->element);
    const auto dup = space.element_dofs(facet.sides.upper->element);
    for (int i = 0; i < n; ++i) {
      pair[i] = dlo[i];
      pair[n + i] = dup[i];
    }
    const Eigen::MatrixXd& fm = facet.axis == FacetAxis::x ? fx : fy;
    for (int I = 0; I < 2 * n; ++I)
      for (int J = 0; J < 2 * n; ++J)
        if (fm(I, J) != 0.0) triplets.emplace_back(pair[I], pair[J], fm(I, J));
  }
  SparseMatrix mat(space.n_dofs(), space.n_dofs());
  mat.setFromTriplets(triplets.begin(), triplets.end());
  return mat;
}

/// Assembles the convective part of the right-hand side,
///   f_u(v)   = -C_uu(u; u, v)   + C_bb(B; B, v)
///   f_B(phi) = -C_ub(u; B, phi) + C_bu(B; u, phi),
/// by looping over elements and facets with per-thread accumulation buffers.
class ConvectionAssembler {
 public:
  explicit ConvectionAssembler(const RTSpace& space, int n_threads = 1) : space_(&space), n_threads_(std::max(1, n_threads)) {
    const int npts = convective_quadrature_points(space.degree());
    elem_ = space.tabulate_element(npts);
    for (int f = 0; f < 4; ++f) face_[f] = space.tabulate_face(static_cast<LocalFace>(f), npts);
  }

  const RTSpace& space() const { return *space_; }

  /// Adds the convective residuals of state (u, B) into f_u, f_B.
  void add(const Eigen::VectorXd& u, const Eigen::VectorXd& B, Eigen::VectorXd& f_u, Eigen::VectorXd& f_B) const {
    const auto& mesh = space_->mesh();
    const int nthreads = n_threads_;
    std::vector<Eigen::VectorXd> bu(nthreads, Eigen::VectorXd::Zero(space_->n_dofs()));
    std::vector<Eigen::VectorXd> bb(nthreads, Eigen::VectorXd::Zero(space_->n_dofs()));

    parallel_chunks(mesh.n_elements(), nthreads, [&](int c, int begin, int end) {
      element_range(u, B, begin, end, bu[c], bb[c]);
    });
    for (int c = 0; c < nthreads; ++c) {
      f_u += bu[c];
      f_B += bb[c];
      bu[c].setZero();
      bb[c].setZero();
    }
    parallel_chunks(mesh.n_facets(), nthreads, [&](int c, int begin, int end) {
      facet_range(u, B, begin, end, bu[c], bb[c]);
    });
    for (int c = 0; c < nthreads; ++c) {
      f_u += bu[c];
      f_B += bb[c];
    }
  }

 private:
  void element_range(const Eigen::VectorXd& u, const Eigen::VectorXd& B, int begin, int end, Eigen::VectorXd& fu,
                     Eigen::VectorXd& fb) const {
    const auto& mesh = space_->mesh();
    const int n = space_->n_local();
    const double jac = mesh.hx() * mesh.hy();
    Eigen::VectorXd ul, bl;
    for (int e = begin; e < end; ++e) {
      gather(*space_, u, e, ul);
      gather(*space_, B, e, bl);
      const auto dofs = space_->element_dofs(e);
      for (std::size_t q = 0; q < elem_.n_points(); ++q) {
        Vec2 uq = Vec2::Zero(), bq = Vec2::Zero();
        for (int i = 0; i < n; ++i) {
          uq += ul[i] * elem_.phi(q, i);
          bq += bl[i] * elem_.phi(q, i);
        }
        const double w = elem_.weights[q] * jac;
        for (int i = 0; i < n; ++i) {
          const Mat2& g = elem_.dphi(q, i);
          const Vec2 gu = g * uq;  // (u . grad) phi_i
          const Vec2 gb = g * bq;  // (B . grad) phi_i
          fu[dofs[i]] += w * (uq.dot(gu) - bq.dot(gb));
          fb[dofs[i]] += w * (bq.dot(gu) - uq.dot(gb));
        }
      }
    }
  }

  void facet_range(const Eigen::VectorXd& u, const Eigen::VectorXd& B, int begin, int end, Eigen::VectorXd& fu,
                   Eigen::VectorXd& fb) const {
    const auto& mesh = space_->mesh();
    const int n = space_->n_local();
    Eigen::VectorXd ulo, uup, blo, bup;
    for (int fid = begin; fid < end; ++fid) {
      const Facet& facet = mesh.facet(fid);
      if (facet.sides.wall) continue;
      const auto& lo = *facet.sides.lower;
      const auto& up = *facet.sides.upper;
      const auto& tlo = face_[static_cast<int>(lo.face)];
      const auto& tup = face_[static_cast<int>(up.face)];
      gather(*space_, u, lo.element, ulo);
      gather(*space_, u, up.element, uup);
      gather(*space_, B, lo.element, blo);
      gather(*space_, B, up.element, bup);
      const auto dlo = space_->element_dofs(lo.element);
      const auto dup = space_->element_dofs(up.element);
      const double len = detail::facet_length(mesh, facet.axis);
      for (std::size_t q = 0; q < tlo.n_points(); ++q) {
        Vec2 u_l = Vec2::Zero(), u_r = Vec2::Zero(), b_l = Vec2::Zero(), b_r = Vec2::Zero();
        for (int i = 0; i < n; ++i) {
          u_l += ulo[i] * tlo.phi(q, i);
          b_l += blo[i] * tlo.phi(q, i);
          u_r += uup[i] * tup.phi(q, i);
          b_r += bup[i] * tup.phi(q, i);
        }
        const auto fl = facet_fluxes(u_l, u_r, b_l, b_r, facet.axis);
        const double w = tlo.weights[q] * len;
        const Vec2 flux_u = w * (-fl.un * fl.u_minus + fl.bn * fl.B_hat);
        const Vec2 flux_b = w * (-fl.un * fl.B_minus + fl.bn * fl.u_hat);
        for (int i = 0; i < n; ++i) {
          fu[dlo[i]] += flux_u.dot(tlo.phi(q, i));
          fb[dlo[i]] += flux_b.dot(tlo.phi(q, i));
          fu[dup[i]] -= flux_u.dot(tup.phi(q, i));
          fb[dup[i]] -= flux_b.dot(tup.phi(q, i));
        }
      }
    }
  }

  const RTSpace* space_;
  int n_threads_;
  ElementTabulation elem_;
  std::array<FaceTabulation, 4> face_;
};

/// Cached right-hand-side operator L(U) of M dU/dt = L(U):
///   f_u = -C_uu(u;u,.) + C_bb(B;B,.) - nu A_d(u,.) + (g_u(t), .)
///   f_B = -C_ub(u;B,.) + C_bu(B;u,.) - eta A_d(B,.) + (g_B(t), .)
class SpatialOperator {
 public:
  SpatialOperator(const RTSpace& space, PhysicsParams params, Sources sources = {}, int n_threads = 1)
      : space_(&space), params_(params), sources_(std::move(sources)), convection_(space, n_threads) {
    params_.validate();
    if (params_.nu > 0.0 || params_.eta > 0.0) diffusion_ = assemble_diffusion(space, params_.alpha);
  }

  const RTSpace& space() const { return *space_; }
  const PhysicsParams& params() const { return params_; }
  const Sources& sources() const { return sources_; }

  ResidualPair operator()(const Eigen::VectorXd& u, const Eigen::VectorXd& B, double t) const {
    if (u.size() != space_->n_dofs() || B.size() != space_->n_dofs())
      throw InvalidArgument("assemble_residuals: coefficient length mismatch");
    if (!u.allFinite() || !B.allFinite()) throw InvalidState("assemble_residuals: non-finite coefficients");
    ResidualPair r{Eigen::VectorXd::Zero(space_->n_dofs()), Eigen::VectorXd::Zero(space_->n_dofs())};
    convection_.add(u, B, r.f_u, r.f_B);
    if (params_.nu > 0.0) r.f_u -= params_.nu * (diffusion_ * u);
    if (params_.eta > 0.0) r.f_B -= params_.eta * (diffusion_ * B);
    if (sources_.g_u) r.f_u += assemble_load(*space_, [&](double x, double y) { return sources_.g_u(x, y, t); });
    if (sources_.g_B) r.f_B += assemble_load(*space_, [&](double x, double y) { return sources_.g_B(x, y, t); });
    // Constrained wall DOFs never enter the projection; keep them clean.
    for (int d : space_->constrained_dofs()) {
      r.f_u[d] = 0.0;
      r.f_B[d] = 0.0;
    }
    return r;
  }

 private:
  const RTSpace* space_;
  PhysicsParams params_;
  Sources sources_;
  ConvectionAssembler convection_;
  SparseMatrix diffusion_;
};

/// One-shot residual assembly (builds the operator each call).
inline ResidualPair assemble_residuals(const CoefficientVector& u, const CoefficientVector& B, const PhysicsParams& params,
                                       const Sources& sources, double t) {
  detail::check_same_space(u, B, "assemble_residuals");
  const SpatialOperator op(*u.space, params, sources);
  return op(u.values, B.values, t);
}

}  // namespace dgmhd
