#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <atomic>
#include <memory>
#include <string>
#include <vector>

#include "dgmhd/errors.hpp"
#include "dgmhd/rt_space.hpp"

namespace dgmhd {

/// Output of one projection: the divergence-free field and the multiplier
/// (pressure-like, gauge fixed by its first DOF being zero).
struct Projection {
  CoefficientVector u;
  Eigen::VectorXd p;
};

/// Prefactored solver for the discrete divergence-free L2 projection
///
///   [ M  D^T ] [u]   [F]
///   [ D   0  ] [p] = [0],
///
/// i.e. (u, v) = F(v) for every divergence-free v.  Constrained wall DOFs
/// are removed from the system and the first pressure DOF is pinned to zero
/// to remove the constant null space.  Factorized once; `project` is const.
class ProjectionSolver {
 public:
  ProjectionSolver(const RTSpace& space, const PressureSpace& pspace, double tolerance = 1e-10)
      : space_(&space), pspace_(pspace), tolerance_(tolerance) {
    if (pspace.degree() != space.degree() || pspace.n_elements() != space.mesh().n_elements())
      throw InvalidArgument("build_solver: pressure space does not match RT space");
    mass_ = assemble_mass(space);
    div_ = assemble_div(space, pspace);

    free_index_.assign(space.n_dofs(), -1);
    for (int d = 0; d < space.n_dofs(); ++d)
      if (!space.is_constrained(d)) {
        free_index_[d] = static_cast<int>(free_dofs_.size());
        free_dofs_.push_back(d);
      }
    n_free_ = static_cast<int>(free_dofs_.size());
    n_pressure_ = pspace.n_dofs() - 1;  // DOF 0 pinned

    std::vector<Eigen::Triplet<double>> triplets;
    for (int col = 0; col < mass_.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(mass_, col); it; ++it) {
        const int r = free_index_[it.row()], c = free_index_[it.col()];
        if (r >= 0 && c >= 0) triplets.emplace_back(r, c, it.value());
      }
    for (int col = 0; col < div_.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(div_, col); it; ++it) {
        const int prow = static_cast<int>(it.row()) - 1;
        const int c = free_index_[it.col()];
        if (prow < 0 || c < 0) continue;
        triplets.emplace_back(n_free_ + prow, c, it.value());
        triplets.emplace_back(c, n_free_ + prow, it.value());
      }
    saddle_.resize(n_free_ + n_pressure_, n_free_ + n_pressure_);
    saddle_.setFromTriplets(triplets.begin(), triplets.end());
    saddle_.makeCompressed();

    lu_ = std::make_unique<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>>();
    lu_->analyzePattern(saddle_);
    lu_->factorize(saddle_);
    if (lu_->info() != Eigen::Success)
      throw SetupError("build_solver: saddle-point factorization failed (pressure gauge: first DOF pinned to zero): " +
                       lu_->lastErrorMessage());
  }

  const RTSpace& space() const { return *space_; }
  const PressureSpace& pressure_space() const { return pspace_; }
  const SparseMatrix& mass() const { return mass_; }
  const SparseMatrix& divergence() const { return div_; }
  double tolerance() const { return tolerance_; }

  /// Unknowns in the factorized system: free RT DOFs plus unpinned pressure DOFs.
  int system_size() const { return n_free_ + n_pressure_; }
  int n_free_dofs() const { return n_free_; }
  int pinned_pressure_dof() const { return 0; }

  /// Number of projections performed so far (all threads).
  long long projection_count() const { return count_.load(); }
  void reset_projection_count() { count_.store(0); }

  Projection project(const Eigen::VectorXd& F) const {
    if (F.size() != space_->n_dofs()) throw InvalidArgument("project: dual vector length mismatch");
    if (!F.allFinite()) throw InvalidArgument("project: non-finite right-hand side");
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(system_size());
    for (int i = 0; i < n_free_; ++i) rhs[i] = F[free_dofs_[i]];
    const Eigen::VectorXd x = lu_->solve(rhs);
    ++count_;

    Projection out{CoefficientVector(*space_), Eigen::VectorXd::Zero(pspace_.n_dofs())};
    for (int i = 0; i < n_free_; ++i) out.u.values[free_dofs_[i]] = x[i];
    out.p.tail(n_pressure_) = x.tail(n_pressure_);
    return out;
  }

  /// L2 projection of an analytic field onto the divergence-free subspace.
  template <class VectorFn>
  CoefficientVector project_function(VectorFn&& f) const {
    return project(assemble_load(*space_, std::forward<VectorFn>(f))).u;
  }

  /// Relative saddle residuals: ||M u + D^T p - F|| / ||F|| on free DOFs, and
  /// ||D u|| / (||D||_inf ||u||).  Both are 0 for F = 0.
  std::pair<double, double> relative_residuals(const Projection& sol, const Eigen::VectorXd& F) const {
    Eigen::VectorXd r = mass_ * sol.u.values + div_.transpose() * sol.p - F;
    for (int d : space_->constrained_dofs()) r[d] = 0.0;
    const double fnorm = free_norm(F);
    const double rel_r = fnorm > 0.0 ? r.norm() / fnorm : r.norm();
    const double dnorm = div_norm_inf() * sol.u.values.norm();
    const double du = (div_ * sol.u.values).norm();
    return {rel_r, dnorm > 0.0 ? du / dnorm : du};
  }

 private:
  double div_norm_inf() const {
    Eigen::VectorXd rows = Eigen::VectorXd::Zero(div_.rows());
    for (int col = 0; col < div_.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(div_, col); it; ++it) rows[it.row()] += std::abs(it.value());
    return rows.maxCoeff();
  }

  double free_norm(const Eigen::VectorXd& v) const {
    double s = 0.0;
    for (int d : free_dofs_) s += v[d] * v[d];
    return std::sqrt(s);
  }

  const RTSpace* space_;
  PressureSpace pspace_;
  double tolerance_;
  SparseMatrix mass_, div_, saddle_;
  std::vector<int> free_index_, free_dofs_;
  int n_free_ = 0, n_pressure_ = 0;
  std::unique_ptr<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>> lu_;
  mutable std::atomic<long long> count_{0};
};

}  // namespace dgmhd
