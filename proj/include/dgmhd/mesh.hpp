#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dgmhd/errors.hpp"

namespace dgmhd {

enum class AxisBC { periodic, wall };

inline const char* to_string(AxisBC bc) { return bc == AxisBC::periodic ? "periodic" : "wall"; }

/// Axis a facet is perpendicular to; the global unit normal is +x or +y.
enum class FacetAxis { x, y };

/// Local faces of a rectangle: left, right, bottom, top.
enum class LocalFace : int { left = 0, right = 1, bottom = 2, top = 3 };

struct Bounds {
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
};

/// One side of a facet: an element and which of its faces touches the facet.
struct Incidence {
  int element = -1;
  LocalFace face = LocalFace::left;

  friend bool operator==(const Incidence&, const Incidence&) = default;
};

/// Both sides of a facet.  `lower` is the element the global normal points
/// away from, `upper` the one it points into.  A wall facet has exactly one.
struct FacetNeighbors {
  std::optional<Incidence> lower;
  std::optional<Incidence> upper;
  bool wall = false;
};

struct Facet {
  FacetAxis axis;
  FacetNeighbors sides;
  // Lower-left corner of the facet in physical coordinates.
  double x, y;
};

/// Uniform nx-by-ny tensor grid on a box with per-axis periodic or wall ends.
///
/// Elements are numbered e = i + nx * j.  Facets perpendicular to x come
/// first (row by row), then those perpendicular to y.  Immutable once built.
class StructuredMesh {
 public:
  StructuredMesh(int nx, int ny, Bounds bounds, AxisBC bc_x, AxisBC bc_y)
      : nx_(nx), ny_(ny), bounds_(bounds), bc_x_(bc_x), bc_y_(bc_y) {
    if (nx < 1 || ny < 1) throw InvalidArgument("build_mesh: element counts must be positive");
    if (!(bounds.x1 > bounds.x0) || !(bounds.y1 > bounds.y0) || !std::isfinite(bounds.x1 - bounds.x0) ||
        !std::isfinite(bounds.y1 - bounds.y0))
      throw InvalidArgument("build_mesh: degenerate domain bounds");
    hx_ = (bounds.x1 - bounds.x0) / nx;
    hy_ = (bounds.y1 - bounds.y0) / ny;
    build_facets();
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  const Bounds& bounds() const { return bounds_; }
  AxisBC bc_x() const { return bc_x_; }
  AxisBC bc_y() const { return bc_y_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  double h() const { return std::max(hx_, hy_); }

  int n_elements() const { return nx_ * ny_; }
  int n_facets() const { return static_cast<int>(facets_.size()); }
  int n_x_facets() const { return n_x_facets_; }
  int n_y_facets() const { return n_facets() - n_x_facets_; }
  int n_wall_facets() const { return n_wall_; }

  int element_index(int i, int j) const { return i + nx_ * j; }
  std::array<int, 2> element_ij(int e) const { return {e % nx_, e / nx_}; }

  /// Lower-left corner of element e.
  std::array<double, 2> element_origin(int e) const {
    const auto [i, j] = element_ij(e);
    return {bounds_.x0 + i * hx_, bounds_.y0 + j * hy_};
  }

  const Facet& facet(int f) const {
    check_facet(f);
    return facets_[f];
  }
  const std::vector<Facet>& facets() const { return facets_; }

  /// Global facet id of local face `face` of element e.
  int element_facet(int e, LocalFace face) const {
    check_element(e);
    return element_facets_[4 * e + static_cast<int>(face)];
  }

  void check_element(int e) const {
    if (e < 0 || e >= n_elements()) throw InvalidArgument("element id " + std::to_string(e) + " out of range");
  }
  void check_facet(int f) const {
    if (f < 0 || f >= n_facets()) throw InvalidArgument("facet id " + std::to_string(f) + " out of range");
  }

 private:
  void build_facets() {
    element_facets_.assign(4 * n_elements(), -1);
    const bool px = bc_x_ == AxisBC::periodic;
    const bool py = bc_y_ == AxisBC::periodic;

    // Facets normal to x: column index c runs over facet positions in a row.
    const int ncols = px ? nx_ : nx_ + 1;
    for (int j = 0; j < ny_; ++j) {
      for (int c = 0; c < ncols; ++c) {
        Facet f{FacetAxis::x, {}, bounds_.x0 + c * hx_, bounds_.y0 + j * hy_};
        const int left_i = px ? (c + nx_ - 1) % nx_ : c - 1;
        const int right_i = c;
        if (left_i >= 0) f.sides.lower = Incidence{element_index(left_i, j), LocalFace::right};
        if (right_i < nx_) f.sides.upper = Incidence{element_index(right_i, j), LocalFace::left};
        f.sides.wall = !(f.sides.lower && f.sides.upper);
        add_facet(f);
      }
    }
    n_x_facets_ = static_cast<int>(facets_.size());

    const int nrows = py ? ny_ : ny_ + 1;
    for (int r = 0; r < nrows; ++r) {
      for (int i = 0; i < nx_; ++i) {
        Facet f{FacetAxis::y, {}, bounds_.x0 + i * hx_, bounds_.y0 + r * hy_};
        const int below_j = py ? (r + ny_ - 1) % ny_ : r - 1;
        const int above_j = r;
        if (below_j >= 0) f.sides.lower = Incidence{element_index(i, below_j), LocalFace::top};
        if (above_j < ny_) f.sides.upper = Incidence{element_index(i, above_j), LocalFace::bottom};
        f.sides.wall = !(f.sides.lower && f.sides.upper);
        add_facet(f);
      }
    }
  }

  void add_facet(const Facet& f) {
    const int id = static_cast<int>(facets_.size());
    facets_.push_back(f);
    if (f.sides.wall) ++n_wall_;
    for (const auto& side : {f.sides.lower, f.sides.upper})
      if (side) element_facets_[4 * side->element + static_cast<int>(side->face)] = id;
  }

  int nx_, ny_;
  Bounds bounds_;
  AxisBC bc_x_, bc_y_;
  double hx_ = 0.0, hy_ = 0.0;
  std::vector<Facet> facets_;
  std::vector<int> element_facets_;
  int n_x_facets_ = 0;
  int n_wall_ = 0;
};

inline StructuredMesh build_mesh(int nx, int ny, Bounds bounds, AxisBC bc_x, AxisBC bc_y) {
  return StructuredMesh(nx, ny, bounds, bc_x, bc_y);
}

/// Sides of facet f, lower (normal points away) first.
inline FacetNeighbors facet_neighbors(const StructuredMesh& mesh, int f) { return mesh.facet(f).sides; }

}  // namespace dgmhd
