#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dgmhd/errors.hpp"
#include "dgmhd/time_stepper.hpp"

namespace dgmhd {

/// Energies as (u_h, u_h) and (B_h, B_h), without a factor 1/2.
struct EnergyRecord {
  double t = 0.0;
  double kinetic = 0.0;
  double magnetic = 0.0;
  double total = 0.0;
};

inline EnergyRecord energies(const MHDState& state, const SparseMatrix& mass) {
  EnergyRecord r;
  r.t = state.t;
  r.kinetic = state.u.values.dot(mass * state.u.values);
  r.magnetic = state.B.values.dot(mass * state.B.values);
  r.total = r.kinetic + r.magnetic;
  return r;
}

struct DivergenceRecord {
  double u = 0.0;
  double B = 0.0;
};

/// Max of |div| over elements and Gauss points.
inline double max_divergence(const CoefficientVector& f) {
  const RTSpace& space = *f.space;
  const auto tab = space.tabulate_element(space.degree() + 2);
  double out = 0.0;
  Eigen::VectorXd local;
  for (int e = 0; e < space.mesh().n_elements(); ++e) {
    gather(space, f.values, e, local);
    for (std::size_t q = 0; q < tab.n_points(); ++q) {
      double d = 0.0;
      for (int i = 0; i < tab.n_local; ++i) d += local[i] * tab.dphi(q, i).trace();
      out = std::max(out, std::abs(d));
    }
  }
  return out;
}

inline DivergenceRecord max_divergence(const MHDState& state) { return {max_divergence(state.u), max_divergence(state.B)}; }

/// Values on a uniform nx_s by ny_s grid of cell-centred sample points.
struct SampleGrid {
  int nx = 0, ny = 0;
  double x0 = 0.0, y0 = 0.0, dx = 0.0, dy = 0.0;
  std::vector<double> values;  // row-major, x fastest; ncomp per point
  int ncomp = 1;
};

namespace detail {

template <class Fn>
SampleGrid sample_field(const RTSpace& space, int nx_s, int ny_s, int ncomp, Fn&& fn) {
  if (nx_s < 1 || ny_s < 1) throw InvalidArgument("sample counts must be at least 1");
  const auto& mesh = space.mesh();
  const auto& b = mesh.bounds();
  SampleGrid g;
  g.nx = nx_s;
  g.ny = ny_s;
  g.ncomp = ncomp;
  g.dx = (b.x1 - b.x0) / nx_s;
  g.dy = (b.y1 - b.y0) / ny_s;
  g.x0 = b.x0 + 0.5 * g.dx;
  g.y0 = b.y0 + 0.5 * g.dy;
  g.values.resize(static_cast<std::size_t>(nx_s) * ny_s * ncomp);
  for (int j = 0; j < ny_s; ++j) {
    for (int i = 0; i < nx_s; ++i) {
      const double x = g.x0 + i * g.dx, y = g.y0 + j * g.dy;
      const double fx = (x - b.x0) / mesh.hx(), fy = (y - b.y0) / mesh.hy();
      const int ei = std::min(mesh.nx() - 1, static_cast<int>(fx));
      const int ej = std::min(mesh.ny() - 1, static_cast<int>(fy));
      const int e = mesh.element_index(ei, ej);
      fn(e, std::array<double, 2>{fx - ei, fy - ej}, &g.values[(static_cast<std::size_t>(j) * nx_s + i) * ncomp]);
    }
  }
  return g;
}

}  // namespace detail

/// Broken curl dx u_2 - dy u_1 at uniform sample points.
inline SampleGrid vorticity_samples(const CoefficientVector& u, int nx_s, int ny_s) {
  return detail::sample_field(*u.space, nx_s, ny_s, 1, [&](int e, std::array<double, 2> ref, double* out) {
    const Mat2 g = eval_field(u, e, ref).gradient;
    out[0] = g(1, 0) - g(0, 1);
  });
}

inline SampleGrid vector_samples(const CoefficientVector& f, int nx_s, int ny_s) {
  return detail::sample_field(*f.space, nx_s, ny_s, 2, [&](int e, std::array<double, 2> ref, double* out) {
    const Vec2 v = eval_field(f, e, ref).value;
    out[0] = v[0];
    out[1] = v[1];
  });
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline constexpr const char* kEnergyCsvHeader = "time,kinetic,magnetic,total";

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_energy_csv(const std::filesystem::path& path, const std::vector<EnergyRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << kEnergyCsvHeader << '\n';
  for (const auto& r : records)
    out << format_double(r.t) << ',' << format_double(r.kinetic) << ',' << format_double(r.magnetic) << ','
        << format_double(r.total) << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline std::vector<EnergyRecord> read_energy_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  if (line != kEnergyCsvHeader) throw std::runtime_error("'" + path.string() + "' has an unexpected header");
  std::vector<EnergyRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    double v[4];
    for (double& x : v) {
      if (!std::getline(ss, cell, ',')) throw std::runtime_error("short row in '" + path.string() + "'");
      x = std::stod(cell);
    }
    out.push_back({v[0], v[1], v[2], v[3]});
  }
  return out;
}

/// A named scalar (ncomp 1) or vector (ncomp 2) dataset on a sample grid.
struct NamedGrid {
  std::string name;
  const SampleGrid* grid;
};

/// Legacy-VTK ASCII structured points; all grids must share one geometry.
inline void write_snapshot_vtk(const std::filesystem::path& path, const std::vector<NamedGrid>& grids, double time = 0.0) {
  if (grids.empty()) throw InvalidArgument("write_snapshot_vtk: nothing to write");
  const SampleGrid& g0 = *grids.front().grid;
  for (const auto& ng : grids)
    if (ng.grid->nx != g0.nx || ng.grid->ny != g0.ny) throw InvalidArgument("write_snapshot_vtk: grids differ in shape");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << "# vtk DataFile Version 3.0\n";
  out << "dgmhd snapshot t=" << format_double(time) << "\n";
  out << "ASCII\nDATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS " << g0.nx << ' ' << g0.ny << " 1\n";
  out << "ORIGIN " << format_double(g0.x0) << ' ' << format_double(g0.y0) << " 0\n";
  out << "SPACING " << format_double(g0.dx) << ' ' << format_double(g0.dy) << " 1\n";
  out << "POINT_DATA " << g0.nx * g0.ny << '\n';
  for (const auto& ng : grids) {
    const SampleGrid& g = *ng.grid;
    const std::size_t npts = static_cast<std::size_t>(g.nx) * g.ny;
    if (g.ncomp == 1) {
      out << "SCALARS " << ng.name << " double 1\nLOOKUP_TABLE default\n";
      for (std::size_t p = 0; p < npts; ++p) out << format_double(g.values[p]) << '\n';
    } else {
      out << "VECTORS " << ng.name << " double\n";
      for (std::size_t p = 0; p < npts; ++p)
        out << format_double(g.values[2 * p]) << ' ' << format_double(g.values[2 * p + 1]) << " 0\n";
    }
  }
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace dgmhd
