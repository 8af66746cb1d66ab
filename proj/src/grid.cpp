#include "emfg/grid.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace emfg {

SpaceTimeGrid::SpaceTimeGrid(int d, int Nx, int Nt, double T)
    : d_(d), Nx_(Nx), Nt_(Nt), T_(T) {
  if (d != 1 && d != 2) throw std::invalid_argument("grid: d must be 1 or 2");
  if (Nx < 8) throw std::invalid_argument("grid: Nx must be at least 8");
  if (Nt < 8) throw std::invalid_argument("grid: Nt must be at least 8");
  if (!(T > 0.0)) throw std::invalid_argument("grid: T_horizon must be positive");
  hx_ = 1.0 / Nx;
  ht_ = T / Nt;
  num_spatial_ = 1;
  for (int k = 0; k < d; ++k) num_spatial_ *= Nx;
}

std::array<int, 2> SpaceTimeGrid::spatial_of(Index node) const {
  const Index sp = node % num_spatial_;
  if (d_ == 1) return {static_cast<int>(sp), 0};
  return {static_cast<int>(sp % Nx_), static_cast<int>(sp / Nx_)};
}

Index SpaceTimeGrid::index_of(int it, const std::array<int, 2>& ix) const {
  Index sp = ix[0];
  if (d_ == 2) sp += static_cast<Index>(ix[1]) * Nx_;
  return static_cast<Index>(it) * num_spatial_ + sp;
}

Index SpaceTimeGrid::shift(Index node, int axis, int delta) const {
  const int it = time_of(node);
  auto ix = spatial_of(node);
  if (axis == d_) {
    const int jt = it + delta;
    if (jt < 0 || jt > Nt_) throw ContractViolation("time shift leaves the grid");
    return index_of(jt, ix);
  }
  int v = (ix[axis] + delta) % Nx_;
  if (v < 0) v += Nx_;
  ix[axis] = v;
  return index_of(it, ix);
}

Vec SpaceTimeGrid::x_of(Index node) const {
  const auto ix = spatial_of(node);
  Vec x(d_);
  for (int k = 0; k < d_; ++k) x(k) = ix[k] * hx_;
  return x;
}

GradientPoint gradient_at(const SpaceTimeGrid& grid, const DiscreteField& u, Index node) {
  const int d = grid.dim();
  GradientPoint gp;
  gp.x = grid.x_of(node);
  gp.z = u(node);
  gp.p = Vec(d);
  for (int a = 0; a < d; ++a)
    gp.p(a) = (u(grid.shift(node, a, +1)) - u(grid.shift(node, a, -1))) / (2.0 * grid.hx());

  // Third-order one-sided stencils on the face layers keep the recovered
  // density's error profile smooth up to the faces, which the round-trip
  // continuity diagnostic differentiates in time.
  const int it = grid.time_of(node);
  const double ht = grid.ht();
  if (it == 0) {
    gp.s = (-11.0 * u(node) + 18.0 * u(grid.shift(node, d, +1)) -
            9.0 * u(grid.shift(node, d, +2)) + 2.0 * u(grid.shift(node, d, +3))) /
           (6.0 * ht);
  } else if (it == grid.nt()) {
    gp.s = (11.0 * u(node) - 18.0 * u(grid.shift(node, d, -1)) +
            9.0 * u(grid.shift(node, d, -2)) - 2.0 * u(grid.shift(node, d, -3))) /
           (6.0 * ht);
  } else {
    gp.s = (u(grid.shift(node, d, +1)) - u(grid.shift(node, d, -1))) / (2.0 * ht);
  }
  return gp;
}

Mat hessian_at(const SpaceTimeGrid& grid, const DiscreteField& u, Index node) {
  if (grid.on_boundary(node))
    throw ContractViolation("hessian_at requires an interior (0 < t < T) node");
  const int d = grid.dim();
  Mat h(d + 1, d + 1);
  auto step = [&](int axis) { return axis == d ? grid.ht() : grid.hx(); };

  for (int a = 0; a <= d; ++a) {
    const double ha = step(a);
    h(a, a) = (u(grid.shift(node, a, +1)) - 2.0 * u(node) + u(grid.shift(node, a, -1))) /
              (ha * ha);
    for (int b = a + 1; b <= d; ++b) {
      const double hb = step(b);
      const Index pp = grid.shift(grid.shift(node, a, +1), b, +1);
      const Index pm = grid.shift(grid.shift(node, a, +1), b, -1);
      const Index mp = grid.shift(grid.shift(node, a, -1), b, +1);
      const Index mm = grid.shift(grid.shift(node, a, -1), b, -1);
      h(a, b) = h(b, a) = (u(pp) - u(pm) - u(mp) + u(mm)) / (4.0 * ha * hb);
    }
  }
  return h;
}

void write_field(const std::filesystem::path& path, const SpaceTimeGrid& grid,
                 const DiscreteField& field) {
  if (field.size() != grid.num_nodes())
    throw IoError("write_field: field length does not match the grid");
  std::ofstream out(path);
  if (!out) throw IoError("write_field: cannot open '" + path.string() + "'");
  char buf[32];
  auto put = [&](double v, char sep) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf << sep;
  };
  for (Index i = 0; i < grid.num_nodes(); ++i) {
    put(grid.t_of(i), ' ');
    const Vec x = grid.x_of(i);
    for (int k = 0; k < grid.dim(); ++k) put(x(k), ' ');
    put(field(i), '\n');
  }
  if (!out) throw IoError("write_field: write to '" + path.string() + "' failed");
}

DiscreteField read_field(const std::filesystem::path& path, const SpaceTimeGrid& grid) {
  std::ifstream in(path);
  if (!in) throw IoError("read_field: cannot open '" + path.string() + "'");
  DiscreteField field(grid.num_nodes());
  std::string line;
  Index i = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (i >= grid.num_nodes()) throw IoError("read_field: more rows than grid nodes");
    std::istringstream row(line);
    double t;
    row >> t;
    Vec x(grid.dim());
    for (int k = 0; k < grid.dim(); ++k) row >> x(k);
    double value;
    row >> value;
    if (!row) throw IoError("read_field: malformed row " + std::to_string(i));
    if (std::abs(t - grid.t_of(i)) > 1e-12 || (x - grid.x_of(i)).cwiseAbs().maxCoeff() > 1e-12)
      throw IoError("read_field: node coordinates do not match the grid at row " +
                    std::to_string(i));
    field(i) = value;
    ++i;
  }
  if (i != grid.num_nodes()) throw IoError("read_field: fewer rows than grid nodes");
  return field;
}

}  // namespace emfg
