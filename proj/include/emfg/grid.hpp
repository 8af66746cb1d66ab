#pragma once

#include <array>
#include <filesystem>

#include "emfg/errors.hpp"
#include "emfg/reform.hpp"
#include "emfg/types.hpp"

namespace emfg {

/// Periodic spatial grid times the interval [0, T]. Nodes are indexed
/// lexicographically, time-major, with x_1 fastest; spatial indices wrap.
class SpaceTimeGrid {
public:
  /// Throws std::invalid_argument unless d in {1,2}, Nx >= 8, Nt >= 8, T > 0.
  SpaceTimeGrid(int d, int Nx, int Nt, double T);

  int dim() const { return d_; }
  int nx() const { return Nx_; }
  int nt() const { return Nt_; }
  double horizon() const { return T_; }
  double hx() const { return hx_; }
  double ht() const { return ht_; }

  Index num_spatial() const { return num_spatial_; }
  Index num_nodes() const { return num_spatial_ * (Nt_ + 1); }

  int time_of(Index node) const { return static_cast<int>(node / num_spatial_); }
  std::array<int, 2> spatial_of(Index node) const;
  Index index_of(int it, const std::array<int, 2>& ix) const;

  /// Neighbor along an axis (axes 0..d-1 spatial with wrap, axis d time,
  /// no wrap); time offsets must stay inside [0, Nt].
  Index shift(Index node, int axis, int delta) const;

  double t_of(Index node) const { return time_of(node) * ht_; }
  Vec x_of(Index node) const;

  bool on_initial_face(Index node) const { return time_of(node) == 0; }
  bool on_terminal_face(Index node) const { return time_of(node) == Nt_; }
  bool on_boundary(Index node) const {
    return on_initial_face(node) || on_terminal_face(node);
  }

private:
  int d_, Nx_, Nt_;
  double T_, hx_, ht_;
  Index num_spatial_;
};

/// Space-time gradient at a node: spatial derivatives by centered second
/// order differences with periodic wrap; the time derivative is centered in
/// the interior and one-sided second order (3-point) on the t = 0 and t = T
/// layers. Also fills x and z for convenience.
GradientPoint gradient_at(const SpaceTimeGrid& grid, const DiscreteField& u, Index node);

/// Space-time Hessian at an interior node; exact on quadratics. Throws
/// ContractViolation on a boundary-layer node.
Mat hessian_at(const SpaceTimeGrid& grid, const DiscreteField& u, Index node);

/// Columnar text serialization: one row per node with columns
/// (t, x_1..x_d, value), 17 significant digits, node-index order.
void write_field(const std::filesystem::path& path, const SpaceTimeGrid& grid,
                 const DiscreteField& field);

/// Reads a field written by write_field; throws IoError when the file does
/// not match the grid.
DiscreteField read_field(const std::filesystem::path& path, const SpaceTimeGrid& grid);

}  // namespace emfg
