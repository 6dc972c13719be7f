#pragma once

#include <array>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "pqobst/types.hpp"

namespace pqobst {

/// P1 simplex: an interval in 1D, a triangle in 2D.
struct Cell {
  std::array<int, 3> nodes{};
  int num_nodes = 0;
  double measure = 0.0;
  /// Gradients of the nodal hat functions restricted to this cell, one column per node.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 2, 3> hat_grads;
};

/**
 * Uniform structured simplicial mesh of an interval or a rectangle.
 *
 * Nodes are numbered lexicographically with x fastest. In 2D each grid square
 * (ix, iy) holds two triangles split along its lower-left to upper-right
 * diagonal: cell 2*(ix + nx*iy) is the lower triangle, +1 the upper one.
 * A mesh is immutable after construction.
 */
class Mesh {
 public:
  Mesh(int dim, std::vector<std::pair<double, double>> bounds, std::vector<int> resolution);

  int dim() const { return dim_; }
  double lo(int axis) const { return bounds_[axis].first; }
  double hi(int axis) const { return bounds_[axis].second; }
  int resolution(int axis) const { return resolution_[axis]; }
  double spacing(int axis) const { return (hi(axis) - lo(axis)) / resolution_[axis]; }

  int num_nodes() const { return static_cast<int>(coords_.size()); }
  int num_cells() const { return static_cast<int>(cells_.size()); }

  const Vec& node(int i) const { return coords_[i]; }
  int node_index(int ix, int iy = 0) const { return ix + (resolution_[0] + 1) * iy; }
  /// Grid indices (ix, iy) of node i; iy = 0 in 1D.
  std::array<int, 2> node_grid(int i) const;
  bool is_boundary(int i) const { return boundary_[i]; }
  const std::vector<int>& interior_nodes() const { return interior_; }
  const std::vector<int>& boundary_nodes() const { return boundary_list_; }

  const Cell& cell(int c) const { return cells_[c]; }
  /// Index of the cell in square (ix, iy); tri is 0 (lower) or 1 (upper) in 2D, ignored in 1D.
  int cell_index(int ix, int iy = 0, int tri = 0) const;
  /// Grid indices (ix, iy, tri) of cell c.
  std::array<int, 3> cell_grid(int c) const;
  Vec centroid(int c) const;

  /// Total measure of the domain.
  double measure() const;

  const std::vector<std::pair<double, double>>& bounds() const { return bounds_; }
  const std::vector<int>& resolutions() const { return resolution_; }

 private:
  int dim_;
  std::vector<std::pair<double, double>> bounds_;
  std::vector<int> resolution_;
  std::vector<Vec> coords_;
  std::vector<bool> boundary_;
  std::vector<int> interior_;
  std::vector<int> boundary_list_;
  std::vector<Cell> cells_;
};

Mesh make_mesh(int dim, std::vector<std::pair<double, double>> bounds, std::vector<int> resolution);

/// Exact gradient of the P1 interpolant on each cell.
CellField cell_gradient(const Mesh& mesh, const NodalField& u);

/// m_i = sum_T |T| <sigma_T, D phi_i|_T>, the action of -div sigma on the hat phi_i.
NodalField hat_pairing(const Mesh& mesh, const CellField& sigma);

double integrate_cells(const Mesh& mesh, const Eigen::VectorXd& values);

/// Per-cell inner products <a_T, b_T>.
Eigen::VectorXd cell_dot(const CellField& a, const CellField& b);

NodalField interpolate(const Mesh& mesh, const std::function<double(const Vec&)>& fn);

/// Nodewise max(u0, psi): a boundary datum that dominates the obstacle.
NodalField normalize_datum(const Mesh& mesh, const NodalField& u0, const NodalField& psi);

/// Integral of each hat function.
NodalField lumped_mass(const Mesh& mesh);

/// P1 stiffness matrix K_ij = int <D phi_i, D phi_j>.
Eigen::SparseMatrix<double> stiffness_matrix(const Mesh& mesh);

/// Axis-aligned sub-box of the domain, the discrete stand-in for an inner ball.
struct InnerBox {
  std::array<double, 2> lo{};
  std::array<double, 2> hi{};
};

/// Box obtained by removing `margin` (fraction of the extent) on each side of every axis.
InnerBox inner_box(const Mesh& mesh, double margin);
bool contains(const Mesh& mesh, const InnerBox& box, const Vec& x);

struct ShiftedDifference {
  std::vector<int> indices;  ///< cells or nodes the difference is evaluated on
  Eigen::MatrixXd values;    ///< one row per index; f(. + h e_axis) - f(.)
};

/// tau_{axis,h} f on the nodes (cells) of the inner box, h = steps * spacing(axis).
/// Throws InvalidArgument when a shifted node (cell) falls outside the mesh.
ShiftedDifference shifted_difference(const Mesh& mesh, const NodalField& f, int axis, int steps,
                                     const InnerBox& inner);
ShiftedDifference shifted_difference(const Mesh& mesh, const CellField& f, int axis, int steps,
                                     const InnerBox& inner);

}  // namespace pqobst
