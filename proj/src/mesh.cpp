#include "pqobst/mesh.hpp"

#include <cmath>
#include <string>

#include "pqobst/errors.hpp"

namespace pqobst {

Mesh::Mesh(int dim, std::vector<std::pair<double, double>> bounds, std::vector<int> resolution)
    : dim_(dim), bounds_(std::move(bounds)), resolution_(std::move(resolution)) {
  if (dim_ != 1 && dim_ != 2) throw InvalidArgument("mesh: dim must be 1 or 2");
  if (static_cast<int>(bounds_.size()) != dim_ || static_cast<int>(resolution_.size()) != dim_) {
    throw InvalidArgument("mesh: need one (lo, hi) pair and one resolution per axis");
  }
  for (int a = 0; a < dim_; ++a) {
    if (!std::isfinite(lo(a)) || !std::isfinite(hi(a)) || !(hi(a) > lo(a))) {
      throw InvalidArgument("mesh: degenerate bounds on axis " + std::to_string(a));
    }
    if (resolution_[a] < 2) throw InvalidArgument("mesh: resolution must be >= 2 per axis");
  }

  const int nx = resolution_[0];
  const int ny = dim_ == 2 ? resolution_[1] : 0;
  const double hx = spacing(0);
  const double hy = dim_ == 2 ? spacing(1) : 0.0;

  for (int iy = 0; iy <= ny; ++iy) {
    for (int ix = 0; ix <= nx; ++ix) {
      Vec x(dim_);
      x(0) = ix == nx ? hi(0) : lo(0) + ix * hx;
      if (dim_ == 2) x(1) = iy == ny ? hi(1) : lo(1) + iy * hy;
      const bool on_boundary = ix == 0 || ix == nx || (dim_ == 2 && (iy == 0 || iy == ny));
      coords_.push_back(x);
      boundary_.push_back(on_boundary);
      (on_boundary ? boundary_list_ : interior_).push_back(num_nodes() - 1);
    }
  }

  if (dim_ == 1) {
    cells_.reserve(nx);
    for (int ix = 0; ix < nx; ++ix) {
      Cell c;
      c.num_nodes = 2;
      c.nodes = {ix, ix + 1, -1};
      c.measure = node(ix + 1)(0) - node(ix)(0);
      c.hat_grads.resize(1, 2);
      c.hat_grads << -1.0 / c.measure, 1.0 / c.measure;
      cells_.push_back(c);
    }
    return;
  }

  cells_.reserve(2 * static_cast<std::size_t>(nx) * ny);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const int v00 = node_index(ix, iy);
      const int v10 = node_index(ix + 1, iy);
      const int v11 = node_index(ix + 1, iy + 1);
      const int v01 = node_index(ix, iy + 1);
      const double dx = node(v10)(0) - node(v00)(0);
      const double dy = node(v01)(1) - node(v00)(1);

      Cell lower;
      lower.num_nodes = 3;
      lower.nodes = {v00, v10, v11};
      lower.measure = 0.5 * dx * dy;
      lower.hat_grads.resize(2, 3);
      lower.hat_grads << -1.0 / dx, 1.0 / dx, 0.0,
                          0.0, -1.0 / dy, 1.0 / dy;
      cells_.push_back(lower);

      Cell upper;
      upper.num_nodes = 3;
      upper.nodes = {v00, v11, v01};
      upper.measure = 0.5 * dx * dy;
      upper.hat_grads.resize(2, 3);
      upper.hat_grads << 0.0, 1.0 / dx, -1.0 / dx,
                         -1.0 / dy, 0.0, 1.0 / dy;
      cells_.push_back(upper);
    }
  }
}

std::array<int, 2> Mesh::node_grid(int i) const {
  const int stride = resolution_[0] + 1;
  return {i % stride, i / stride};
}

int Mesh::cell_index(int ix, int iy, int tri) const {
  if (dim_ == 1) return ix;
  return 2 * (ix + resolution_[0] * iy) + tri;
}

std::array<int, 3> Mesh::cell_grid(int c) const {
  if (dim_ == 1) return {c, 0, 0};
  const int square = c / 2;
  return {square % resolution_[0], square / resolution_[0], c % 2};
}

Vec Mesh::centroid(int c) const {
  const Cell& cell = cells_[c];
  Vec x = Vec::Zero(dim_);
  for (int k = 0; k < cell.num_nodes; ++k) x += coords_[cell.nodes[k]];
  return Vec(x / cell.num_nodes);
}

double Mesh::measure() const {
  double m = 1.0;
  for (int a = 0; a < dim_; ++a) m *= hi(a) - lo(a);
  return m;
}

Mesh make_mesh(int dim, std::vector<std::pair<double, double>> bounds, std::vector<int> resolution) {
  return Mesh(dim, std::move(bounds), std::move(resolution));
}

namespace {

void check_nodal(const Mesh& mesh, const NodalField& u, const char* what) {
  if (u.size() != mesh.num_nodes()) {
    throw InvalidArgument(std::string(what) + ": nodal field size does not match the mesh");
  }
}

void check_cells(const Mesh& mesh, const CellField& s, const char* what) {
  if (s.rows() != mesh.num_cells() || s.cols() != mesh.dim()) {
    throw InvalidArgument(std::string(what) + ": cell field shape does not match the mesh");
  }
}

}  // namespace

CellField cell_gradient(const Mesh& mesh, const NodalField& u) {
  check_nodal(mesh, u, "cell_gradient");
  CellField g(mesh.num_cells(), mesh.dim());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const Cell& cell = mesh.cell(c);
    for (int a = 0; a < mesh.dim(); ++a) {
      double s = 0.0;
      for (int k = 0; k < cell.num_nodes; ++k) s += cell.hat_grads(a, k) * u(cell.nodes[k]);
      g(c, a) = s;
    }
  }
  return g;
}

NodalField hat_pairing(const Mesh& mesh, const CellField& sigma) {
  check_cells(mesh, sigma, "hat_pairing");
  NodalField m = NodalField::Zero(mesh.num_nodes());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const Cell& cell = mesh.cell(c);
    for (int k = 0; k < cell.num_nodes; ++k) {
      double s = 0.0;
      for (int a = 0; a < mesh.dim(); ++a) s += sigma(c, a) * cell.hat_grads(a, k);
      m(cell.nodes[k]) += cell.measure * s;
    }
  }
  return m;
}

double integrate_cells(const Mesh& mesh, const Eigen::VectorXd& values) {
  if (values.size() != mesh.num_cells()) {
    throw InvalidArgument("integrate_cells: one value per cell expected");
  }
  double total = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) total += mesh.cell(c).measure * values(c);
  return total;
}

Eigen::VectorXd cell_dot(const CellField& a, const CellField& b) {
  return a.cwiseProduct(b).rowwise().sum();
}

NodalField interpolate(const Mesh& mesh, const std::function<double(const Vec&)>& fn) {
  NodalField u(mesh.num_nodes());
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    u(i) = fn(mesh.node(i));
    if (!std::isfinite(u(i))) throw InvalidArgument("interpolate: non-finite sample at node " + std::to_string(i));
  }
  return u;
}

NodalField normalize_datum(const Mesh& mesh, const NodalField& u0, const NodalField& psi) {
  if (u0.size() != mesh.num_nodes() || psi.size() != mesh.num_nodes()) {
    throw InvalidArgument("normalize_datum: fields are not on this mesh");
  }
  return u0.cwiseMax(psi);
}

NodalField lumped_mass(const Mesh& mesh) {
  NodalField w = NodalField::Zero(mesh.num_nodes());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const Cell& cell = mesh.cell(c);
    for (int k = 0; k < cell.num_nodes; ++k) w(cell.nodes[k]) += cell.measure / cell.num_nodes;
  }
  return w;
}

Eigen::SparseMatrix<double> stiffness_matrix(const Mesh& mesh) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(mesh.num_cells()) * 9);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const Cell& cell = mesh.cell(c);
    for (int a = 0; a < cell.num_nodes; ++a) {
      for (int b = 0; b < cell.num_nodes; ++b) {
        const double k = cell.measure * cell.hat_grads.col(a).dot(cell.hat_grads.col(b));
        trip.emplace_back(cell.nodes[a], cell.nodes[b], k);
      }
    }
  }
  Eigen::SparseMatrix<double> K(mesh.num_nodes(), mesh.num_nodes());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

InnerBox inner_box(const Mesh& mesh, double margin) {
  if (!(margin >= 0.0 && margin < 0.5)) throw InvalidArgument("inner_box: margin must be in [0, 0.5)");
  InnerBox box;
  for (int a = 0; a < mesh.dim(); ++a) {
    const double ext = mesh.hi(a) - mesh.lo(a);
    box.lo[a] = mesh.lo(a) + margin * ext;
    box.hi[a] = mesh.hi(a) - margin * ext;
  }
  return box;
}

bool contains(const Mesh& mesh, const InnerBox& box, const Vec& x) {
  for (int a = 0; a < mesh.dim(); ++a) {
    const double slack = 1e-12 * (mesh.hi(a) - mesh.lo(a));
    if (x(a) < box.lo[a] - slack || x(a) > box.hi[a] + slack) return false;
  }
  return true;
}

ShiftedDifference shifted_difference(const Mesh& mesh, const NodalField& f, int axis, int steps,
                                     const InnerBox& inner) {
  check_nodal(mesh, f, "shifted_difference");
  if (axis < 0 || axis >= mesh.dim()) throw InvalidArgument("shifted_difference: bad axis");
  ShiftedDifference out;
  std::vector<double> vals;
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    if (!contains(mesh, inner, mesh.node(i))) continue;
    auto g = mesh.node_grid(i);
    g[axis] += steps;
    if (g[axis] < 0 || g[axis] > mesh.resolution(axis)) {
      throw InvalidArgument("shifted_difference: shift leaves the mesh");
    }
    out.indices.push_back(i);
    vals.push_back(f(mesh.node_index(g[0], g[1])) - f(i));
  }
  out.values = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  return out;
}

ShiftedDifference shifted_difference(const Mesh& mesh, const CellField& f, int axis, int steps,
                                     const InnerBox& inner) {
  check_cells(mesh, f, "shifted_difference");
  if (axis < 0 || axis >= mesh.dim()) throw InvalidArgument("shifted_difference: bad axis");
  ShiftedDifference out;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    if (contains(mesh, inner, mesh.centroid(c))) out.indices.push_back(c);
  }
  out.values.resize(static_cast<Eigen::Index>(out.indices.size()), mesh.dim());
  for (std::size_t r = 0; r < out.indices.size(); ++r) {
    const int c = out.indices[r];
    auto g = mesh.cell_grid(c);
    g[axis] += steps;
    if (g[axis] < 0 || g[axis] >= mesh.resolution(axis)) {
      throw InvalidArgument("shifted_difference: shift leaves the mesh");
    }
    const int shifted = mesh.cell_index(g[0], g[1], g[2]);
    out.values.row(static_cast<Eigen::Index>(r)) = f.row(shifted) - f.row(c);
  }
  return out;
}

}  // namespace pqobst
