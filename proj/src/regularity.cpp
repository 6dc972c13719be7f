#include "pqobst/regularity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/SparseCholesky>

#include "pqobst/errors.hpp"

namespace pqobst {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double lp_norm_cells(const Mesh& mesh, const CellField& f, double p) {
  double s = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) s += mesh.cell(c).measure * std::pow(f.row(c).norm(), p);
  return std::pow(s, 1.0 / p);
}

// Boundary nodes of a 2D structured mesh in counter-clockwise order, starting at (0, 0).
std::vector<int> boundary_loop(const Mesh& mesh) {
  const int nx = mesh.resolution(0), ny = mesh.resolution(1);
  std::vector<int> loop;
  for (int ix = 0; ix < nx; ++ix) loop.push_back(mesh.node_index(ix, 0));
  for (int iy = 0; iy < ny; ++iy) loop.push_back(mesh.node_index(nx, iy));
  for (int ix = nx; ix > 0; --ix) loop.push_back(mesh.node_index(ix, ny));
  for (int iy = ny; iy > 0; --iy) loop.push_back(mesh.node_index(0, iy));
  return loop;
}

// P1 interpolant of a coarse nodal field at the nodes of a nested fine mesh.
NodalField prolongate(const Mesh& coarse, const NodalField& uc, const Mesh& fine) {
  NodalField out(fine.num_nodes());
  for (int i = 0; i < fine.num_nodes(); ++i) {
    const Vec& x = fine.node(i);
    std::array<int, 2> cell{0, 0};
    std::array<double, 2> local{0.0, 0.0};
    for (int a = 0; a < coarse.dim(); ++a) {
      const double t = (x(a) - coarse.lo(a)) / coarse.spacing(a);
      cell[a] = std::clamp(static_cast<int>(std::floor(t)), 0, coarse.resolution(a) - 1);
      local[a] = std::clamp(t - cell[a], 0.0, 1.0);
    }
    const double s = local[0], t = local[1];
    if (coarse.dim() == 1) {
      out(i) = (1.0 - s) * uc(cell[0]) + s * uc(cell[0] + 1);
      continue;
    }
    const double u00 = uc(coarse.node_index(cell[0], cell[1]));
    const double u10 = uc(coarse.node_index(cell[0] + 1, cell[1]));
    const double u11 = uc(coarse.node_index(cell[0] + 1, cell[1] + 1));
    const double u01 = uc(coarse.node_index(cell[0], cell[1] + 1));
    out(i) = s >= t ? u00 + s * (u10 - u00) + t * (u11 - u10) : u00 + t * (u01 - u00) + s * (u11 - u01);
  }
  return out;
}

// One pass of neighbour averaging over the interior nodes.
NodalField jacobi_average(const Mesh& mesh, const NodalField& u) {
  NodalField v = u;
  for (int i : mesh.interior_nodes()) {
    const auto g = mesh.node_grid(i);
    double s = 0.0;
    for (int a = 0; a < mesh.dim(); ++a) {
      auto lo = g, hi = g;
      --lo[a];
      ++hi[a];
      s += u(mesh.node_index(lo[0], lo[1])) + u(mesh.node_index(hi[0], hi[1]));
    }
    v(i) = s / (2.0 * mesh.dim());
  }
  return v;
}

}  // namespace

NodalField harmonic_extension(const Mesh& mesh, const NodalField& boundary) {
  if (boundary.size() != mesh.num_nodes()) throw InvalidArgument("harmonic_extension: field is not on this mesh");
  for (int i : mesh.boundary_nodes()) {
    if (!std::isfinite(boundary(i))) throw InvalidArgument("harmonic_extension: non-finite boundary value");
  }
  const auto K = stiffness_matrix(mesh);
  const auto& interior = mesh.interior_nodes();
  std::vector<int> local(mesh.num_nodes(), -1);
  for (std::size_t k = 0; k < interior.size(); ++k) local[interior[k]] = static_cast<int>(k);

  NodalField g = NodalField::Zero(mesh.num_nodes());
  for (int i : mesh.boundary_nodes()) g(i) = boundary(i);
  const NodalField Kg = K * g;

  std::vector<Eigen::Triplet<double>> trip;
  for (int col = 0; col < K.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it) {
      const int r = local[it.row()], c = local[it.col()];
      if (r >= 0 && c >= 0) trip.emplace_back(r, c, it.value());
    }
  }
  const auto n = static_cast<Eigen::Index>(interior.size());
  Eigen::SparseMatrix<double> Kii(n, n);
  Kii.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXd rhs(n);
  for (Eigen::Index k = 0; k < n; ++k) rhs(k) = -Kg(interior[k]);

  NodalField out = g;
  if (n == 0) return out;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Kii);
  if (ldlt.info() != Eigen::Success) throw ConvergenceFailure("harmonic_extension: factorization failed", 0, 0);
  const Eigen::VectorXd x = ldlt.solve(rhs);
  for (Eigen::Index k = 0; k < n; ++k) out(interior[k]) = x(k);
  return out;
}

ExtensionReport extension_norm_check(const std::vector<std::pair<double, double>>& bounds,
                                     const std::vector<int>& resolutions,
                                     const std::function<double(const Vec&)>& g, double p, double q) {
  if (bounds.size() != 2) throw InvalidArgument("extension_norm_check: needs a 2D rectangle");
  if (!(p > 1.0) || !(q >= p)) throw InvalidArgument("extension_norm_check: need 1 < p <= q");
  if (q > 2.0 * p) throw InvalidArgument("extension_norm_check: q exceeds p n / (n - 1)");
  if (resolutions.size() < 2) throw InvalidArgument("extension_norm_check: need at least two refinements");

  // 5-point Gauss-Legendre on [0, 1].
  static const double gx[5] = {0.04691007703066800, 0.2307653449471585, 0.5, 0.7692346550528415,
                               0.9530899229693320};
  static const double gw[5] = {0.1184634425280945, 0.2393143352496832, 0.2844444444444444,
                               0.2393143352496832, 0.1184634425280945};
  ExtensionReport rep;
  for (int r : resolutions) {
    const Mesh mesh(2, bounds, {r, r});
    const NodalField ext = harmonic_extension(mesh, interpolate(mesh, g));
    ExtensionLevel lv;
    lv.resolution = r;
    lv.grad_Lq = lp_norm_cells(mesh, cell_gradient(mesh, ext), q);
    const auto loop = boundary_loop(mesh);
    double tan = 0.0, tr = 0.0;
    for (std::size_t k = 0; k < loop.size(); ++k) {
      const int a = loop[k], b = loop[(k + 1) % loop.size()];
      const double len = (mesh.node(b) - mesh.node(a)).norm();
      tan += len * std::pow(std::abs(ext(b) - ext(a)) / len, p);
      for (int j = 0; j < 5; ++j) tr += len * gw[j] * std::pow(std::abs((1 - gx[j]) * ext(a) + gx[j] * ext(b)), p);
    }
    lv.tangential_Lp = std::pow(tan, 1.0 / p);
    lv.trace_Lp = std::pow(tr, 1.0 / p);
    const double denom = lv.tangential_Lp * lv.trace_Lp;
    lv.ratio = denom > 0.0 ? lv.grad_Lq / denom : (lv.grad_Lq == 0.0 ? 0.0 : kInf);
    rep.levels.push_back(lv);
  }
  const double last = rep.levels.back().ratio;
  const double prev = rep.levels[rep.levels.size() - 2].ratio;
  rep.final_growth = prev > 0.0 ? last / prev - 1.0 : (last == 0.0 ? 0.0 : kInf);
  rep.bounded = std::isfinite(last) && rep.final_growth <= 0.10;
  return rep;
}

std::vector<DifferenceQuotient> difference_quotient_table(const Mesh& mesh, const NodalField& u, double p,
                                                          double inner_margin, const std::vector<int>& h_steps) {
  if (!(p > 1.0)) throw InvalidArgument("difference_quotient_table: need p > 1");
  const InnerBox box = inner_box(mesh, inner_margin);
  const CellField Du = cell_gradient(mesh, u);
  CellField V(Du.rows(), Du.cols());
  for (Eigen::Index c = 0; c < Du.rows(); ++c) V.row(c) = vp_map(p, Du.row(c).transpose()).transpose();

  std::vector<DifferenceQuotient> table;
  for (int axis = 0; axis < mesh.dim(); ++axis) {
    for (int steps : h_steps) {
      if (steps <= 0) throw InvalidArgument("difference_quotient_table: steps must be positive");
      const auto d = shifted_difference(mesh, V, axis, steps, box);
      if (d.indices.empty()) throw InvalidArgument("difference_quotient_table: inner box holds no cells");
      DifferenceQuotient row;
      row.direction = axis;
      row.steps = steps;
      row.h = steps * mesh.spacing(axis);
      for (std::size_t k = 0; k < d.indices.size(); ++k) {
        row.dq_norm += mesh.cell(d.indices[k]).measure * d.values.row(static_cast<Eigen::Index>(k)).squaredNorm();
      }
      table.push_back(row);
    }
  }
  return table;
}

BesovFit besov_fit(const std::vector<double>& h, const std::vector<double>& dq) {
  if (h.size() != dq.size()) throw InvalidArgument("besov_fit: h and dq differ in length");
  if (h.size() < 3) throw InvalidArgument("besov_fit: need at least three step sizes");
  const auto [hmin, hmax] = std::minmax_element(h.begin(), h.end());
  if (!(*hmin > 0.0) || *hmax < 4.0 * *hmin) throw InvalidArgument("besov_fit: steps must span a factor of 4");

  std::vector<double> x, y;
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (dq[k] > 0.0) {
      x.push_back(std::log(h[k]));
      y.push_back(std::log(dq[k]));
    }
  }
  BesovFit fit;
  fit.points = static_cast<int>(x.size());
  if (x.empty()) {
    fit.alpha = fit.slope = kInf;
    return fit;
  }
  if (x.size() == 1) throw InvalidArgument("besov_fit: only one positive entry");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k] / n;
    my += y[k] / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.alpha = fit.slope / 2.0;
  double rss = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double e = y[k] - (fit.intercept + fit.slope * x[k]);
    rss += e * e;
  }
  fit.residual = std::sqrt(rss / n);
  return fit;
}

BesovFit besov_fit(const std::vector<DifferenceQuotient>& table) {
  std::map<double, double> by_h;
  for (const auto& row : table) {
    if (!(row.dq_norm >= 0.0)) throw InvalidArgument("besov_fit: negative table entry");
    by_h[row.h] += row.dq_norm;
  }
  std::vector<double> h, dq;
  for (const auto& [hv, v] : by_h) {
    h.push_back(hv);
    dq.push_back(v);
  }
  return besov_fit(h, dq);
}

ExponentSequence exponent_iteration(int n, double p, double q, int J) {
  if (n < 2) throw InvalidArgument("exponent_iteration: needs n >= 2");
  if (!(p > 1.0) || !(q >= p) || !(q < n * p / (n - 1.0))) {
    throw InvalidArgument("exponent_iteration: need 1 < p <= q < n p / (n - 1)");
  }
  if (J < 0) throw InvalidArgument("exponent_iteration: J must be nonnegative");
  ExponentSequence out;
  const double a = n - 1.0 - n / q;
  out.limit_finite = a > 0.0;
  out.limit = out.limit_finite ? n * (p - 1.0) / a : kInf;
  out.sequence.push_back(p);
  for (int j = 1; j <= J; ++j) {
    const double denom = n * (1.0 + 1.0 / out.sequence.back() - 1.0 / q) - 1.0;
    if (!(denom > 0.0)) break;
    const double next = n * p / denom;
    if (!std::isfinite(next)) break;
    out.sequence.push_back(next);
  }
  return out;
}

double pbar(int n, double p, double q) {
  if (n < 2) throw InvalidArgument("pbar: needs n >= 2");
  if (!(p > 1.0) || !(q >= p)) throw InvalidArgument("pbar: need 1 < p <= q");
  if (q < n * p / (n - 1.0)) throw InvalidArgument("pbar: q is below n p / (n - 1); use exponent_iteration");
  if (p < n && !(q < n * p / (n - p))) throw InvalidArgument("pbar: q must stay below the Sobolev exponent");
  const double pp = p / (p - 1.0);
  const double denom = n - pp * (1.0 - n * (1.0 / p - 1.0 / q));
  return denom > 0.0 ? n * p / denom : kInf;
}

EmbeddingReport embedding_check(const Mesh& mesh, const NodalField& u, double p, double q,
                                const std::vector<int>& h_steps, double inner_margin) {
  if (!(p > 1.0) || !(q > p)) throw InvalidArgument("embedding_check: need 1 < p < q");
  EmbeddingReport rep;
  rep.alpha = 1.0 - mesh.dim() * (1.0 / p - 1.0 / q);
  if (!(rep.alpha > 0.0) || rep.alpha > 1.0) throw InvalidArgument("embedding_check: alpha must lie in (0, 1]");
  const InnerBox box = inner_box(mesh, inner_margin);
  const NodalField w = lumped_mass(mesh);
  const double grad_p = lp_norm_cells(mesh, cell_gradient(mesh, u), p);
  rep.ok = true;
  for (int axis = 0; axis < mesh.dim(); ++axis) {
    for (int steps : h_steps) {
      if (steps <= 0) throw InvalidArgument("embedding_check: steps must be positive");
      const auto d = shifted_difference(mesh, u, axis, steps, box);
      double s = 0.0;
      for (std::size_t k = 0; k < d.indices.size(); ++k) {
        s += w(d.indices[k]) * std::pow(std::abs(d.values(static_cast<Eigen::Index>(k), 0)), q);
      }
      EmbeddingRow row;
      row.direction = axis;
      row.h = steps * mesh.spacing(axis);
      const double num = std::pow(s, 1.0 / q);
      row.ratio = grad_p > 0.0 ? num / (std::pow(row.h, rep.alpha) * grad_p) : (num == 0.0 ? 0.0 : kInf);
      rep.ok = rep.ok && std::isfinite(row.ratio);
      rep.max_ratio = std::max(rep.max_ratio, row.ratio);
      rep.rows.push_back(row);
    }
  }
  return rep;
}

double predicted_integrability(int n, double p, double alpha, double beta) {
  if (n < 1 || !(p > 1.0)) throw InvalidArgument("predicted_integrability: need n >= 1 and p > 1");
  if (!(beta > 0.0 && beta < alpha && alpha < 1.0)) throw InvalidArgument("predicted_integrability: need 0 < beta < alpha < 1");
  if (!(p * beta < n)) throw InvalidArgument("predicted_integrability: need p beta < n");
  return p * n / (n - p * beta);
}

LavrentievResult lavrentiev_probe(const ObstacleProblem& problem, int levels, const SolveOptions& options) {
  if (levels < 1) throw InvalidArgument("lavrentiev_probe: need at least one level");
  const Mesh& fine = problem.mesh;
  LavrentievResult res;
  res.levels = levels;
  res.sufficient_levels = levels >= 2;
  const Solution fs = solve(problem, options);
  res.fine_energy = fs.energy;
  res.smoothed_energy = kInf;

  if (levels == 1) {
    res.smoothed_energy = energy(problem, project(problem, jacobi_average(fine, fs.u)));
  }
  for (int j = 1; j < levels; ++j) {
    const int factor = 1 << j;
    std::vector<int> res_c;
    for (int a = 0; a < fine.dim(); ++a) {
      if (fine.resolution(a) % factor != 0 || fine.resolution(a) / factor < 2) {
        throw InvalidArgument("lavrentiev_probe: resolution does not coarsen that many times");
      }
      res_c.push_back(fine.resolution(a) / factor);
    }
    Mesh coarse(fine.dim(), fine.bounds(), res_c);
    NodalField psi(coarse.num_nodes()), u0(coarse.num_nodes());
    for (int i = 0; i < coarse.num_nodes(); ++i) {
      const auto g = coarse.node_grid(i);
      const int fi = fine.node_index(g[0] * factor, g[1] * factor);
      psi(i) = problem.psi(fi);
      u0(i) = problem.u0(fi);
    }
    const ObstacleProblem cp{coarse, problem.integrand, psi, u0};
    const Solution cs = solve(cp, options);
    const NodalField lifted = prolongate(coarse, cs.u, fine);
    res.smoothed_energy = std::min(res.smoothed_energy, energy(problem, project(problem, jacobi_average(fine, lifted))));
  }
  res.gap = (res.smoothed_energy - res.fine_energy) / std::max(1.0, std::abs(res.fine_energy));
  return res;
}

}  // namespace pqobst
