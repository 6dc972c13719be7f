#include "pqobst/primal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "pqobst/duality.hpp"
#include "pqobst/errors.hpp"

namespace pqobst {

ObstacleProblem make_problem(Mesh mesh, IntegrandSpec integrand, NodalField psi, NodalField u0) {
  validate(integrand);
  if (integrand.dim != mesh.dim()) throw InvalidArgument("make_problem: integrand and mesh dimensions differ");
  if (psi.size() != mesh.num_nodes() || u0.size() != mesh.num_nodes()) {
    throw InvalidArgument("make_problem: obstacle and datum must have one value per node");
  }
  if (!psi.allFinite() || !u0.allFinite()) throw InvalidArgument("make_problem: non-finite nodal data");
  for (int i : mesh.boundary_nodes()) {
    if (psi(i) > u0(i) + 1e-14 * (1.0 + std::abs(u0(i)))) {
      throw InvalidArgument("make_problem: infeasible, obstacle exceeds the boundary datum at node " +
                            std::to_string(i));
    }
  }
  NodalField datum = normalize_datum(mesh, u0, psi);
  return ObstacleProblem{std::move(mesh), std::move(integrand), std::move(psi), std::move(datum)};
}

double energy(const ObstacleProblem& problem, const NodalField& u) {
  const CellField Du = cell_gradient(problem.mesh, u);
  Eigen::VectorXd f(Du.rows());
  for (Eigen::Index c = 0; c < Du.rows(); ++c) f(c) = eval(problem.integrand, Vec(Du.row(c).transpose()));
  return integrate_cells(problem.mesh, f);
}

NodalField energy_gradient(const ObstacleProblem& problem, const NodalField& u) {
  NodalField g = hat_pairing(problem.mesh, dual_field(problem, u));
  for (int i : problem.mesh.boundary_nodes()) g(i) = 0.0;
  return g;
}

NodalField project(const ObstacleProblem& problem, const NodalField& u) {
  NodalField v = u.cwiseMax(problem.psi);
  for (int i : problem.mesh.boundary_nodes()) v(i) = problem.u0(i);
  return v;
}

bool is_admissible(const ObstacleProblem& problem, const NodalField& u, double tol) {
  if (u.size() != problem.mesh.num_nodes() || !u.allFinite()) return false;
  for (int i : problem.mesh.boundary_nodes()) {
    if (std::abs(u(i) - problem.u0(i)) > tol * (1.0 + std::abs(problem.u0(i)))) return false;
  }
  for (int i = 0; i < u.size(); ++i) {
    if (u(i) < problem.psi(i) - tol * (1.0 + std::abs(problem.psi(i)))) return false;
  }
  return true;
}

std::vector<int> active_set(const ObstacleProblem& problem, const NodalField& u, double tol) {
  std::vector<int> out;
  for (int i : problem.mesh.interior_nodes()) {
    if (u(i) - problem.psi(i) <= tol) out.push_back(i);
  }
  return out;
}

double default_tolerance(const IntegrandSpec& F) {
  return F.family == Family::PowerP && F.p == 2.0 ? 1e-8 : 1e-6;
}

namespace {

void check_feasible(const ObstacleProblem& p) {
  if (p.integrand.dim != p.mesh.dim()) throw InvalidArgument("solve: integrand and mesh dimensions differ");
  if (p.psi.size() != p.mesh.num_nodes() || p.u0.size() != p.mesh.num_nodes()) {
    throw InvalidArgument("solve: obstacle and datum must have one value per node");
  }
  for (int i : p.mesh.boundary_nodes()) {
    if (p.psi(i) > p.u0(i) + 1e-14 * (1.0 + std::abs(p.u0(i)))) {
      throw InvalidArgument("solve: infeasible, obstacle exceeds the boundary datum at node " + std::to_string(i));
    }
  }
}

// Symmetric positive definite surrogate of the cell Hessian.
Mat regularized_hessian(const IntegrandSpec& F, const Vec& xi) {
  constexpr double cap = 1e10;
  const int n = static_cast<int>(xi.size());
  Mat A = hessian(F, xi);
  if (!A.allFinite()) return Mat(cap * Mat::Identity(n, n));
  A = Mat(0.5 * (A + A.transpose()));
  Eigen::SelfAdjointEigenSolver<Mat> eig(A);
  Vec lam = eig.eigenvalues();
  const double floor = 1e-8 * std::max(1.0, lam.cwiseAbs().maxCoeff());
  for (int k = 0; k < n; ++k) lam(k) = std::clamp(lam(k), floor, cap);
  return Mat(eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose());
}

std::vector<Mat> cell_hessians(const ObstacleProblem& problem, const NodalField& u) {
  const CellField Du = cell_gradient(problem.mesh, u);
  std::vector<Mat> out;
  out.reserve(static_cast<std::size_t>(Du.rows()));
  for (Eigen::Index c = 0; c < Du.rows(); ++c) {
    out.push_back(regularized_hessian(problem.integrand, Vec(Du.row(c).transpose())));
  }
  return out;
}

Eigen::MatrixXd element_matrix(const Cell& cell, const Mat& A) {
  const auto G = cell.hat_grads.leftCols(cell.num_nodes);
  return cell.measure * G.transpose() * A * G;
}

// Diagonal of the assembled surrogate Hessian; 1 on boundary nodes.
NodalField hessian_diagonal(const Mesh& mesh, const std::vector<Mat>& cellH) {
  NodalField diag = NodalField::Zero(mesh.num_nodes());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const Cell& cell = mesh.cell(c);
    const Eigen::MatrixXd K = element_matrix(cell, cellH[c]);
    for (int a = 0; a < cell.num_nodes; ++a) diag(cell.nodes[a]) += K(a, a);
  }
  for (int i : mesh.boundary_nodes()) diag(i) = 1.0;
  return diag;
}

// Surrogate Hessian restricted to nodes with local[i] >= 0.
Eigen::SparseMatrix<double> hessian_block(const Mesh& mesh, const std::vector<Mat>& cellH,
                                          const std::vector<int>& local, int nlocal) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(mesh.num_cells()) * 9);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const Cell& cell = mesh.cell(c);
    const Eigen::MatrixXd K = element_matrix(cell, cellH[c]);
    for (int a = 0; a < cell.num_nodes; ++a) {
      const int la = local[cell.nodes[a]];
      if (la < 0) continue;
      for (int b = 0; b < cell.num_nodes; ++b) {
        const int lb = local[cell.nodes[b]];
        if (lb >= 0) trip.emplace_back(la, lb, K(a, b));
      }
    }
  }
  Eigen::SparseMatrix<double> H(nlocal, nlocal);
  H.setFromTriplets(trip.begin(), trip.end());
  return H;
}

double projected_residual(const ObstacleProblem& problem, const NodalField& u, const NodalField& g) {
  double r = 0.0;
  for (int i : problem.mesh.interior_nodes()) r = std::max(r, std::abs(u(i) - std::max(problem.psi(i), u(i) - g(i))));
  return r;
}

struct LineSearch {
  bool ok = false;
  NodalField u;
  double energy = 0.0;
};

// Armijo backtracking along the projection arc t -> P(u + t d).
LineSearch arc_search(const ObstacleProblem& problem, const NodalField& u, double e0, const NodalField& g,
                      const NodalField& d, double step0) {
  constexpr double armijo = 1e-4;
  LineSearch ls;
  double t = step0;
  for (int k = 0; k < 60; ++k, t *= 0.5) {
    NodalField trial = project(problem, u + t * d);
    const double slope = g.dot(trial - u);
    if (!(slope < 0.0)) {
      if ((trial - u).lpNorm<Eigen::Infinity>() == 0.0) break;
      continue;
    }
    const double e = energy(problem, trial);
    if (!std::isfinite(e)) continue;
    // Near the optimum energy differences drown in roundoff; the secant form of
    // the Armijo test only needs the gradient at the trial point.
    const bool flat = std::abs(e - e0) <= 1e-13 * (1.0 + std::abs(e0)) &&
                      energy_gradient(problem, trial).dot(trial - u) <= (1.0 - 2.0 * armijo) * -slope;
    if (e <= e0 + armijo * slope || flat) {
      ls.ok = true;
      ls.u = std::move(trial);
      ls.energy = e;
      return ls;
    }
  }
  return ls;
}

bool gap_certifies(const ObstacleProblem& problem, const NodalField& u, double e, double tol) {
  try {
    const DualCertificate cert = duality_gap(problem, u);
    return cert.div_violation <= tol && cert.gap <= tol * (1.0 + std::abs(e));
  } catch (const ConvergenceFailure&) {
    return false;
  }
}

}  // namespace

Solution solve(const ObstacleProblem& problem, const SolveOptions& options) {
  check_feasible(problem);
  if (options.max_iters < 0 || !(options.step0 > 0.0)) throw InvalidArgument("solve: bad options");
  const double tol = options.tol > 0.0 ? options.tol : default_tolerance(problem.integrand);
  const Mesh& mesh = problem.mesh;
  const bool newton = options.method == SolverMethod::ProjectedNewton &&
                      problem.integrand.family != Family::UserTabulated;

  Solution sol;
  sol.u = project(problem, problem.u0);
  sol.energy = energy(problem, sol.u);

  for (int it = 0;; ++it) {
    const NodalField g = energy_gradient(problem, sol.u);
    const double scale = 1.0 + sol.u.lpNorm<Eigen::Infinity>();

    // Nearly active nodes whose gradient pushes into the obstacle get the
    // diagonal metric; Newton acts on the rest.
    const std::vector<Mat> cellH = cell_hessians(problem, sol.u);
    const NodalField diag = hessian_diagonal(mesh, cellH);
    sol.residual = projected_residual(problem, sol.u, g);
    sol.iterations = it;
    sol.trace.push_back({it, sol.energy, sol.residual});
    if (sol.residual <= tol) {
      sol.converged = true;
      sol.stop_reason = "residual";
      return sol;
    }
    if (it > 0 && it % 25 == 0 && gap_certifies(problem, sol.u, sol.energy, tol)) {
      sol.converged = true;
      sol.stop_reason = "duality_gap";
      return sol;
    }
    if (it >= options.max_iters) {
      sol.stop_reason = "max_iters";
      return sol;
    }

    const double eps = std::min(1e-3 * scale, sol.residual);
    NodalField pg = NodalField::Zero(mesh.num_nodes());
    for (int i : mesh.interior_nodes()) pg(i) = -g(i) / diag(i);

    LineSearch ls;
    if (newton) {
      std::vector<int> local(mesh.num_nodes(), -1);
      std::vector<int> free;
      for (int i : mesh.interior_nodes()) {
        const bool pinned = sol.u(i) - problem.psi(i) <= eps && g(i) > 0.0;
        if (!pinned) {
          local[i] = static_cast<int>(free.size());
          free.push_back(i);
        }
      }
      NodalField d = pg;
      bool have_direction = true;
      if (!free.empty()) {
        const auto H = hessian_block(mesh, cellH, local, static_cast<int>(free.size()));
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(H);
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(free.size()));
        for (std::size_t k = 0; k < free.size(); ++k) rhs(static_cast<Eigen::Index>(k)) = -g(free[k]);
        Eigen::VectorXd step;
        if (ldlt.info() == Eigen::Success) step = ldlt.solve(rhs);
        if (ldlt.info() != Eigen::Success || !step.allFinite()) {
          have_direction = false;
        } else {
          for (std::size_t k = 0; k < free.size(); ++k) d(free[k]) = step(static_cast<Eigen::Index>(k));
        }
      }
      if (have_direction) ls = arc_search(problem, sol.u, sol.energy, g, d, options.step0);
    }
    if (!ls.ok) ls = arc_search(problem, sol.u, sol.energy, g, newton ? pg : NodalField(-g), options.step0);
    if (!ls.ok) {
      if (gap_certifies(problem, sol.u, sol.energy, tol)) {
        sol.converged = true;
        sol.stop_reason = "duality_gap";
      } else {
        sol.stop_reason = "line_search_stalled";
      }
      return sol;
    }
    sol.u = std::move(ls.u);
    sol.energy = ls.energy;
  }
}

// ---------------------------------------------------------------------------
// Enumeration oracle. Independent of the production path: the Hessian is
// taken by central differences of energy_gradient.

namespace {

struct OracleCandidate {
  bool ok = false;
  NodalField u;
  double energy = std::numeric_limits<double>::infinity();
};

OracleCandidate newton_on(const ObstacleProblem& problem, const std::vector<int>& free, NodalField u) {
  const int m = static_cast<int>(free.size());
  OracleCandidate out;
  double e = energy(problem, u);
  for (int it = 0; it < 200 && m > 0; ++it) {
    const NodalField gfull = energy_gradient(problem, u);
    Eigen::VectorXd g(m);
    for (int k = 0; k < m; ++k) g(k) = gfull(free[k]);
    if (g.lpNorm<Eigen::Infinity>() <= 1e-13 * (1.0 + std::abs(e))) break;

    Eigen::MatrixXd H(m, m);
    for (int k = 0; k < m; ++k) {
      const double h = 1e-6 * (1.0 + std::abs(u(free[k])));
      NodalField up = u, um = u;
      up(free[k]) += h;
      um(free[k]) -= h;
      const NodalField gp = energy_gradient(problem, up);
      const NodalField gm = energy_gradient(problem, um);
      for (int j = 0; j < m; ++j) H(j, k) = (gp(free[j]) - gm(free[j])) / (2.0 * h);
    }
    H = 0.5 * (H + H.transpose());
    H.diagonal().array() += 1e-12 * (1.0 + H.diagonal().cwiseAbs().maxCoeff());
    Eigen::VectorXd d = H.ldlt().solve(-g);
    if (!d.allFinite() || g.dot(d) >= 0.0) d = -g;

    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      NodalField trial = u;
      for (int j = 0; j < m; ++j) trial(free[j]) += t * d(j);
      const double et = energy(problem, trial);
      if (et <= e + 1e-4 * t * g.dot(d)) {
        u = std::move(trial);
        moved = e - et > 0.0 || t * d.lpNorm<Eigen::Infinity>() > 1e-15 * (1.0 + u.lpNorm<Eigen::Infinity>());
        e = et;
        break;
      }
    }
    if (!moved) break;
  }
  out.ok = std::isfinite(e);
  out.u = std::move(u);
  out.energy = e;
  return out;
}

}  // namespace

Solution oracle_solve(const ObstacleProblem& problem) {
  check_feasible(problem);
  const std::vector<int>& interior = problem.mesh.interior_nodes();
  const int m = static_cast<int>(interior.size());
  if (m > 12) throw Unsupported("oracle_solve: more than 12 free nodes");

  const NodalField start = project(problem, problem.u0);
  OracleCandidate best, best_any;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    NodalField u = start;
    std::vector<int> free;
    for (int k = 0; k < m; ++k) {
      if (mask & (1u << k)) {
        u(interior[k]) = problem.psi(interior[k]);
      } else {
        free.push_back(interior[k]);
      }
    }
    OracleCandidate cand = newton_on(problem, free, u);
    if (!cand.ok) continue;

    bool feasible = true;
    for (int i : free) feasible = feasible && cand.u(i) >= problem.psi(i) - 1e-10 * (1.0 + std::abs(problem.psi(i)));
    if (!feasible) continue;
    const NodalField g = energy_gradient(problem, cand.u);
    const double gscale = 1e-8 * (1.0 + g.lpNorm<Eigen::Infinity>());
    bool signs = true;
    for (int k = 0; k < m; ++k) {
      if (mask & (1u << k)) signs = signs && g(interior[k]) >= -gscale;
    }
    if (cand.energy < best_any.energy) best_any = cand;
    if (signs && cand.energy < best.energy) best = std::move(cand);
  }
  if (!best.ok) best = best_any;
  if (!best.ok) throw ConvergenceFailure("oracle_solve: no feasible candidate", std::nan(""), std::nan(""));

  Solution sol;
  sol.u = project(problem, best.u);
  sol.energy = energy(problem, sol.u);
  sol.converged = true;
  sol.stop_reason = "enumeration";
  sol.iterations = 1 << m;
  const NodalField g = energy_gradient(problem, sol.u);
  for (int i : interior) {
    const double target = std::max(problem.psi(i), sol.u(i) - g(i));
    sol.residual = std::max(sol.residual, std::abs(sol.u(i) - target));
  }
  return sol;
}

}  // namespace pqobst
