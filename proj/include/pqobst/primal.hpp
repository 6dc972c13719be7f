#pragma once

#include <string>
#include <vector>

#include "pqobst/integrand.hpp"
#include "pqobst/mesh.hpp"

namespace pqobst {

/// Discrete obstacle problem: minimize sum_T |T| F(Du_T) over nodal u with
/// u = u0 on the boundary and u >= psi at every node.
struct ObstacleProblem {
  Mesh mesh;
  IntegrandSpec integrand;
  NodalField psi;
  NodalField u0;
};

/// Checks shapes and boundary feasibility (psi <= u0 on boundary nodes), then
/// replaces u0 by max(u0, psi).
ObstacleProblem make_problem(Mesh mesh, IntegrandSpec integrand, NodalField psi, NodalField u0);

enum class SolverMethod { ProjectedNewton, ProjectedGradient };

struct SolveOptions {
  int max_iters = 500;
  /// Stopping tolerance on the projected-gradient residual and on the
  /// duality gap. Negative means: 1e-8 for quadratic integrands, 1e-6 otherwise.
  double tol = -1.0;
  double step0 = 1.0;
  SolverMethod method = SolverMethod::ProjectedNewton;
};

struct TraceEntry {
  int iteration = 0;
  double energy = 0.0;
  double residual = 0.0;
};

struct Solution {
  NodalField u;
  double energy = 0.0;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  std::string stop_reason;
  std::vector<TraceEntry> trace;
};

double energy(const ObstacleProblem& problem, const NodalField& u);

/// Nodal gradient of the discrete energy; zero at boundary nodes.
NodalField energy_gradient(const ObstacleProblem& problem, const NodalField& u);

/// max(u, psi) at interior nodes, u0 at boundary nodes.
NodalField project(const ObstacleProblem& problem, const NodalField& u);

/// True when u = u0 on the boundary and u >= psi - tol everywhere.
bool is_admissible(const ObstacleProblem& problem, const NodalField& u, double tol = 1e-12);

/// Interior nodes with u_i - psi_i <= tol.
std::vector<int> active_set(const ObstacleProblem& problem, const NodalField& u, double tol = 1e-7);

double default_tolerance(const IntegrandSpec& F);

/**
 * Projected descent from project(u0) with Armijo backtracking along the
 * projection arc. ProjectedNewton uses the two-metric direction (Newton on the
 * free nodes, diagonally scaled gradient on the nearly active ones) and falls
 * back to a projected gradient step when that direction fails the line search.
 *
 * Residual is max_i |u_i - P(u - g)_i| over interior nodes, which bounds the
 * sign violation of the discrete divergence of the dual field.
 * Returns converged = false with diagnostics when the iteration cap is hit.
 */
Solution solve(const ObstacleProblem& problem, const SolveOptions& options = {});

/// Exhaustive ground truth for at most 12 free nodes: every active set is
/// tried, the remaining coordinates are solved by damped Newton, and the
/// feasible candidate with minimal energy and nonnegative multipliers wins.
Solution oracle_solve(const ObstacleProblem& problem);

}  // namespace pqobst
