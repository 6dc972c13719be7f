#include "pqobst/duality.hpp"

#include <algorithm>
#include <cmath>

#include "pqobst/errors.hpp"

namespace pqobst {

namespace {

double clamp_tiny(double x) { return std::abs(x) < 1e-14 ? 0.0 : x; }

}  // namespace

CellField dual_field(const ObstacleProblem& problem, const NodalField& u) {
  const CellField Du = cell_gradient(problem.mesh, u);
  CellField sigma(Du.rows(), Du.cols());
  for (Eigen::Index c = 0; c < Du.rows(); ++c) {
    const Vec xi = Du.row(c).transpose();
    sigma.row(c) = grad(problem.integrand, xi).transpose();
  }
  return sigma;
}

DivergenceReport check_divergence_sign(const Mesh& mesh, const CellField& sigma, double tol) {
  DivergenceReport rep;
  rep.m = hat_pairing(mesh, sigma);
  for (int i : mesh.interior_nodes()) rep.div_violation = std::max(rep.div_violation, -rep.m(i));
  rep.div_violation = clamp_tiny(rep.div_violation);
  rep.ok = rep.div_violation <= tol;
  return rep;
}

double pairing(const Mesh& mesh, const CellField& sigma, const NodalField& psi, const NodalField& u0) {
  if (psi.size() != mesh.num_nodes() || u0.size() != mesh.num_nodes()) {
    throw InvalidArgument("pairing: nodal fields are not on this mesh");
  }
  const NodalField m = hat_pairing(mesh, sigma);
  double s = 0.0;
  for (int i : mesh.interior_nodes()) s += (psi(i) - u0(i)) * m(i);
  return s + integrate_cells(mesh, cell_dot(sigma, cell_gradient(mesh, u0)));
}

double dual_objective(const ObstacleProblem& problem, const CellField& sigma) {
  const Mesh& mesh = problem.mesh;
  Eigen::VectorXd fstar(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    fstar(c) = conjugate(problem.integrand, Vec(sigma.row(c).transpose()));
  }
  return pairing(mesh, sigma, problem.psi, problem.u0) - integrate_cells(mesh, fstar);
}

DualCertificate duality_gap(const ObstacleProblem& problem, const NodalField& u) {
  if (!is_admissible(problem, u, 1e-12)) throw InvalidArgument("duality_gap: u is not admissible");
  const Mesh& mesh = problem.mesh;
  const IntegrandSpec& F = problem.integrand;
  DualCertificate cert;
  const CellField Du = cell_gradient(mesh, u);
  cert.sigma.resize(Du.rows(), Du.cols());
  Eigen::VectorXd fvals(mesh.num_cells());
  Eigen::VectorXd fstar(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const Vec xi = Du.row(c).transpose();
    const Vec s = grad(F, xi);
    cert.sigma.row(c) = s.transpose();
    fvals(c) = eval(F, xi);
    fstar(c) = conjugate(F, s);
    const double fy = fvals(c) + fstar(c) - s.dot(xi);
    cert.fy_residual_max = std::max(cert.fy_residual_max, std::abs(fy) / (1.0 + std::abs(fvals(c))));
  }
  const DivergenceReport div = check_divergence_sign(mesh, cert.sigma);
  cert.m = div.m;
  cert.div_violation = div.div_violation;
  cert.energy = integrate_cells(mesh, fvals);
  cert.pairing = pairing(mesh, cert.sigma, problem.psi, problem.u0);
  cert.dual_objective = cert.pairing - integrate_cells(mesh, fstar);
  cert.gap = clamp_tiny(cert.energy - cert.dual_objective);
  for (int i : mesh.interior_nodes()) {
    cert.complementarity_max = std::max(cert.complementarity_max, std::abs((u(i) - problem.psi(i)) * cert.m(i)));
  }
  cert.fy_residual_max = clamp_tiny(cert.fy_residual_max);
  cert.complementarity_max = clamp_tiny(cert.complementarity_max);
  return cert;
}

double check_vi(const ObstacleProblem& problem, const NodalField& u, const NodalField& z) {
  if (!is_admissible(problem, z, 1e-12)) throw InvalidArgument("check_vi: competitor is not admissible");
  const CellField sigma = dual_field(problem, u);
  const CellField dz = cell_gradient(problem.mesh, NodalField(z - u));
  return integrate_cells(problem.mesh, cell_dot(sigma, dz));
}

}  // namespace pqobst
