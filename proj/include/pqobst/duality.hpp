#pragma once

#include "pqobst/primal.hpp"

namespace pqobst {

/// Everything needed to certify a candidate u through the dual field F'(Du).
struct DualCertificate {
  CellField sigma;
  NodalField m;                 ///< hat pairings, the action of -div sigma
  double energy = 0.0;
  double pairing = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;
  double div_violation = 0.0;   ///< max over interior nodes of (-m_i)_+
  double fy_residual_max = 0.0; ///< max over cells of |F + F* - <sigma, Du>| / (1 + |F|)
  double complementarity_max = 0.0;
};

/// sigma_T = F'(Du_T).
CellField dual_field(const ObstacleProblem& problem, const NodalField& u);

struct DivergenceReport {
  NodalField m;
  double div_violation = 0.0;
  bool ok = false;
};

DivergenceReport check_divergence_sign(const Mesh& mesh, const CellField& sigma, double tol = 1e-8);

/// sum over interior i of (psi_i - u0_i) m_i plus the integral of <sigma, Du0>.
double pairing(const Mesh& mesh, const CellField& sigma, const NodalField& psi, const NodalField& u0);

/// pairing - sum_T |T| F*(sigma_T). Propagates conjugate failures.
double dual_objective(const ObstacleProblem& problem, const CellField& sigma);

/// Full certificate at u. The gap is only guaranteed nonnegative when
/// sigma(u) passes the divergence sign test.
DualCertificate duality_gap(const ObstacleProblem& problem, const NodalField& u);

/// int <sigma(u), Dz - Du>. Throws InvalidArgument when z is not admissible.
double check_vi(const ObstacleProblem& problem, const NodalField& u, const NodalField& z);

}  // namespace pqobst
