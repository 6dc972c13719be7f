#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pqobst/duality.hpp"
#include "pqobst/primal.hpp"

namespace pqobst {

/// Diagnostics for one member F_k of the approximation sequence.
struct SweepRecord {
  int k = 0;
  double energy_Fk = 0.0;       ///< int F_k(Du_k)
  double energy_F = 0.0;        ///< int F(Du_k)
  double gap_k = 0.0;           ///< duality gap of u_k for the F_k problem
  double fstar_sigma_L1 = 0.0;  ///< int F*(sigma_k)
  double sigma_Lqprime = 0.0;   ///< int |sigma_k|^{q'}
  double vp_dist = 0.0;         ///< int |V_p(Du_k) - V_p(Du_ref)|^2
  double div_violation_k = 0.0;
  double vi_min_k = 0.0;        ///< min over competitors of int <sigma_k, Dz - Du_k>
  double mu_k = 0.0;

  double radius = 0.0;          ///< truncation radius R_k
  double max_grad = 0.0;        ///< max over cells of |Du_k|
  double strong_lhs = 0.0;      ///< int |Du_k - Du_ref|^p
  double strong_rhs = 0.0;      ///< bound on strong_lhs implied by vp_dist
  bool converged = false;
  std::string failure;          ///< empty when the solve and certificate succeeded
  NodalField u;
};

struct Verdict {
  std::string name;
  bool ok = false;
  std::string detail;
};

struct SweepReport {
  std::vector<SweepRecord> records;
  NodalField reference;
  int reference_k = 0;
  /// Position in `records` from which R_k exceeds the gradient range of u_k for
  /// every later record; -1 when that never happens.
  int stabilization_index = -1;
  double doubling_constant = 0.0;  ///< calibrated C in int F*(sigma_k) <= C int F(Du0)
  double datum_energy = 0.0;       ///< int F(Du0)
  double domain_measure = 0.0;
  int competitors = 0;
  int skipped_competitors = 0;
  std::vector<Verdict> verdicts;

  bool all_ok() const;
};

struct SweepOptions {
  double radius_scale = 0.1;
  bool moreau = false;
  double box_radius = 10.0;
  int samples_per_axis = 101;
  double tol = 1e-8;
  SolveOptions solve{500, 1e-11, 1.0, SolverMethod::ProjectedNewton};
  int hat_competitors = 8;
  std::vector<NodalField> competitors;  ///< user-supplied, checked for admissibility
  std::uint64_t seed = 42;
};

/// Solves the F_k problem for each k (strictly increasing), certifies every
/// solution and fills all verdicts. Solve failures leave marked records.
SweepReport run_sweep(const ObstacleProblem& problem, const std::vector<int>& k_list, const SweepOptions& options = {});

/// Default competitor set: the reference, nonnegative hat bumps at random
/// interior nodes (t in {0.1, 1}) and max(psi, harmonic extension of u0).
std::vector<NodalField> default_competitors(const ObstacleProblem& problem, const NodalField& reference,
                                            int hats, std::uint64_t seed);

Verdict check_energy_convergence(const SweepReport& report, double tol = 1e-8);
/// int F*(sigma_k) <= C int F(Du0) for every k, and the uniform L^{q'} bound
/// (C int F(Du0) + L |domain|) / c_L that follows from the conjugate growth.
Verdict check_dual_bounds(const SweepReport& report, double u0_energy, const IntegrandSpec& F);
Verdict check_limit_vi(const ObstacleProblem& problem, const SweepReport& report,
                       const std::vector<NodalField>& competitors, double tol = 1e-8);
Verdict check_strong_convergence(const SweepReport& report, double tol = 1e-8);

}  // namespace pqobst
