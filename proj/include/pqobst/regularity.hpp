#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pqobst/mesh.hpp"
#include "pqobst/primal.hpp"

namespace pqobst {

/// Discrete harmonic function with the boundary-node values of `boundary`
/// (interior entries are ignored). Solves the P1 Laplace system directly.
NodalField harmonic_extension(const Mesh& mesh, const NodalField& boundary);

struct ExtensionLevel {
  int resolution = 0;
  double grad_Lq = 0.0;       ///< ||D ext||_{L^q(domain)}
  double tangential_Lp = 0.0; ///< ||D_tan g||_{L^p(boundary)}
  double trace_Lp = 0.0;      ///< ||g||_{L^p(boundary)}
  double ratio = 0.0;
};

struct ExtensionReport {
  std::vector<ExtensionLevel> levels;
  double final_growth = 0.0;  ///< ratio(finest) / ratio(previous) - 1
  bool bounded = false;
};

/// Harmonic extension of g on square refinements of a 2D rectangle. The ratio
/// ||D ext||_q / (||D_tan g||_p ||g||_p) must not grow by more than 10% between
/// the two finest levels. Requires q <= 2p (the n = 2 case of pn/(n-1)).
ExtensionReport extension_norm_check(const std::vector<std::pair<double, double>>& bounds,
                                     const std::vector<int>& resolutions,
                                     const std::function<double(const Vec&)>& g, double p, double q);

struct DifferenceQuotient {
  int direction = 0;
  int steps = 0;
  double h = 0.0;
  double dq_norm = 0.0;  ///< sum over inner cells of |T| |V_p(Du)(. + h e) - V_p(Du)|^2
};

/// One row per (axis, step) with h = step * spacing(axis).
std::vector<DifferenceQuotient> difference_quotient_table(const Mesh& mesh, const NodalField& u, double p,
                                                          double inner_margin, const std::vector<int>& h_steps);

struct BesovFit {
  double alpha = 0.0;  ///< slope / 2, +inf when every entry vanishes
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  ///< root mean square of the log-log fit
  int points = 0;
};

/// Least squares on log(dq) against log(h). Entries for the same h are summed
/// over directions first; zero sums are dropped.
BesovFit besov_fit(const std::vector<DifferenceQuotient>& table);
BesovFit besov_fit(const std::vector<double>& h, const std::vector<double>& dq);

struct ExponentSequence {
  std::vector<double> sequence;  ///< p_0 = p, p_1, ...
  double limit = 0.0;            ///< +inf when n - 1 - n/q <= 0
  bool limit_finite = true;
};

/// p_j = n p / (n (1 + 1/p_{j-1} - 1/q) - 1), for 1 < p <= q < n p / (n - 1), n >= 2.
/// Stops early once the denominator stops being positive (the exponents are unbounded).
ExponentSequence exponent_iteration(int n, double p, double q, int J);

/// Integrability exponent for n p / (n - 1) <= q < n p / (n - p) (no upper bound when p >= n).
double pbar(int n, double p, double q);

struct EmbeddingRow {
  int direction = 0;
  double h = 0.0;
  double ratio = 0.0;
};

struct EmbeddingReport {
  double alpha = 0.0;
  std::vector<EmbeddingRow> rows;
  double max_ratio = 0.0;
  bool ok = false;
};

/// r(h) = ||tau_h u||_{L^q(inner)} / (h^alpha ||Du||_{L^p}) with alpha = 1 - n (1/p - 1/q).
EmbeddingReport embedding_check(const Mesh& mesh, const NodalField& u, double p, double q,
                                const std::vector<int>& h_steps, double inner_margin = 0.25);

/// t = p n / (n - p beta) for 0 < beta < alpha < 1 and p beta < n.
double predicted_integrability(int n, double p, double alpha, double beta);

struct LavrentievResult {
  double gap = 0.0;
  double fine_energy = 0.0;
  double smoothed_energy = 0.0;
  int levels = 0;
  bool sufficient_levels = false;
};

/// Compares the fine-level minimum with the best competitor obtained by lifting
/// coarser solutions (resolution halved per level), averaging once over grid
/// neighbours and re-projecting onto the obstacle. gap = (b - a) / max(1, |a|).
LavrentievResult lavrentiev_probe(const ObstacleProblem& problem, int levels, const SolveOptions& options = {});

/// Everything the probe pipeline reports.
struct RegularityReport {
  std::vector<DifferenceQuotient> table;
  BesovFit fit;
  std::optional<ExponentSequence> exponents;
  std::optional<double> pbar;
  std::optional<EmbeddingReport> embedding;
  std::optional<LavrentievResult> lavrentiev;
  std::vector<std::string> notes;
};

}  // namespace pqobst
