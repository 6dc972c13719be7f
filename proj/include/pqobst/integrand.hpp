#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "pqobst/types.hpp"

namespace pqobst {

enum class Family { PowerP, AnisotropicLogExample, TruncatedConjugate, MoreauSmoothed, UserTabulated };

std::string to_string(Family family);
Family family_from_string(const std::string& name);

/// Samples of a convex integrand read from CSV. Gradients are optional.
struct TabulatedData {
  int dim = 1;
  std::vector<Vec> points;
  std::vector<double> values;
  std::vector<Vec> gradients;

  bool has_gradient() const { return !gradients.empty(); }
};

/// Reads `xi1[,xi2],F[,dF1[,dF2]]` rows. The column named F separates the point
/// coordinates from the (optional) gradient columns.
TabulatedData read_tabulated_csv(const std::filesystem::path& path);

/**
 * A convex integrand F : R^n -> R with (p,q)-growth constants.
 *
 * PowerP is |xi|^p / p. AnisotropicLogExample is
 * |xi1 - xi2|^q + |xi1 + xi2|^p log^alpha(1 + |xi1|) on R^2.
 * TruncatedConjugate is sup_{|z| <= trunc_radius} (<z, xi> - base*(z)), and
 * MoreauSmoothed is the Moreau envelope with parameter moreau_eps of that
 * truncation. Both keep a pointer to the base integrand, which must itself be
 * one of the non-derived families.
 *
 * Values are immutable once built; share them freely across threads.
 */
struct IntegrandSpec {
  Family family = Family::PowerP;
  double p = 2.0;
  double q = 2.0;
  double alpha_log = 0.0;
  double ell = 0.5;
  double L = 0.5;
  double nu = 1.0;
  double trunc_radius = 0.0;
  double moreau_eps = 0.0;
  int dim = 1;
  std::shared_ptr<const IntegrandSpec> base;
  std::shared_ptr<const TabulatedData> table;
};

IntegrandSpec power_p(double p, int dim);
/// Growth constants ell, L are fitted on the box of radius 10.
IntegrandSpec anisotropic_log(double p, double q, double alpha);
IntegrandSpec truncated_conjugate(const IntegrandSpec& base, double radius);
IntegrandSpec moreau_smoothed(const IntegrandSpec& base, double radius, double eps);
IntegrandSpec user_tabulated(TabulatedData data, double p, double q);

/// Throws InvalidArgument when the fields are inconsistent.
void validate(const IntegrandSpec& F);
bool is_radial(const IntegrandSpec& F);

double eval(const IntegrandSpec& F, const Vec& xi);
Vec grad(const IntegrandSpec& F, const Vec& xi);
/// Second derivative where it exists. May contain +inf at degenerate points
/// (PowerP with p < 2 at the origin); callers regularize.
Mat hessian(const IntegrandSpec& F, const Vec& xi);

/// V_p(xi) = (1 + |xi|^2)^((p-2)/4) xi.
template <typename Derived>
Vec vp_map(double p, const Eigen::MatrixBase<Derived>& xi) {
  const double factor = std::pow(1.0 + xi.squaredNorm(), (p - 2.0) / 4.0);
  return Vec(factor * xi);
}

struct ViLemmaReport {
  bool lower_ok = false;
  bool upper_ok = false;
  double ratio = 0.0;  ///< (|V(xi)-V(eta)|^2 / |xi-eta|^2) / weight
  double weight = 0.0; ///< (1 + |xi|^2 + |eta|^2)^((p-2)/2)
  double constant = 0.0;
};

/// Sandwich constant for the V_p increment estimate, sampled once per (n, p)
/// (1e5 pairs, safety factor 1.1) and cached.
double vi_lemma_constant(int n, double p);
double calibrate_vi_constant(int n, double p, int samples, std::uint64_t seed);
ViLemmaReport check_vi_lemma_bounds(double p, const Vec& xi, const Vec& eta);
ViLemmaReport check_vi_lemma_bounds(double p, const Vec& xi, const Vec& eta, double constant);

struct ConjugateResult {
  double value = 0.0;
  Vec maximizer;  ///< argmax of <zeta, x> - F(x); empty when the sup is +inf
};

/// F*(zeta) = sup_x (<zeta, x> - F(x)). Returns +inf outside the effective domain
/// of truncated families. Throws ConvergenceFailure when the numeric ascent stalls.
double conjugate(const IntegrandSpec& F, const Vec& zeta, double tol = 1e-12);
ConjugateResult conjugate_solve(const IntegrandSpec& F, const Vec& zeta, double tol = 1e-12);

/// F(xi) + F*(F'(xi)) - <F'(xi), xi>; zero for convex C^1 integrands.
double fenchel_young_residual(const IntegrandSpec& F, const Vec& xi);
/// F(xi) + F*(zeta) - <zeta, xi>; nonnegative for every zeta.
double fenchel_young_gap(const IntegrandSpec& F, const Vec& xi, const Vec& zeta);

/// c_lower |z|^{q'} - offset <= F*(z) <= c_upper |z|^{p'} derived from
/// ell |x|^p <= F(x) <= L (1 + |x|^q).
struct ConjugateGrowthBounds {
  double p_prime = 2.0;
  double q_prime = 2.0;
  double lower_coeff = 0.0;
  double lower_offset = 0.0;
  double upper_coeff = 0.0;
};
ConjugateGrowthBounds conjugate_growth_bounds(const IntegrandSpec& F);

/// One member F_k of the monotone approximation sequence.
struct ApproxSequenceEntry {
  int k = 1;
  IntegrandSpec integrand;
  double mu_k = 0.0;   ///< max over the sampled box of (ell |xi|^p - F_k(xi))_+
  double radius = 0.0; ///< truncation radius R_k
};

struct ApproxOptions {
  double radius_scale = 1.0;  ///< R_k = k * radius_scale
  bool moreau = false;        ///< smooth with eps_k = 1/k^2
  int samples_per_axis = 201;
};

ApproxSequenceEntry approx_seq(const IntegrandSpec& F, int k, double box_radius,
                               const ApproxOptions& options = {});

/// Deterministic grid of points in [-radius, radius]^dim, `per_axis` per axis.
std::vector<Vec> box_grid(int dim, double radius, int per_axis);

double coercivity_defect(const IntegrandSpec& Fk, double ell, double p, double box_radius,
                         int samples_per_axis);

/// F(xi) - F(eta) - <F'(eta), xi - eta> - nu_hat |V_p(xi) - V_p(eta)|^2.
double check_h2_gap(const IntegrandSpec& F, const Vec& xi, const Vec& eta, double nu_hat);

struct H2Calibration {
  double nu_hat = 0.0;     ///< min ratio / 1.1 (or * 1.1 when the ratio is negative)
  double min_ratio = 0.0;  ///< min over samples of Bregman / |dV|^2
  bool ok = false;         ///< min_ratio > 0
};
H2Calibration calibrate_h2_constant(const IntegrandSpec& F, double box_radius, int samples,
                                    std::uint64_t seed);

struct ConvexityReport {
  bool ok = true;
  double worst_violation = 0.0;  ///< max of F(mid) - (F(a)+F(b))/2, scaled
  Vec witness_a;
  Vec witness_b;
  int samples = 0;
};
ConvexityReport sample_convexity(const IntegrandSpec& F, double box_radius, int samples,
                                 std::uint64_t seed);
/// Throws InvalidArgument with the witness segment when a midpoint test fails.
void require_convex(const IntegrandSpec& F, double box_radius = 10.0);

struct GrowthReport {
  bool ok = true;
  double worst_lower = 0.0;  ///< max of ell|xi|^p - F(xi)
  double worst_upper = 0.0;  ///< max of F(xi) - L(1+|xi|^q)
};
GrowthReport sample_growth(const IntegrandSpec& F, double box_radius, int per_axis);

/// Sampled sup of F(2 xi) / F(xi) over the box: the doubling constant C(2).
double doubling_constant(const IntegrandSpec& F, double box_radius, int per_axis);

}  // namespace pqobst
