#include "pqobst/integrand.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "descent.hpp"
#include "pqobst/errors.hpp"

namespace pqobst {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_point(const IntegrandSpec& F, const Vec& xi) {
  if (xi.size() != F.dim) {
    throw InvalidArgument("integrand: point has dimension " + std::to_string(xi.size()) +
                          ", expected " + std::to_string(F.dim));
  }
  if (!xi.allFinite()) throw InvalidArgument("integrand: non-finite point");
}

bool is_derived(Family f) {
  return f == Family::TruncatedConjugate || f == Family::MoreauSmoothed;
}

// ---------------------------------------------------------------------------
// Radial profiles f(r) with F(xi) = f(|xi|).

double radial_inverse_slope(const IntegrandSpec& F, double rho);
double radial_conjugate(const IntegrandSpec& F, double rho);

double radial_curvature(const IntegrandSpec& F, double r);

// Maximizer rho in [0, R] of rho r - base*(rho) - eps rho^2 / 2.
double moreau_radial_multiplier(const IntegrandSpec& F, double r) {
  const IntegrandSpec& B = *F.base;
  const double R = F.trunc_radius;
  const double eps = F.moreau_eps;
  if (B.family == Family::PowerP && B.p == 2.0) return std::min(R, r / (1.0 + eps));
  return detail::bisect_increasing(
      [&](double rho) { return radial_inverse_slope(B, rho) + eps * rho - r; }, 0.0, R);
}

double radial_value(const IntegrandSpec& F, double r) {
  switch (F.family) {
    case Family::PowerP:
      return std::pow(r, F.p) / F.p;
    case Family::TruncatedConjugate: {
      const IntegrandSpec& B = *F.base;
      const double rR = radial_inverse_slope(B, F.trunc_radius);
      if (r <= rR) return radial_value(B, r);
      return radial_value(B, rR) + F.trunc_radius * (r - rR);
    }
    case Family::MoreauSmoothed: {
      const double rho = moreau_radial_multiplier(F, r);
      return rho * r - radial_conjugate(*F.base, rho) - 0.5 * F.moreau_eps * rho * rho;
    }
    default:
      throw Unsupported("radial_value: family is not radial");
  }
}

double radial_slope(const IntegrandSpec& F, double r) {
  switch (F.family) {
    case Family::PowerP:
      return r == 0.0 ? 0.0 : std::pow(r, F.p - 1.0);
    case Family::TruncatedConjugate:
      return std::min(radial_slope(*F.base, r), F.trunc_radius);
    case Family::MoreauSmoothed:
      return moreau_radial_multiplier(F, r);
    default:
      throw Unsupported("radial_slope: family is not radial");
  }
}

double radial_curvature(const IntegrandSpec& F, double r) {
  switch (F.family) {
    case Family::PowerP:
      if (r == 0.0) return F.p < 2.0 ? kInf : (F.p == 2.0 ? 1.0 : 0.0);
      return (F.p - 1.0) * std::pow(r, F.p - 2.0);
    case Family::TruncatedConjugate: {
      const double rR = radial_inverse_slope(*F.base, F.trunc_radius);
      return r < rR ? radial_curvature(*F.base, r) : 0.0;
    }
    case Family::MoreauSmoothed: {
      const double rho = moreau_radial_multiplier(F, r);
      if (rho >= F.trunc_radius) return 0.0;
      const double base_curv = radial_curvature(*F.base, radial_inverse_slope(*F.base, rho));
      return 1.0 / (1.0 / base_curv + F.moreau_eps);
    }
    default:
      throw Unsupported("radial_curvature: family is not radial");
  }
}

// r such that f'(r) = rho, i.e. the derivative of the conjugate profile.
double radial_inverse_slope(const IntegrandSpec& F, double rho) {
  switch (F.family) {
    case Family::PowerP:
      return std::pow(rho, 1.0 / (F.p - 1.0));
    case Family::TruncatedConjugate:
      return radial_inverse_slope(*F.base, std::min(rho, F.trunc_radius));
    case Family::MoreauSmoothed: {
      const double c = std::min(rho, F.trunc_radius);
      return radial_inverse_slope(*F.base, c) + F.moreau_eps * c;
    }
    default:
      throw Unsupported("radial_inverse_slope: family is not radial");
  }
}

bool inside_radius(double rho, double R) { return rho <= R * (1.0 + 1e-12); }

double radial_conjugate(const IntegrandSpec& F, double rho) {
  switch (F.family) {
    case Family::PowerP: {
      const double pp = F.p / (F.p - 1.0);
      return std::pow(rho, pp) / pp;
    }
    case Family::TruncatedConjugate:
      if (!inside_radius(rho, F.trunc_radius)) return kInf;
      return radial_conjugate(*F.base, std::min(rho, F.trunc_radius));
    case Family::MoreauSmoothed: {
      if (!inside_radius(rho, F.trunc_radius)) return kInf;
      const double c = std::min(rho, F.trunc_radius);
      return radial_conjugate(*F.base, c) + 0.5 * F.moreau_eps * c * c;
    }
    default:
      throw Unsupported("radial_conjugate: family is not radial");
  }
}

// ---------------------------------------------------------------------------
// Non-radial families.

double sgn(double x) { return (x > 0) - (x < 0); }

double aniso_value(const IntegrandSpec& F, const Vec& xi) {
  const double d = xi(0) - xi(1);
  const double s = xi(0) + xi(1);
  const double weight = F.alpha_log == 0.0 ? 1.0 : std::pow(std::log1p(std::abs(xi(0))), F.alpha_log);
  return std::pow(std::abs(d), F.q) + std::pow(std::abs(s), F.p) * weight;
}

Vec aniso_grad(const IntegrandSpec& F, const Vec& xi) {
  const double d = xi(0) - xi(1);
  const double s = xi(0) + xi(1);
  const double a = std::abs(xi(0));
  const double dq = F.q * std::pow(std::abs(d), F.q - 1.0) * sgn(d);
  double ds = F.p * std::pow(std::abs(s), F.p - 1.0) * sgn(s);
  double dlog = 0.0;
  if (F.alpha_log != 0.0) {
    const double lg = std::log1p(a);
    ds *= std::pow(lg, F.alpha_log);
    if (a > 0.0) {
      dlog = std::pow(std::abs(s), F.p) * F.alpha_log * std::pow(lg, F.alpha_log - 1.0) * sgn(xi(0)) /
             (1.0 + a);
    }
  }
  Vec g(2);
  g << dq + ds + dlog, -dq + ds;
  return g;
}

struct ValueGrad {
  double value;
  Vec grad;
};

ValueGrad tab_eval(const TabulatedData& t, const Vec& xi) {
  if (t.has_gradient()) {
    double best = -kInf;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < t.points.size(); ++i) {
      const double v = t.values[i] + t.gradients[i].dot(xi - t.points[i]);
      if (v > best) {
        best = v;
        arg = i;
      }
    }
    return {best, t.gradients[arg]};
  }
  if (t.dim != 1) throw Unsupported("tabulated integrand: 2D tables need gradient columns");
  const auto& pts = t.points;
  const std::size_t n = pts.size();
  std::size_t hi = 1;
  while (hi < n - 1 && pts[hi](0) < xi(0)) ++hi;
  const std::size_t lo = hi - 1;
  const double slope = (t.values[hi] - t.values[lo]) / (pts[hi](0) - pts[lo](0));
  Vec g(1);
  g(0) = slope;
  return {t.values[lo] + slope * (xi(0) - pts[lo](0)), g};
}

Mat fd_hessian(const IntegrandSpec& F, const Vec& xi) {
  const int n = F.dim;
  const double h = 1e-5 * (1.0 + xi.norm());
  Mat H(n, n);
  for (int j = 0; j < n; ++j) {
    Vec e = Vec::Zero(n);
    e(j) = h;
    H.col(j) = (grad(F, xi + e) - grad(F, xi - e)) / (2.0 * h);
  }
  return Mat(0.5 * (H + H.transpose()));
}

// inf_eta F(eta) + R |xi - eta|, the primal form of the truncated conjugate.
ValueGrad truncated_generic(const IntegrandSpec& F, const Vec& xi) {
  const IntegrandSpec& B = *F.base;
  const double R = F.trunc_radius;
  const Vec g0 = grad(B, xi);
  const double gn = g0.norm();
  if (gn <= R) return {eval(B, xi), g0};
  auto f = [&](const Vec& eta) { return eval(B, eta) + R * (xi - eta).norm(); };
  auto df = [&](const Vec& eta) {
    const Vec diff = xi - eta;
    const double dn = diff.norm();
    Vec g = grad(B, eta);
    if (dn > 0) g -= R * diff / dn;
    return g;
  };
  const auto res = detail::minimize_armijo(f, df, Vec(xi * (R / gn)), 1e-11 * (1.0 + R), 20000);
  return {res.value, grad(B, res.x)};
}

ValueGrad moreau_generic(const IntegrandSpec& F, const Vec& xi) {
  IntegrandSpec trunc = F;
  trunc.family = Family::TruncatedConjugate;
  const double eps = F.moreau_eps;
  auto f = [&](const Vec& eta) { return truncated_generic(trunc, eta).value + (xi - eta).squaredNorm() / (2 * eps); };
  auto df = [&](const Vec& eta) { return Vec(truncated_generic(trunc, eta).grad + (eta - xi) / eps); };
  const auto res = detail::minimize_armijo(f, df, xi, 1e-11 * (1.0 + xi.norm()), 20000);
  return {res.value, Vec((xi - res.x) / eps)};
}

ConjugateResult numeric_conjugate(const IntegrandSpec& F, const Vec& zeta, double tol) {
  auto phi = [&](const Vec& x) { return eval(F, x) - zeta.dot(x); };
  auto dphi = [&](const Vec& x) { return Vec(grad(F, x) - zeta); };
  const double scale = 1.0 + zeta.norm();
  const double grad_tol = std::min(1e-9, std::sqrt(tol)) * scale;
  auto res = detail::minimize_armijo(phi, dphi, Vec::Zero(F.dim), grad_tol, 10000);
  // Newton polish: the objective is flat at rounding level near the optimum,
  // but the gradient still carries information.
  Vec x = res.x;
  Vec g = dphi(x);
  for (int it = 0; it < 30 && g.norm() > 1e-14 * scale; ++it) {
    Mat H = fd_hessian(F, x);
    H.diagonal().array() += 1e-14 * (1.0 + H.norm());
    const Vec step = H.ldlt().solve(g);
    if (!step.allFinite()) break;
    const Vec trial = x - step;
    const Vec gt = dphi(trial);
    if (!(gt.norm() < g.norm())) break;
    x = trial;
    g = gt;
  }
  const double gn = g.norm();
  const double value = -phi(x);
  if (gn > 1e-6 * scale) {
    throw ConvergenceFailure("conjugate: ascent did not converge", value, gn * (1.0 + x.norm()));
  }
  return {value, x};
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cell.erase(0, cell.find_first_not_of(" \t\r"));
    cell.erase(cell.find_last_not_of(" \t\r") + 1);
    out.push_back(cell);
  }
  return out;
}

double parse_double(const std::string& s) {
  std::istringstream in(s);
  in.imbue(std::locale::classic());
  double v = 0;
  in >> v;
  if (in.fail() || !in.eof()) throw InvalidArgument("tabulated csv: bad number '" + s + "'");
  return v;
}

Vec random_direction(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> normal;
  Vec v(n);
  do {
    for (int i = 0; i < n; ++i) v(i) = normal(rng);
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

Vec uniform_in_box(std::mt19937_64& rng, int n, double radius) {
  std::uniform_real_distribution<double> u(-radius, radius);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(Family family) {
  switch (family) {
    case Family::PowerP: return "PowerP";
    case Family::AnisotropicLogExample: return "AnisotropicLogExample";
    case Family::TruncatedConjugate: return "TruncatedConjugate";
    case Family::MoreauSmoothed: return "MoreauSmoothed";
    case Family::UserTabulated: return "UserTabulated";
  }
  return "?";
}

Family family_from_string(const std::string& name) {
  for (Family f : {Family::PowerP, Family::AnisotropicLogExample, Family::TruncatedConjugate,
                   Family::MoreauSmoothed, Family::UserTabulated}) {
    if (to_string(f) == name) return f;
  }
  throw InvalidArgument("unknown integrand family '" + name + "'");
}

TabulatedData read_tabulated_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("tabulated csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("tabulated csv: missing header");
  const auto header = split_csv(line);
  const auto f_col = std::find(header.begin(), header.end(), "F");
  if (f_col == header.end()) throw InvalidArgument("tabulated csv: header needs an 'F' column");
  const int dim = static_cast<int>(f_col - header.begin());
  const int n_grad = static_cast<int>(header.size()) - dim - 1;
  if (dim < 1 || dim > 2 || (n_grad != 0 && n_grad != dim)) {
    throw InvalidArgument("tabulated csv: expected xi1[,xi2],F[,dF1[,dF2]] columns");
  }
  TabulatedData t;
  t.dim = dim;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) throw InvalidArgument("tabulated csv: ragged row");
    Vec x(dim);
    for (int i = 0; i < dim; ++i) x(i) = parse_double(cells[i]);
    t.points.push_back(x);
    t.values.push_back(parse_double(cells[dim]));
    if (n_grad > 0) {
      Vec g(dim);
      for (int i = 0; i < dim; ++i) g(i) = parse_double(cells[dim + 1 + i]);
      t.gradients.push_back(g);
    }
  }
  if (t.points.size() < 2) throw InvalidArgument("tabulated csv: need at least two rows");
  if (dim == 1 && !t.has_gradient()) {
    std::vector<std::size_t> order(t.points.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return t.points[a](0) < t.points[b](0); });
    TabulatedData sorted = t;
    for (std::size_t i = 0; i < order.size(); ++i) {
      sorted.points[i] = t.points[order[i]];
      sorted.values[i] = t.values[order[i]];
    }
    t = std::move(sorted);
  }
  return t;
}

IntegrandSpec power_p(double p, int dim) {
  IntegrandSpec F;
  F.family = Family::PowerP;
  F.p = F.q = p;
  F.ell = F.L = 1.0 / p;
  F.nu = 1.0;
  F.dim = dim;
  validate(F);
  return F;
}

IntegrandSpec anisotropic_log(double p, double q, double alpha) {
  IntegrandSpec F;
  F.family = Family::AnisotropicLogExample;
  F.p = p;
  F.q = q;
  F.alpha_log = alpha;
  F.dim = 2;
  F.ell = 1.0;
  F.L = 1.0;
  if (!(p > 1.0 && q >= p && alpha >= 0.0)) {
    throw InvalidArgument("anisotropic_log: need 1 < p <= q and alpha >= 0");
  }
  double ell = kInf;
  double L = 0.0;
  for (const Vec& xi : box_grid(2, 10.0, 81)) {
    const double r = xi.norm();
    if (r == 0.0) continue;
    const double v = aniso_value(F, xi);
    ell = std::min(ell, v / std::pow(r, p));
    L = std::max(L, v / (1.0 + std::pow(r, q)));
  }
  F.ell = std::max(ell, 1e-12);
  F.L = std::max(L, F.ell);
  validate(F);
  return F;
}

IntegrandSpec truncated_conjugate(const IntegrandSpec& base, double radius) {
  if (is_derived(base.family)) throw InvalidArgument("truncated_conjugate: base must not be derived");
  IntegrandSpec F = base;
  F.family = Family::TruncatedConjugate;
  F.trunc_radius = radius;
  F.moreau_eps = 0.0;
  F.base = std::make_shared<const IntegrandSpec>(base);
  F.table.reset();
  validate(F);
  return F;
}

IntegrandSpec moreau_smoothed(const IntegrandSpec& base, double radius, double eps) {
  IntegrandSpec F = truncated_conjugate(base, radius);
  F.family = Family::MoreauSmoothed;
  F.moreau_eps = eps;
  validate(F);
  return F;
}

IntegrandSpec user_tabulated(TabulatedData data, double p, double q) {
  IntegrandSpec F;
  F.family = Family::UserTabulated;
  F.p = p;
  F.q = q;
  F.dim = data.dim;
  F.table = std::make_shared<const TabulatedData>(std::move(data));
  validate(F);
  return F;
}

void validate(const IntegrandSpec& F) {
  if (F.dim != 1 && F.dim != 2) throw InvalidArgument("integrand: dim must be 1 or 2");
  if (!(F.p > 1.0) || !(F.q >= F.p)) throw InvalidArgument("integrand: need 1 < p <= q");
  if (!(F.ell > 0.0) || !(F.L >= F.ell)) throw InvalidArgument("integrand: need 0 < ell <= L");
  if (!(F.nu > 0.0)) throw InvalidArgument("integrand: need nu > 0");
  switch (F.family) {
    case Family::AnisotropicLogExample:
      if (F.dim != 2) throw InvalidArgument("AnisotropicLogExample is defined on R^2");
      if (F.alpha_log < 0.0) throw InvalidArgument("integrand: alpha_log must be >= 0");
      break;
    case Family::MoreauSmoothed:
      if (!(F.moreau_eps > 0.0)) throw InvalidArgument("MoreauSmoothed: need moreau_eps > 0");
      [[fallthrough]];
    case Family::TruncatedConjugate:
      if (!(F.trunc_radius > 0.0)) throw InvalidArgument("truncated integrand: need trunc_radius > 0");
      if (!F.base || is_derived(F.base->family)) throw InvalidArgument("truncated integrand: bad base");
      if (F.base->dim != F.dim) throw InvalidArgument("truncated integrand: base dim mismatch");
      break;
    case Family::UserTabulated:
      if (!F.table || F.table->dim != F.dim) throw InvalidArgument("UserTabulated: missing table");
      break;
    case Family::PowerP:
      break;
  }
}

bool is_radial(const IntegrandSpec& F) {
  switch (F.family) {
    case Family::PowerP: return true;
    case Family::TruncatedConjugate:
    case Family::MoreauSmoothed: return is_radial(*F.base);
    default: return false;
  }
}

double eval(const IntegrandSpec& F, const Vec& xi) {
  check_point(F, xi);
  if (is_radial(F)) return radial_value(F, xi.norm());
  switch (F.family) {
    case Family::AnisotropicLogExample: return aniso_value(F, xi);
    case Family::UserTabulated: return tab_eval(*F.table, xi).value;
    case Family::TruncatedConjugate: return truncated_generic(F, xi).value;
    case Family::MoreauSmoothed: return moreau_generic(F, xi).value;
    default: break;
  }
  throw Unsupported("eval: unhandled family");
}

Vec grad(const IntegrandSpec& F, const Vec& xi) {
  check_point(F, xi);
  if (is_radial(F)) {
    const double r = xi.norm();
    if (r == 0.0) return Vec::Zero(F.dim);
    return Vec(radial_slope(F, r) / r * xi);
  }
  switch (F.family) {
    case Family::AnisotropicLogExample: return aniso_grad(F, xi);
    case Family::UserTabulated:
      if (!F.table->has_gradient()) throw Unsupported("grad: tabulated integrand has no gradient data");
      return tab_eval(*F.table, xi).grad;
    case Family::TruncatedConjugate: return truncated_generic(F, xi).grad;
    case Family::MoreauSmoothed: return moreau_generic(F, xi).grad;
    default: break;
  }
  throw Unsupported("grad: unhandled family");
}

Mat hessian(const IntegrandSpec& F, const Vec& xi) {
  check_point(F, xi);
  const int n = F.dim;
  if (is_radial(F)) {
    const double r = xi.norm();
    if (r == 0.0) return Mat(radial_curvature(F, 0.0) * Mat::Identity(n, n));
    const Vec u = xi / r;
    const Mat P = u * u.transpose();
    const double tangential = radial_slope(F, r) / r;
    return Mat(radial_curvature(F, r) * P + tangential * (Mat::Identity(n, n) - P));
  }
  if (F.family == Family::UserTabulated) return Mat::Zero(n, n);
  return fd_hessian(F, xi);
}

// ---------------------------------------------------------------------------

double calibrate_vi_constant(int n, double p, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 1.0;
  for (int s = 0; s < samples; ++s) {
    const Vec xi = random_direction(rng, n) * log_uniform(rng, 1e-3, 1e3);
    Vec eta;
    switch (s % 4) {
      case 0: eta = random_direction(rng, n) * log_uniform(rng, 1e-3, 1e3); break;
      case 1: eta = xi + random_direction(rng, n) * log_uniform(rng, 1e-6, 1.0) * (1.0 + xi.norm()); break;
      case 2: eta = -xi * (0.5 + unit(rng)); break;
      default: eta = xi * (4.0 * unit(rng) - 2.0); break;
    }
    const double dn2 = (xi - eta).squaredNorm();
    if (dn2 < 1e-24 * (1.0 + xi.squaredNorm())) continue;
    const double r = (vp_map(p, xi) - vp_map(p, eta)).squaredNorm() / dn2;
    const double b = std::pow(1.0 + xi.squaredNorm() + eta.squaredNorm(), (p - 2.0) / 2.0);
    worst = std::max({worst, r / b, b / r});
  }
  return 1.1 * worst;
}

double vi_lemma_constant(int n, double p) {
  static std::mutex mutex;
  static std::map<std::pair<int, double>, double> cache;
  std::lock_guard<std::mutex> lock(mutex);
  const auto key = std::make_pair(n, p);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, calibrate_vi_constant(n, p, 100000, 20240601)).first;
  return it->second;
}

ViLemmaReport check_vi_lemma_bounds(double p, const Vec& xi, const Vec& eta) {
  return check_vi_lemma_bounds(p, xi, eta, vi_lemma_constant(static_cast<int>(xi.size()), p));
}

ViLemmaReport check_vi_lemma_bounds(double p, const Vec& xi, const Vec& eta, double constant) {
  if (xi.size() != eta.size()) throw InvalidArgument("check_vi_lemma_bounds: dimension mismatch");
  const double dn2 = (xi - eta).squaredNorm();
  if (dn2 == 0.0) throw InvalidArgument("check_vi_lemma_bounds: xi == eta");
  ViLemmaReport rep;
  rep.constant = constant;
  const double r = (vp_map(p, xi) - vp_map(p, eta)).squaredNorm() / dn2;
  rep.weight = std::pow(1.0 + xi.squaredNorm() + eta.squaredNorm(), (p - 2.0) / 2.0);
  rep.ratio = r / rep.weight;
  rep.lower_ok = r >= rep.weight / constant;
  rep.upper_ok = r <= constant * rep.weight;
  return rep;
}

// ---------------------------------------------------------------------------

ConjugateResult conjugate_solve(const IntegrandSpec& F, const Vec& zeta, double tol) {
  check_point(F, zeta);
  if (!(tol > 0)) throw InvalidArgument("conjugate: tol must be positive");
  if (is_radial(F)) {
    const double rho = zeta.norm();
    const double value = radial_conjugate(F, rho);
    if (!std::isfinite(value)) return {value, Vec()};
    if (rho == 0.0) return {value, Vec::Zero(F.dim)};
    return {value, Vec(radial_inverse_slope(F, rho) / rho * zeta)};
  }
  switch (F.family) {
    case Family::UserTabulated: {
      const auto& t = *F.table;
      double best = -kInf;
      std::size_t arg = 0;
      for (std::size_t i = 0; i < t.points.size(); ++i) {
        const double v = zeta.dot(t.points[i]) - t.values[i];
        if (v > best) {
          best = v;
          arg = i;
        }
      }
      return {best, t.points[arg]};
    }
    case Family::TruncatedConjugate:
    case Family::MoreauSmoothed: {
      if (!inside_radius(zeta.norm(), F.trunc_radius)) return {kInf, Vec()};
      Vec z = zeta;
      if (z.norm() > F.trunc_radius) z *= F.trunc_radius / z.norm();
      ConjugateResult base = conjugate_solve(*F.base, z, tol);
      if (F.family == Family::MoreauSmoothed) {
        base.value += 0.5 * F.moreau_eps * z.squaredNorm();
        base.maximizer += F.moreau_eps * z;
      }
      return base;
    }
    case Family::AnisotropicLogExample:
      return numeric_conjugate(F, zeta, tol);
    default:
      break;
  }
  throw Unsupported("conjugate: unhandled family");
}

double conjugate(const IntegrandSpec& F, const Vec& zeta, double tol) {
  return conjugate_solve(F, zeta, tol).value;
}

double fenchel_young_residual(const IntegrandSpec& F, const Vec& xi) {
  const Vec z = grad(F, xi);
  return eval(F, xi) + conjugate(F, z) - z.dot(xi);
}

double fenchel_young_gap(const IntegrandSpec& F, const Vec& xi, const Vec& zeta) {
  return eval(F, xi) + conjugate(F, zeta) - zeta.dot(xi);
}

ConjugateGrowthBounds conjugate_growth_bounds(const IntegrandSpec& F) {
  ConjugateGrowthBounds b;
  b.p_prime = F.p / (F.p - 1.0);
  b.q_prime = F.q / (F.q - 1.0);
  b.upper_coeff = std::pow(F.ell * F.p, 1.0 - b.p_prime) / b.p_prime;
  b.lower_coeff = std::pow(F.L * F.q, 1.0 - b.q_prime) / b.q_prime;
  b.lower_offset = F.L;
  return b;
}

// ---------------------------------------------------------------------------

std::vector<Vec> box_grid(int dim, double radius, int per_axis) {
  if (per_axis < 2) throw InvalidArgument("box_grid: need at least two points per axis");
  std::vector<double> axis(per_axis);
  for (int i = 0; i < per_axis; ++i) axis[i] = -radius + 2.0 * radius * i / (per_axis - 1);
  std::vector<Vec> pts;
  if (dim == 1) {
    for (double x : axis) pts.push_back((Vec(1) << x).finished());
  } else {
    pts.reserve(static_cast<std::size_t>(per_axis) * per_axis);
    for (double y : axis)
      for (double x : axis) pts.push_back((Vec(2) << x, y).finished());
  }
  return pts;
}

double coercivity_defect(const IntegrandSpec& Fk, double ell, double p, double box_radius,
                         int samples_per_axis) {
  double mu = 0.0;
  for (const Vec& xi : box_grid(Fk.dim, box_radius, samples_per_axis)) {
    mu = std::max(mu, ell * std::pow(xi.norm(), p) - eval(Fk, xi));
  }
  return mu;
}

ApproxSequenceEntry approx_seq(const IntegrandSpec& F, int k, double box_radius,
                               const ApproxOptions& options) {
  if (k < 1) throw InvalidArgument("approx_seq: k must be >= 1");
  if (!(box_radius > 0)) throw InvalidArgument("approx_seq: box_radius must be positive");
  ApproxSequenceEntry e;
  e.k = k;
  e.radius = k * options.radius_scale;
  e.integrand = options.moreau ? moreau_smoothed(F, e.radius, 1.0 / (double(k) * k))
                               : truncated_conjugate(F, e.radius);
  e.mu_k = coercivity_defect(e.integrand, F.ell, F.p, box_radius, options.samples_per_axis);
  return e;
}

double check_h2_gap(const IntegrandSpec& F, const Vec& xi, const Vec& eta, double nu_hat) {
  const double bregman = eval(F, xi) - eval(F, eta) - grad(F, eta).dot(xi - eta);
  return bregman - nu_hat * (vp_map(F.p, xi) - vp_map(F.p, eta)).squaredNorm();
}

H2Calibration calibrate_h2_constant(const IntegrandSpec& F, double box_radius, int samples,
                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double min_ratio = kInf;
  for (int s = 0; s < samples; ++s) {
    const Vec xi = uniform_in_box(rng, F.dim, box_radius);
    const Vec eta = (s % 2 == 0)
                        ? uniform_in_box(rng, F.dim, box_radius)
                        : Vec(xi + random_direction(rng, F.dim) * log_uniform(rng, 1e-3, 1.0));
    const double dv = (vp_map(F.p, xi) - vp_map(F.p, eta)).squaredNorm();
    if (dv < 1e-20) continue;
    const double bregman = eval(F, xi) - eval(F, eta) - grad(F, eta).dot(xi - eta);
    min_ratio = std::min(min_ratio, bregman / dv);
  }
  H2Calibration c;
  c.min_ratio = min_ratio;
  c.ok = min_ratio > 0;
  c.nu_hat = c.ok ? min_ratio / 1.1 : min_ratio * 1.1;
  return c;
}

ConvexityReport sample_convexity(const IntegrandSpec& F, double box_radius, int samples,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ConvexityReport rep;
  rep.samples = samples;
  for (int s = 0; s < samples; ++s) {
    const Vec a = uniform_in_box(rng, F.dim, box_radius);
    const Vec b = (s % 2 == 0)
                      ? uniform_in_box(rng, F.dim, box_radius)
                      : Vec(a + random_direction(rng, F.dim) * log_uniform(rng, 1e-3, 1.0) * box_radius / 10);
    const double fa = eval(F, a);
    const double fb = eval(F, b);
    const double fm = eval(F, Vec(0.5 * (a + b)));
    const double excess = (fm - 0.5 * (fa + fb)) / (1.0 + std::abs(fa) + std::abs(fb));
    if (excess > rep.worst_violation) {
      rep.worst_violation = excess;
      rep.witness_a = a;
      rep.witness_b = b;
    }
  }
  rep.ok = rep.worst_violation <= 1e-12;
  return rep;
}

void require_convex(const IntegrandSpec& F, double box_radius) {
  const auto rep = sample_convexity(F, box_radius, 20000, 7);
  if (!rep.ok) {
    std::ostringstream msg;
    msg.precision(17);
    msg << to_string(F.family) << " failed the midpoint convexity test on the segment ["
        << rep.witness_a.transpose() << "] -- [" << rep.witness_b.transpose()
        << "], scaled excess " << rep.worst_violation;
    throw InvalidArgument(msg.str());
  }
}

GrowthReport sample_growth(const IntegrandSpec& F, double box_radius, int per_axis) {
  GrowthReport rep;
  rep.worst_lower = -kInf;
  rep.worst_upper = -kInf;
  for (const Vec& xi : box_grid(F.dim, box_radius, per_axis)) {
    const double r = xi.norm();
    const double v = eval(F, xi);
    rep.worst_lower = std::max(rep.worst_lower, F.ell * std::pow(r, F.p) - v);
    rep.worst_upper = std::max(rep.worst_upper, v - F.L * (1.0 + std::pow(r, F.q)));
  }
  rep.ok = rep.worst_lower <= 1e-12 && rep.worst_upper <= 1e-12;
  return rep;
}

double doubling_constant(const IntegrandSpec& F, double box_radius, int per_axis) {
  double c = 0.0;
  for (const Vec& xi : box_grid(F.dim, box_radius, per_axis)) {
    const double v = eval(F, xi);
    if (v <= 1e-300) continue;
    c = std::max(c, eval(F, Vec(2.0 * xi)) / v);
  }
  return c;
}

}  // namespace pqobst
