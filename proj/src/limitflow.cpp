#include "pqobst/limitflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "pqobst/errors.hpp"
#include "pqobst/regularity.hpp"

namespace pqobst {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

Verdict insufficient(const std::string& name) { return {name, false, "insufficient data"}; }

bool record_ok(const SweepRecord& r) { return r.failure.empty(); }

}  // namespace

bool SweepReport::all_ok() const {
  if (verdicts.empty()) return false;
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.ok; });
}

std::vector<NodalField> default_competitors(const ObstacleProblem& problem, const NodalField& reference,
                                            int hats, std::uint64_t seed) {
  const Mesh& mesh = problem.mesh;
  std::vector<NodalField> out;
  out.push_back(reference);
  const auto& interior = mesh.interior_nodes();
  if (!interior.empty()) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, interior.size() - 1);
    for (int h = 0; h < hats; ++h) {
      const int node = interior[pick(rng)];
      for (double t : {0.1, 1.0}) {
        NodalField z = reference;
        z(node) += t;
        out.push_back(std::move(z));
      }
    }
  }
  out.push_back(project(problem, harmonic_extension(mesh, problem.u0).cwiseMax(problem.psi)));
  return out;
}

SweepReport run_sweep(const ObstacleProblem& problem, const std::vector<int>& k_list, const SweepOptions& options) {
  if (k_list.empty()) throw InvalidArgument("run_sweep: empty k list");
  for (std::size_t j = 0; j < k_list.size(); ++j) {
    if (k_list[j] < 1 || (j > 0 && k_list[j] <= k_list[j - 1])) {
      throw InvalidArgument("run_sweep: k values must be positive and strictly increasing");
    }
  }
  const IntegrandSpec& F = problem.integrand;
  const Mesh& mesh = problem.mesh;
  SweepReport rep;
  rep.datum_energy = energy(problem, problem.u0);
  rep.domain_measure = mesh.measure();
  rep.doubling_constant = doubling_constant(F, options.box_radius, mesh.dim() == 1 ? 201 : options.samples_per_axis);

  const double qprime = F.q / (F.q - 1.0);
  std::vector<IntegrandSpec> Fk;
  for (int k : k_list) {
    SweepRecord r;
    r.k = k;
    const ApproxSequenceEntry e =
        approx_seq(F, k, options.box_radius, {options.radius_scale, options.moreau, options.samples_per_axis});
    r.mu_k = e.mu_k;
    r.radius = e.radius;
    Fk.push_back(e.integrand);
    const ObstacleProblem Pk{mesh, e.integrand, problem.psi, problem.u0};
    try {
      const Solution s = solve(Pk, options.solve);
      r.u = s.u;
      r.energy_Fk = s.energy;
      r.energy_F = energy(problem, s.u);
      const DualCertificate cert = duality_gap(Pk, s.u);
      // Past the truncation radius F_k is affine along rays and the minimizer is
      // degenerate, so a stalled line search is accepted on the certificate alone.
      const double slack = options.tol * (1.0 + std::abs(s.energy));
      r.converged = s.converged || (s.stop_reason == "line_search_stalled" &&
                                    cert.div_violation <= options.tol && std::abs(cert.gap) <= slack);
      if (!r.converged) r.failure = "solver: " + s.stop_reason;
      r.gap_k = cert.gap;
      r.div_violation_k = cert.div_violation;
      const CellField Du = cell_gradient(mesh, s.u);
      for (int c = 0; c < mesh.num_cells(); ++c) {
        const Vec sig = cert.sigma.row(c).transpose();
        const double meas = mesh.cell(c).measure;
        r.fstar_sigma_L1 += meas * conjugate(F, sig);
        r.sigma_Lqprime += meas * std::pow(sig.norm(), qprime);
        r.max_grad = std::max(r.max_grad, Du.row(c).norm());
      }
    } catch (const ConvergenceFailure& ex) {
      r.failure = std::string("numerical: ") + ex.what();
    } catch (const Unsupported& ex) {
      r.failure = std::string("unsupported: ") + ex.what();
    }
    rep.records.push_back(std::move(r));
  }

  const SweepRecord& last = rep.records.back();
  rep.reference_k = last.k;
  if (record_ok(last)) rep.reference = last.u;

  if (rep.reference.size() > 0) {
    const CellField Dref = cell_gradient(mesh, rep.reference);
    const double p = F.p;
    const double c = vi_lemma_constant(mesh.dim(), p);
    for (auto& r : rep.records) {
      if (r.u.size() == 0) continue;
      const CellField Du = cell_gradient(mesh, r.u);
      double weight = 0.0;
      for (int cc = 0; cc < mesh.num_cells(); ++cc) {
        const double meas = mesh.cell(cc).measure;
        const Vec a = Du.row(cc).transpose(), b = Dref.row(cc).transpose();
        r.vp_dist += meas * (vp_map(p, a) - vp_map(p, b)).squaredNorm();
        r.strong_lhs += meas * std::pow((a - b).norm(), p);
        weight += meas * std::pow(1.0 + a.squaredNorm() + b.squaredNorm(), p / 2.0);
      }
      // |a - b|^p <= c 2^{(p-2)/2} |V(a) - V(b)|^2 for p >= 2; Hoelder otherwise.
      r.strong_rhs = p >= 2.0 ? c * std::pow(2.0, (p - 2.0) / 2.0) * r.vp_dist
                              : std::pow(c * r.vp_dist, p / 2.0) * std::pow(weight, (2.0 - p) / 2.0);
    }

    std::vector<NodalField> comps = default_competitors(problem, rep.reference, options.hat_competitors, options.seed);
    for (const auto& z : options.competitors) {
      if (z.size() == mesh.num_nodes() && is_admissible(problem, z, 1e-12)) {
        comps.push_back(z);
      } else {
        ++rep.skipped_competitors;
      }
    }
    rep.competitors = static_cast<int>(comps.size());
    for (std::size_t j = 0; j < rep.records.size(); ++j) {
      auto& r = rep.records[j];
      if (r.u.size() == 0) continue;
      const ObstacleProblem Pk{mesh, Fk[j], problem.psi, problem.u0};
      r.vi_min_k = kInf;
      for (const auto& z : comps) r.vi_min_k = std::min(r.vi_min_k, check_vi(Pk, r.u, z));
    }

    if (!options.moreau) {
      for (int j = static_cast<int>(rep.records.size()) - 1; j >= 0; --j) {
        const auto& r = rep.records[j];
        if (!record_ok(r) || !(r.radius > r.max_grad * (1.0 + 1e-12))) break;
        rep.stabilization_index = j;
      }
    }
  }

  const double tol = options.tol;
  std::vector<std::string> failed;
  for (const auto& r : rep.records) {
    if (!record_ok(r)) failed.push_back("k=" + std::to_string(r.k) + " (" + r.failure + ")");
  }
  Verdict solves{"solves", failed.empty(), failed.empty() ? "all records certified" : ""};
  for (const auto& f : failed) solves.detail += (solves.detail.empty() ? "" : "; ") + f;
  rep.verdicts.push_back(solves);

  if (rep.records.size() < 2) {
    for (const char* name : {"energy_convergence", "strong_convergence", "gap_chain", "divergence_sign",
                             "dual_bounds", "limit_vi", "mu_monotone", "stabilization"}) {
      rep.verdicts.push_back(insufficient(name));
    }
    return rep;
  }

  rep.verdicts.push_back(check_energy_convergence(rep, tol));
  rep.verdicts.push_back(check_strong_convergence(rep, tol));

  Verdict gaps{"gap_chain", true, ""};
  Verdict divs{"divergence_sign", true, ""};
  double worst_gap = 0.0, worst_div = 0.0;
  for (const auto& r : rep.records) {
    if (!record_ok(r)) continue;
    if (r.gap_k > std::max(tol, 1e-6 * std::abs(r.energy_Fk)) || r.gap_k < -1e-10) gaps.ok = false;
    if (r.div_violation_k > tol) divs.ok = false;
    worst_gap = std::max(worst_gap, std::abs(r.gap_k));
    worst_div = std::max(worst_div, r.div_violation_k);
  }
  gaps.detail = "max |gap_k| = " + fmt(worst_gap);
  divs.detail = "max div_violation_k = " + fmt(worst_div);
  rep.verdicts.push_back(gaps);
  rep.verdicts.push_back(divs);

  rep.verdicts.push_back(check_dual_bounds(rep, rep.datum_energy, F));
  rep.verdicts.push_back(check_limit_vi(problem, rep, {}, tol));

  Verdict mu{"mu_monotone", true, "mu_k non-increasing"};
  for (std::size_t j = 1; j < rep.records.size(); ++j) {
    if (rep.records[j].mu_k > rep.records[j - 1].mu_k + 1e-12) {
      mu.ok = false;
      mu.detail = "mu_k increases at k=" + std::to_string(rep.records[j].k);
    }
  }
  rep.verdicts.push_back(mu);

  Verdict stab{"stabilization", rep.stabilization_index >= 0, ""};
  stab.detail = stab.ok ? "R_k exceeds the gradient range from k=" + std::to_string(rep.records[rep.stabilization_index].k)
                        : "R_k never exceeds the gradient range of u_k";
  rep.verdicts.push_back(stab);
  return rep;
}

Verdict check_energy_convergence(const SweepReport& report, double tol) {
  const std::string name = "energy_convergence";
  if (report.records.size() < 2) return insufficient(name);
  const auto& recs = report.records;
  if (!std::all_of(recs.begin(), recs.end(), record_ok)) return {name, false, "failed records"};
  const double ref_F = recs.back().energy_F;
  for (std::size_t j = 0; j < recs.size(); ++j) {
    const auto& r = recs[j];
    const double slack = 1e-12 * (1.0 + std::abs(r.energy_Fk));
    if (j > 0 && r.energy_Fk < recs[j - 1].energy_Fk - slack) {
      return {name, false, "energy_Fk decreases at k=" + std::to_string(r.k)};
    }
    if (r.energy_Fk > r.energy_F + slack) return {name, false, "energy_Fk > energy_F at k=" + std::to_string(r.k)};
    if (r.energy_Fk > ref_F + slack) return {name, false, "energy_Fk above the limit energy at k=" + std::to_string(r.k)};
  }
  const double last_gap = std::abs(recs.back().energy_Fk - ref_F);
  const bool ok = last_gap <= tol * (1.0 + std::abs(ref_F));
  return {name, ok, "|energy_Fk - energy_F(ref)| = " + fmt(last_gap)};
}

Verdict check_strong_convergence(const SweepReport& report, double tol) {
  const std::string name = "strong_convergence";
  if (report.records.size() < 2) return insufficient(name);
  if (report.stabilization_index < 0) return {name, false, "no stabilization, vp_dist limit not observable"};
  double worst = 0.0;
  for (std::size_t j = 0; j < report.records.size(); ++j) {
    const auto& r = report.records[j];
    if (!record_ok(r)) return {name, false, "failed record k=" + std::to_string(r.k)};
    if (r.strong_lhs > r.strong_rhs * (1.0 + 1e-9) + 1e-14) {
      return {name, false, "gradient distance exceeds the V_p bound at k=" + std::to_string(r.k)};
    }
    if (static_cast<int>(j) >= report.stabilization_index) worst = std::max(worst, r.vp_dist);
  }
  return {name, worst <= tol, "max vp_dist after stabilization = " + fmt(worst)};
}

Verdict check_dual_bounds(const SweepReport& report, double u0_energy, const IntegrandSpec& F) {
  const std::string name = "dual_bounds";
  if (report.records.empty()) return insufficient(name);
  const double C = report.doubling_constant;
  const double fstar_bound = C * u0_energy;
  const auto g = conjugate_growth_bounds(F);
  const double lq_bound = (fstar_bound + g.lower_offset * report.domain_measure) / g.lower_coeff;
  double worst_f = 0.0, worst_s = 0.0;
  for (const auto& r : report.records) {
    if (!record_ok(r)) continue;
    worst_f = std::max(worst_f, r.fstar_sigma_L1);
    worst_s = std::max(worst_s, r.sigma_Lqprime);
  }
  const bool ok = worst_f <= fstar_bound * (1.0 + 1e-12) + 1e-14 && worst_s <= lq_bound * (1.0 + 1e-12);
  return {name, ok,
          "max int F*(sigma_k) = " + fmt(worst_f) + " <= " + fmt(fstar_bound) + " (C = " + fmt(C) +
              "); max int |sigma_k|^q' = " + fmt(worst_s) + " <= " + fmt(lq_bound)};
}

Verdict check_limit_vi(const ObstacleProblem& problem, const SweepReport& report,
                       const std::vector<NodalField>& competitors, double tol) {
  const std::string name = "limit_vi";
  if (report.records.size() < 2) return insufficient(name);
  if (report.reference.size() == 0) return {name, false, "no reference solution"};
  double vmin = kInf;
  int skipped = 0;
  for (const auto& z : competitors) {
    if (z.size() != problem.mesh.num_nodes() || !is_admissible(problem, z, 1e-12)) {
      ++skipped;
      continue;
    }
    vmin = std::min(vmin, check_vi(problem, report.reference, z));
  }
  for (const auto& r : report.records) {
    if (record_ok(r)) vmin = std::min(vmin, r.vi_min_k);
  }
  bool stable = report.stabilization_index >= 0;
  const double ref_vi = report.records.back().vi_min_k;
  if (stable) {
    for (std::size_t j = report.stabilization_index; j < report.records.size(); ++j) {
      stable = stable && std::abs(report.records[j].vi_min_k - ref_vi) <= 1e-6 * (1.0 + std::abs(ref_vi));
    }
  }
  std::string detail = "min VI value = " + fmt(vmin);
  if (skipped + report.skipped_competitors > 0) {
    detail += "; skipped " + std::to_string(skipped + report.skipped_competitors) + " inadmissible competitors";
  }
  if (!stable) detail += "; vi_min_k not stabilized";
  return {name, vmin >= -tol && stable, detail};
}

}  // namespace pqobst
