#include "pqobst/cli.hpp"

#include <cmath>
#include <ostream>
#include <set>

#include "pqobst/errors.hpp"

namespace pqobst {

namespace fs = std::filesystem;

namespace {

// Rejects keys outside `allowed` so that typos do not silently fall back to defaults.
void check_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw InvalidArgument("config: '" + where + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key)) throw InvalidArgument("config: unknown key '" + where + "." + key + "'");
  }
}

template <class T>
void read(const Json& obj, const char* key, T& dst) {
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidArgument(std::string("config: bad value for '") + key + "'");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

FieldSource parse_source(const Json& j, const std::string& where, const fs::path& base) {
  FieldSource src;
  if (j.is_string()) {
    src.preset = j.get<std::string>();
    return src;
  }
  check_keys(j, where, {"preset", "coefficients", "csv"});
  read(j, "preset", src.preset);
  read(j, "coefficients", src.coefficients);
  if (j.contains("csv")) {
    std::string p;
    read(j, "csv", p);
    src.csv = resolve(base, p);
    src.preset.clear();
  }
  return src;
}

NodalField build_field(const Mesh& mesh, const FieldSource& src, const std::string& what) {
  if (!src.csv.empty()) {
    if (!fs::exists(src.csv)) throw InvalidArgument(what + " file not found: " + src.csv.string());
    return read_nodal_csv(mesh, src.csv);
  }
  const auto& c = src.coefficients;
  if (src.preset == "parabola") return interpolate(mesh, [](const Vec& x) { return 0.25 - x.squaredNorm(); });
  if (src.preset == "zero") return NodalField::Zero(mesh.num_nodes());
  if (src.preset == "constant") {
    if (c.size() != 1) throw InvalidArgument(what + ": constant preset takes one coefficient");
    return NodalField::Constant(mesh.num_nodes(), c[0]);
  }
  if (src.preset == "affine") {
    if (c.size() != static_cast<std::size_t>(mesh.dim()) + 1) {
      throw InvalidArgument(what + ": affine preset takes dim + 1 coefficients");
    }
    return interpolate(mesh, [&c](const Vec& x) {
      double v = c[0];
      for (Eigen::Index a = 0; a < x.size(); ++a) v += c[a + 1] * x(a);
      return v;
    });
  }
  throw InvalidArgument(what + ": unknown preset '" + src.preset + "'");
}

bool certificate_ok(const DualCertificate& cert) {
  return cert.gap <= std::max(1e-8, 1e-6 * std::abs(cert.energy)) && cert.gap >= -1e-10 &&
         cert.div_violation <= 1e-8;
}

void put(const RunConfig& config, const std::string& name, const std::string& content) {
  write_file_atomic(config.output / name, content);
}

}  // namespace

RunConfig parse_config(const Json& doc, const fs::path& base_dir) {
  check_keys(doc, "config",
             {"domain", "integrand", "obstacle", "boundary", "solver", "sweep", "probe", "conjugate", "output",
              "seed"});
  RunConfig c;
  if (doc.contains("domain")) {
    const Json& d = doc["domain"];
    check_keys(d, "domain", {"dim", "bounds", "resolution"});
    read(d, "dim", c.dim);
    if (d.contains("bounds")) {
      c.bounds.clear();
      for (const auto& b : d["bounds"]) {
        if (!b.is_array() || b.size() != 2) throw InvalidArgument("config: bounds are [lo, hi] pairs");
        c.bounds.emplace_back(b[0].get<double>(), b[1].get<double>());
      }
    } else {
      c.bounds.assign(c.dim, {-1.0, 1.0});
    }
    if (d.contains("resolution")) {
      read(d, "resolution", c.resolution);
    } else {
      c.resolution.assign(c.dim, c.dim == 1 ? 512 : 64);
    }
  }
  if (doc.contains("integrand")) {
    const Json& f = doc["integrand"];
    check_keys(f, "integrand", {"family", "p", "q", "alpha_log", "trunc_radius", "moreau_eps", "table"});
    read(f, "family", c.family);
    read(f, "p", c.p);
    c.q = c.p;
    read(f, "q", c.q);
    read(f, "alpha_log", c.alpha_log);
    read(f, "trunc_radius", c.trunc_radius);
    read(f, "moreau_eps", c.moreau_eps);
    if (f.contains("table")) {
      std::string p;
      read(f, "table", p);
      c.table = resolve(base_dir, p);
    }
  }
  if (doc.contains("obstacle")) c.obstacle = parse_source(doc["obstacle"], "obstacle", base_dir);
  if (doc.contains("boundary")) c.boundary = parse_source(doc["boundary"], "boundary", base_dir);
  if (doc.contains("solver")) {
    const Json& s = doc["solver"];
    check_keys(s, "solver", {"max_iters", "tol", "step0", "method"});
    read(s, "max_iters", c.solver.max_iters);
    read(s, "tol", c.solver.tol);
    read(s, "step0", c.solver.step0);
    std::string method = "newton";
    read(s, "method", method);
    if (method == "newton") {
      c.solver.method = SolverMethod::ProjectedNewton;
    } else if (method == "gradient") {
      c.solver.method = SolverMethod::ProjectedGradient;
    } else {
      throw InvalidArgument("config: solver.method is 'newton' or 'gradient'");
    }
  }
  if (doc.contains("sweep")) {
    const Json& s = doc["sweep"];
    check_keys(s, "sweep", {"k_list", "box_radius", "radius_scale", "moreau", "hat_competitors"});
    read(s, "k_list", c.k_list);
    read(s, "box_radius", c.box_radius);
    read(s, "radius_scale", c.radius_scale);
    read(s, "moreau", c.moreau);
    read(s, "hat_competitors", c.hat_competitors);
  }
  if (doc.contains("probe")) {
    const Json& s = doc["probe"];
    check_keys(s, "probe",
               {"inner_margin", "h_steps", "q", "exponent_iterations", "lavrentiev_levels", "alpha", "beta"});
    read(s, "inner_margin", c.inner_margin);
    read(s, "h_steps", c.h_steps);
    read(s, "exponent_iterations", c.exponent_iterations);
    read(s, "lavrentiev_levels", c.lavrentiev_levels);
    if (s.contains("q")) c.probe_q = s["q"].get<double>();
    if (s.contains("alpha")) c.alpha = s["alpha"].get<double>();
    if (s.contains("beta")) c.beta = s["beta"].get<double>();
  }
  if (doc.contains("conjugate")) {
    const Json& s = doc["conjugate"];
    check_keys(s, "conjugate", {"points", "radius", "per_axis"});
    if (s.contains("points")) {
      for (const auto& pt : s["points"]) {
        const auto v = pt.get<std::vector<double>>();
        c.zeta_grid.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
      }
    } else {
      double radius = 2.0;
      int per_axis = 9;
      read(s, "radius", radius);
      read(s, "per_axis", per_axis);
      c.zeta_grid = box_grid(c.dim, radius, per_axis);
    }
  }
  if (doc.contains("output")) {
    const Json& o = doc["output"];
    check_keys(o, "output", {"directory"});
    std::string dir;
    read(o, "directory", dir);
    c.output = resolve(base_dir, dir);
  }
  read(doc, "seed", c.seed);

  if (c.dim != 1 && c.dim != 2) throw InvalidArgument("config: dim must be 1 or 2");
  if (c.bounds.size() != static_cast<std::size_t>(c.dim) || c.resolution.size() != c.bounds.size()) {
    throw InvalidArgument("config: bounds and resolution need one entry per dimension");
  }
  if (!(c.p > 1.0) || !(c.q >= c.p)) throw InvalidArgument("config: need 1 < p <= q");
  for (const auto& z : c.zeta_grid) {
    if (z.size() != c.dim) throw InvalidArgument("config: conjugate points must have dim components");
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw InvalidArgument("config not found: " + path.string());
  Json doc;
  try {
    doc = Json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  return parse_config(doc, path.parent_path());
}

IntegrandSpec build_integrand(const RunConfig& c) {
  const Family family = family_from_string(c.family);
  IntegrandSpec F;
  switch (family) {
    case Family::PowerP:
      if (c.q != c.p) throw InvalidArgument("config: PowerP has q = p");
      F = power_p(c.p, c.dim);
      break;
    case Family::AnisotropicLogExample:
      if (c.dim != 2) throw InvalidArgument("config: AnisotropicLogExample needs dim 2");
      F = anisotropic_log(c.p, c.q, c.alpha_log);
      require_convex(F);
      break;
    case Family::UserTabulated:
      if (c.table.empty() || !fs::exists(c.table)) throw InvalidArgument("config: integrand table not found");
      F = user_tabulated(read_tabulated_csv(c.table), c.p, c.q);
      require_convex(F);
      break;
    case Family::TruncatedConjugate:
    case Family::MoreauSmoothed:
      throw InvalidArgument("config: request truncation through trunc_radius / moreau_eps on a base family");
  }
  if (c.trunc_radius > 0.0) {
    F = c.moreau_eps > 0.0 ? moreau_smoothed(F, c.trunc_radius, c.moreau_eps) : truncated_conjugate(F, c.trunc_radius);
  } else if (c.moreau_eps > 0.0) {
    throw InvalidArgument("config: moreau_eps needs trunc_radius");
  }
  return F;
}

ObstacleProblem build_problem(const RunConfig& c) {
  Mesh mesh = make_mesh(c.dim, c.bounds, c.resolution);
  NodalField psi = build_field(mesh, c.obstacle, "obstacle");
  NodalField u0 = build_field(mesh, c.boundary, "boundary");
  return make_problem(std::move(mesh), build_integrand(c), std::move(psi), std::move(u0));
}

int cmd_solve(const RunConfig& config, std::ostream& log) {
  const ObstacleProblem problem = build_problem(config);
  const Solution sol = solve(problem, config.solver);
  const DualCertificate cert = duality_gap(problem, sol.u);
  const bool ok = sol.converged && certificate_ok(cert);

  put(config, "mesh.json", dump(to_json(problem.mesh)));
  put(config, "solution.csv", nodal_csv(problem.mesh, sol.u));
  put(config, "trace.csv", trace_csv(sol.trace));
  put(config, "sigma.csv", cell_csv(problem.mesh, cert.sigma));
  put(config, "m.csv", nodal_csv(problem.mesh, cert.m));
  put(config, "certificate.json", dump(to_json(cert)));
  put(config, "solve.json", dump({{"converged", sol.converged},
                                  {"stop_reason", sol.stop_reason},
                                  {"iterations", sol.iterations},
                                  {"energy", sol.energy},
                                  {"residual", sol.residual},
                                  {"certificate_ok", certificate_ok(cert)}}));
  log << "solve: " << sol.stop_reason << " after " << sol.iterations << " iterations, energy "
      << format_number(sol.energy) << ", gap " << format_number(cert.gap) << "\n";
  return ok ? kExitOk : kExitNumerical;
}

int cmd_sweep(const RunConfig& config, std::ostream& log) {
  const ObstacleProblem problem = build_problem(config);
  SweepOptions opt;
  opt.radius_scale = config.radius_scale;
  opt.moreau = config.moreau;
  opt.box_radius = config.box_radius;
  opt.hat_competitors = config.hat_competitors;
  opt.seed = config.seed;
  opt.solve.max_iters = config.solver.max_iters;
  opt.solve.step0 = config.solver.step0;
  opt.solve.method = config.solver.method;
  if (config.solver.tol > 0.0) opt.solve.tol = config.solver.tol;
  const SweepReport report = run_sweep(problem, config.k_list, opt);

  put(config, "sweep.csv", sweep_csv(report));
  put(config, "sweep.json", dump(to_json(report)));
  for (const auto& r : report.records) {
    if (!r.failure.empty()) log << "sweep: k=" << r.k << " " << r.failure << "\n";
  }
  for (const auto& v : report.verdicts) {
    log << "sweep: " << (v.ok ? "ok   " : "FAIL ") << v.name << (v.detail.empty() ? "" : ": " + v.detail) << "\n";
  }
  return report.all_ok() ? kExitOk : kExitNumerical;
}

int cmd_probe(const RunConfig& config, std::ostream& log) {
  const ObstacleProblem problem = build_problem(config);
  const Solution sol = solve(problem, config.solver);
  const int n = config.dim;
  const double p = config.p;
  const double q = config.probe_q.value_or(config.q);

  RegularityReport rep;
  rep.table = difference_quotient_table(problem.mesh, sol.u, p, config.inner_margin, config.h_steps);
  rep.fit = besov_fit(rep.table);

  if (n < 2) {
    rep.notes.push_back("exponent recurrence needs n >= 2");
  } else if (q < n * p / (n - 1.0)) {
    rep.exponents = exponent_iteration(n, p, q, config.exponent_iterations);
  } else {
    rep.notes.push_back("q >= np/(n-1): recurrence skipped");
    try {
      rep.pbar = pbar(n, p, q);
    } catch (const InvalidArgument& e) {
      rep.notes.push_back(std::string("pbar unavailable: ") + e.what());
    }
  }
  try {
    rep.embedding = embedding_check(problem.mesh, sol.u, p, q, config.h_steps, config.inner_margin);
  } catch (const InvalidArgument& e) {
    rep.notes.push_back(std::string("embedding check skipped: ") + e.what());
  }
  Json extra = Json::object();
  if (config.alpha || config.beta) {
    if (!config.alpha || !config.beta) throw InvalidArgument("probe: alpha and beta go together");
    extra["predicted_integrability"] = predicted_integrability(n, p, *config.alpha, *config.beta);
  }
  if (config.lavrentiev_levels > 0) rep.lavrentiev = lavrentiev_probe(problem, config.lavrentiev_levels, config.solver);
  if (!sol.converged) rep.notes.push_back("solve did not converge: " + sol.stop_reason);
  rep.notes.push_back("fixed mesh: integrability is assessed through exponents only");

  Json j = to_json(rep);
  j.update(extra);
  put(config, "dq.csv", dq_csv(rep.table));
  put(config, "probe_solution.csv", nodal_csv(problem.mesh, sol.u));
  if (rep.exponents) {
    CsvWriter w({"j", "p_j"});
    for (std::size_t i = 0; i < rep.exponents->sequence.size(); ++i) {
      w.cell(static_cast<long long>(i)).cell(rep.exponents->sequence[i]);
      w.end_row();
    }
    put(config, "exponents.csv", w.str());
  }
  put(config, "regularity.json", dump(j));
  log << "probe: fitted alpha " << format_number(rep.fit.alpha) << "\n";
  return sol.converged ? kExitOk : kExitNumerical;
}

int cmd_conjugate(const RunConfig& config, std::ostream& log) {
  const IntegrandSpec F = build_integrand(config);
  const std::vector<Vec> grid = config.zeta_grid.empty() ? box_grid(config.dim, 2.0, 9) : config.zeta_grid;
  std::vector<std::string> header{"zeta_x"};
  if (config.dim == 2) header.push_back("zeta_y");
  header.insert(header.end(), {"Fstar", "fy_residual"});
  CsvWriter w(header);
  int failures = 0;
  double worst = 0.0;
  for (const Vec& z : grid) {
    for (Eigen::Index a = 0; a < z.size(); ++a) w.cell(z(a));
    double value = std::nan(""), residual = std::nan("");
    try {
      const ConjugateResult r = conjugate_solve(F, z);
      value = r.value;
      // The maximizer x satisfies z = F'(x); the extremality relation at x is
      // recomputed from scratch.
      residual = r.maximizer.size() == 0 ? 0.0
                                         : std::abs(fenchel_young_residual(F, r.maximizer)) /
                                               (1.0 + std::abs(eval(F, r.maximizer)));
      worst = std::max(worst, residual);
    } catch (const ConvergenceFailure&) {
      ++failures;
    } catch (const Unsupported&) {
      ++failures;
    }
    w.cell(value).cell(residual);
    w.end_row();
  }
  put(config, "conjugate.csv", w.str());
  put(config, "conjugate.json", dump({{"family", to_string(F.family)},
                                      {"rows", grid.size()},
                                      {"failures", failures},
                                      {"fy_residual_max", worst}}));
  log << "conjugate: " << grid.size() << " rows, " << failures << " failures\n";
  return failures == 0 ? kExitOk : kExitNumerical;
}

int cmd_report(const RunConfig& config, std::ostream& log) {
  Json out = Json::object();
  for (const char* name : {"solve", "certificate", "sweep", "regularity", "conjugate"}) {
    const fs::path path = config.output / (std::string(name) + ".json");
    if (!fs::exists(path)) continue;
    try {
      out[name] = Json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error&) {
      throw InvalidArgument("report: malformed " + path.string());
    }
  }
  if (out.empty()) throw InvalidArgument("report: no outputs found in " + config.output.string());
  put(config, "report.json", dump(out));
  log << "report: merged " << out.size() << " files\n";
  return kExitOk;
}

int run_command(const std::string& verb, const RunConfig& config, std::ostream& log) {
  try {
    if (verb == "solve") return cmd_solve(config, log);
    if (verb == "sweep") return cmd_sweep(config, log);
    if (verb == "probe") return cmd_probe(config, log);
    if (verb == "conjugate") return cmd_conjugate(config, log);
    if (verb == "report") return cmd_report(config, log);
    log << "error: unknown command '" << verb << "'\n";
    return kExitInvalid;
  } catch (const InvalidArgument& e) {
    log << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const Unsupported& e) {
    log << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const ConvergenceFailure& e) {
    log << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    log << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const nlohmann::json::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
}

}  // namespace pqobst
