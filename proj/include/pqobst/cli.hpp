#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pqobst/io.hpp"

namespace pqobst {

/// Exit codes of every command.
enum ExitCode : int { kExitOk = 0, kExitInvalid = 2, kExitNumerical = 3 };

/// Obstacle or boundary datum: a preset id or a nodal CSV.
struct FieldSource {
  std::string preset;              ///< "parabola", "zero", "affine", "constant"
  std::vector<double> coefficients;  ///< affine: c0 + c1 x [+ c2 y]; constant: value
  std::filesystem::path csv;
};

struct RunConfig {
  int dim = 1;
  std::vector<std::pair<double, double>> bounds{{-1.0, 1.0}};
  std::vector<int> resolution{512};

  std::string family = "PowerP";
  double p = 2.0;
  double q = 2.0;
  double alpha_log = 0.0;
  double trunc_radius = 0.0;  ///< > 0 wraps the integrand in a truncation
  double moreau_eps = 0.0;    ///< > 0 additionally smooths the truncation
  std::filesystem::path table;

  FieldSource obstacle{"parabola", {}, {}};
  FieldSource boundary{"zero", {}, {}};

  SolveOptions solver{500, -1.0, 1.0, SolverMethod::ProjectedNewton};

  std::vector<int> k_list{1, 2, 4, 8};
  double box_radius = 10.0;
  double radius_scale = 0.1;
  bool moreau = false;
  int hat_competitors = 8;

  double inner_margin = 0.25;
  std::vector<int> h_steps{2, 4, 8, 16};
  std::optional<double> probe_q;  ///< exponent q for the recurrence; defaults to q
  int exponent_iterations = 200;
  int lavrentiev_levels = 0;
  std::optional<double> alpha;  ///< with beta: predicted integrability
  std::optional<double> beta;

  std::vector<Vec> zeta_grid;

  std::filesystem::path output = "out";
  std::uint64_t seed = 42;
};

/// Parses a JSON document. Unknown keys are rejected; relative paths resolve
/// against `base_dir`. Throws InvalidArgument.
RunConfig parse_config(const Json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

IntegrandSpec build_integrand(const RunConfig& config);
ObstacleProblem build_problem(const RunConfig& config);

/// Each command writes into config.output and returns an ExitCode. Messages go
/// to `log`.
int cmd_solve(const RunConfig& config, std::ostream& log);
int cmd_sweep(const RunConfig& config, std::ostream& log);
int cmd_probe(const RunConfig& config, std::ostream& log);
int cmd_conjugate(const RunConfig& config, std::ostream& log);
/// Collects the JSON outputs already present in config.output into report.json.
int cmd_report(const RunConfig& config, std::ostream& log);

/// Dispatches a verb, mapping exceptions onto exit codes.
int run_command(const std::string& verb, const RunConfig& config, std::ostream& log);

}  // namespace pqobst
