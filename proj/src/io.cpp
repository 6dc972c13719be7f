#include "pqobst/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pqobst/errors.hpp"

namespace pqobst {

namespace fs = std::filesystem;

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";  // folds -0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw InvalidArgument("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvWriter::CsvWriter(const std::vector<std::string>& header) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ += ',';
    out_ += header[i];
  }
  out_ += '\n';
}

CsvWriter& CsvWriter::cell(const std::string& s) {
  if (row_open_) out_ += ',';
  out_ += s;
  row_open_ = true;
  return *this;
}

CsvWriter& CsvWriter::cell(double x) { return cell(format_number(x)); }
CsvWriter& CsvWriter::cell(long long x) { return cell(std::to_string(x)); }

void CsvWriter::end_row() {
  out_ += '\n';
  row_open_ = false;
}

namespace {

std::vector<std::string> coord_header(int dim, const std::string& first, const std::string& prefix) {
  std::vector<std::string> h{first, prefix + "x"};
  if (dim == 2) h.push_back(prefix + "y");
  return h;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r' && c != ' ' && c != '\t') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const fs::path& path) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw InvalidArgument(path.string() + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

std::string nodal_csv(const Mesh& mesh, const NodalField& f) {
  auto header = coord_header(mesh.dim(), "node_id", "");
  header.push_back("value");
  CsvWriter w(header);
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    w.cell(i);
    for (int a = 0; a < mesh.dim(); ++a) w.cell(mesh.node(i)(a));
    w.cell(f(i));
    w.end_row();
  }
  return w.str();
}

std::string cell_csv(const Mesh& mesh, const CellField& sigma) {
  CsvWriter w(coord_header(mesh.dim(), "cell_id", "sigma_"));
  for (int c = 0; c < mesh.num_cells(); ++c) {
    w.cell(c);
    for (int a = 0; a < mesh.dim(); ++a) w.cell(sigma(c, a));
    w.end_row();
  }
  return w.str();
}

NodalField read_nodal_csv(const Mesh& mesh, const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument(path.string() + ": missing header");
  const std::size_t cols = static_cast<std::size_t>(mesh.dim()) + 2;
  if (split(line).size() != cols) throw InvalidArgument(path.string() + ": expected node_id,x[,y],value");

  NodalField f = NodalField::Constant(mesh.num_nodes(), std::nan(""));
  const double slack = 1e-9 * (1.0 + std::abs(mesh.hi(0) - mesh.lo(0)));
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto parts = split(line);
    if (parts.size() != cols) throw InvalidArgument(path.string() + ": wrong column count");
    const double id = parse_double(parts[0], path);
    const int i = static_cast<int>(id);
    if (id != i || i < 0 || i >= mesh.num_nodes()) throw InvalidArgument(path.string() + ": bad node_id");
    for (int a = 0; a < mesh.dim(); ++a) {
      if (std::abs(parse_double(parts[1 + a], path) - mesh.node(i)(a)) > slack) {
        throw InvalidArgument(path.string() + ": coordinates of node " + parts[0] + " do not match the mesh");
      }
    }
    f(i) = parse_double(parts.back(), path);
  }
  if (f.hasNaN()) throw InvalidArgument(path.string() + ": missing or non-finite nodes");
  return f;
}

std::string trace_csv(const std::vector<TraceEntry>& trace) {
  CsvWriter w({"iteration", "energy", "residual"});
  for (const auto& t : trace) {
    w.cell(t.iteration).cell(t.energy).cell(t.residual);
    w.end_row();
  }
  return w.str();
}

std::string sweep_csv(const SweepReport& report) {
  CsvWriter w({"k", "energy_Fk", "energy_F", "gap_k", "fstar_sigma_L1", "sigma_Lqprime", "vp_dist",
               "div_violation_k", "vi_min_k", "mu_k"});
  for (const auto& r : report.records) {
    w.cell(r.k).cell(r.energy_Fk).cell(r.energy_F).cell(r.gap_k).cell(r.fstar_sigma_L1).cell(r.sigma_Lqprime);
    w.cell(r.vp_dist).cell(r.div_violation_k).cell(r.vi_min_k).cell(r.mu_k);
    w.end_row();
  }
  return w.str();
}

std::string dq_csv(const std::vector<DifferenceQuotient>& table) {
  CsvWriter w({"direction", "h", "dq_norm"});
  for (const auto& row : table) {
    w.cell(row.direction).cell(row.h).cell(row.dq_norm);
    w.end_row();
  }
  return w.str();
}

Json to_json(const Mesh& mesh) {
  Json bounds = Json::array();
  for (const auto& [lo, hi] : mesh.bounds()) bounds.push_back({lo, hi});
  return {{"dim", mesh.dim()}, {"bounds", bounds}, {"resolution", mesh.resolutions()}};
}

Json to_json(const DualCertificate& cert) {
  return {{"gap", cert.gap},
          {"dual_objective", cert.dual_objective},
          {"pairing", cert.pairing},
          {"div_violation", cert.div_violation},
          {"fy_residual_max", cert.fy_residual_max},
          {"complementarity_max", cert.complementarity_max}};
}

Json to_json(const SweepReport& report) {
  Json verdicts = Json::array();
  for (const auto& v : report.verdicts) verdicts.push_back({{"name", v.name}, {"ok", v.ok}, {"detail", v.detail}});
  Json records = Json::array();
  for (const auto& r : report.records) {
    records.push_back({{"k", r.k},
                       {"radius", r.radius},
                       {"max_grad", r.max_grad},
                       {"converged", r.converged},
                       {"failure", r.failure},
                       {"strong_lhs", r.strong_lhs},
                       {"strong_rhs", r.strong_rhs}});
  }
  return {{"all_ok", report.all_ok()},
          {"verdicts", verdicts},
          {"records", records},
          {"reference_k", report.reference_k},
          {"stabilization_index", report.stabilization_index},
          {"doubling_constant", report.doubling_constant},
          {"datum_energy", report.datum_energy},
          {"competitors", report.competitors},
          {"skipped_competitors", report.skipped_competitors}};
}

Json to_json(const RegularityReport& report) {
  Json j;
  Json h = Json::array(), dq = Json::array(), dirs = Json::array();
  for (const auto& row : report.table) {
    h.push_back(row.h);
    dq.push_back(row.dq_norm);
    dirs.push_back(row.direction);
  }
  j["h_values"] = h;
  j["dq_norms"] = dq;
  j["directions"] = dirs;
  j["fitted_alpha"] = report.fit.alpha;
  j["fit_slope"] = report.fit.slope;
  j["fit_residual"] = report.fit.residual;
  if (report.exponents) {
    j["exponent_sequence"] = report.exponents->sequence;
    j["exponent_limit"] = report.exponents->limit;
    j["exponent_limit_finite"] = report.exponents->limit_finite;
  }
  if (report.pbar) j["pbar"] = *report.pbar;
  if (report.embedding) {
    j["embedding_ok"] = report.embedding->ok;
    j["embedding_max_ratio"] = report.embedding->max_ratio;
  }
  if (report.lavrentiev) {
    j["lavrentiev_gap"] = report.lavrentiev->gap;
    j["lavrentiev_sufficient_levels"] = report.lavrentiev->sufficient_levels;
  }
  j["notes"] = report.notes;
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace pqobst
