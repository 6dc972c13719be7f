#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "pqobst/duality.hpp"
#include "pqobst/limitflow.hpp"
#include "pqobst/regularity.hpp"

namespace pqobst {

using Json = nlohmann::json;

/// Shortest decimal that round-trips, independent of the locale.
std::string format_number(double x);

/// Writes through a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// CSV tables with a header row and LF line ends.
class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header);
  CsvWriter& cell(double x);
  CsvWriter& cell(long long x);
  CsvWriter& cell(int x) { return cell(static_cast<long long>(x)); }
  CsvWriter& cell(const std::string& s);
  void end_row();
  const std::string& str() const { return out_; }

 private:
  std::string out_;
  bool row_open_ = false;
};

/// node_id,x[,y],value
std::string nodal_csv(const Mesh& mesh, const NodalField& f);
/// cell_id,sigma_x[,sigma_y]
std::string cell_csv(const Mesh& mesh, const CellField& sigma);
/// Reads the nodal format back; node coordinates must match the mesh.
NodalField read_nodal_csv(const Mesh& mesh, const std::filesystem::path& path);

std::string trace_csv(const std::vector<TraceEntry>& trace);
/// One row per k, SweepRecord fields in declaration order.
std::string sweep_csv(const SweepReport& report);
/// direction,h,dq_norm
std::string dq_csv(const std::vector<DifferenceQuotient>& table);

Json to_json(const Mesh& mesh);
Json to_json(const DualCertificate& cert);
Json to_json(const SweepReport& report);
Json to_json(const RegularityReport& report);

/// Two-space indented dump with a trailing newline. Keys come out sorted.
std::string dump(const Json& j);

}  // namespace pqobst
