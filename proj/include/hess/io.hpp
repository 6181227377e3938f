#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hess/grid.hpp"
#include "hess/model.hpp"
#include "hess/solver.hpp"
#include "hess/structure.hpp"
#include "hess/verify.hpp"

namespace hess::io {

inline constexpr const char* kVersion = "0.1.0";

// Process exit contract shared by run_command and the CLI wrapper.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 2;   // a requested check has verdict Fails
inline constexpr int kExitNoConvergence = 3;
inline constexpr int kExitBadConfig = 4;

// Configuration rejection is reported with hess::ConfigError; its pointer()
// locates the offending field ("/problem/k", "/grid/m", ...).
using hess::ConfigError;

class FieldIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- field CSV ---------------------------------------------------------------

// One header line `# n=<n> m=<m1,...> lo=<...> hi=<...>`, then one row per
// node in lexicographic node order: i1,...,in,x1,...,xn,value. Numbers are
// printed with 17 significant digits, so a write/read round trip reproduces
// the field bit for bit.
void emit_field(const grid::GridField& u, const std::string& path);

// Rejects malformed headers, node-count mismatches, and rows that deviate
// from lexicographic node order.
grid::GridField read_field(const std::string& path);

// --- run configuration -------------------------------------------------------

struct RunConfig {
  std::string command;

  // problem
  std::string catalog;          // paired coefficient/source name; "" when manufactured
  std::string a_name = "zero_A";
  std::string b_name = "const_B";
  bool manufactured = false;
  std::string u_star = "quadratic";
  double u_star_mu = 1.0;
  int n = 2;
  int k = 1;
  Box box;
  model::CatalogParams params;
  double phi_mu = 1.0;          // catalog boundary data: (phi_mu / 2) |x|^2

  std::vector<int> m;           // grid, required by solve/verify
  solver::SolveOptions solver;

  structure::SamplingSpec checks;
  bool strict = false;

  std::vector<double> K_list;
  std::vector<double> eps1_list;
  double c_cap = 1e3;
  double gap_c = 0.05;          // interior subsolution gap coefficient
  double decomp_budget = -1.0;  // <= 0: 10 h^2 (1 + max |B|) truncation budget
  verify::Face face;
  verify::BarrierParams barrier;

  std::vector<std::vector<int>> sweep_m;

  std::string out_dir = "out";

  nlohmann::json echo;          // canonical config with defaults filled
};

struct CliOverrides {
  std::string command;                    // must match the config when nonempty
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
};

// Strict JSON: no comments, duplicate keys rejected, unknown keys rejected,
// schema violations reported with JSON-pointer paths. Defaults are filled and
// echoed back in RunConfig::echo. The sampling seed has no default: commands
// that draw samples fail config validation without one (a --seed override
// satisfies the requirement).
RunConfig load_config(const std::string& path);
RunConfig load_config(const std::string& path, const CliOverrides& ov);
RunConfig parse_config_text(const std::string& text, const CliOverrides& ov = {});

// --- command dispatch --------------------------------------------------------

struct RunReport {
  nlohmann::json doc;  // config echo, version, per-command results, exit status
  int exit_code = kExitOk;
};

// Executes the configured command and writes artifacts under cfg.out_dir:
// report.json always, solution.csv for solve/verify, summary.csv for sweep.
// The report document is deterministic for a fixed config and seed except for
// the single "timestamp" field.
RunReport run_command(const RunConfig& cfg);

// report serialization, one json object per audit type
nlohmann::json to_json(const structure::CertificateReport& r);
nlohmann::json to_json(const solver::SolveReport& r);
nlohmann::json to_json(const verify::EstimateAudit& a);
nlohmann::json to_json(const verify::InteriorBarrierAudit& a);
nlohmann::json to_json(const verify::BoundaryBarrierReport& r);

std::string render_report(const nlohmann::json& doc);  // dump + trailing newline

}  // namespace hess::io
