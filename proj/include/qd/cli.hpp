#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qd/field.hpp"
#include "qd/obstacle.hpp"
#include "qd/oracles.hpp"
#include "qd/quadrature.hpp"

namespace qd::cli {

enum ExitCode : int { kOk = 0, kConfig = 2, kNotConverged = 3, kVerifyFailed = 4 };

/// InvalidInput, Format, NonFinite, Singular and Domain map to 2; NotConverged to 3.
int exit_code_for(ErrorKind kind);

struct GridConfig {
  double h = 1.0 / 64.0;
  std::optional<std::pair<Point, Point>> box;  // explicit lo/hi; a-priori box otherwise
};

struct OutputConfig {
  std::string directory = "qd_out";
  bool emit_fields = true;
  bool emit_pgm = true;
};

struct VerifyConfig {
  bool enabled = true;
  std::vector<std::string> checks{"measure", "centroid", "inertia", "green_max", "green_outside_max"};
  VerifyTolerances tolerances;
};

struct RunConfig {
  int dim = 2;
  WeightSpec weight;
  GridConfig grid;
  SolveParams solver;
  OutputConfig outputs;
  VerifyConfig verify;
};

/// Parses the JSON config. Unknown keys, wrong types and nonpositive
/// tolerances raise ErrorKind::InvalidInput. A relative external_field path
/// is resolved against `base_dir`.
RunConfig parse_config(const std::string& text, const std::string& base_dir = "");
RunConfig load_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& c);

/// Grid for a run: the explicit box, or the a-priori box of the weight.
Grid run_grid(const RunConfig& c);

struct RunReport {
  std::string schema_version = "1";
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json solver = nlohmann::json::object();
  nlohmann::json verification = nlohmann::json::object();
  nlohmann::json results = nlohmann::json::object();
  std::map<std::string, double> timings;
  std::map<std::string, std::string> artifacts;
  bool passes = true;
  int exit_code = 0;
  std::string error;
};

nlohmann::json report_to_json(const RunReport& r);
RunReport report_from_json(const nlohmann::json& j);
/// Same as report_to_json without timings; stable across runs of one config.
nlohmann::json report_fingerprint(const RunReport& r);

/// Holds <dir>/.qd.lock for the lifetime of the object; throws if the
/// directory is already locked.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::string& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  std::string path_;
};

nlohmann::json verification_to_json(const VerificationReport& v);

RunReport cmd_solve(const std::string& config_path, const std::optional<std::string>& out_dir = {});
RunReport cmd_solve(const RunConfig& config);

struct VerifyOptions {
  std::string domain_path;
  std::string weight_path;
  std::optional<std::string> out_dir;
  VerifyTolerances tolerances;
};
RunReport cmd_verify(const VerifyOptions& opt);

struct OracleOptions {
  std::string kind;  // "radial" or "1d"
  // radial
  double c = 4.0;
  double R = 1.0;
  int dim = 2;
  int samples = 301;
  std::optional<double> r_max;  // default 1.5 R'
  // 1d
  std::vector<Piece1D> pieces;
  double rel_h = 1e-5;
  std::optional<std::string> out_dir;
};
RunReport cmd_oracle(const OracleOptions& opt);

struct CutoffOptions {
  std::string region = "ball";  // "ball" or "box"
  int dim = 2;
  Point center{};
  double radius = 1.0;
  Point lo{};
  Point hi{1.0, 1.0, 1.0};
  std::vector<int> j{8, 16};
  double h = 1.0 / 256.0;  // resolution of emitted fields
  int lattice = 64;
  int whitney_level = 8;
  int band_probes = 512;
  std::optional<std::string> out_dir;
};
RunReport cmd_cutoffs(const CutoffOptions& opt);

/// Writes report.json into the directory (created if needed) and returns its path.
std::string write_report(const RunReport& r, const std::string& dir);

}  // namespace qd::cli
