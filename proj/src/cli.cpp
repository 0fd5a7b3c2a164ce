#include "qd/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "qd/cutoffs.hpp"
#include "qd/numerics.hpp"
#include "qd/regions.hpp"

namespace qd::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::set<std::string> kCheckNames{"measure", "centroid", "inertia", "green_max", "green_outside_max"};

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorKind::InvalidInput, "config: " + msg); }

void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) bad(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) bad("unknown key '" + k + "' in " + where);
}

double get_number(const json& j, const std::string& key, const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_number()) bad(where + "." + key + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) bad(where + "." + key + " must be finite");
  return x;
}

double get_positive(const json& j, const std::string& key, const std::string& where) {
  const double x = get_number(j, key, where);
  if (!(x > 0.0)) bad(where + "." + key + " must be positive");
  return x;
}

bool get_bool(const json& j, const std::string& key, const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_boolean()) bad(where + "." + key + " must be true or false");
  return v.get<bool>();
}

Point get_point(const json& j, const std::string& key, int dim, const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_array() || static_cast<int>(v.size()) != dim)
    bad(where + "." + key + " must be an array of " + std::to_string(dim) + " numbers");
  Point p{};
  for (int a = 0; a < dim; ++a) {
    if (!v[a].is_number()) bad(where + "." + key + " must contain numbers");
    p[a] = v[a].get<double>();
    if (!std::isfinite(p[a])) bad(where + "." + key + " must be finite");
  }
  return p;
}

json point_json(const Point& p, int dim) {
  json a = json::array();
  for (int i = 0; i < dim; ++i) a.push_back(p[i]);
  return a;
}

// Non-finite values become null so reports stay valid JSON.
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

Primitive parse_primitive(const json& j, int dim, const std::string& where) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) bad(where + " needs a string 'type'");
  const std::string type = j["type"].get<std::string>();
  Primitive p;
  if (type == "ball") {
    require_keys(j, {"type", "center", "radius", "amplitude"}, where);
    p.shape = Ball{get_point(j, "center", dim, where), get_number(j, "radius", where)};
  } else if (type == "box") {
    require_keys(j, {"type", "lo", "hi", "amplitude"}, where);
    p.shape = Box{get_point(j, "lo", dim, where), get_point(j, "hi", dim, where)};
  } else {
    bad(where + ".type must be 'ball' or 'box'");
  }
  if (j.contains("amplitude")) p.amplitude = get_number(j, "amplitude", where);
  return p;
}

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string out_path(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw Error(ErrorKind::Format, "cannot write " + path);
  o << text;
  if (!o) throw Error(ErrorKind::Format, "write failed for " + path);
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json residuals_json(const Residuals& r) {
  return {{"max_sign_violation", num(r.max_sign_violation)},
          {"max_constraint_violation", num(r.max_constraint_violation)},
          {"max_complementarity", num(r.max_complementarity)}};
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotConverged:
      return kNotConverged;
    default:
      return kConfig;
  }
}

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    bad(std::string("malformed JSON: ") + e.what());
  }
  RunConfig c;
  try {
    require_keys(j, {"dim", "weight", "grid", "solver", "outputs", "verify"}, "config");
    if (!j.contains("dim") || !j["dim"].is_number_integer()) bad("dim must be an integer");
    c.dim = j["dim"].get<int>();
    if (c.dim < 1 || c.dim > 3) bad("dim must be 1, 2 or 3");

    if (!j.contains("weight")) bad("missing weight");
    const json& w = j["weight"];
    require_keys(w, {"primitives", "external_field"}, "weight");
    if (w.contains("primitives")) {
      if (!w["primitives"].is_array()) bad("weight.primitives must be an array");
      for (std::size_t i = 0; i < w["primitives"].size(); ++i)
        c.weight.primitives.push_back(
            parse_primitive(w["primitives"][i], c.dim, "weight.primitives[" + std::to_string(i) + "]"));
    }
    if (w.contains("external_field")) {
      if (!w["external_field"].is_string()) bad("weight.external_field must be a path");
      fs::path p = w["external_field"].get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
      c.weight.external_field = p.string();
    }
    if (c.weight.primitives.empty() && !c.weight.external_field) bad("weight is empty");

    if (j.contains("grid")) {
      const json& g = j["grid"];
      require_keys(g, {"h", "box"}, "grid");
      if (g.contains("h")) c.grid.h = get_positive(g, "h", "grid");
      if (g.contains("box")) {
        require_keys(g["box"], {"lo", "hi"}, "grid.box");
        const Point lo = get_point(g["box"], "lo", c.dim, "grid.box");
        const Point hi = get_point(g["box"], "hi", c.dim, "grid.box");
        for (int a = 0; a < c.dim; ++a)
          if (!(lo[a] < hi[a])) bad("grid.box needs lo < hi");
        c.grid.box = std::make_pair(lo, hi);
      }
    }
    if (c.weight.external_field && !c.grid.box) bad("an external_field weight needs an explicit grid.box");

    if (j.contains("solver")) {
      const json& s = j["solver"];
      require_keys(s, {"tolerance", "max_sweeps", "relaxation", "activation_threshold", "margin_cells", "threads"},
                   "solver");
      if (s.contains("tolerance")) c.solver.tolerance = get_positive(s, "tolerance", "solver");
      if (s.contains("max_sweeps")) {
        if (!s["max_sweeps"].is_number_integer()) bad("solver.max_sweeps must be an integer");
        c.solver.max_sweeps = s["max_sweeps"].get<long>();
      }
      if (s.contains("relaxation")) c.solver.relaxation = get_number(s, "relaxation", "solver");
      if (s.contains("activation_threshold"))
        c.solver.activation_threshold = get_positive(s, "activation_threshold", "solver");
      if (s.contains("margin_cells")) {
        if (!s["margin_cells"].is_number_integer()) bad("solver.margin_cells must be an integer");
        c.solver.margin_cells = s["margin_cells"].get<int>();
      }
      if (s.contains("threads")) {
        if (!s["threads"].is_number_integer()) bad("solver.threads must be an integer");
        c.solver.threads = s["threads"].get<int>();
      }
    }
    c.solver.validate();

    if (j.contains("outputs")) {
      const json& o = j["outputs"];
      require_keys(o, {"directory", "emit_fields", "emit_pgm"}, "outputs");
      if (o.contains("directory")) {
        if (!o["directory"].is_string()) bad("outputs.directory must be a string");
        c.outputs.directory = o["directory"].get<std::string>();
      }
      if (o.contains("emit_fields")) c.outputs.emit_fields = get_bool(o, "emit_fields", "outputs");
      if (o.contains("emit_pgm")) c.outputs.emit_pgm = get_bool(o, "emit_pgm", "outputs");
    }

    if (j.contains("verify")) {
      const json& v = j["verify"];
      require_keys(v, {"enabled", "checks", "tolerances"}, "verify");
      if (v.contains("enabled")) c.verify.enabled = get_bool(v, "enabled", "verify");
      if (v.contains("checks")) {
        if (!v["checks"].is_array()) bad("verify.checks must be an array");
        c.verify.checks.clear();
        for (const auto& e : v["checks"]) {
          if (!e.is_string() || !kCheckNames.count(e.get<std::string>()))
            bad("verify.checks entries must be one of measure, centroid, inertia, green_max, green_outside_max");
          c.verify.checks.push_back(e.get<std::string>());
        }
      }
      if (v.contains("tolerances")) {
        const json& t = v["tolerances"];
        require_keys(t, {"measure_relative", "centroid", "inertia", "potential"}, "verify.tolerances");
        VerifyTolerances& vt = c.verify.tolerances;
        if (t.contains("measure_relative")) vt.measure_relative = get_positive(t, "measure_relative", "verify.tolerances");
        if (t.contains("centroid")) vt.centroid = get_positive(t, "centroid", "verify.tolerances");
        if (t.contains("inertia")) vt.inertia = get_positive(t, "inertia", "verify.tolerances");
        if (t.contains("potential")) vt.potential = get_positive(t, "potential", "verify.tolerances");
      }
    }
  } catch (const json::exception& e) {
    bad(e.what());
  }
  c.weight.validate(c.dim);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), fs::path(path).parent_path().string());
}

json config_to_json(const RunConfig& c) {
  json prims = json::array();
  for (const Primitive& p : c.weight.primitives) {
    json e;
    if (const auto* b = std::get_if<Ball>(&p.shape)) {
      e = {{"type", "ball"}, {"center", point_json(b->center, c.dim)}, {"radius", b->radius}};
    } else {
      const Box& bx = std::get<Box>(p.shape);
      e = {{"type", "box"}, {"lo", point_json(bx.lo, c.dim)}, {"hi", point_json(bx.hi, c.dim)}};
    }
    e["amplitude"] = p.amplitude;
    prims.push_back(e);
  }
  json weight = {{"primitives", prims}};
  if (c.weight.external_field) weight["external_field"] = *c.weight.external_field;
  json grid = {{"h", c.grid.h}};
  if (c.grid.box)
    grid["box"] = {{"lo", point_json(c.grid.box->first, c.dim)}, {"hi", point_json(c.grid.box->second, c.dim)}};
  json solver = {{"tolerance", c.solver.tolerance},
                 {"max_sweeps", c.solver.max_sweeps},
                 {"relaxation", c.solver.relaxation},
                 {"margin_cells", c.solver.margin_cells},
                 {"threads", c.solver.threads}};
  if (c.solver.activation_threshold) solver["activation_threshold"] = *c.solver.activation_threshold;
  json tol = {{"measure_relative", c.verify.tolerances.measure_relative}, {"inertia", c.verify.tolerances.inertia}};
  if (c.verify.tolerances.centroid) tol["centroid"] = *c.verify.tolerances.centroid;
  if (c.verify.tolerances.potential) tol["potential"] = *c.verify.tolerances.potential;
  return {{"dim", c.dim},
          {"weight", weight},
          {"grid", grid},
          {"solver", solver},
          {"outputs",
           {{"directory", c.outputs.directory},
            {"emit_fields", c.outputs.emit_fields},
            {"emit_pgm", c.outputs.emit_pgm}}},
          {"verify", {{"enabled", c.verify.enabled}, {"checks", c.verify.checks}, {"tolerances", tol}}}};
}

Grid run_grid(const RunConfig& c) {
  if (!c.grid.box) return apriori_radius(c.weight, c.dim, c.grid.h, c.solver.margin_cells).grid;
  const auto& [lo, hi] = *c.grid.box;
  Index shape{1, 1, 1};
  for (int a = 0; a < c.dim; ++a) shape[a] = static_cast<int>(std::ceil((hi[a] - lo[a]) / c.grid.h - 1e-9));
  return Grid(c.dim, lo, c.grid.h, shape);
}

// ---------------------------------------------------------------------------

json report_to_json(const RunReport& r) {
  return {{"schema_version", r.schema_version}, {"command", r.command},       {"config", r.config},
          {"solver", r.solver},                 {"verification", r.verification}, {"results", r.results},
          {"timings", r.timings},               {"artifacts", r.artifacts},   {"passes", r.passes},
          {"exit_code", r.exit_code},           {"error", r.error}};
}

RunReport report_from_json(const json& j) {
  require_keys(j,
               {"schema_version", "command", "config", "solver", "verification", "results", "timings", "artifacts",
                "passes", "exit_code", "error"},
               "report");
  RunReport r;
  try {
    r.schema_version = j.at("schema_version").get<std::string>();
    if (r.schema_version != "1") throw Error(ErrorKind::Format, "unsupported report schema " + r.schema_version);
    r.command = j.at("command").get<std::string>();
    r.config = j.at("config");
    r.solver = j.at("solver");
    r.verification = j.at("verification");
    r.results = j.at("results");
    r.timings = j.at("timings").get<std::map<std::string, double>>();
    r.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
    r.passes = j.at("passes").get<bool>();
    r.exit_code = j.at("exit_code").get<int>();
    r.error = j.at("error").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("malformed report: ") + e.what());
  }
  return r;
}

json report_fingerprint(const RunReport& r) {
  json j = report_to_json(r);
  j.erase("timings");
  return j;
}

std::string write_report(const RunReport& r, const std::string& dir) {
  fs::create_directories(dir);
  const std::string p = out_path(dir, "report.json");
  write_text(p, report_to_json(r).dump(2) + "\n");
  return p;
}

DirectoryLock::DirectoryLock(const std::string& dir) {
  fs::create_directories(dir);
  path_ = out_path(dir, ".qd.lock");
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (!f) {
    path_.clear();
    throw Error(ErrorKind::InvalidInput, "output directory " + dir + " is locked by another run");
  }
  std::fclose(f);
}

DirectoryLock::~DirectoryLock() {
  if (!path_.empty()) {
    std::error_code ec;
    fs::remove(path_, ec);
  }
}

json verification_to_json(const VerificationReport& v) {
  json checks = json::array();
  for (const CheckResult& c : v.checks)
    checks.push_back({{"name", c.name}, {"value", num(c.value)}, {"tolerance", num(c.tolerance)}, {"pass", c.pass}});
  return {{"measure_error", num(v.measure_error)},
          {"relative_measure_error", num(v.relative_measure_error)},
          {"centroid_error", num(v.centroid_error)},
          {"inertia_slack", num(v.inertia_slack)},
          {"green_max", num(v.green_max)},
          {"green_outside_max", num(v.green_outside_max)},
          {"checks", checks},
          {"passes", v.passes()}};
}

// ---------------------------------------------------------------------------

RunReport cmd_solve(const std::string& config_path, const std::optional<std::string>& out_dir) {
  RunConfig c = load_config(config_path);
  if (out_dir) c.outputs.directory = *out_dir;
  return cmd_solve(c);
}

RunReport cmd_solve(const RunConfig& c) {
  const auto t0 = Clock::now();
  RunReport r;
  r.command = "solve";
  r.config = config_to_json(c);
  const Grid grid = run_grid(c);
  const ScalarField w = rasterize_weight(c.weight, grid);
  r.timings["setup"] = seconds_since(t0);

  DirectoryLock lock(c.outputs.directory);
  const auto t1 = Clock::now();
  const ObstacleSolution sol = solve_obstacle(w, c.solver);
  r.timings["solve"] = seconds_since(t1);
  r.solver = {{"sweeps_used", sol.sweeps_used},
              {"converged", sol.converged},
              {"last_update", num(sol.last_update)},
              {"tolerance", c.solver.tolerance},
              {"tau", num(sol.tau)},
              {"residuals", residuals_json(sol.residuals)},
              {"grid",
               {{"origin", point_json(grid.origin(), grid.dim())},
                {"h", grid.spacing()},
                {"shape", std::vector<int>(grid.shape().begin(), grid.shape().begin() + grid.dim())}}}};
  if (!sol.converged) {
    r.passes = false;
    r.exit_code = kNotConverged;
    r.error = "obstacle solve did not converge within " + std::to_string(c.solver.max_sweeps) + " sweeps";
    r.artifacts["report"] = out_path(c.outputs.directory, "report.json");
    write_report(r, c.outputs.directory);
    return r;
  }
  const IdentityResidualSummary id = summarize_identity_residual(sol, w);
  r.solver["identity_residual"] = {{"interior_max", num(id.interior_max)},
                                   {"exterior_max", num(id.exterior_max)},
                                   {"band_max", num(id.band_max)},
                                   {"band_cells", id.band_cells}};

  const DomainMask Q = extract_domain(sol, w);
  const double mass = integrate(w);
  const double measure = Q.measure();
  r.results = {{"weight_mass", num(mass)},
               {"domain_measure", num(measure)},
               {"domain_cells", Q.count()},
               {"equivalent_radius", num(std::pow(measure / unit_ball_volume(c.dim), 1.0 / c.dim))}};

  if (c.verify.enabled) {
    const auto t2 = Clock::now();
    VerificationReport v = verify_all(Q, w, c.verify.tolerances);
    std::vector<CheckResult> kept;
    for (const CheckResult& ch : v.checks)
      if (std::find(c.verify.checks.begin(), c.verify.checks.end(), ch.name) != c.verify.checks.end())
        kept.push_back(ch);
    v.checks = kept;
    r.verification = verification_to_json(v);
    r.timings["verify"] = seconds_since(t2);
    if (!v.passes()) {
      r.passes = false;
      r.exit_code = kVerifyFailed;
    }
  }

  const std::string& dir = c.outputs.directory;
  if (c.outputs.emit_fields) {
    write_field(sol.f, out_path(dir, "f.qdf"));
    write_mask(Q, out_path(dir, "Q.qdf"));
    write_field(w, out_path(dir, "w.qdf"));
    r.artifacts["f"] = out_path(dir, "f.qdf");
    r.artifacts["w"] = out_path(dir, "w.qdf");
    r.artifacts["Q"] = out_path(dir, "Q.qdf");
  }
  if (c.outputs.emit_pgm && c.dim <= 2) {
    write_pgm(Q, out_path(dir, "Q.pgm"));
    r.artifacts["Q_pgm"] = out_path(dir, "Q.pgm");
  }
  r.artifacts["report"] = out_path(dir, "report.json");
  r.timings["total"] = seconds_since(t0);
  write_report(r, dir);
  return r;
}

RunReport cmd_verify(const VerifyOptions& opt) {
  const auto t0 = Clock::now();
  RunReport r;
  r.command = "verify";
  r.config = {{"domain", opt.domain_path}, {"weight", opt.weight_path}};
  const DomainMask Q = read_mask(opt.domain_path);
  const ScalarField w = read_field(opt.weight_path);
  if (Q.grid != w.grid) throw Error(ErrorKind::InvalidInput, "domain and weight files live on different grids");
  const VerificationReport v = verify_all(Q, w, opt.tolerances);
  r.verification = verification_to_json(v);
  r.passes = v.passes();
  r.exit_code = r.passes ? kOk : kVerifyFailed;
  r.timings["total"] = seconds_since(t0);
  if (opt.out_dir) {
    DirectoryLock lock(*opt.out_dir);
    r.artifacts["report"] = out_path(*opt.out_dir, "report.json");
    write_report(r, *opt.out_dir);
  }
  return r;
}

RunReport cmd_oracle(const OracleOptions& opt) {
  const auto t0 = Clock::now();
  RunReport r;
  r.command = "oracle";
  std::optional<DirectoryLock> lock;
  if (opt.out_dir) lock.emplace(*opt.out_dir);
  if (opt.kind == "radial") {
    if (opt.samples < 2) throw Error(ErrorKind::InvalidInput, "oracle needs at least 2 samples");
    const RadialSolution s = radial_solution(opt.c, opt.R, opt.dim);
    const double rmax = opt.r_max.value_or(1.5 * s.R_prime);
    if (!(rmax > 0.0)) throw Error(ErrorKind::InvalidInput, "r_max must be positive");
    r.config = {{"kind", "radial"}, {"c", opt.c}, {"R", opt.R}, {"dim", opt.dim}, {"samples", opt.samples},
                {"r_max", rmax}};
    std::string csv = "r,f,df\n";
    double fmax = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < opt.samples; ++k) {
      const double rr = rmax * k / (opt.samples - 1);
      const double f = s.value(rr);
      fmax = std::max(fmax, f);
      csv += fmt(rr) + "," + fmt(f) + "," + fmt(s.derivative(rr)) + "\n";
    }
    r.results = {{"R_prime", s.R_prime},
                 {"f_center", num(s.value(0.0))},
                 {"f_at_R_prime", num(s.value(s.R_prime))},
                 {"max_value", num(fmax)}};
    r.passes = fmax <= 0.0 && std::abs(s.value(s.R_prime)) <= 1e-12;
    if (opt.out_dir) {
      write_text(out_path(*opt.out_dir, "profile.csv"), csv);
      r.artifacts["profile"] = out_path(*opt.out_dir, "profile.csv");
    }
  } else if (opt.kind == "1d") {
    if (opt.pieces.empty()) throw Error(ErrorKind::InvalidInput, "1d oracle needs at least one piece");
    const Interval1DSolution s = exact_1d(opt.pieces, opt.rel_h);
    json pieces = json::array();
    double mass = 0.0;
    for (const Piece1D& p : opt.pieces) {
      pieces.push_back({p.a, p.b, p.amplitude});
      mass += p.amplitude * (p.b - p.a);
    }
    r.config = {{"kind", "1d"}, {"pieces", pieces}, {"rel_h", opt.rel_h}};
    json iv = json::array();
    std::string icsv = "a,b\n";
    for (const auto& [a, b] : s.intervals) {
      iv.push_back({a, b});
      icsv += fmt(a) + "," + fmt(b) + "\n";
    }
    r.results = {{"intervals", iv},
                 {"total_length", s.total_length()},
                 {"weight_mass", mass},
                 {"iterations", s.iterations}};
    r.passes = std::abs(s.total_length() - mass) <= 1e-3 * mass;
    if (opt.out_dir) {
      std::string pcsv = "x,f\n";
      const std::size_t n = s.f.size();
      const std::size_t stride = std::max<std::size_t>(1, n / 2000);
      for (std::size_t i = 0; i < n; i += stride) pcsv += fmt(s.grid.center(i)[0]) + "," + fmt(s.f[i]) + "\n";
      write_text(out_path(*opt.out_dir, "intervals.csv"), icsv);
      write_text(out_path(*opt.out_dir, "profile.csv"), pcsv);
      r.artifacts["intervals"] = out_path(*opt.out_dir, "intervals.csv");
      r.artifacts["profile"] = out_path(*opt.out_dir, "profile.csv");
    }
  } else {
    throw Error(ErrorKind::InvalidInput, "oracle kind must be 'radial' or '1d'");
  }
  r.exit_code = r.passes ? kOk : kVerifyFailed;
  r.timings["total"] = seconds_since(t0);
  if (opt.out_dir) {
    r.artifacts["report"] = out_path(*opt.out_dir, "report.json");
    write_report(r, *opt.out_dir);
  }
  return r;
}

RunReport cmd_cutoffs(const CutoffOptions& opt) {
  const auto t0 = Clock::now();
  RunReport r;
  r.command = "cutoffs";
  if (opt.dim < 1 || opt.dim > 3) throw Error(ErrorKind::InvalidInput, "dimension must be 1, 2 or 3");
  if (opt.j.empty()) throw Error(ErrorKind::InvalidInput, "no cutoff indices given");
  if (!(opt.h > 0.0)) throw Error(ErrorKind::InvalidInput, "resolution h must be positive");
  if (opt.lattice < 2) throw Error(ErrorKind::InvalidInput, "probe lattice needs n >= 2");
  for (int j : opt.j)
    if (j < 4 || 1.0 / j < 4.0 * opt.h)
      throw Error(ErrorKind::InvalidInput, "cutoff index j=" + std::to_string(j) + " is incompatible with h");

  std::shared_ptr<const Region> Q;
  if (opt.region == "ball") {
    Q = std::make_shared<BallRegion>(opt.dim, opt.center, opt.radius);
    r.config = {{"region", "ball"}, {"center", point_json(opt.center, opt.dim)}, {"radius", opt.radius}};
  } else if (opt.region == "box") {
    Q = std::make_shared<BoxRegion>(opt.dim, opt.lo, opt.hi);
    r.config = {{"region", "box"}, {"lo", point_json(opt.lo, opt.dim)}, {"hi", point_json(opt.hi, opt.dim)}};
  } else {
    throw Error(ErrorKind::InvalidInput, "region must be 'ball' or 'box'");
  }
  r.config["dim"] = opt.dim;
  r.config["j"] = opt.j;
  r.config["h"] = opt.h;
  r.config["lattice"] = opt.lattice;
  r.config["whitney_level"] = opt.whitney_level;
  r.config["band_probes"] = opt.band_probes;

  std::optional<DirectoryLock> lock;
  if (opt.out_dir) lock.emplace(*opt.out_dir);

  const WhitneyDecomposition wd = whitney_decompose(*Q, opt.whitney_level);
  const WhitneyCheck wc = check_whitney(*Q, wd, opt.lattice);
  r.results["whitney"] = {{"cubes", wc.cubes},
                          {"inequality_violations", wc.inequality_violations},
                          {"overlaps", wc.overlaps},
                          {"points", wc.points},
                          {"multiply_covered", wc.multiply_covered},
                          {"uncovered_deep", wc.uncovered_deep},
                          {"uncovered_shallow", wc.uncovered_shallow},
                          {"pass", wc.pass()}};
  bool pass = wc.pass();

  auto D = std::make_shared<RegularizedDistance>(Q);
  const BoundConstants pc = RegularizedDistance::bound_constants(opt.dim);
  const std::vector<Point> lattice = lattice_probes(*Q, opt.lattice);
  const auto [blo, bhi] = Q->bounds();
  const double lattice_step = (bhi[0] - blo[0]) / opt.lattice;
  const DistanceProbeReport dr = probe_regularized_distance(*D, lattice, lattice_step / 4.0);
  const bool dpass = dr.min_ratio >= 1.0 - 1e-12 && dr.max_ratio <= pc.C1 && dr.max_gradient <= pc.C2 &&
                     dr.max_hessian_entry <= pc.C3;
  pass = pass && dpass;
  r.results["regularized_distance"] = {{"probes", dr.probes},
                                       {"min_ratio", num(dr.min_ratio)},
                                       {"max_ratio", num(dr.max_ratio)},
                                       {"max_gradient", num(dr.max_gradient)},
                                       {"max_hessian_entry", num(dr.max_hessian_entry)},
                                       {"max_hessian_frobenius", num(dr.max_hessian_frobenius)},
                                       {"fd_gradient_error", num(dr.fd_gradient_error)},
                                       {"fd_hessian_error", num(dr.fd_hessian_error)},
                                       {"C1", pc.C1},
                                       {"C2", pc.C2},
                                       {"C3", pc.C3},
                                       {"beta", pc.beta},
                                       {"N", pc.N},
                                       {"pass", dpass}};

  const std::vector<Point> probes = hedberg_probes(*Q, lattice, opt.band_probes);
  const DistanceProbeReport all = probe_regularized_distance(*D, probes, 1e-5);
  const double K = HedbergCutoff::constant_from(all);
  r.results["K"] = K;

  std::vector<int> js = opt.j;
  std::sort(js.begin(), js.end());
  js.erase(std::unique(js.begin(), js.end()), js.end());
  std::map<int, std::vector<double>> values;
  std::string table = "j,m,gradient_ratio,hessian_ratio,min_deep_value,max_outside_value,min_value,max_value\n";
  json rows = json::array();
  for (int j : js) {
    const HedbergCutoff hc(D, j, K, opt.h);
    const HedbergReport hr = probe_hedberg(hc, probes);
    const bool jp = hr.gradient_ratio <= 1.1 && hr.hessian_ratio <= 2.2 && hr.min_deep_value >= 1.0 - 1e-12 &&
                    hr.max_outside_value == 0.0 && hr.min_value >= 0.0 && hr.max_value <= 1.0 + 1e-12;
    pass = pass && jp;
    rows.push_back({{"j", j},
                    {"m", hr.m},
                    {"gradient_ratio", num(hr.gradient_ratio)},
                    {"hessian_ratio", num(hr.hessian_ratio)},
                    {"min_deep_value", num(hr.min_deep_value)},
                    {"max_outside_value", num(hr.max_outside_value)},
                    {"fd_gradient_error", num(hr.fd_gradient_error)},
                    {"pass", jp}});
    table += std::to_string(j) + "," + fmt(hr.m) + "," + fmt(hr.gradient_ratio) + "," + fmt(hr.hessian_ratio) + "," +
             fmt(hr.min_deep_value) + "," + fmt(hr.max_outside_value) + "," + fmt(hr.min_value) + "," +
             fmt(hr.max_value) + "\n";
    auto& vals = values[j];
    vals.reserve(probes.size());
    for (const Point& p : probes) vals.push_back(hc.value(p));

    if (opt.out_dir) {
      Point lo{}, hi{};
      Index shape{1, 1, 1};
      std::size_t cells = 1;
      for (int a = 0; a < opt.dim; ++a) {
        lo[a] = blo[a] - 2.0 * opt.h;
        hi[a] = bhi[a] + 2.0 * opt.h;
        shape[a] = static_cast<int>(std::ceil((hi[a] - lo[a]) / opt.h));
        cells *= static_cast<std::size_t>(shape[a]);
      }
      if (cells <= 4'000'000) {
        ScalarField f(Grid(opt.dim, lo, opt.h, shape));
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = hc.value(f.grid.center(i));
        const std::string name = "h_" + std::to_string(j) + ".qdf";
        write_field(f, out_path(*opt.out_dir, name));
        r.artifacts["h_" + std::to_string(j)] = out_path(*opt.out_dir, name);
      }
    }
  }
  // h_j <= h_2j wherever both indices were requested.
  double mono = 0.0;
  for (int j : js)
    if (values.count(2 * j))
      for (std::size_t i = 0; i < probes.size(); ++i) mono = std::max(mono, values[j][i] - values[2 * j][i]);
  const bool mono_pass = mono <= 1e-9;
  pass = pass && mono_pass;
  r.results["hedberg"] = rows;
  r.results["monotonicity_excess"] = num(mono);
  r.results["monotonicity_pass"] = mono_pass;

  r.passes = pass;
  r.exit_code = pass ? kOk : kVerifyFailed;
  r.timings["total"] = seconds_since(t0);
  if (opt.out_dir) {
    write_text(out_path(*opt.out_dir, "cubes.csv"), format_cubes_csv(wd));
    write_text(out_path(*opt.out_dir, "ratios.csv"), table);
    r.artifacts["cubes"] = out_path(*opt.out_dir, "cubes.csv");
    r.artifacts["ratios"] = out_path(*opt.out_dir, "ratios.csv");
    r.artifacts["report"] = out_path(*opt.out_dir, "report.json");
    write_report(r, *opt.out_dir);
  }
  return r;
}

}  // namespace qd::cli
