#include <doctest.h>

#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>

#include "qd/cli.hpp"

using namespace qd;
using namespace qd::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qd_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string radial_config(const std::string& dir, double h = 1.0 / 32, double amp = 4.0) {
  nlohmann::json j = {
      {"dim", 2},
      {"weight", {{"primitives", {{{"type", "ball"}, {"center", {0.0, 0.0}}, {"radius", 1.0}, {"amplitude", amp}}}}}},
      {"grid", {{"h", h}}},
      {"outputs", {{"directory", dir}}},
  };
  return j.dump();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int expect_error(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return exit_code_for(e.kind());
  }
  return kOk;
}

}  // namespace

TEST_CASE("exit code table") {
  CHECK(exit_code_for(ErrorKind::InvalidInput) == 2);
  CHECK(exit_code_for(ErrorKind::Format) == 2);
  CHECK(exit_code_for(ErrorKind::NonFinite) == 2);
  CHECK(exit_code_for(ErrorKind::Singular) == 2);
  CHECK(exit_code_for(ErrorKind::Domain) == 2);
  CHECK(exit_code_for(ErrorKind::NotConverged) == 3);
}

TEST_CASE("config parsing") {
  const RunConfig c = parse_config(radial_config("out"));
  CHECK(c.dim == 2);
  REQUIRE(c.weight.primitives.size() == 1);
  CHECK(c.weight.primitives[0].amplitude == 4.0);
  CHECK(c.grid.h == 1.0 / 32);
  CHECK_FALSE(c.grid.box.has_value());
  CHECK(c.solver.tolerance == 1e-10);
  CHECK(c.outputs.directory == "out");
  CHECK(c.verify.checks.size() == 5);

  const RunConfig back = parse_config(config_to_json(c).dump());
  CHECK(config_to_json(back) == config_to_json(c));

  const Grid g = run_grid(c);
  CHECK(g.spacing() == 1.0 / 32);
  CHECK(g.lower()[0] < -2.0);
}

TEST_CASE("config rejections") {
  auto code = [](const std::string& text) { return expect_error([&] { parse_config(text); }); };
  nlohmann::json j = nlohmann::json::parse(radial_config("out"));
  CHECK(code(j.dump()) == kOk);

  nlohmann::json unknown = j;
  unknown["colour"] = "blue";
  CHECK(code(unknown.dump()) == kConfig);
  nlohmann::json nested = j;
  nested["solver"] = {{"tolerence", 1e-8}};
  CHECK(code(nested.dump()) == kConfig);
  nlohmann::json half = nlohmann::json::parse(radial_config("out", 1.0 / 32, 0.5));
  CHECK(code(half.dump()) == kConfig);
  nlohmann::json neg = j;
  neg["verify"] = {{"tolerances", {{"measure_relative", -1.0}}}};
  CHECK(code(neg.dump()) == kConfig);
  nlohmann::json relax = j;
  relax["solver"] = {{"relaxation", 2.5}};
  CHECK(code(relax.dump()) == kConfig);
  nlohmann::json ext = j;
  ext["weight"] = {{"external_field", "w.qdf"}};
  CHECK(code(ext.dump()) == kConfig);
  nlohmann::json check = j;
  check["verify"] = {{"checks", {"measure", "volume"}}};
  CHECK(code(check.dump()) == kConfig);
  CHECK(code("{ not json") == kConfig);
  CHECK(code(R"({"dim": 4, "weight": {"primitives": []}})") == kConfig);
}

TEST_CASE("solve writes artifacts and a passing report") {
  const fs::path dir = scratch("solve");
  const RunConfig c = parse_config(radial_config(dir.string()));
  const RunReport r = cmd_solve(c);
  CHECK(r.exit_code == kOk);
  CHECK(r.passes);
  for (const char* f : {"f.qdf", "Q.qdf", "w.qdf", "Q.pgm", "report.json"}) CHECK(fs::exists(dir / f));
  CHECK_FALSE(fs::exists(dir / ".qd.lock"));
  CHECK(r.solver["converged"].get<bool>());
  CHECK(r.results["equivalent_radius"].get<double>() == doctest::Approx(2.0).epsilon(0.02));
  CHECK(r.verification["checks"].size() == 5);
  for (const auto& ch : r.verification["checks"]) CHECK(ch["tolerance"].get<double>() > 0.0);

  const RunReport back = report_from_json(nlohmann::json::parse(slurp(dir / "report.json")));
  CHECK(report_to_json(back) == report_to_json(r));

  // second run in the same place: identical up to timings
  const RunReport again = cmd_solve(c);
  CHECK(report_fingerprint(again) == report_fingerprint(r));
  fs::remove_all(dir);
}

TEST_CASE("solve honours the check selection and reports non-convergence") {
  const fs::path dir = scratch("partial");
  nlohmann::json j = nlohmann::json::parse(radial_config(dir.string()));
  j["verify"] = {{"checks", {"measure"}}};
  const RunReport r = cmd_solve(parse_config(j.dump()));
  CHECK(r.verification["checks"].size() == 1);
  CHECK(r.exit_code == kOk);

  j["solver"] = {{"max_sweeps", 3}};
  const RunReport nc = cmd_solve(parse_config(j.dump()));
  CHECK(nc.exit_code == kNotConverged);
  CHECK_FALSE(nc.passes);
  CHECK_FALSE(nc.error.empty());
  CHECK(fs::exists(dir / "report.json"));

  j["solver"] = nlohmann::json::object();
  j["verify"] = {{"tolerances", {{"measure_relative", 1e-9}}}};
  CHECK(cmd_solve(parse_config(j.dump())).exit_code == kVerifyFailed);
  fs::remove_all(dir);
}

TEST_CASE("locked output directory is refused") {
  const fs::path dir = scratch("lock");
  {
    DirectoryLock held(dir.string());
    CHECK_THROWS_AS(DirectoryLock(dir.string()), Error);
    const RunConfig c = parse_config(radial_config(dir.string()));
    CHECK(expect_error([&] { cmd_solve(c); }) == kConfig);
  }
  CHECK_NOTHROW(DirectoryLock(dir.string()));
  fs::remove_all(dir);
}

TEST_CASE("verify on solver output and an inflated mask") {
  const fs::path dir = scratch("verify");
  const RunReport s = cmd_solve(parse_config(radial_config(dir.string())));
  REQUIRE(s.exit_code == kOk);
  VerifyOptions v;
  v.domain_path = (dir / "Q.qdf").string();
  v.weight_path = (dir / "w.qdf").string();
  v.out_dir = (dir / "verify").string();
  const RunReport good = cmd_verify(v);
  CHECK(good.exit_code == kOk);
  CHECK(fs::exists(dir / "verify" / "report.json"));

  DomainMask Q = read_mask(v.domain_path);
  const Grid& g = Q.grid;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (norm(g.center(i)) < 2.4) Q.inside[i] = 1;
  write_mask(Q, (dir / "inflated.qdf").string());
  v.domain_path = (dir / "inflated.qdf").string();
  const RunReport bad = cmd_verify(v);
  CHECK(bad.exit_code == kVerifyFailed);
  bool outside_failed = false;
  for (const auto& ch : bad.verification["checks"])
    if (ch["name"] == "green_outside_max") outside_failed = !ch["pass"].get<bool>();
  CHECK(outside_failed);

  const Grid other(2, {0, 0, 0}, 0.1, {4, 4, 1});
  write_mask(DomainMask(other), (dir / "small.qdf").string());
  v.domain_path = (dir / "small.qdf").string();
  CHECK(expect_error([&] { cmd_verify(v); }) == kConfig);
  fs::remove_all(dir);
}

TEST_CASE("oracle reports") {
  const fs::path dir = scratch("oracle");
  OracleOptions o;
  o.kind = "radial";
  o.out_dir = (dir / "radial").string();
  const RunReport r = cmd_oracle(o);
  CHECK(r.exit_code == kOk);
  CHECK(r.results["R_prime"].get<double>() == doctest::Approx(2.0));
  CHECK(std::abs(r.results["f_at_R_prime"].get<double>()) <= 1e-12);
  const std::string csv = slurp(dir / "radial" / "profile.csv");
  CHECK(csv.rfind("r,f,df\n", 0) == 0);

  o.c = 1.0;
  o.out_dir = (dir / "flat").string();
  const RunReport flat = cmd_oracle(o);
  CHECK(flat.results["max_value"].get<double>() == 0.0);
  CHECK(flat.results["f_center"].get<double>() == 0.0);

  OracleOptions one;
  one.kind = "1d";
  one.pieces = {{1, 2, 3}, {4, 5, 3}};
  one.out_dir = (dir / "1d").string();
  const RunReport iv = cmd_oracle(one);
  CHECK(iv.exit_code == kOk);
  CHECK(iv.results["total_length"].get<double>() == doctest::Approx(6.0).epsilon(1e-3));
  CHECK(iv.results["intervals"].size() == 2);
  CHECK(fs::exists(dir / "1d" / "intervals.csv"));

  OracleOptions badkind;
  badkind.kind = "spherical";
  CHECK(expect_error([&] { cmd_oracle(badkind); }) == kConfig);
  OracleOptions badc;
  badc.kind = "radial";
  badc.c = 0.5;
  CHECK(expect_error([&] { cmd_oracle(badc); }) == kConfig);
  fs::remove_all(dir);
}

TEST_CASE("cutoffs command") {
  const fs::path dir = scratch("cutoffs");
  CutoffOptions o;
  o.region = "box";
  o.lo = {0, 0, 0};
  o.hi = {1, 1, 0};
  o.lattice = 32;
  o.band_probes = 128;
  o.whitney_level = 7;
  o.h = 1.0 / 64;
  o.out_dir = dir.string();
  const RunReport r = cmd_cutoffs(o);
  CHECK(r.exit_code == kOk);
  CHECK(r.passes);
  for (const char* f : {"cubes.csv", "ratios.csv", "report.json", "h_8.qdf", "h_16.qdf"}) CHECK(fs::exists(dir / f));

  CutoffOptions bad = o;
  bad.j = {64};
  bad.h = 1.0 / 128;
  CHECK(expect_error([&] { cmd_cutoffs(bad); }) == kConfig);
  fs::remove_all(dir);
}

TEST_CASE("report parsing rejects foreign documents") {
  RunReport r;
  r.command = "solve";
  nlohmann::json j = report_to_json(r);
  CHECK(report_from_json(j).command == "solve");
  nlohmann::json v2 = j;
  v2["schema_version"] = "2";
  CHECK_THROWS_AS(report_from_json(v2), Error);
  nlohmann::json extra = j;
  extra["notes"] = "x";
  CHECK_THROWS_AS(report_from_json(extra), Error);
}
