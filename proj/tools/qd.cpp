// qd: quadrature-domain laboratory command line.
#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qd/cli.hpp"

namespace {

using namespace qd;
using namespace qd::cli;

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidInput, "cannot parse number list '" + s + "'");
    }
  }
  return out;
}

Point parse_point(const std::string& s, int dim) {
  const std::vector<double> v = parse_list(s);
  if (static_cast<int>(v.size()) != dim)
    throw Error(ErrorKind::InvalidInput, "'" + s + "' needs " + std::to_string(dim) + " coordinates");
  Point p{};
  for (int a = 0; a < dim; ++a) p[a] = v[a];
  return p;
}

void summarize(const RunReport& r) {
  std::cout << r.command << ": " << (r.passes ? "pass" : "FAIL") << " (exit " << r.exit_code << ")\n";
  if (!r.error.empty()) std::cout << "  " << r.error << "\n";
  if (r.verification.contains("checks"))
    for (const auto& c : r.verification["checks"])
      std::cout << "  " << c["name"].get<std::string>() << " = " << c["value"] << " (tol " << c["tolerance"] << ") "
                << (c["pass"].get<bool>() ? "ok" : "FAIL") << "\n";
  const auto it = r.artifacts.find("report");
  if (it != r.artifacts.end()) std::cout << "  report: " << it->second << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quadrature domains: solve, verify, oracles and cutoffs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  auto* solve = app.add_subcommand("solve", "solve the obstacle problem for a JSON config");
  solve->add_option("--config", config_path, "JSON run configuration")->required();
  solve->add_option("--out", out_dir, "output directory (overrides the config)");

  VerifyOptions vopt;
  std::string vout;
  double vpot = 0.0, vmeasure = 0.0;
  auto* verify = app.add_subcommand("verify", "check a domain mask against a weight field");
  verify->add_option("--domain", vopt.domain_path, "QDF1 mask of Q")->required();
  verify->add_option("--weight", vopt.weight_path, "QDF1 weight field")->required();
  verify->add_option("--out", vout, "write report.json here");
  verify->add_option("--potential-tol", vpot, "override the potential tolerance");
  verify->add_option("--measure-tol", vmeasure, "override the relative measure tolerance");

  OracleOptions oopt;
  std::string oout = "qd_oracle";
  std::vector<std::string> pieces;
  double rmax = 0.0;
  auto* oracle = app.add_subcommand("oracle", "closed-form and one-dimensional reference solutions");
  oracle->add_option("kind", oopt.kind, "radial or 1d")->required()->check(CLI::IsMember({"radial", "1d"}));
  oracle->add_option("--c", oopt.c, "radial: amplitude c >= 1");
  oracle->add_option("--R", oopt.R, "radial: ball radius");
  oracle->add_option("--dim", oopt.dim, "radial: dimension");
  oracle->add_option("--samples", oopt.samples, "radial: profile samples");
  oracle->add_option("--rmax", rmax, "radial: profile extent (default 1.5 R')");
  oracle->add_option("--piece", pieces, "1d: a,b,amplitude (repeatable)");
  oracle->add_option("--rel-h", oopt.rel_h, "1d: dense grid spacing relative to the support");
  oracle->add_option("--out", oout, "output directory");

  CutoffOptions copt;
  std::string center, lo, hi, cout_dir = "qd_cutoffs";
  auto* cut = app.add_subcommand("cutoffs", "Whitney cubes, regularized distance and Hedberg cutoffs");
  cut->add_option("--region", copt.region, "ball or box")->check(CLI::IsMember({"ball", "box"}));
  cut->add_option("--dim", copt.dim, "dimension");
  cut->add_option("--center", center, "ball center x,y,...");
  cut->add_option("--radius", copt.radius, "ball radius");
  cut->add_option("--lo", lo, "box lower corner");
  cut->add_option("--hi", hi, "box upper corner");
  cut->add_option("--j", copt.j, "cutoff indices (repeatable)");
  cut->add_option("--spacing", copt.h, "field resolution h");
  cut->add_option("--lattice", copt.lattice, "probe lattice points per axis");
  cut->add_option("--whitney-level", copt.whitney_level, "deepest Whitney level");
  cut->add_option("--band-probes", copt.band_probes, "probes placed near the boundary");
  cut->add_option("--out", cout_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfig;
  }

  try {
    RunReport r;
    if (*solve) {
      r = cmd_solve(config_path, out_dir.empty() ? std::nullopt : std::optional<std::string>(out_dir));
    } else if (*verify) {
      if (!vout.empty()) vopt.out_dir = vout;
      if (vpot > 0.0) vopt.tolerances.potential = vpot;
      if (vmeasure > 0.0) vopt.tolerances.measure_relative = vmeasure;
      r = cmd_verify(vopt);
    } else if (*oracle) {
      for (const std::string& p : pieces) {
        const std::vector<double> v = parse_list(p);
        if (v.size() != 3) throw Error(ErrorKind::InvalidInput, "--piece needs a,b,amplitude");
        oopt.pieces.push_back({v[0], v[1], v[2]});
      }
      if (rmax > 0.0) oopt.r_max = rmax;
      oopt.out_dir = oout;
      r = cmd_oracle(oopt);
    } else {
      if (!center.empty()) copt.center = parse_point(center, copt.dim);
      if (!lo.empty()) copt.lo = parse_point(lo, copt.dim);
      if (!hi.empty()) copt.hi = parse_point(hi, copt.dim);
      copt.out_dir = cout_dir;
      r = cmd_cutoffs(copt);
    }
    summarize(r);
    return r.exit_code;
  } catch (const Error& e) {
    std::cerr << "qd: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "qd: " << e.what() << "\n";
    return kConfig;
  }
}
