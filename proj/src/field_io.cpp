#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qd/field.hpp"

namespace qd {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Format, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Format, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorKind::Format, "write failed for " + path);
}

double parse_number(const std::string& tok, const char* what) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0')
    throw Error(ErrorKind::Format, std::string("malformed ") + what + ": '" + tok + "'");
  return v;
}

int parse_int(const std::string& tok, const char* what) {
  int v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw Error(ErrorKind::Format, std::string("malformed ") + what + ": '" + tok + "'");
  return v;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ScalarField parse_field(const std::string& text) {
  const auto nl = text.find('\n');
  std::istringstream header(text.substr(0, nl));
  std::vector<std::string> toks;
  for (std::string t; header >> t;) toks.push_back(t);
  if (toks.empty() || toks[0] != "QDF1") throw Error(ErrorKind::Format, "missing QDF1 magic");
  if (toks.size() < 2) throw Error(ErrorKind::Format, "QDF1 header lacks a dimension");
  const int dim = parse_int(toks[1], "dimension");
  if (dim < 1 || dim > 3) throw Error(ErrorKind::Format, "QDF1 dimension must be 1, 2 or 3");
  if (toks.size() != static_cast<std::size_t>(2 + 2 * dim + 1))
    throw Error(ErrorKind::Format, "QDF1 header has the wrong number of fields for dimension " + toks[1]);
  Index shape{1, 1, 1};
  for (int a = 0; a < dim; ++a) shape[a] = parse_int(toks[2 + a], "shape entry");
  const double h = parse_number(toks[2 + dim], "spacing");
  Point origin{};
  for (int a = 0; a < dim; ++a) origin[a] = parse_number(toks[3 + dim + a], "origin");
  Grid grid = [&] {
    try {
      return Grid(dim, origin, h, shape);
    } catch (const Error& e) {
      throw Error(ErrorKind::Format, std::string("invalid QDF1 grid: ") + e.what());
    }
  }();

  std::vector<double> values;
  values.reserve(grid.size());
  if (nl != std::string::npos) {
    std::istringstream body(text.substr(nl + 1));
    for (std::string t; body >> t;) {
      const double v = parse_number(t, "value");
      if (!std::isfinite(v))
        throw Error(ErrorKind::NonFinite, "non-finite value at position " + std::to_string(values.size()));
      values.push_back(v);
    }
  }
  if (values.size() != grid.size())
    throw Error(ErrorKind::Format, "QDF1 value count " + std::to_string(values.size()) + " does not match shape (" +
                                       std::to_string(grid.size()) + ")");
  return ScalarField(grid, std::move(values));
}

std::string format_field(const ScalarField& f) {
  const Grid& g = f.grid;
  std::string out = "QDF1 " + std::to_string(g.dim());
  for (int a = 0; a < g.dim(); ++a) out += " " + std::to_string(g.extent(a));
  out += " " + fmt17(g.spacing());
  for (int a = 0; a < g.dim(); ++a) out += " " + fmt17(g.origin()[a]);
  out += '\n';
  const std::size_t row = static_cast<std::size_t>(g.extent(0));
  for (std::size_t i = 0; i < f.size(); ++i) {
    out += fmt17(f[i]);
    out += ((i + 1) % row == 0) ? '\n' : ' ';
  }
  return out;
}

ScalarField read_field(const std::string& path) { return parse_field(read_file(path)); }

void write_field(const ScalarField& f, const std::string& path) { write_file(path, format_field(f)); }

DomainMask read_mask(const std::string& path) {
  ScalarField f = read_field(path);
  DomainMask m(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] != 0.0 && f[i] != 1.0) throw Error(ErrorKind::Format, "mask file " + path + " has values other than 0/1");
    m.inside[i] = f[i] == 1.0 ? 1 : 0;
  }
  return m;
}

void write_mask(const DomainMask& m, const std::string& path) { write_field(m.as_field(), path); }

std::string format_pgm(const DomainMask& m) {
  const Grid& g = m.grid;
  if (g.dim() > 2) throw Error(ErrorKind::InvalidInput, "PGM export supports 1D and 2D masks only");
  const int nx = g.extent(0), ny = g.extent(1);
  std::string out = "P2\n" + std::to_string(nx) + " " + std::to_string(ny) + "\n255\n";
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      out += m.inside[g.flat({i, j, 0})] ? "255" : "0";
      out += (i + 1 == nx) ? '\n' : ' ';
    }
  }
  return out;
}

void write_pgm(const DomainMask& m, const std::string& path) { write_file(path, format_pgm(m)); }

}  // namespace qd
