#include "qd/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "qd/greens.hpp"
#include "qd/numerics.hpp"
#include "qd/obstacle.hpp"

namespace qd {

double RadialSolution::value(double r) const {
  if (c == 1.0) return 0.0;
  r = std::abs(r);
  if (r >= R_prime) return 0.0;
  return analytic_ball_potential_radial(R_prime, dim, r) - c * analytic_ball_potential_radial(R, dim, r);
}

double RadialSolution::derivative(double r) const {
  if (c == 1.0) return 0.0;
  r = std::abs(r);
  if (r >= R_prime) return 0.0;
  return analytic_ball_potential_derivative(R_prime, dim, r) - c * analytic_ball_potential_derivative(R, dim, r);
}

RadialSolution radial_solution(double c, double R, int dim) {
  if (!(c >= 1.0) || !std::isfinite(c)) throw Error(ErrorKind::InvalidInput, "radial oracle needs c >= 1");
  if (!(R > 0.0) || !std::isfinite(R)) throw Error(ErrorKind::InvalidInput, "radial oracle needs R > 0");
  if (dim < 1 || dim > 3) throw Error(ErrorKind::InvalidInput, "dimension must be 1, 2 or 3");
  RadialSolution s{c, R, dim, std::pow(c, 1.0 / dim) * R};
  // The profile must be nonpositive on [0, R'].
  for (int k = 0; k <= 256; ++k) {
    const double r = s.R_prime * k / 256.0;
    if (s.value(r) > 1e-12 * std::max(1.0, c * R * R))
      throw Error(ErrorKind::Domain, "radial profile is positive at r = " + std::to_string(r));
  }
  return s;
}

// ---------------------------------------------------------------------------

double Interval1DSolution::total_length() const {
  double s = 0.0;
  for (const auto& [a, b] : intervals) s += b - a;
  return s;
}

double Interval1DSolution::value_at(double x) const {
  const double h = grid.spacing();
  const double u = (x - grid.origin()[0]) / h - 0.5;
  if (u < 0.0 || u > grid.extent(0) - 1) return 0.0;
  const int i = std::min(static_cast<int>(std::floor(u)), grid.extent(0) - 2);
  const double t = u - i;
  return (1.0 - t) * f[i] + t * f[i + 1];
}

namespace {

// Solves (2 x_i - x_{i-1} - x_{i+1}) = b_i on one segment with zero ends.
void thomas_segment(const double* b, double* x, std::size_t n, std::vector<double>& cp, std::vector<double>& dp) {
  cp.resize(n);
  dp.resize(n);
  double denom = 2.0;
  cp[0] = -1.0 / denom;
  dp[0] = b[0] / denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = 2.0 + cp[i - 1];
    cp[i] = -1.0 / denom;
    dp[i] = (b[i] + dp[i - 1]) / denom;
  }
  x[n - 1] = dp[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = dp[i] - cp[i] * x[i + 1];
}

}  // namespace

namespace {

struct ActiveSetResult {
  std::vector<double> u;
  std::vector<std::uint8_t> free_set;
  int iterations = 0;
};

// u = -f >= 0, M u + q >= 0, u (M u + q) = 0 with M = -Lap_h, q = 1 - w.
ActiveSetResult active_set_solve(const std::vector<double>& w, double h, std::vector<std::uint8_t> free_set) {
  const std::size_t n = w.size();
  std::vector<double> q(n), u(n, 0.0), rhs(n), cp, dp;
  std::vector<std::uint8_t> next(n, 0);
  for (std::size_t i = 0; i < n; ++i) q[i] = 1.0 - w[i];
  free_set[0] = free_set[n - 1] = 0;
  const double h2 = h * h;
  constexpr int kMaxIterations = 20000;
  int it = 0;
  for (;; ++it) {
    if (it >= kMaxIterations) throw Error(ErrorKind::NotConverged, "1D active-set iteration did not settle");
    std::fill(u.begin(), u.end(), 0.0);
    for (std::size_t i = 1; i + 1 < n;) {
      if (!free_set[i]) {
        ++i;
        continue;
      }
      std::size_t e = i;
      while (e + 1 < n - 1 && free_set[e + 1]) ++e;
      for (std::size_t k = i; k <= e; ++k) rhs[k] = -h2 * q[k];
      thomas_segment(rhs.data() + i, u.data() + i, e - i + 1, cp, dp);
      i = e + 1;
    }
    double umax = 0.0;
    for (double v : u) umax = std::max(umax, std::abs(v));
    const double u_tol = 1e-14 * umax;
    bool changed = false;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double lambda = (2.0 * u[i] - u[i - 1] - u[i + 1]) / h2 + q[i];
      const bool nf = free_set[i] ? (u[i] >= -u_tol) : (lambda < -1e-10);
      next[i] = nf ? 1 : 0;
      if (next[i] != free_set[i]) changed = true;
    }
    if (!changed) break;
    std::swap(free_set, next);
  }
  return {std::move(u), std::move(free_set), it + 1};
}

struct Level {
  Grid grid;
  std::vector<double> w;
};

Level make_level(const WeightSpec& spec, const std::vector<Piece1D>& pieces, double h) {
  const AprioriBox box = apriori_radius(spec, 1, h, 8);
  Level L{box.grid, std::vector<double>(box.grid.size(), 0.0)};
  for (std::size_t i = 0; i < L.w.size(); ++i) {
    const double x = L.grid.center(i)[0];
    for (const auto& p : pieces)
      if (x > p.a && x < p.b) L.w[i] += p.amplitude;
  }
  return L;
}

}  // namespace

Interval1DSolution exact_1d(const std::vector<Piece1D>& pieces, double rel_h) {
  if (pieces.empty()) throw Error(ErrorKind::InvalidInput, "1D oracle needs at least one piece");
  if (!(rel_h > 0.0 && rel_h <= 1e-2)) throw Error(ErrorKind::InvalidInput, "rel_h must lie in (0, 1e-2]");
  WeightSpec spec;
  double lo = pieces[0].a, hi = pieces[0].b;
  for (const auto& p : pieces) {
    if (!(p.a < p.b)) throw Error(ErrorKind::InvalidInput, "1D piece requires a < b");
    spec.primitives.push_back({Box{{p.a, 0, 0}, {p.b, 0, 0}}, p.amplitude});
    lo = std::min(lo, p.a);
    hi = std::max(hi, p.b);
  }
  spec.validate(1);
  const double width = hi - lo;

  // Coarse-to-fine: each level starts from the previous free set, so the
  // free boundary only has to travel a few cells per level.
  std::vector<double> rels;
  for (double r = 1e-2; r > rel_h * 1.0001; r /= 10.0) rels.push_back(r);
  rels.push_back(rel_h);

  std::optional<Level> prev;
  std::vector<std::uint8_t> prev_free;
  ActiveSetResult res;
  int total_iterations = 0;
  for (double r : rels) {
    Level L = make_level(spec, pieces, r * width);
    std::vector<std::uint8_t> start(L.w.size(), 0);
    for (std::size_t i = 0; i < start.size(); ++i) {
      if (!prev) {
        start[i] = L.w[i] >= 1.0 ? 1 : 0;
      } else {
        const Point x = L.grid.center(i);
        const Index c = prev->grid.locate(x);
        const bool outside = x[0] < prev->grid.lower()[0] || x[0] > prev->grid.upper()[0];
        start[i] = (!outside && prev_free[prev->grid.flat(c)]) ? 1 : 0;
      }
    }
    res = active_set_solve(L.w, L.grid.spacing(), std::move(start));
    total_iterations += res.iterations;
    prev_free = res.free_set;
    prev = std::move(L);
  }

  const Grid& g = prev->grid;
  const double h = g.spacing();
  const std::size_t n = g.size();
  Interval1DSolution out{{}, g, std::vector<double>(n), total_iterations};
  for (std::size_t i = 0; i < n; ++i) out.f[i] = -res.u[i];
  auto inside = [&](std::size_t k) { return res.u[k] > 0.0 || prev->w[k] >= 1.0; };
  for (std::size_t i = 0; i < n;) {
    if (!inside(i)) {
      ++i;
      continue;
    }
    std::size_t e = i;
    while (e + 1 < n && inside(e + 1)) ++e;
    out.intervals.emplace_back(g.center(i)[0] - 0.5 * h, g.center(e)[0] + 0.5 * h);
    i = e + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct WitnessShape {
  Point center;
  double R;
  double c;
};

WitnessShape witness_shape(const WeightSpec& spec, const Grid& grid) {
  const AprioriBox box = apriori_radius(spec, grid.dim(), grid.spacing(), 2);
  return {box.center, box.R, box.c};
}

ScalarField sample_radial(const Grid& grid, const Point& center, double scale, const RadialSolution& s) {
  ScalarField g(grid);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point x = grid.center(i);
    double r2 = 0.0;
    for (int a = 0; a < grid.dim(); ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
    g[i] = std::min(0.0, scale * s.value(std::sqrt(r2)));
  }
  return g;
}

}  // namespace

ScalarField admissible_witness(const WeightSpec& spec, const Grid& grid) {
  const WitnessShape ws = witness_shape(spec, grid);
  return sample_radial(grid, ws.center, 1.0, radial_solution(ws.c, ws.R, grid.dim()));
}

ScalarField discrete_admissible_witness(const WeightSpec& spec, const Grid& grid, double kappa) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw Error(ErrorKind::InvalidInput, "kappa must lie in (0, 1)");
  const WitnessShape ws = witness_shape(spec, grid);
  if (ws.c == 1.0) return ScalarField(grid);
  const double cp = 1.0 + (ws.c - 1.0) / (1.0 - kappa);
  const double rho = ws.R + 2.0 * grid.spacing();
  return sample_radial(grid, ws.center, 1.0 - kappa, radial_solution(cp, rho, grid.dim()));
}

AdmissibilityReport check_admissible(const ScalarField& g, const ScalarField& w) {
  if (g.grid != w.grid) throw Error(ErrorKind::InvalidInput, "witness and weight live on different grids");
  const ScalarField lap = discrete_laplacian(g);
  AdmissibilityReport r{g.max_value(), -1e300};
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.grid.is_interior(i)) r.max_constraint_deficit = std::max(r.max_constraint_deficit, (w[i] - 1.0) - lap[i]);
  return r;
}

}  // namespace qd
