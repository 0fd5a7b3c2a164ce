#include "qd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qd/greens.hpp"

namespace qd {

double interpolate(const ScalarField& f, const Point& p) {
  const Grid& g = f.grid;
  const int dim = g.dim();
  std::array<int, 3> i0{0, 0, 0};
  std::array<double, 3> t{0, 0, 0};
  for (int a = 0; a < dim; ++a) {
    const double u = (p[a] - g.origin()[a]) / g.spacing() - 0.5;
    if (!(u >= -1e-12 && u <= g.extent(a) - 1 + 1e-12))
      throw Error(ErrorKind::InvalidInput, "interpolation point lies outside the grid");
    i0[a] = std::clamp(static_cast<int>(std::floor(u)), 0, g.extent(a) - 2);
    t[a] = std::clamp(u - i0[a], 0.0, 1.0);
  }
  double s = 0.0;
  const int corners = 1 << dim;
  for (int c = 0; c < corners; ++c) {
    double wgt = 1.0;
    Index idx{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
      const int bit = (c >> a) & 1;
      idx[a] = i0[a] + bit;
      wgt *= bit ? t[a] : 1.0 - t[a];
    }
    if (wgt != 0.0) s += wgt * f[g.flat(idx)];
  }
  return s;
}

namespace {

void require_ball_inside(const Grid& g, const Point& x, double r) {
  if (!(r > 0.0)) throw Error(ErrorKind::InvalidInput, "radius must be positive");
  const double h = g.spacing();
  for (int a = 0; a < g.dim(); ++a) {
    const double lo = g.origin()[a] + 0.5 * h, hi = g.origin()[a] + (g.extent(a) - 0.5) * h;
    if (x[a] - r < lo || x[a] + r > hi) throw Error(ErrorKind::InvalidInput, "radius too large for the grid");
  }
}

std::vector<Point> sphere_points(int dim, int M) {
  std::vector<Point> pts;
  if (dim == 1) {
    pts = {{1, 0, 0}, {-1, 0, 0}};
  } else if (dim == 2) {
    if (M < 1) throw Error(ErrorKind::InvalidInput, "need at least one sphere sample");
    for (int k = 0; k < M; ++k) {
      const double th = 2.0 * std::numbers::pi * k / M;
      pts.push_back({std::cos(th), std::sin(th), 0});
    }
  } else {
    if (M < 1) throw Error(ErrorKind::InvalidInput, "need at least one sphere sample");
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < M; ++k) {
      const double z = 1.0 - (2.0 * k + 1.0) / M;
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      pts.push_back({rho * std::cos(golden * k), rho * std::sin(golden * k), z});
    }
  }
  return pts;
}

}  // namespace

double sphere_average(const ScalarField& f, const Point& x, double r, int M) {
  require_ball_inside(f.grid, x, r);
  const auto pts = sphere_points(f.grid.dim(), M);
  NeumaierSum s;
  for (const auto& z : pts) s.add(interpolate(f, x + r * z));
  return s.value() / static_cast<double>(pts.size());
}

double ball_average(const ScalarField& f, const Point& x, double s) {
  const Grid& g = f.grid;
  require_ball_inside(g, x, s);
  const int dim = g.dim();
  Index lo{0, 0, 0}, hi{0, 0, 0};
  for (int a = 0; a < dim; ++a) {
    lo[a] = std::max(0, static_cast<int>(std::floor((x[a] - s - g.origin()[a]) / g.spacing())) - 1);
    hi[a] = std::min(g.extent(a) - 1, static_cast<int>(std::ceil((x[a] + s - g.origin()[a]) / g.spacing())) + 1);
  }
  NeumaierSum sum;
  std::size_t count = 0;
  for (int k = lo[2]; k <= hi[2]; ++k)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int i = lo[0]; i <= hi[0]; ++i) {
        const Index idx{i, j, k};
        const Point c = g.center(idx);
        double r2 = 0.0;
        for (int a = 0; a < dim; ++a) r2 += (c[a] - x[a]) * (c[a] - x[a]);
        if (r2 < s * s) {
          sum.add(f[g.flat(idx)]);
          ++count;
        }
      }
  if (count == 0) throw Error(ErrorKind::Domain, "ball contains no cell centers");
  return sum.value() / static_cast<double>(count);
}

double radial_reconstruction(const ScalarField& f, const Point& x, double s, int n_r, int M) {
  if (n_r < 1) throw Error(ErrorKind::InvalidInput, "n_r must be >= 1");
  require_ball_inside(f.grid, x, s);
  const int d = f.grid.dim();
  const double dr = s / n_r;
  NeumaierSum sum;
  for (int k = 0; k < n_r; ++k) {
    const double r = (k + 0.5) * dr;
    sum.add(d * std::pow(r, d - 1) / std::pow(s, d) * sphere_average(f, x, r, M) * dr);
  }
  return sum.value();
}

// ---------------------------------------------------------------------------

namespace {

void check_st(double s, double t, int dim) {
  if (dim < 1 || dim > 3) throw Error(ErrorKind::InvalidInput, "dimension must be 1, 2 or 3");
  if (!(t > 0.0 && t < s)) throw Error(ErrorKind::InvalidInput, "comparison kernel needs 0 < t < s");
}

double phi(int dim, double r) {
  switch (dim) {
    case 1: return r;
    case 2: return std::log(r);
    default: return -1.0 / r;
  }
}

}  // namespace

double comparison_kernel_value(double s, double t, int dim, double r) {
  check_st(s, t, dim);
  r = std::abs(r);
  if (r >= s) return 0.0;
  const double cd = unit_sphere_area(dim);
  const double sd = std::pow(s, dim);
  auto F = [&](double q) { return (phi(dim, q) - q * q / (2.0 * sd)) / cd; };
  if (r >= t) return F(s) - F(r);
  return F(s) - F(t) + (std::pow(t, -dim) - std::pow(s, -dim)) * (t * t - r * r) / (2.0 * cd);
}

double comparison_kernel_integrand(double s, double t, int dim, double q) {
  check_st(s, t, dim);
  q = std::abs(q);
  if (q >= s) return 0.0;
  const double wt = q < t ? std::pow(q / t, dim) : 1.0;
  const double ws = std::pow(q / s, dim);
  return (wt - ws) / (unit_sphere_area(dim) * std::pow(q, dim - 1));
}

double comparison_kernel_mass(double s, double t, int dim) {
  check_st(s, t, dim);
  return (s * s - t * t) / (2.0 * (dim + 2));
}

double comparison_kernel_numeric_mass(double s, double t, int dim) {
  check_st(s, t, dim);
  const double cd = unit_sphere_area(dim);
  auto g = [&](double r) { return cd * std::pow(r, dim - 1) * comparison_kernel_value(s, t, dim, r); };
  return gauss_integrate(g, 0.0, t, 40) + gauss_integrate(g, t, s, 40);
}

DifferenceIdentity difference_identity_check(const ScalarField& rho, const Point& x, double s, double t) {
  const Grid& g = rho.grid;
  check_st(s, t, g.dim());
  const ScalarField f = newtonian_potential(rho);
  NeumaierSum lhs;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (rho[i] == 0.0) continue;
    const double r = distance(g.center(i), x);
    if (r >= s) continue;
    lhs.add(-comparison_kernel_value(s, t, g.dim(), r) * rho[i]);
  }
  DifferenceIdentity out;
  out.lhs = lhs.value() * g.cell_volume();
  out.rhs = ball_average(f, x, s) - ball_average(f, x, t);
  out.gap = std::abs(out.lhs - out.rhs);
  return out;
}

double quadratic_zero_bound_check(const ScalarField& f, double C, const std::vector<Point>& zeros, double tol,
                                  double min_distance) {
  if (!(C > 0.0)) throw Error(ErrorKind::InvalidInput, "bound constant C must be positive");
  const Grid& g = f.grid;
  const int dim = g.dim();
  const double scale = std::pow(2.0, dim) * C;
  double worst = 0.0;
  for (const Point& x : zeros) {
    const double fx = interpolate(f, x);
    if (std::abs(fx) > tol)
      throw Error(ErrorKind::InvalidInput, "listed point is not a zero of f (|f| = " + std::to_string(fx) + ")");
    double dist = 1e300;
    for (int a = 0; a < dim; ++a)
      dist = std::min({dist, x[a] - g.lower()[a], g.upper()[a] - x[a]});
    const double rmax = 0.5 * dist;
    if (rmax < min_distance) continue;
    Index lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
      lo[a] = std::max(0, static_cast<int>(std::floor((x[a] - rmax - g.origin()[a]) / g.spacing())));
      hi[a] = std::min(g.extent(a) - 1, static_cast<int>(std::ceil((x[a] + rmax - g.origin()[a]) / g.spacing())));
    }
    for (int k = lo[2]; k <= hi[2]; ++k)
      for (int j = lo[1]; j <= hi[1]; ++j)
        for (int i = lo[0]; i <= hi[0]; ++i) {
          const Index idx{i, j, k};
          const double r = distance(g.center(idx), x);
          if (r < min_distance || r > rmax) continue;
          worst = std::max(worst, f[g.flat(idx)] / (scale * r * r));
        }
  }
  return worst;
}

double zero_set_laplacian_check(const ScalarField& f, const ScalarField& rho, double tau) {
  const Grid& g = f.grid;
  if (rho.grid != g) throw Error(ErrorKind::InvalidInput, "f and rho live on different grids");
  const int dim = g.dim();
  double worst = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (std::abs(f[i]) > tau) continue;
    const Index c = g.unflat(i);
    bool zero = true;
    for (int dk = (dim >= 3 ? -2 : 0); dk <= (dim >= 3 ? 2 : 0) && zero; ++dk)
      for (int dj = (dim >= 2 ? -2 : 0); dj <= (dim >= 2 ? 2 : 0) && zero; ++dj)
        for (int di = -2; di <= 2 && zero; ++di) {
          const Index q{c[0] + di, c[1] + dj, c[2] + dk};
          bool in = true;
          for (int a = 0; a < dim; ++a)
            if (q[a] < 0 || q[a] >= g.extent(a)) in = false;
          if (in && std::abs(f[g.flat(q)]) > tau) zero = false;
        }
    if (zero) worst = std::max(worst, std::abs(rho[i]));
  }
  return worst;
}

}  // namespace qd
