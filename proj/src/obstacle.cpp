#include "qd/obstacle.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <cmath>
#include <thread>

#include "qd/parallel.hpp"

namespace qd {

void SolveParams::validate() const {
  if (!(tolerance > 0.0) || !std::isfinite(tolerance)) throw Error(ErrorKind::InvalidInput, "tolerance must be > 0");
  if (max_sweeps < 1) throw Error(ErrorKind::InvalidInput, "max_sweeps must be >= 1");
  if (!(relaxation > 0.0 && relaxation < 2.0)) throw Error(ErrorKind::InvalidInput, "relaxation must lie in (0, 2)");
  if (activation_threshold && !(*activation_threshold >= 0.0))
    throw Error(ErrorKind::InvalidInput, "activation threshold must be >= 0");
  if (margin_cells < 2) throw Error(ErrorKind::InvalidInput, "margin_cells must be >= 2");
  if (threads < 0) throw Error(ErrorKind::InvalidInput, "threads must be >= 0");
}

double default_activation_threshold(double h, double max_w) {
  constexpr double kappa = 1e-6;
  return kappa * h * h * std::max(1.0, max_w - 1.0);
}

// ---------------------------------------------------------------------------

namespace {

bool intersects(const Primitive& a, const Primitive& b, int dim) {
  const auto [alo, ahi] = a.bounds(dim);
  const auto [blo, bhi] = b.bounds(dim);
  for (int k = 0; k < dim; ++k)
    if (ahi[k] <= blo[k] || bhi[k] <= alo[k]) return false;
  const Ball* ba = std::get_if<Ball>(&a.shape);
  const Ball* bb = std::get_if<Ball>(&b.shape);
  if (ba && bb) {
    double r2 = 0.0;
    for (int k = 0; k < dim; ++k) r2 += (ba->center[k] - bb->center[k]) * (ba->center[k] - bb->center[k]);
    return std::sqrt(r2) < ba->radius + bb->radius;
  }
  if (ba || bb) {
    const Ball& ball = ba ? *ba : *bb;
    const Box& box = std::get<Box>(ba ? b.shape : a.shape);
    double r2 = 0.0;
    for (int k = 0; k < dim; ++k) {
      const double q = std::clamp(ball.center[k], box.lo[k], box.hi[k]);
      r2 += (q - ball.center[k]) * (q - ball.center[k]);
    }
    return std::sqrt(r2) < ball.radius;
  }
  return true;
}

double far_distance(const Primitive& p, const Point& c, int dim) {
  if (const auto* b = std::get_if<Ball>(&p.shape)) {
    double r2 = 0.0;
    for (int k = 0; k < dim; ++k) r2 += (b->center[k] - c[k]) * (b->center[k] - c[k]);
    return std::sqrt(r2) + b->radius;
  }
  const auto& box = std::get<Box>(p.shape);
  double r2 = 0.0;
  for (int k = 0; k < dim; ++k) {
    const double d = std::max(std::abs(box.lo[k] - c[k]), std::abs(box.hi[k] - c[k]));
    r2 += d * d;
  }
  return std::sqrt(r2);
}

}  // namespace

double amplitude_bound(const WeightSpec& spec, int dim) {
  double c = 1.0;
  const auto& ps = spec.primitives;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    double s = ps[i].amplitude;
    for (std::size_t j = 0; j < ps.size(); ++j)
      if (j != i && intersects(ps[i], ps[j], dim)) s += ps[j].amplitude;
    c = std::max(c, s);
  }
  return c;
}

AprioriBox apriori_radius(const WeightSpec& spec, int dim, double h, int margin_cells) {
  spec.validate(dim);
  if (spec.primitives.empty()) throw Error(ErrorKind::InvalidInput, "weight has empty support");
  if (spec.external_field)
    throw Error(ErrorKind::InvalidInput, "a-priori box needs closed-form primitives; give an explicit grid");
  if (!(h > 0.0)) throw Error(ErrorKind::InvalidInput, "grid spacing must be positive");
  if (margin_cells < 2) throw Error(ErrorKind::InvalidInput, "margin_cells must be >= 2");
  const Point center = spec.centroid(dim);
  double R = 0.0;
  for (const auto& p : spec.primitives) R = std::max(R, far_distance(p, center, dim));
  const double c = amplitude_bound(spec, dim);
  const double Rp = std::pow(c, 1.0 / dim) * R;
  const double L = Rp + margin_cells * h;
  Point origin{};
  Index shape{1, 1, 1};
  for (int a = 0; a < dim; ++a) {
    origin[a] = h * std::floor((center[a] - L) / h);
    shape[a] = std::max(2, static_cast<int>(std::ceil((center[a] + L - origin[a]) / h)));
  }
  return AprioriBox{center, R, c, Rp, Grid(dim, origin, h, shape)};
}

// ---------------------------------------------------------------------------

namespace {

void check_weight(const ScalarField& w) {
  const Grid& g = w.grid;
  w.require_finite();
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double v = w[i];
    if (v < 0.0 || (v > 0.0 && v < 1.0))
      throw Error(ErrorKind::InvalidInput, "weight is not properly supported (values must be 0 or >= 1)");
    if (v != 0.0 && !g.is_interior(i))
      throw Error(ErrorKind::InvalidInput, "weight must vanish on the outermost cell layer");
  }
}

// A line is a run of cells along x1 with fixed (j, k); only interior lines.
struct Lines {
  std::vector<std::size_t> start;  // flat index of cell (0, j, k)
  std::vector<int> parity;         // (j + k) % 2
};

Lines interior_lines(const Grid& g) {
  Lines L;
  const int dim = g.dim();
  const Index& n = g.shape();
  const int k0 = dim >= 3 ? 1 : 0, k1 = dim >= 3 ? n[2] - 1 : 1;
  const int j0 = dim >= 2 ? 1 : 0, j1 = dim >= 2 ? n[1] - 1 : 1;
  for (int k = k0; k < k1; ++k)
    for (int j = j0; j < j1; ++j) {
      L.start.push_back(g.flat({0, j, k}));
      L.parity.push_back((j + k) & 1);
    }
  return L;
}

template <int D>
double sweep_lines(double* f, const double* rhs, const Grid& g, const Lines& L, std::size_t lb, std::size_t le,
                   int color, double omega) {
  const int nx = g.extent(0);
  const std::ptrdiff_t s1 = static_cast<std::ptrdiff_t>(g.stride(1));
  const std::ptrdiff_t s2 = static_cast<std::ptrdiff_t>(g.stride(2));
  constexpr double inv = 1.0 / (2.0 * D);
  double mx = 0.0;
  for (std::size_t l = lb; l < le; ++l) {
    double* row = f + L.start[l];
    const double* r = rhs + L.start[l];
    const int i0 = ((1 + L.parity[l]) & 1) == color ? 1 : 2;
    for (int i = i0; i < nx - 1; i += 2) {
      double nb = row[i - 1] + row[i + 1];
      if constexpr (D >= 2) nb += row[i - s1] + row[i + s1];
      if constexpr (D >= 3) nb += row[i - s2] + row[i + s2];
      const double old = row[i];
      const double gs = (nb - r[i]) * inv;
      double v = old + omega * (gs - old);
      if (v > 0.0) v = 0.0;
      const double d = std::abs(v - old);
      if (d > mx) mx = d;
      row[i] = v;
    }
  }
  return mx;
}

double sweep_dispatch(int dim, double* f, const double* rhs, const Grid& g, const Lines& L, std::size_t lb,
                      std::size_t le, int color, double omega) {
  switch (dim) {
    case 1: return sweep_lines<1>(f, rhs, g, L, lb, le, color, omega);
    case 2: return sweep_lines<2>(f, rhs, g, L, lb, le, color, omega);
    default: return sweep_lines<3>(f, rhs, g, L, lb, le, color, omega);
  }
}

}  // namespace

ObstacleSolution solve_obstacle(const ScalarField& w, const SolveParams& params) {
  params.validate();
  check_weight(w);
  const Grid& g = w.grid;
  const int dim = g.dim();
  const double h2 = g.spacing() * g.spacing();

  std::vector<double> rhs(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) rhs[i] = h2 * (w[i] - 1.0);

  ScalarField f(g);
  const Lines lines = interior_lines(g);
  const std::size_t nlines = lines.start.size();

  int workers = params.threads > 0 ? params.threads : worker_count();
  // Red-black updates of one colour are independent, so any split gives the
  // same iterates; small problems stay on one thread.
  const std::size_t cells_per_line = static_cast<std::size_t>(g.extent(0));
  workers = static_cast<int>(std::min<std::size_t>(workers, std::max<std::size_t>(1, nlines * cells_per_line / 20000)));
  workers = std::max(1, std::min<int>(workers, static_cast<int>(nlines)));

  long sweeps = 0;
  double last = 0.0;
  bool converged = false;

  if (workers == 1) {
    for (sweeps = 1; sweeps <= params.max_sweeps; ++sweeps) {
      double mx = 0.0;
      for (int color = 0; color < 2; ++color)
        mx = std::max(mx, sweep_dispatch(dim, f.values.data(), rhs.data(), g, lines, 0, nlines, color,
                                         params.relaxation));
      last = mx;
      if (mx < params.tolerance) {
        converged = true;
        break;
      }
    }
    if (!converged) sweeps = params.max_sweeps;
  } else {
    std::vector<double> local(workers, 0.0);
    std::atomic<bool> stop{false};
    std::barrier sync(workers, [&]() noexcept {
      double mx = 0.0;
      for (double v : local) mx = std::max(mx, v);
      last = mx;
      if (mx < params.tolerance) {
        converged = true;
        stop = true;
      } else if (sweeps >= params.max_sweeps) {
        stop = true;
      } else {
        ++sweeps;
      }
    });
    sweeps = 1;
    const std::size_t chunk = (nlines + workers - 1) / workers;
    std::barrier half(workers);
    auto run = [&](int id) {
      const std::size_t lb = std::min(nlines, id * chunk), le = std::min(nlines, lb + chunk);
      while (!stop.load(std::memory_order_relaxed)) {
        double mx = sweep_dispatch(dim, f.values.data(), rhs.data(), g, lines, lb, le, 0, params.relaxation);
        half.arrive_and_wait();
        mx = std::max(mx, sweep_dispatch(dim, f.values.data(), rhs.data(), g, lines, lb, le, 1, params.relaxation));
        local[id] = mx;
        sync.arrive_and_wait();
      }
    };
    std::vector<std::thread> pool;
    for (int id = 1; id < workers; ++id) pool.emplace_back(run, id);
    run(0);
    for (auto& t : pool) t.join();
  }

  ObstacleSolution sol{f, DomainMask(g), 0.0, sweeps, converged, last, {}};
  sol.tau = params.activation_threshold ? *params.activation_threshold
                                        : default_activation_threshold(g.spacing(), w.max_value());
  for (std::size_t i = 0; i < f.size(); ++i) sol.active.inside[i] = f[i] < -sol.tau ? 1 : 0;
  sol.residuals = complementarity_residuals(sol.f, w);
  return sol;
}

Residuals complementarity_residuals(const ScalarField& f, const ScalarField& w) {
  const Grid& g = f.grid;
  const ScalarField lap = discrete_laplacian(f);
  Residuals r;
  for (std::size_t i = 0; i < f.size(); ++i) {
    r.max_sign_violation = std::max(r.max_sign_violation, f[i]);
    if (!g.is_interior(i)) continue;
    const double slack = lap[i] - (w[i] - 1.0);
    r.max_constraint_violation = std::max(r.max_constraint_violation, -slack);
    r.max_complementarity = std::max(r.max_complementarity, std::abs(f[i] * slack));
  }
  return r;
}

DomainMask extract_domain(const ObstacleSolution& sol, const ScalarField& w, double tau) {
  const Grid& g = w.grid;
  if (sol.f.grid != g) throw Error(ErrorKind::InvalidInput, "solution and weight live on different grids");
  std::vector<std::uint8_t> A(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) A[i] = sol.f[i] < -tau ? 1 : 0;
  DomainMask Q(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    bool in = A[i] || w[i] >= 1.0 - 1e-12;
    if (!in) {
      const Index idx = g.unflat(i);
      for (int a = 0; a < g.dim() && !in; ++a) {
        const std::size_t s = g.stride(a);
        if (idx[a] > 0 && A[i - s]) in = true;
        if (idx[a] < g.extent(a) - 1 && A[i + s]) in = true;
      }
    }
    Q.inside[i] = in ? 1 : 0;
  }
  return Q;
}

DomainMask extract_domain(const ObstacleSolution& sol, const ScalarField& w) { return extract_domain(sol, w, sol.tau); }

ScalarField laplacian_identity_residual(const ObstacleSolution& sol, const ScalarField& w) {
  const ScalarField lap = discrete_laplacian(sol.f);
  ScalarField r(w.grid);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = lap[i] - (sol.active[i] ? (w[i] - 1.0) : 0.0);
  return r;
}

IdentityResidualSummary summarize_identity_residual(const ObstacleSolution& sol, const ScalarField& w) {
  const Grid& g = w.grid;
  const ScalarField r = laplacian_identity_residual(sol, w);
  IdentityResidualSummary s;
  const int dim = g.dim();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Index c = g.unflat(i);
    int in = 0, total = 0;
    for (int dk = (dim >= 3 ? -2 : 0); dk <= (dim >= 3 ? 2 : 0); ++dk)
      for (int dj = (dim >= 2 ? -2 : 0); dj <= (dim >= 2 ? 2 : 0); ++dj)
        for (int di = -2; di <= 2; ++di) {
          const Index q{c[0] + di, c[1] + dj, c[2] + dk};
          bool ok = true;
          for (int a = 0; a < dim; ++a)
            if (q[a] < 0 || q[a] >= g.extent(a)) ok = false;
          if (!ok) continue;
          ++total;
          if (sol.active[g.flat(q)]) ++in;
        }
    const double v = std::abs(r[i]);
    if (in == total)
      s.interior_max = std::max(s.interior_max, v);
    else if (in == 0)
      s.exterior_max = std::max(s.exterior_max, v);
    else {
      s.band_max = std::max(s.band_max, v);
      ++s.band_cells;
    }
  }
  return s;
}

}  // namespace qd
