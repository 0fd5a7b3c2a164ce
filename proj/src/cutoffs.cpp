#include "qd/cutoffs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "qd/numerics.hpp"
#include "qd/parallel.hpp"

namespace qd {

namespace {

constexpr double kW = 2.0;  // width of the ramps in v

double step_exponent(double z) { return 1.0 / z - 1.0 / (1.0 - z); }

// int_0^z S
double step_integral(double z) {
  if (z <= 0.0) return 0.0;
  if (z >= 1.0) return 0.5;
  NeumaierSum s;
  const int pieces = 8;
  for (int k = 0; k < pieces; ++k) {
    const double lo = z * k / pieces, hi = z * (k + 1) / pieces;
    s.add(gauss_integrate([](double u) { return smooth_step(u); }, lo, hi, 20));
  }
  return s.value();
}

double support_half_width(int dim) { return 0.5 * (1.0 + 1.0 / std::sqrt(static_cast<double>(dim))); }

}  // namespace

double xi(double t) {
  if (!(t > 0.0) || !(t < 1.0)) throw Error(ErrorKind::InvalidInput, "xi needs 0 < t < 1");
  return 1.0 / (t * std::log(1.0 / t));
}

double smooth_step(double z) {
  if (z <= 0.0) return 0.0;
  if (z >= 1.0) return 1.0;
  const double e = step_exponent(z);
  if (e > 700.0) return 0.0;
  if (e < -700.0) return 1.0;
  return 1.0 / (1.0 + std::exp(e));
}

double smooth_step_d1(double z) {
  if (z <= 0.0 || z >= 1.0) return 0.0;
  const double S = smooth_step(z);
  const double G = 1.0 / (z * z) + 1.0 / ((1.0 - z) * (1.0 - z));
  return S * (1.0 - S) * G;
}

double smooth_step_d2(double z) {
  if (z <= 0.0 || z >= 1.0) return 0.0;
  const double S = smooth_step(z);
  const double G = 1.0 / (z * z) + 1.0 / ((1.0 - z) * (1.0 - z));
  const double Gp = -2.0 / (z * z * z) + 2.0 / ((1.0 - z) * (1.0 - z) * (1.0 - z));
  const double S1 = S * (1.0 - S) * G;
  return S1 * (1.0 - 2.0 * S) * G + S * (1.0 - S) * Gp;
}

// ---------------------------------------------------------------------------

double BumpFunction::g(double v) const {
  if (v <= a || v >= b) return 0.0;
  if (v < a + w) return smooth_step((v - a) / w) / m;
  if (v > b - w) return smooth_step((b - v) / w) / m;
  return 1.0 / m;
}

double BumpFunction::g_prime(double v) const {
  if (v <= a || v >= b) return 0.0;
  if (v < a + w) return smooth_step_d1((v - a) / w) / (w * m);
  if (v > b - w) return -smooth_step_d1((b - v) / w) / (w * m);
  return 0.0;
}

double BumpFunction::derivative_ratio(double v) const {
  const double L = std::exp(v);
  return m * std::abs((1.0 - 1.0 / L) * g(v) + g_prime(v) / L);
}

double BumpFunction::tail_mass(double v) const {
  if (v >= b) return 0.0;
  if (v <= a) return 1.0;
  if (v > b - w) return w * step_integral((b - v) / w) / m;
  if (v >= a + w) return ((b - w - v) + 0.5 * w) / m;
  return (w * (1.0 - step_integral((v - a) / w)) + m - w) / m;
}

double BumpFunction::numeric_integral() const {
  NeumaierSum s;
  const int pieces = std::max(64, static_cast<int>(std::ceil(4.0 * (b - a))));
  for (int k = 0; k < pieces; ++k) {
    const double lo = a + (b - a) * k / pieces, hi = a + (b - a) * (k + 1) / pieces;
    s.add(gauss_integrate([this](double v) { return g(v); }, lo, hi, 20));
  }
  return s.value();
}

double BumpFunction::support_upper() const { return std::exp(-std::exp(a)); }

double BumpFunction::eta(double t) const {
  if (!(t > 0.0) || t >= support_upper()) return 0.0;
  const double L = std::log(1.0 / t);
  return g(std::log(L)) / (t * L);
}

double BumpFunction::eta_prime(double t) const {
  if (!(t > 0.0) || t >= support_upper()) return 0.0;
  const double L = std::log(1.0 / t);
  const double v = std::log(L);
  const double x = 1.0 / (t * L);
  return -(x * ((1.0 - 1.0 / L) * g(v) + g_prime(v) / L)) / t;
}

double BumpFunction::H(double t) const {
  if (!(t > 0.0)) return 0.0;
  if (t >= support_upper()) return 1.0;
  return tail_mass(std::log(std::log(1.0 / t)));
}

BumpFunction build_bump(double m) {
  if (!(m > std::numbers::e)) throw Error(ErrorKind::InvalidInput, "bump scale m must exceed e");
  BumpFunction f;
  f.m = m;
  f.w = kW;
  f.a = std::log(std::log(m)) + 0.5;
  f.b = f.a + m + kW;
  return f;
}

// ---------------------------------------------------------------------------

std::pair<Point, double> whitney_root(const Region& Q) {
  const auto [lo, hi] = Q.bounds();
  double ext = 0.0;
  for (int a = 0; a < Q.dim(); ++a) ext = std::max(ext, hi[a] - lo[a]);
  if (!(ext > 0.0) || !std::isfinite(ext)) throw Error(ErrorKind::Domain, "region has degenerate bounds");
  return {lo, std::exp2(std::ceil(std::log2(ext)))};
}

WhitneyDecomposition whitney_decompose(const Region& Q, int max_level) {
  if (max_level < 0 || max_level > 40) throw Error(ErrorKind::InvalidInput, "max_level must be in [0, 40]");
  const int dim = Q.dim();
  WhitneyDecomposition out;
  std::tie(out.root_lo, out.root_side) = whitney_root(Q);
  out.max_level = max_level;
  out.dim = dim;
  if (!Q.cube_meets(out.root_lo, out.root_side)) throw Error(ErrorKind::Domain, "region is empty");
  if (Q.cube_distance(out.root_lo, out.root_side) > 8.0 * out.root_side)
    throw Error(ErrorKind::Domain, "region has no boundary inside the box");

  struct Item {
    Point lo;
    int level;
  };
  std::vector<Item> stack{{out.root_lo, 0}};
  while (!stack.empty()) {
    const Item c = stack.back();
    stack.pop_back();
    const double s = out.root_side / std::exp2(c.level);
    if (!Q.cube_meets(c.lo, s)) continue;
    const double D = Q.cube_distance(c.lo, s);
    if (D >= 2.0 * s && D <= 8.0 * s) {
      Point ctr = c.lo;
      for (int a = 0; a < dim; ++a) ctr[a] += 0.5 * s;
      out.cubes.push_back({ctr, s, c.level});
      continue;
    }
    if (c.level == max_level) {
      ++out.unresolved;
      continue;
    }
    // Children pushed in reverse so they pop in lexicographic order.
    const int nchild = 1 << dim;
    for (int k = nchild - 1; k >= 0; --k) {
      Point lo = c.lo;
      for (int a = 0; a < dim; ++a)
        if (k & (1 << a)) lo[a] += 0.5 * s;
      stack.push_back({lo, c.level + 1});
    }
  }
  return out;
}

std::string format_cubes_csv(const WhitneyDecomposition& w) {
  const int dim = w.dim;
  std::string s;
  for (int a = 0; a < dim; ++a) s += "x" + std::to_string(a + 1) + ",";
  s += "side,level\n";
  char buf[64];
  for (const auto& c : w.cubes) {
    for (int a = 0; a < dim; ++a) {
      std::snprintf(buf, sizeof buf, "%.17g,", c.center[a]);
      s += buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g,%d\n", c.side, c.level);
    s += buf;
  }
  return s;
}

WhitneyCheck check_whitney(const Region& Q, const WhitneyDecomposition& w, int lattice_n) {
  const int dim = Q.dim();
  WhitneyCheck r;
  r.cubes = w.cubes.size();
  using Key = std::array<long long, 4>;
  std::map<Key, std::size_t> present;
  auto key_of = [&](const Point& p, int level) {
    const double s = w.root_side / std::exp2(level);
    Key k{level, 0, 0, 0};
    for (int a = 0; a < dim; ++a) k[a + 1] = static_cast<long long>(std::floor((p[a] - w.root_lo[a]) / s));
    return k;
  };
  for (const auto& c : w.cubes) {
    Point lo = c.center;
    for (int a = 0; a < dim; ++a) lo[a] -= 0.5 * c.side;
    const double D = Q.cube_distance(lo, c.side);
    if (!(D >= 2.0 * c.side && D <= 8.0 * c.side)) ++r.inequality_violations;
    present.emplace(key_of(c.center, c.level), 0);
  }
  for (const auto& c : w.cubes)
    for (int l = 0; l < c.level; ++l)
      if (present.count(key_of(c.center, l))) ++r.overlaps;
  const double s_min = w.root_side / std::exp2(w.max_level);
  const double deep = (9.0 + std::sqrt(static_cast<double>(dim))) * s_min;
  for (const Point& p : lattice_probes(Q, lattice_n)) {
    ++r.points;
    int hits = 0;
    for (int l = 0; l <= w.max_level; ++l) {
      const Key k = key_of(p, l);
      const long long n = 1LL << l;
      bool inside = true;
      for (int a = 0; a < dim; ++a)
        if (k[a + 1] < 0 || k[a + 1] >= n) inside = false;
      if (inside && present.count(k)) ++hits;
    }
    if (hits > 1) ++r.multiply_covered;
    if (hits == 0) {
      if (Q.distance_to_complement(p) > deep)
        ++r.uncovered_deep;
      else
        ++r.uncovered_shallow;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------

RegularizedDistance::RegularizedDistance(std::shared_ptr<const Region> Q) : Q_(std::move(Q)) {
  if (!Q_) throw Error(ErrorKind::InvalidInput, "regularized distance needs a region");
  std::tie(root_lo_, root_side_) = whitney_root(*Q_);
  if (!Q_->cube_meets(root_lo_, root_side_)) throw Error(ErrorKind::Domain, "region is empty");
  if (Q_->cube_distance(root_lo_, root_side_) > 8.0 * root_side_)
    throw Error(ErrorKind::Domain, "region has no boundary inside the box");
}

double RegularizedDistance::beta(int dim) { return 1.0 / (8.0 + 1.5 * std::sqrt(static_cast<double>(dim))); }

double RegularizedDistance::psi(double u, int dim) {
  const double A = support_half_width(dim);
  const double au = std::abs(u);
  if (au <= 0.5) return 1.0;
  if (au >= A) return 0.0;
  return 1.0 - smooth_step((au - 0.5) / (A - 0.5));
}

double RegularizedDistance::psi_d1(double u, int dim) {
  const double A = support_half_width(dim);
  const double au = std::abs(u);
  if (au <= 0.5 || au >= A) return 0.0;
  const double d = -smooth_step_d1((au - 0.5) / (A - 0.5)) / (A - 0.5);
  return u < 0.0 ? -d : d;
}

double RegularizedDistance::psi_d2(double u, int dim) {
  const double A = support_half_width(dim);
  const double au = std::abs(u);
  if (au <= 0.5 || au >= A) return 0.0;
  return -smooth_step_d2((au - 0.5) / (A - 0.5)) / ((A - 0.5) * (A - 0.5));
}

BoundConstants RegularizedDistance::bound_constants(int dim) {
  BoundConstants c;
  c.beta = beta(dim);
  c.N = static_cast<int>(std::floor(std::log2(2.0 / c.beta) + 1.0));
  const double A = support_half_width(dim);
  double d1 = 0.0, d2 = 0.0;
  const int n = 100000;
  for (int k = 1; k < n; ++k) {
    const double u = 0.5 + (A - 0.5) * k / n;
    d1 = std::max(d1, std::abs(psi_d1(u, dim)));
    d2 = std::max(d2, std::abs(psi_d2(u, dim)));
  }
  const double p2 = std::exp2(dim);
  c.C1 = c.N * 2.0 * p2 / c.beta;
  c.C2 = c.N * p2 * d1 / c.beta;
  c.C3 = c.N * p2 * std::max(d2, d1 * d1) / (c.beta * c.beta);
  return c;
}

RegularizedDistance::CubeInfo RegularizedDistance::info(const CubeKey& key) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    const auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
  }
  const double s = root_side_ / std::exp2(static_cast<double>(key[0]));
  Point lo = root_lo_;
  for (int a = 0; a < dim(); ++a) lo[a] += static_cast<double>(key[a + 1]) * s;
  CubeInfo ci{0.0, Q_->cube_meets(lo, s)};
  if (ci.meets) ci.distance = Q_->cube_distance(lo, s);
  std::lock_guard<std::mutex> lock(mu_);
  memo_.emplace(key, ci);
  return ci;
}

bool RegularizedDistance::present(const CubeKey& key) const {
  const double s = root_side_ / std::exp2(static_cast<double>(key[0]));
  const CubeInfo ci = info(key);
  if (!ci.meets || ci.distance < 2.0 * s || ci.distance > 8.0 * s) return false;
  if (key[0] == 0) return true;
  // Distances grow under inclusion, so the parent test covers every ancestor.
  const CubeKey parent{key[0] - 1, key[1] >> 1, key[2] >> 1, key[3] >> 1};
  return info(parent).distance < 4.0 * s;
}

RegularizedDistance::Eval RegularizedDistance::evaluate(const Point& x) const {
  Eval e;
  const int d = dim();
  const double delta = Q_->distance_to_complement(x);
  if (!(delta > 0.0)) return e;
  const double A = support_half_width(d);
  const int lmin = std::max(0, static_cast<int>(std::floor(std::log2(root_side_ / delta))));
  const int lmax = static_cast<int>(std::ceil(std::log2(16.0 * root_side_ / delta)));
  if (lmax > 60) throw Error(ErrorKind::Domain, "point too close to the boundary for the dyadic hierarchy");
  for (int l = lmin; l <= lmax; ++l) {
    const double s = root_side_ / std::exp2(l);
    const long long n = 1LL << l;
    std::array<long long, 3> ilo{0, 0, 0}, ihi{0, 0, 0};
    bool any = true;
    for (int a = 0; a < d; ++a) {
      const double r = (x[a] - root_lo_[a]) / s - 0.5;
      ilo[a] = std::max(0LL, static_cast<long long>(std::ceil(r - A)));
      ihi[a] = std::min(n - 1, static_cast<long long>(std::floor(r + A)));
      if (ilo[a] > ihi[a]) any = false;
    }
    if (!any) continue;
    for (long long k = ilo[2]; k <= ihi[2]; ++k)
      for (long long j = ilo[1]; j <= ihi[1]; ++j)
        for (long long i = ilo[0]; i <= ihi[0]; ++i) {
          const CubeKey key{l, i, j, k};
          std::array<double, 3> p{1, 1, 1}, p1{0, 0, 0}, p2{0, 0, 0};
          bool zero = false;
          for (int a = 0; a < d; ++a) {
            const double u = (x[a] - (root_lo_[a] + (static_cast<double>(key[a + 1]) + 0.5) * s)) / s;
            p[a] = psi(u, d);
            p1[a] = psi_d1(u, d);
            p2[a] = psi_d2(u, d);
            if (p[a] == 0.0 && p1[a] == 0.0) zero = true;
          }
          if (zero || !present(key)) continue;
          double prod = 1.0;
          for (int a = 0; a < d; ++a) prod *= p[a];
          e.value += s * prod;
          for (int a = 0; a < d; ++a) {
            double others = 1.0;
            for (int b = 0; b < d; ++b)
              if (b != a) others *= p[b];
            e.gradient[a] += p1[a] * others;
            e.hessian[a][a] += p2[a] * others / s;
            for (int b = a + 1; b < d; ++b) {
              double rest = 1.0;
              for (int c = 0; c < d; ++c)
                if (c != a && c != b) rest *= p[c];
              const double v = p1[a] * p1[b] * rest / s;
              e.hessian[a][b] += v;
              e.hessian[b][a] += v;
            }
          }
        }
  }
  const double ib = 1.0 / beta(d);
  e.value *= ib;
  for (int a = 0; a < d; ++a) {
    e.gradient[a] *= ib;
    for (int b = 0; b < d; ++b) e.hessian[a][b] *= ib;
  }
  return e;
}

std::vector<Point> lattice_probes(const Region& Q, int n) {
  if (n < 1) throw Error(ErrorKind::InvalidInput, "lattice needs n >= 1");
  const int d = Q.dim();
  const auto [lo, hi] = Q.bounds();
  std::vector<Point> pts;
  const int nk = d >= 3 ? n : 1, nj = d >= 2 ? n : 1;
  for (int k = 0; k < nk; ++k)
    for (int j = 0; j < nj; ++j)
      for (int i = 0; i < n; ++i) {
        const std::array<int, 3> idx{i, j, k};
        Point p{};
        for (int a = 0; a < d; ++a) p[a] = lo[a] + (idx[a] + 0.5) * (hi[a] - lo[a]) / n;
        if (Q.contains(p)) pts.push_back(p);
      }
  return pts;
}

namespace {

struct DistanceAccum {
  std::size_t probes = 0;
  double min_ratio = std::numeric_limits<double>::infinity();
  double max_ratio = 0.0, max_gradient = 0.0, max_entry = 0.0, max_frob = 0.0, fd_grad = 0.0, fd_hess = 0.0;
  void merge(const DistanceAccum& o) {
    probes += o.probes;
    min_ratio = std::min(min_ratio, o.min_ratio);
    max_ratio = std::max(max_ratio, o.max_ratio);
    max_gradient = std::max(max_gradient, o.max_gradient);
    max_entry = std::max(max_entry, o.max_entry);
    max_frob = std::max(max_frob, o.max_frob);
    fd_grad = std::max(fd_grad, o.fd_grad);
    fd_hess = std::max(fd_hess, o.fd_hess);
  }
};

}  // namespace

DistanceProbeReport probe_regularized_distance(const RegularizedDistance& D, const std::vector<Point>& probes,
                                               double fd_step) {
  if (!(fd_step > 0.0)) throw Error(ErrorKind::InvalidInput, "finite-difference step must be positive");
  const int d = D.dim();
  const Region& Q = D.region();
  std::vector<DistanceAccum> parts(std::max(1, worker_count()) * 4);
  const std::size_t chunk = std::max<std::size_t>(1, (probes.size() + parts.size() - 1) / parts.size());
  parallel_for(
      parts.size(),
      [&](std::size_t b, std::size_t e) {
        for (std::size_t c = b; c < e; ++c) {
          DistanceAccum acc;
          const std::size_t lo = c * chunk, hi = std::min(probes.size(), lo + chunk);
          for (std::size_t p = lo; p < hi; ++p) {
            const Point& x = probes[p];
            const double delta = Q.distance_to_complement(x);
            if (!(delta > 0.0)) continue;
            ++acc.probes;
            const auto ev = D.evaluate(x);
            acc.min_ratio = std::min(acc.min_ratio, ev.value / delta);
            acc.max_ratio = std::max(acc.max_ratio, ev.value / delta);
            double g2 = 0.0, f2 = 0.0;
            for (int a = 0; a < d; ++a) {
              g2 += ev.gradient[a] * ev.gradient[a];
              for (int bb = 0; bb < d; ++bb) {
                f2 += ev.hessian[a][bb] * ev.hessian[a][bb];
                acc.max_entry = std::max(acc.max_entry, delta * std::abs(ev.hessian[a][bb]));
              }
            }
            acc.max_gradient = std::max(acc.max_gradient, std::sqrt(g2));
            acc.max_frob = std::max(acc.max_frob, delta * std::sqrt(f2));
            if (delta < 4.0 * fd_step) continue;
            const double hs = fd_step;
            for (int a = 0; a < d; ++a) {
              Point xp = x, xm = x;
              xp[a] += hs;
              xm[a] -= hs;
              const double vp = D.value(xp), vm = D.value(xm);
              acc.fd_grad = std::max(acc.fd_grad, std::abs((vp - vm) / (2.0 * hs) - ev.gradient[a]));
              const double dd = (vp - 2.0 * ev.value + vm) / (hs * hs);
              acc.fd_hess = std::max(acc.fd_hess, delta * std::abs(dd - ev.hessian[a][a]));
              for (int bb = a + 1; bb < d; ++bb) {
                Point pp = x, pm = x, mp = x, mm = x;
                pp[a] += hs, pp[bb] += hs;
                pm[a] += hs, pm[bb] -= hs;
                mp[a] -= hs, mp[bb] += hs;
                mm[a] -= hs, mm[bb] -= hs;
                const double mix = (D.value(pp) - D.value(pm) - D.value(mp) + D.value(mm)) / (4.0 * hs * hs);
                acc.fd_hess = std::max(acc.fd_hess, delta * std::abs(mix - ev.hessian[a][bb]));
              }
            }
          }
          parts[c] = acc;
        }
      },
      1);
  DistanceAccum all;
  for (const auto& p : parts) all.merge(p);
  DistanceProbeReport r;
  r.probes = all.probes;
  r.min_ratio = all.probes ? all.min_ratio : 0.0;
  r.max_ratio = all.max_ratio;
  r.max_gradient = all.max_gradient;
  r.max_hessian_entry = all.max_entry;
  r.max_hessian_frobenius = all.max_frob;
  r.fd_gradient_error = all.max_gradient > 0.0 ? all.fd_grad / all.max_gradient : all.fd_grad;
  r.fd_hessian_error = all.max_entry > 0.0 ? all.fd_hess / all.max_entry : all.fd_hess;
  return r;
}

// ---------------------------------------------------------------------------

double HedbergCutoff::constant_from(const DistanceProbeReport& r) {
  const double G = r.max_gradient;
  return std::max({1.0, G, 0.5 * (r.max_hessian_frobenius + G * G)});
}

HedbergCutoff::HedbergCutoff(std::shared_ptr<const RegularizedDistance> D, int j, double K, double resolution)
    : D_(std::move(D)), j_(j) {
  if (!D_) throw Error(ErrorKind::InvalidInput, "cutoff needs a regularized distance");
  if (j < 4) throw Error(ErrorKind::InvalidInput, "cutoff index j must be at least 4");
  if (!(K >= 1.0) || !std::isfinite(K)) throw Error(ErrorKind::InvalidInput, "cutoff constant K must be >= 1");
  if (!(resolution > 0.0)) throw Error(ErrorKind::InvalidInput, "resolution must be positive");
  if (1.0 / j < 4.0 * resolution) throw Error(ErrorKind::InvalidInput, "1/j is below four grid cells");
  bump_ = build_bump(K * j);
}

HedbergCutoff::Eval HedbergCutoff::evaluate(const Point& x) const {
  Eval e;
  const auto de = D_->evaluate(x);
  if (!(de.value > 0.0)) return e;
  const int d = D_->dim();
  e.value = bump_.H(de.value);
  const double et = bump_.eta(de.value), ep = bump_.eta_prime(de.value);
  for (int a = 0; a < d; ++a) {
    e.gradient[a] = et * de.gradient[a];
    for (int b = 0; b < d; ++b) e.hessian[a][b] = et * de.hessian[a][b] + ep * de.gradient[a] * de.gradient[b];
  }
  return e;
}

std::vector<Point> hedberg_probes(const Region& Q, const std::vector<Point>& base, int count) {
  const int d = Q.dim();
  Point c{};
  double dc = 0.0;
  for (const Point& p : base) {
    const double dp = Q.distance_to_complement(p);
    if (dp > dc) dc = dp, c = p;
  }
  if (!(dc > 0.0)) throw Error(ErrorKind::Domain, "no base probe lies inside the region");
  const auto [lo, hi] = Q.bounds();
  double span = 0.0;
  for (int a = 0; a < d; ++a) span += (hi[a] - lo[a]) * (hi[a] - lo[a]);
  const double T = 2.0 * std::sqrt(span) + 1.0;
  std::vector<Point> pts = base;
  const double tlo = std::log(1e-14), thi = std::log(0.5 * dc);
  for (int k = 0; k < count; ++k) {
    Point dir{};
    if (d == 1) {
      dir[0] = (k % 2) ? -1.0 : 1.0;
    } else if (d == 2) {
      const double th = 2.0 * std::numbers::pi * std::fmod(k * 0.6180339887498949, 1.0);
      dir = {std::cos(th), std::sin(th), 0.0};
    } else {
      const double z = 1.0 - (2.0 * k + 1.0) / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double th = 2.0 * std::numbers::pi * std::fmod(k * 0.6180339887498949, 1.0);
      dir = {r * std::cos(th), r * std::sin(th), z};
    }
    const double target = std::exp(tlo + (thi - tlo) * (k + 0.5) / count);
    double a = 0.0, b = T;
    for (int it = 0; it < 200 && b - a > 1e-17 * std::max(1.0, a); ++it) {
      const double mid = 0.5 * (a + b);
      if (Q.distance_to_complement(c + mid * dir) > target)
        a = mid;
      else
        b = mid;
    }
    pts.push_back(c + a * dir);
    if (k % 8 == 0) pts.push_back(c + (b + 1e-3 * (1.0 + k % 5)) * dir);
  }
  return pts;
}

namespace {

struct HedbergAccum {
  std::size_t probes = 0;
  double min_value = std::numeric_limits<double>::infinity();
  double max_value = -std::numeric_limits<double>::infinity();
  double min_deep = 1.0, max_outside = 0.0, grad_ratio = 0.0, hess_ratio = 0.0, fd_abs = 0.0, grad_max = 0.0;
  void merge(const HedbergAccum& o) {
    probes += o.probes;
    min_value = std::min(min_value, o.min_value);
    max_value = std::max(max_value, o.max_value);
    min_deep = std::min(min_deep, o.min_deep);
    max_outside = std::max(max_outside, o.max_outside);
    grad_ratio = std::max(grad_ratio, o.grad_ratio);
    hess_ratio = std::max(hess_ratio, o.hess_ratio);
    fd_abs = std::max(fd_abs, o.fd_abs);
    grad_max = std::max(grad_max, o.grad_max);
  }
};

}  // namespace

HedbergReport probe_hedberg(const HedbergCutoff& h, const std::vector<Point>& probes, double fd_step) {
  HedbergReport r;
  r.j = h.j();
  r.m = h.m();
  if (probes.empty()) return r;
  const double inv_j = 1.0 / h.j();
  std::vector<HedbergAccum> parts(std::max(1, worker_count()) * 4);
  const std::size_t chunk = std::max<std::size_t>(1, (probes.size() + parts.size() - 1) / parts.size());
  parallel_for(
      parts.size(),
      [&](std::size_t b, std::size_t e) {
        for (std::size_t c = b; c < e; ++c) {
          HedbergAccum acc;
          const std::size_t lo = c * chunk, hi = std::min(probes.size(), lo + chunk);
          for (std::size_t p = lo; p < hi; ++p) {
            const Point& x = probes[p];
            const double delta = h.region().distance_to_complement(x);
            const auto ev = h.evaluate(x);
            const int d = h.region().dim();
            ++acc.probes;
            acc.min_value = std::min(acc.min_value, ev.value);
            acc.max_value = std::max(acc.max_value, ev.value);
            if (!h.region().contains(x)) {
              acc.max_outside = std::max(acc.max_outside, std::abs(ev.value));
              continue;
            }
            if (delta > inv_j) {
              acc.min_deep = std::min(acc.min_deep, ev.value);
            }
            double g2 = 0.0, f2 = 0.0;
            for (int a = 0; a < d; ++a) {
              g2 += ev.gradient[a] * ev.gradient[a];
              for (int bb = 0; bb < d; ++bb) f2 += ev.hessian[a][bb] * ev.hessian[a][bb];
            }
            acc.grad_max = std::max(acc.grad_max, std::sqrt(g2));
            if (delta > 0.0 && delta < std::min(inv_j, 0.5)) {
              const double x_d = xi(delta);
              acc.grad_ratio = std::max(acc.grad_ratio, std::sqrt(g2) * h.j() / x_d);
              acc.hess_ratio = std::max(acc.hess_ratio, std::sqrt(f2) * h.j() * delta / x_d);
            } else if (g2 > 0.0 || f2 > 0.0) {
              acc.grad_ratio = std::numeric_limits<double>::infinity();
            }
            if (delta >= 100.0 * fd_step) {
              for (int a = 0; a < d; ++a) {
                Point xp = x, xm = x;
                xp[a] += fd_step;
                xm[a] -= fd_step;
                const double fd = (h.value(xp) - h.value(xm)) / (2.0 * fd_step);
                acc.fd_abs = std::max(acc.fd_abs, std::abs(fd - ev.gradient[a]));
              }
            }
          }
          parts[c] = acc;
        }
      },
      1);
  HedbergAccum all;
  for (const auto& p : parts) all.merge(p);
  r.probes = all.probes;
  r.min_value = all.min_value;
  r.max_value = all.max_value;
  r.min_deep_value = all.min_deep;
  r.max_outside_value = all.max_outside;
  r.gradient_ratio = all.grad_ratio;
  r.hessian_ratio = all.hess_ratio;
  r.fd_gradient_error = all.grad_max > 0.0 ? all.fd_abs / all.grad_max : all.fd_abs;
  return r;
}

// ---------------------------------------------------------------------------

LogLipschitzResult log_lipschitz_modulus(const VectorField& grad, const std::vector<double>& eps,
                                         const DomainMask* restrict_to) {
  const Grid& g = grad.grid;
  const int d = g.dim();
  if (static_cast<int>(grad.components.size()) != d)
    throw Error(ErrorKind::InvalidInput, "gradient field needs one component per axis");
  if (restrict_to && restrict_to->grid != g) throw Error(ErrorKind::InvalidInput, "restriction mask grid mismatch");
  if (eps.empty()) throw Error(ErrorKind::InvalidInput, "no pair scales given");
  const double h = g.spacing();
  LogLipschitzResult r;
  for (double e : eps) {
    if (!(e >= 4.0 * h)) throw Error(ErrorKind::InvalidInput, "pair scale below four grid cells");
    const int k = static_cast<int>(std::llround(e / h));
    const double ee = k * h;
    if (!(ee < 1.0)) throw Error(ErrorKind::InvalidInput, "pair scale must be below 1");
    std::vector<double> sup_part(std::max(1, worker_count()) * 4, 0.0);
    const std::size_t n = g.size();
    const std::size_t chunk = (n + sup_part.size() - 1) / sup_part.size();
    parallel_for(
        sup_part.size(),
        [&](std::size_t b, std::size_t en) {
          for (std::size_t c = b; c < en; ++c) {
            double s = 0.0;
            for (std::size_t p = c * chunk; p < std::min(n, (c + 1) * chunk); ++p) {
              if (restrict_to && !restrict_to->inside[p]) continue;
              const Index i = g.unflat(p);
              for (int a = 0; a < d; ++a) {
                if (i[a] + k >= g.extent(a)) continue;
                const std::size_t q = p + static_cast<std::size_t>(k) * g.stride(a);
                if (restrict_to && !restrict_to->inside[q]) continue;
                double d2 = 0.0;
                for (int c2 = 0; c2 < d; ++c2) {
                  const double diff = grad.components[c2][p] - grad.components[c2][q];
                  d2 += diff * diff;
                }
                s = std::max(s, d2);
              }
            }
            sup_part[c] = std::sqrt(s);
          }
        },
        1);
    const double sup = *std::max_element(sup_part.begin(), sup_part.end());
    r.eps.push_back(ee);
    r.sup.push_back(sup);
    r.C.push_back(sup / (ee * std::log(1.0 / ee)));
  }
  r.min_C = *std::min_element(r.C.begin(), r.C.end());
  r.max_C = *std::max_element(r.C.begin(), r.C.end());
  return r;
}

}  // namespace qd
