#include "qd/regions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qd {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_dim(int dim) {
  if (dim < 1 || dim > 3) throw Error(ErrorKind::InvalidInput, "dimension must be 1, 2 or 3");
}
}  // namespace

// ---------------------------------------------------------------------------

BallRegion::BallRegion(int dim, Point center, double radius) : dim_(dim), c_(center), r_(radius) {
  check_dim(dim);
  if (!(radius > 0.0)) throw Error(ErrorKind::InvalidInput, "ball region needs a positive radius");
}

bool BallRegion::contains(const Point& x) const { return distance_to_complement(x) > 0.0; }

double BallRegion::distance_to_complement(const Point& x) const {
  double r2 = 0.0;
  for (int a = 0; a < dim_; ++a) r2 += (x[a] - c_[a]) * (x[a] - c_[a]);
  return std::max(0.0, r_ - std::sqrt(r2));
}

double BallRegion::cube_distance(const Point& lo, double side) const {
  double far2 = 0.0;
  for (int a = 0; a < dim_; ++a) {
    const double d = std::max(std::abs(lo[a] - c_[a]), std::abs(lo[a] + side - c_[a]));
    far2 += d * d;
  }
  return std::max(0.0, r_ - std::sqrt(far2));
}

bool BallRegion::cube_meets(const Point& lo, double side) const {
  double near2 = 0.0;
  for (int a = 0; a < dim_; ++a) {
    const double q = std::clamp(c_[a], lo[a], lo[a] + side);
    near2 += (q - c_[a]) * (q - c_[a]);
  }
  return std::sqrt(near2) < r_;
}

std::pair<Point, Point> BallRegion::bounds() const {
  Point lo{}, hi{};
  for (int a = 0; a < dim_; ++a) {
    lo[a] = c_[a] - r_;
    hi[a] = c_[a] + r_;
  }
  return {lo, hi};
}

// ---------------------------------------------------------------------------

BoxRegion::BoxRegion(int dim, Point lo, Point hi) : dim_(dim), lo_(lo), hi_(hi) {
  check_dim(dim);
  for (int a = 0; a < dim; ++a)
    if (!(lo[a] < hi[a])) throw Error(ErrorKind::InvalidInput, "box region needs lo < hi");
}

bool BoxRegion::contains(const Point& x) const { return distance_to_complement(x) > 0.0; }

double BoxRegion::distance_to_complement(const Point& x) const {
  double d = kInf;
  for (int a = 0; a < dim_; ++a) d = std::min({d, x[a] - lo_[a], hi_[a] - x[a]});
  return std::max(0.0, d);
}

double BoxRegion::cube_distance(const Point& lo, double side) const {
  double d = kInf;
  for (int a = 0; a < dim_; ++a) d = std::min({d, lo[a] - lo_[a], hi_[a] - (lo[a] + side)});
  return std::max(0.0, d);
}

bool BoxRegion::cube_meets(const Point& lo, double side) const {
  for (int a = 0; a < dim_; ++a)
    if (!(lo[a] < hi_[a] && lo[a] + side > lo_[a])) return false;
  return true;
}

std::pair<Point, Point> BoxRegion::bounds() const { return {lo_, hi_}; }

// ---------------------------------------------------------------------------

namespace {

// Distance between the closures of two parts. Exact for balls and boxes;
// otherwise a lattice sample of the bounding-box overlap.
double closure_gap(const Region& p, const Region& q) {
  const int dim = p.dim();
  const auto* bp = dynamic_cast<const BallRegion*>(&p);
  const auto* bq = dynamic_cast<const BallRegion*>(&q);
  const auto* xp = dynamic_cast<const BoxRegion*>(&p);
  const auto* xq = dynamic_cast<const BoxRegion*>(&q);
  auto box_point_distance = [&](const BoxRegion& b, const Point& x) {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) {
      const double gap = std::max({0.0, b.lo()[a] - x[a], x[a] - b.hi()[a]});
      s += gap * gap;
    }
    return std::sqrt(s);
  };
  if (bp && bq) {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) s += (bp->center()[a] - bq->center()[a]) * (bp->center()[a] - bq->center()[a]);
    return std::sqrt(s) - bp->radius() - bq->radius();
  }
  if ((bp && xq) || (xp && bq)) {
    const BallRegion& b = bp ? *bp : *bq;
    const BoxRegion& x = xp ? *xp : *xq;
    return box_point_distance(x, b.center()) - b.radius();
  }
  if (xp && xq) {
    double s = 0.0;
    bool apart = false;
    for (int a = 0; a < dim; ++a) {
      const double gap = std::max(xp->lo()[a] - xq->hi()[a], xq->lo()[a] - xp->hi()[a]);
      if (gap > 0.0) {
        apart = true;
        s += gap * gap;
      }
    }
    return apart ? std::sqrt(s) : -1.0;
  }
  const auto [ap, bpp] = p.bounds();
  const auto [aq, bqq] = q.bounds();
  Point lo{}, hi{};
  for (int a = 0; a < dim; ++a) {
    lo[a] = std::max(ap[a], aq[a]);
    hi[a] = std::min(bpp[a], bqq[a]);
    if (lo[a] > hi[a]) return 1.0;
  }
  constexpr int n = 64;
  Index cnt{1, 1, 1};
  for (int a = 0; a < dim; ++a) cnt[a] = n + 1;
  for (int k = 0; k < cnt[2]; ++k)
    for (int j = 0; j < cnt[1]; ++j)
      for (int i = 0; i < cnt[0]; ++i) {
        const Index idx{i, j, k};
        Point x{};
        for (int a = 0; a < dim; ++a) x[a] = lo[a] + (hi[a] - lo[a]) * idx[a] / n;
        if (p.contains(x) && q.contains(x)) return -1.0;
      }
  return 1.0;
}

}  // namespace

UnionRegion::UnionRegion(std::vector<std::shared_ptr<const Region>> parts) : parts_(std::move(parts)) {
  if (parts_.empty()) throw Error(ErrorKind::InvalidInput, "union region needs at least one part");
  for (const auto& p : parts_)
    if (!p || p->dim() != parts_.front()->dim())
      throw Error(ErrorKind::InvalidInput, "union parts must share one dimension");
  for (std::size_t i = 0; i < parts_.size(); ++i)
    for (std::size_t j = i + 1; j < parts_.size(); ++j)
      if (closure_gap(*parts_[i], *parts_[j]) <= 0.0)
        throw Error(ErrorKind::InvalidInput, "union parts must have disjoint closures");
}

bool UnionRegion::contains(const Point& x) const {
  return std::any_of(parts_.begin(), parts_.end(), [&](const auto& p) { return p->contains(x); });
}

double UnionRegion::distance_to_complement(const Point& x) const {
  double d = 0.0;
  for (const auto& p : parts_) d = std::max(d, p->distance_to_complement(x));
  return d;
}

double UnionRegion::cube_distance(const Point& lo, double side) const {
  double d = 0.0;
  for (const auto& p : parts_) d = std::max(d, p->cube_distance(lo, side));
  return d;
}

bool UnionRegion::cube_meets(const Point& lo, double side) const {
  return std::any_of(parts_.begin(), parts_.end(), [&](const auto& p) { return p->cube_meets(lo, side); });
}

std::pair<Point, Point> UnionRegion::bounds() const {
  auto [lo, hi] = parts_.front()->bounds();
  for (const auto& p : parts_) {
    const auto [a, b] = p->bounds();
    for (int k = 0; k < dim(); ++k) {
      lo[k] = std::min(lo[k], a[k]);
      hi[k] = std::max(hi[k], b[k]);
    }
  }
  return {lo, hi};
}

// ---------------------------------------------------------------------------

namespace {

// Felzenszwalb-Huttenlocher lower envelope on one line of squared distances.
void edt_line(std::vector<double>& f, std::vector<double>& out, std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s;
    for (;;) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    if (s <= z[k]) {
      // k == 0 and the new parabola dominates
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  out.assign(n, kInf);
  if (k < 0) return;
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double d = q - v[j];
    out[q] = d * d + f[v[j]];
  }
}

}  // namespace

ScalarField euclidean_distance_transform(const DomainMask& target) {
  const Grid& g = target.grid;
  std::vector<double> d2(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) d2[i] = target.inside[i] ? 0.0 : kInf;
  std::vector<double> line, out, z;
  std::vector<int> v;
  for (int axis = 0; axis < g.dim(); ++axis) {
    const int n = g.extent(axis);
    const std::size_t stride = g.stride(axis);
    for (std::size_t p = 0; p < g.size(); ++p) {
      if (g.unflat(p)[axis] != 0) continue;
      line.resize(n);
      for (int t = 0; t < n; ++t) line[t] = d2[p + t * stride];
      edt_line(line, out, v, z);
      for (int t = 0; t < n; ++t) d2[p + t * stride] = out[t];
    }
  }
  ScalarField f(g);
  const double h = g.spacing();
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = d2[i] == kInf ? kInf : h * std::sqrt(d2[i]);
  return f;
}

MaskRegion::MaskRegion(DomainMask mask) : mask_(std::move(mask)), edt_(mask_.grid) {
  const Grid& g = mask_.grid;
  const int dim = g.dim();
  const double h = g.spacing();
  if (mask_.count() == 0) throw Error(ErrorKind::Domain, "mask region is empty");
  DomainMask outside(g);
  for (std::size_t i = 0; i < g.size(); ++i) outside.inside[i] = mask_.inside[i] ? 0 : 1;
  edt_ = euclidean_distance_transform(outside);

  bool first = true;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!mask_.inside[i]) continue;
    const Index c = g.unflat(i);
    Point clo{}, chi{};
    for (int a = 0; a < dim; ++a) {
      clo[a] = g.origin()[a] + c[a] * h;
      chi[a] = clo[a] + h;
    }
    if (first) {
      bounds_lo_ = clo;
      bounds_hi_ = chi;
      first = false;
    }
    for (int a = 0; a < dim; ++a) {
      bounds_lo_[a] = std::min(bounds_lo_[a], clo[a]);
      bounds_hi_[a] = std::max(bounds_hi_[a], chi[a]);
    }
    for (int a = 0; a < dim; ++a)
      for (int side = -1; side <= 1; side += 2) {
        const int nb = c[a] + side;
        const bool open = nb < 0 || nb >= g.extent(a) || !mask_.inside[i + side * static_cast<std::ptrdiff_t>(g.stride(a))];
        if (!open) continue;
        Face f{clo, chi};
        f.lo[a] = f.hi[a] = side < 0 ? clo[a] : chi[a];
        faces_.push_back(f);
      }
  }

  bucket_size_ = 4.0 * h;
  bucket_origin_ = g.origin();
  for (int a = 0; a < dim; ++a) buckets_[a] = std::max(1, static_cast<int>(std::ceil(g.extent(a) * h / bucket_size_)));
  bucket_faces_.assign(static_cast<std::size_t>(buckets_[0]) * buckets_[1] * buckets_[2], {});
  for (std::uint32_t fi = 0; fi < faces_.size(); ++fi) {
    Index lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
      lo[a] = std::clamp(static_cast<int>(std::floor((faces_[fi].lo[a] - bucket_origin_[a]) / bucket_size_)), 0,
                         buckets_[a] - 1);
      hi[a] = std::clamp(static_cast<int>(std::floor((faces_[fi].hi[a] - bucket_origin_[a]) / bucket_size_)), 0,
                         buckets_[a] - 1);
    }
    for (int k = lo[2]; k <= hi[2]; ++k)
      for (int j = lo[1]; j <= hi[1]; ++j)
        for (int i = lo[0]; i <= hi[0]; ++i)
          bucket_faces_[i + static_cast<std::size_t>(buckets_[0]) * (j + static_cast<std::size_t>(buckets_[1]) * k)]
              .push_back(fi);
  }
}

double MaskRegion::nearest_face(const Point& qlo, const Point& qhi) const {
  const int dim = mask_.grid.dim();
  const Grid& g = mask_.grid;
  Point c{};
  double r2 = 0.0;
  Index cb{0, 0, 0};
  for (int a = 0; a < dim; ++a) {
    c[a] = 0.5 * (qlo[a] + qhi[a]);
    r2 += 0.25 * (qhi[a] - qlo[a]) * (qhi[a] - qlo[a]);
    cb[a] = std::clamp(static_cast<int>(std::floor((c[a] - bucket_origin_[a]) / bucket_size_)), 0, buckets_[a] - 1);
  }
  const double r = std::sqrt(r2);
  // Upper bound from the distance transform: the nearest outside cell square
  // is no farther than its center.
  double best = kInf;
  {
    const Index cell = g.locate(c);
    const double e = edt_[g.flat(cell)];
    if (e < kInf) best = e + distance(c, g.center(cell));
  }
  auto box_distance = [&](const Face& f) {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) {
      const double gap = std::max({0.0, f.lo[a] - qhi[a], qlo[a] - f.hi[a]});
      s += gap * gap;
    }
    return std::sqrt(s);
  };
  int max_ring = 0;
  for (int a = 0; a < dim; ++a) max_ring = std::max({max_ring, cb[a], buckets_[a] - 1 - cb[a]});
  for (int k = 0; k <= max_ring; ++k) {
    if ((k - 1) * bucket_size_ - r >= best) break;
    const Index lo{dim >= 1 ? cb[0] - k : 0, dim >= 2 ? cb[1] - k : 0, dim >= 3 ? cb[2] - k : 0};
    const Index hi{dim >= 1 ? cb[0] + k : 0, dim >= 2 ? cb[1] + k : 0, dim >= 3 ? cb[2] + k : 0};
    for (int bk = lo[2]; bk <= hi[2]; ++bk)
      for (int bj = lo[1]; bj <= hi[1]; ++bj)
        for (int bi = lo[0]; bi <= hi[0]; ++bi) {
          const Index b{bi, bj, bk};
          int cheb = 0;
          bool valid = true;
          for (int a = 0; a < dim; ++a) {
            if (b[a] < 0 || b[a] >= buckets_[a]) valid = false;
            cheb = std::max(cheb, std::abs(b[a] - cb[a]));
          }
          if (!valid || cheb != k) continue;
          for (std::uint32_t fi :
               bucket_faces_[bi + static_cast<std::size_t>(buckets_[0]) * (bj + static_cast<std::size_t>(buckets_[1]) * bk)])
            best = std::min(best, box_distance(faces_[fi]));
        }
  }
  return best;
}

bool MaskRegion::contains(const Point& x) const { return distance_to_complement(x) > 0.0; }

double MaskRegion::distance_to_complement(const Point& x) const {
  const Grid& g = mask_.grid;
  for (int a = 0; a < g.dim(); ++a)
    if (!(x[a] > g.lower()[a] && x[a] < g.upper()[a])) return 0.0;
  if (!mask_.inside[g.flat(g.locate(x))]) return 0.0;
  return nearest_face(x, x);
}

double MaskRegion::cube_distance(const Point& lo, double side) const {
  const Grid& g = mask_.grid;
  Point hi = lo, c = lo;
  for (int a = 0; a < g.dim(); ++a) {
    hi[a] = lo[a] + side;
    c[a] = lo[a] + 0.5 * side;
    if (!(lo[a] > g.lower()[a] && hi[a] < g.upper()[a])) return 0.0;
  }
  if (!mask_.inside[g.flat(g.locate(c))]) return 0.0;
  return nearest_face(lo, hi);
}

bool MaskRegion::cube_meets(const Point& lo, double side) const {
  const Grid& g = mask_.grid;
  const int dim = g.dim();
  const double h = g.spacing();
  Index ilo{0, 0, 0}, ihi{0, 0, 0};
  for (int a = 0; a < dim; ++a) {
    const double a0 = (lo[a] - g.origin()[a]) / h, a1 = (lo[a] + side - g.origin()[a]) / h;
    ilo[a] = std::max(0, static_cast<int>(std::floor(a0)));
    ihi[a] = std::min(g.extent(a) - 1, static_cast<int>(std::ceil(a1)) - 1);
    if (ilo[a] > ihi[a]) return false;
  }
  for (int k = ilo[2]; k <= ihi[2]; ++k)
    for (int j = ilo[1]; j <= ihi[1]; ++j)
      for (int i = ilo[0]; i <= ihi[0]; ++i)
        if (mask_.inside[g.flat({i, j, k})]) return true;
  return false;
}

std::pair<Point, Point> MaskRegion::bounds() const { return {bounds_lo_, bounds_hi_}; }

}  // namespace qd
