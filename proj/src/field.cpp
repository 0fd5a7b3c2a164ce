#include "qd/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qd/numerics.hpp"

namespace qd {

double norm(const Point& p) { return std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]); }

double distance(const Point& a, const Point& b) { return norm(a - b); }

Point operator+(const Point& a, const Point& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }

Point operator-(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

Point operator*(double s, const Point& a) { return {s * a[0], s * a[1], s * a[2]}; }

// ---------------------------------------------------------------------------

Grid::Grid(int dim, Point origin, double spacing, Index shape)
    : dim_(dim), origin_(origin), h_(spacing), shape_(shape) {
  if (dim < 1 || dim > 3) throw Error(ErrorKind::InvalidInput, "grid dimension must be 1, 2 or 3");
  if (!(spacing > 0.0) || !std::isfinite(spacing))
    throw Error(ErrorKind::InvalidInput, "grid spacing must be positive and finite");
  for (int a = 0; a < 3; ++a) {
    if (a < dim) {
      if (shape_[a] < 2) throw Error(ErrorKind::InvalidInput, "grid shape entries must be >= 2");
      if (!std::isfinite(origin_[a])) throw Error(ErrorKind::InvalidInput, "grid origin must be finite");
    } else {
      shape_[a] = 1;
      origin_[a] = 0.0;
    }
  }
  strides_ = {1, static_cast<std::size_t>(shape_[0]),
              static_cast<std::size_t>(shape_[0]) * static_cast<std::size_t>(shape_[1])};
  size_ = strides_[2] * static_cast<std::size_t>(shape_[2]);
  cell_volume_ = std::pow(h_, dim_);
}

Index Grid::unflat(std::size_t flat) const {
  Index idx{};
  idx[2] = static_cast<int>(flat / strides_[2]);
  flat -= static_cast<std::size_t>(idx[2]) * strides_[2];
  idx[1] = static_cast<int>(flat / strides_[1]);
  idx[0] = static_cast<int>(flat - static_cast<std::size_t>(idx[1]) * strides_[1]);
  return idx;
}

Point Grid::center(const Index& idx) const {
  Point p{};
  for (int a = 0; a < dim_; ++a) p[a] = origin_[a] + (idx[a] + 0.5) * h_;
  return p;
}

bool Grid::is_interior(const Index& idx) const {
  for (int a = 0; a < dim_; ++a)
    if (idx[a] <= 0 || idx[a] >= shape_[a] - 1) return false;
  return true;
}

Point Grid::upper() const {
  Point p{};
  for (int a = 0; a < dim_; ++a) p[a] = origin_[a] + shape_[a] * h_;
  return p;
}

Index Grid::locate(const Point& p) const {
  Index idx{};
  for (int a = 0; a < dim_; ++a) {
    const int i = static_cast<int>(std::floor((p[a] - origin_[a]) / h_));
    idx[a] = std::clamp(i, 0, shape_[a] - 1);
  }
  return idx;
}

bool Grid::operator==(const Grid& other) const {
  if (dim_ != other.dim_ || shape_ != other.shape_) return false;
  const double tol = 1e-12 * std::max(1.0, h_);
  if (std::abs(h_ - other.h_) > tol) return false;
  for (int a = 0; a < dim_; ++a)
    if (std::abs(origin_[a] - other.origin_[a]) > tol) return false;
  return true;
}

// ---------------------------------------------------------------------------

ScalarField::ScalarField(Grid g) : grid(std::move(g)), values(grid.size(), 0.0) {}

ScalarField::ScalarField(Grid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
  if (values.size() != grid.size())
    throw Error(ErrorKind::InvalidInput, "field value count does not match grid shape");
}

double ScalarField::max_value() const { return *std::max_element(values.begin(), values.end()); }

double ScalarField::min_value() const { return *std::min_element(values.begin(), values.end()); }

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

void ScalarField::require_finite() const {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!std::isfinite(values[i]))
      throw Error(ErrorKind::NonFinite, "non-finite field value at index " + std::to_string(i));
}

DomainMask::DomainMask(Grid g) : grid(std::move(g)), inside(grid.size(), 0) {}

DomainMask::DomainMask(Grid g, std::vector<std::uint8_t> v) : grid(std::move(g)), inside(std::move(v)) {
  if (inside.size() != grid.size())
    throw Error(ErrorKind::InvalidInput, "mask value count does not match grid shape");
}

std::size_t DomainMask::count() const {
  return static_cast<std::size_t>(std::count_if(inside.begin(), inside.end(), [](std::uint8_t v) { return v != 0; }));
}

std::size_t DomainMask::boundary_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < inside.size(); ++i) {
    if (!inside[i]) continue;
    const Index idx = grid.unflat(i);
    bool edge = false;
    for (int a = 0; a < grid.dim() && !edge; ++a) {
      if (idx[a] == 0 || idx[a] == grid.extent(a) - 1) {
        edge = true;
        break;
      }
      const std::size_t s = grid.stride(a);
      if (!inside[i - s] || !inside[i + s]) edge = true;
    }
    if (edge) ++n;
  }
  return n;
}

double DomainMask::perimeter_estimate() const {
  return std::pow(grid.spacing(), grid.dim() - 1) * static_cast<double>(boundary_count());
}

ScalarField DomainMask::as_field() const {
  ScalarField f(grid);
  for (std::size_t i = 0; i < inside.size(); ++i) f[i] = inside[i] ? 1.0 : 0.0;
  return f;
}

namespace {
void require_same_grid(const Grid& a, const Grid& b) {
  if (a != b) throw Error(ErrorKind::InvalidInput, "masks live on different grids");
}
}  // namespace

DomainMask mask_union(const DomainMask& a, const DomainMask& b) {
  require_same_grid(a.grid, b.grid);
  DomainMask out(a.grid);
  for (std::size_t i = 0; i < out.inside.size(); ++i) out.inside[i] = (a.inside[i] || b.inside[i]) ? 1 : 0;
  return out;
}

DomainMask mask_difference(const DomainMask& a, const DomainMask& b) {
  require_same_grid(a.grid, b.grid);
  DomainMask out(a.grid);
  for (std::size_t i = 0; i < out.inside.size(); ++i) out.inside[i] = (a.inside[i] && !b.inside[i]) ? 1 : 0;
  return out;
}

DomainMask mask_symmetric_difference(const DomainMask& a, const DomainMask& b) {
  require_same_grid(a.grid, b.grid);
  DomainMask out(a.grid);
  for (std::size_t i = 0; i < out.inside.size(); ++i)
    out.inside[i] = ((a.inside[i] != 0) != (b.inside[i] != 0)) ? 1 : 0;
  return out;
}

// ---------------------------------------------------------------------------

bool Primitive::contains(const Point& p, int dim) const {
  if (const auto* b = std::get_if<Ball>(&shape)) {
    double r2 = 0.0;
    for (int a = 0; a < dim; ++a) {
      const double d = p[a] - b->center[a];
      r2 += d * d;
    }
    return r2 < b->radius * b->radius;
  }
  const auto& box = std::get<Box>(shape);
  for (int a = 0; a < dim; ++a)
    if (!(p[a] > box.lo[a] && p[a] < box.hi[a])) return false;
  return true;
}

double Primitive::volume(int dim) const {
  if (const auto* b = std::get_if<Ball>(&shape)) return unit_ball_volume(dim) * std::pow(b->radius, dim);
  const auto& box = std::get<Box>(shape);
  double v = 1.0;
  for (int a = 0; a < dim; ++a) v *= box.hi[a] - box.lo[a];
  return v;
}

Point Primitive::centroid() const {
  if (const auto* b = std::get_if<Ball>(&shape)) return b->center;
  const auto& box = std::get<Box>(shape);
  return 0.5 * (box.lo + box.hi);
}

std::pair<Point, Point> Primitive::bounds(int dim) const {
  Point lo{}, hi{};
  if (const auto* b = std::get_if<Ball>(&shape)) {
    for (int a = 0; a < dim; ++a) {
      lo[a] = b->center[a] - b->radius;
      hi[a] = b->center[a] + b->radius;
    }
  } else {
    const auto& box = std::get<Box>(shape);
    for (int a = 0; a < dim; ++a) {
      lo[a] = box.lo[a];
      hi[a] = box.hi[a];
    }
  }
  return {lo, hi};
}

void WeightSpec::validate(int dim) const {
  if (dim < 1 || dim > 3) throw Error(ErrorKind::InvalidInput, "dimension must be 1, 2 or 3");
  for (const auto& p : primitives) {
    if (!std::isfinite(p.amplitude)) throw Error(ErrorKind::InvalidInput, "primitive amplitude must be finite");
    if (p.amplitude < 1.0)
      throw Error(ErrorKind::InvalidInput,
                  "primitive amplitude " + std::to_string(p.amplitude) + " < 1: weight is not properly supported");
    if (const auto* b = std::get_if<Ball>(&p.shape)) {
      if (!(b->radius > 0.0) || !std::isfinite(b->radius))
        throw Error(ErrorKind::InvalidInput, "ball radius must be positive and finite");
      for (int a = 0; a < dim; ++a)
        if (!std::isfinite(b->center[a])) throw Error(ErrorKind::InvalidInput, "ball center must be finite");
    } else {
      const auto& box = std::get<Box>(p.shape);
      for (int a = 0; a < dim; ++a) {
        if (!std::isfinite(box.lo[a]) || !std::isfinite(box.hi[a]))
          throw Error(ErrorKind::InvalidInput, "box corners must be finite");
        if (!(box.lo[a] < box.hi[a])) throw Error(ErrorKind::InvalidInput, "box requires lo < hi on every axis");
      }
    }
  }
}

double WeightSpec::mass(int dim) const {
  double m = 0.0;
  for (const auto& p : primitives) m += p.amplitude * p.volume(dim);
  return m;
}

Point WeightSpec::centroid(int dim) const {
  const double m = mass(dim);
  if (!(m > 0.0)) throw Error(ErrorKind::Domain, "centroid of an empty weight is undefined");
  Point c{};
  for (const auto& p : primitives) c = c + (p.amplitude * p.volume(dim) / m) * p.centroid();
  for (int a = dim; a < 3; ++a) c[a] = 0.0;
  return c;
}

WeightSpec translate(const WeightSpec& spec, const Point& offset) {
  WeightSpec out = spec;
  for (auto& p : out.primitives) {
    if (auto* b = std::get_if<Ball>(&p.shape)) {
      b->center = b->center + offset;
    } else {
      auto& box = std::get<Box>(p.shape);
      box.lo = box.lo + offset;
      box.hi = box.hi + offset;
    }
  }
  return out;
}

ScalarField rasterize_weight(const WeightSpec& spec, const Grid& grid) {
  const int dim = grid.dim();
  spec.validate(dim);
  const double h = grid.spacing();
  const Point glo = grid.lower();
  const Point ghi = grid.upper();
  for (const auto& p : spec.primitives) {
    const auto [lo, hi] = p.bounds(dim);
    for (int a = 0; a < dim; ++a) {
      if (lo[a] < glo[a] + h || hi[a] > ghi[a] - h)
        throw Error(ErrorKind::InvalidInput, "weight support is not contained in the grid with a one-cell margin");
    }
  }

  ScalarField w(grid);
  if (spec.external_field) {
    ScalarField ext = read_field(*spec.external_field);
    if (ext.grid != grid) throw Error(ErrorKind::InvalidInput, "external weight field lives on a different grid");
    for (std::size_t i = 0; i < ext.size(); ++i) {
      const double v = ext[i];
      if (v != 0.0 && v < 1.0)
        throw Error(ErrorKind::InvalidInput, "external weight has values in (0,1): not properly supported");
      if (v < 0.0) throw Error(ErrorKind::InvalidInput, "external weight has negative values");
    }
    w = std::move(ext);
  }

  for (const auto& p : spec.primitives) {
    const auto [lo, hi] = p.bounds(dim);
    Index ilo{0, 0, 0}, ihi{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
      ilo[a] = std::max(0, static_cast<int>(std::floor((lo[a] - glo[a]) / h)) - 1);
      ihi[a] = std::min(grid.extent(a) - 1, static_cast<int>(std::ceil((hi[a] - glo[a]) / h)) + 1);
    }
    for (int k = ilo[2]; k <= ihi[2]; ++k)
      for (int j = ilo[1]; j <= ihi[1]; ++j)
        for (int i = ilo[0]; i <= ihi[0]; ++i) {
          const Index idx{i, j, k};
          if (p.contains(grid.center(idx), dim)) w[grid.flat(idx)] += p.amplitude;
        }
  }
  return w;
}

double integrate(const ScalarField& f) {
  NeumaierSum s;
  for (double v : f.values) s.add(v);
  return s.value() * f.grid.cell_volume();
}

Moments moments(const DomainMask& mask) { return moments(mask.as_field()); }

Moments moments(const ScalarField& f) {
  const Grid& g = f.grid;
  NeumaierSum m, r2;
  std::array<NeumaierSum, 3> xs;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double v = f[i];
    if (v == 0.0) continue;
    const Point c = g.center(i);
    m.add(v);
    for (int a = 0; a < g.dim(); ++a) xs[a].add(v * c[a]);
    r2.add(v * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]));
  }
  Moments out;
  out.measure = m.value() * g.cell_volume();
  out.second_moment = r2.value() * g.cell_volume();
  if (m.value() > 0.0) {
    Point c{};
    for (int a = 0; a < g.dim(); ++a) c[a] = xs[a].value() / m.value();
    out.centroid = c;
  }
  return out;
}

ScalarField discrete_laplacian(const ScalarField& f) {
  const Grid& g = f.grid;
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  ScalarField out(g);
  const int dim = g.dim();
  const Index& n = g.shape();
  const int k0 = dim >= 3 ? 1 : 0, k1 = dim >= 3 ? n[2] - 1 : 1;
  const int j0 = dim >= 2 ? 1 : 0, j1 = dim >= 2 ? n[1] - 1 : 1;
  for (int k = k0; k < k1; ++k)
    for (int j = j0; j < j1; ++j)
      for (int i = 1; i < n[0] - 1; ++i) {
        const std::size_t p = g.flat({i, j, k});
        double s = -2.0 * dim * f[p];
        for (int a = 0; a < dim; ++a) s += f[p - g.stride(a)] + f[p + g.stride(a)];
        out[p] = s * inv_h2;
      }
  return out;
}

}  // namespace qd
