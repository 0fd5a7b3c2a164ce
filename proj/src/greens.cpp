#include "qd/greens.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>

#include "qd/numerics.hpp"
#include "qd/parallel.hpp"

namespace qd {

double green_radial(int dim, double r) {
  switch (dim) {
    case 1: return -0.5 * r;
    case 2:
      if (r <= 0.0) throw Error(ErrorKind::Singular, "2D Green's function is singular at r = 0");
      return -std::log(r) / (2.0 * std::numbers::pi);
    case 3:
      if (r <= 0.0) throw Error(ErrorKind::Singular, "3D Green's function is singular at r = 0");
      return 1.0 / (4.0 * std::numbers::pi * r);
    default: throw Error(ErrorKind::InvalidInput, "dimension must be 1, 2 or 3");
  }
}

double green_radial_derivative(int dim, double r) {
  if (dim == 1) return -0.5;
  if (r <= 0.0) throw Error(ErrorKind::Singular, "Green's function gradient is singular at r = 0");
  return -1.0 / (unit_sphere_area(dim) * std::pow(r, dim - 1));
}

double green_kernel(int dim, const Point& x, const Point& y) {
  double r2 = 0.0;
  for (int a = 0; a < dim; ++a) r2 += (x[a] - y[a]) * (x[a] - y[a]);
  return green_radial(dim, std::sqrt(r2));
}

double singular_cell_value(int dim, double h) {
  constexpr double pi = std::numbers::pi;
  switch (dim) {
    case 1: return -h / 8.0;
    case 2: {
      const double re = h / std::sqrt(pi);
      return (-std::log(re) + 0.5) / (2.0 * pi);
    }
    case 3: {
      const double re = std::cbrt(3.0 * h * h * h / (4.0 * pi));
      return 3.0 / (8.0 * pi * re);
    }
    default: throw Error(ErrorKind::InvalidInput, "dimension must be 1, 2 or 3");
  }
}

GreenKernel::GreenKernel(int d, double h) : dim(d), spacing(h), singular_value(singular_cell_value(d, h)) {}

double GreenKernel::at(const Index& o) const {
  double r2 = 0.0;
  for (int a = 0; a < dim; ++a) r2 += static_cast<double>(o[a]) * o[a];
  if (r2 == 0.0) return singular_value;
  return green_radial(dim, spacing * std::sqrt(r2));
}

double GreenKernel::gradient_at(const Index& o, int axis) const {
  double r2 = 0.0;
  for (int a = 0; a < dim; ++a) r2 += static_cast<double>(o[a]) * o[a];
  if (r2 == 0.0) return 0.0;
  const double r = spacing * std::sqrt(r2);
  if (dim == 1) return o[0] > 0 ? -0.5 : 0.5;
  return -(spacing * o[axis]) / (unit_sphere_area(dim) * std::pow(r, dim));
}

// ---------------------------------------------------------------------------
// FFT convolution on the doubled grid

namespace {

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

struct Layout {
  int rank = 0;
  int dims[3] = {1, 1, 1};  // FFTW order: slowest axis first
  Index padded{1, 1, 1};    // our axis order
  std::size_t real_size = 1;
  std::size_t complex_size = 1;

  explicit Layout(const Grid& g) {
    rank = g.dim();
    for (int a = 0; a < rank; ++a) {
      padded[a] = 2 * g.extent(a);
      dims[rank - 1 - a] = padded[a];
      real_size *= static_cast<std::size_t>(padded[a]);
    }
    complex_size = real_size / static_cast<std::size_t>(padded[0]) * static_cast<std::size_t>(padded[0] / 2 + 1);
  }
  std::size_t flat(const Index& q) const {
    return q[0] + static_cast<std::size_t>(padded[0]) * (q[1] + static_cast<std::size_t>(padded[1]) * q[2]);
  }
};

struct FftwBuffer {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  explicit FftwBuffer(const Layout& L) {
    real = fftw_alloc_real(L.real_size);
    spec = fftw_alloc_complex(L.complex_size);
    if (!real || !spec) throw std::bad_alloc();
    std::memset(real, 0, sizeof(double) * L.real_size);
  }
  ~FftwBuffer() {
    fftw_free(real);
    fftw_free(spec);
  }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
};

void forward(const Layout& L, FftwBuffer& buf) {
  fftw_plan p;
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    p = fftw_plan_dft_r2c(L.rank, L.dims, buf.real, buf.spec, FFTW_ESTIMATE);
  }
  fftw_execute(p);
  std::lock_guard<std::mutex> lock(plan_mutex());
  fftw_destroy_plan(p);
}

void backward(const Layout& L, FftwBuffer& buf) {
  fftw_plan p;
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    p = fftw_plan_dft_c2r(L.rank, L.dims, buf.spec, buf.real, FFTW_ESTIMATE);
  }
  fftw_execute(p);
  std::lock_guard<std::mutex> lock(plan_mutex());
  fftw_destroy_plan(p);
}

using Spectrum = std::vector<std::complex<double>>;
using CacheKey = std::tuple<int, int, int, int, std::uint64_t, int>;

std::mutex& cache_mutex() {
  static std::mutex m;
  return m;
}

std::map<CacheKey, std::shared_ptr<const Spectrum>>& cache() {
  static std::map<CacheKey, std::shared_ptr<const Spectrum>> c;
  return c;
}

// kind 0: potential kernel; kind 1 + a: gradient component a.
std::shared_ptr<const Spectrum> kernel_spectrum(const Grid& g, int kind) {
  std::uint64_t hbits;
  const double h = g.spacing();
  std::memcpy(&hbits, &h, sizeof h);
  const CacheKey key{g.dim(), g.extent(0), g.extent(1), g.extent(2), hbits, kind};
  {
    std::lock_guard<std::mutex> lock(cache_mutex());
    auto it = cache().find(key);
    if (it != cache().end()) return it->second;
  }

  const Layout L(g);
  FftwBuffer buf(L);
  const GreenKernel K(g.dim(), h);
  const double scale = g.cell_volume() / static_cast<double>(L.real_size);
  const Index& n = g.shape();
  for (int k = 0; k < L.padded[2]; ++k)
    for (int j = 0; j < L.padded[1]; ++j)
      for (int i = 0; i < L.padded[0]; ++i) {
        const Index q{i, j, k};
        Index o{};
        bool skip = false;
        for (int a = 0; a < 3; ++a) {
          if (a >= g.dim()) {
            o[a] = 0;
            continue;
          }
          if (q[a] < n[a])
            o[a] = q[a];
          else if (q[a] > n[a])
            o[a] = q[a] - L.padded[a];
          else
            skip = true;
        }
        if (skip) continue;
        const double v = kind == 0 ? K.at(o) : K.gradient_at(o, kind - 1);
        buf.real[L.flat(q)] = v * scale;
      }
  forward(L, buf);
  auto spec = std::make_shared<Spectrum>(L.complex_size);
  for (std::size_t i = 0; i < L.complex_size; ++i) (*spec)[i] = {buf.spec[i][0], buf.spec[i][1]};

  std::lock_guard<std::mutex> lock(cache_mutex());
  auto [it, inserted] = cache().emplace(key, spec);
  return it->second;
}

ScalarField fft_convolve(const ScalarField& w, int kind) {
  const Grid& g = w.grid;
  ScalarField out(g);
  bool any = false;
  for (double v : w.values)
    if (v != 0.0) {
      any = true;
      break;
    }
  if (!any) return out;

  const auto spec = kernel_spectrum(g, kind);
  const Layout L(g);
  FftwBuffer buf(L);
  for (std::size_t p = 0; p < w.size(); ++p) buf.real[L.flat(g.unflat(p))] = w[p];
  forward(L, buf);
  for (std::size_t i = 0; i < L.complex_size; ++i) {
    const std::complex<double> z = std::complex<double>(buf.spec[i][0], buf.spec[i][1]) * (*spec)[i];
    buf.spec[i][0] = z.real();
    buf.spec[i][1] = z.imag();
  }
  backward(L, buf);
  for (std::size_t p = 0; p < w.size(); ++p) out[p] = buf.real[L.flat(g.unflat(p))];
  return out;
}

constexpr std::size_t kOracleLimit = 100000;

// Kernel table over offsets in (-n, n) per axis.
struct OffsetTable {
  Index n;
  Index span;
  std::vector<double> values;
  double at(const Index& o) const {
    return values[(o[0] + n[0] - 1) + static_cast<std::size_t>(span[0]) *
                                          ((o[1] + n[1] - 1) + static_cast<std::size_t>(span[1]) * (o[2] + n[2] - 1))];
  }
};

OffsetTable offset_table(const Grid& g, int kind) {
  OffsetTable t;
  t.n = g.shape();
  for (int a = 0; a < 3; ++a) t.span[a] = 2 * t.n[a] - 1;
  t.values.resize(static_cast<std::size_t>(t.span[0]) * t.span[1] * t.span[2]);
  const GreenKernel K(g.dim(), g.spacing());
  std::size_t p = 0;
  for (int k = 1 - t.n[2]; k < t.n[2]; ++k)
    for (int j = 1 - t.n[1]; j < t.n[1]; ++j)
      for (int i = 1 - t.n[0]; i < t.n[0]; ++i) {
        const Index o{i, j, k};
        t.values[p++] = kind == 0 ? K.at(o) : K.gradient_at(o, kind - 1);
      }
  return t;
}

ScalarField direct_convolve(const ScalarField& w, int kind) {
  const Grid& g = w.grid;
  if (g.size() > kOracleLimit)
    throw Error(ErrorKind::InvalidInput, "direct convolution oracle is limited to 1e5 cells");
  const OffsetTable table = offset_table(g, kind);
  std::vector<std::size_t> sources;
  for (std::size_t j = 0; j < w.size(); ++j)
    if (w[j] != 0.0) sources.push_back(j);
  ScalarField out(g);
  parallel_for(
      g.size(),
      [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
          const Index xi = g.unflat(i);
          double s = 0.0;
          for (std::size_t j : sources) {
            const Index yj = g.unflat(j);
            s += table.at({xi[0] - yj[0], xi[1] - yj[1], xi[2] - yj[2]}) * w[j];
          }
          out[i] = s * g.cell_volume();
        }
      },
      64);
  return out;
}

}  // namespace

void clear_kernel_cache() {
  std::lock_guard<std::mutex> lock(cache_mutex());
  cache().clear();
}

PotentialField newtonian_potential(const ScalarField& w) {
  w.require_finite();
  return PotentialField(fft_convolve(w, 0), "N w (fft)");
}

PotentialField newtonian_potential_const_outside(const ScalarField& w, double c) {
  if (!(c >= 0.0) || !std::isfinite(c)) throw Error(ErrorKind::InvalidInput, "outside constant c must be >= 0");
  w.require_finite();
  ScalarField shifted = w;
  for (double& v : shifted.values) v -= c;
  ScalarField out = fft_convolve(shifted, 0);
  const Grid& g = w.grid;
  const double k = c / (2.0 * g.dim());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Point x = g.center(i);
    out[i] += k * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  }
  return PotentialField(std::move(out), "N(w - c) + c|x|^2/2d");
}

VectorField potential_gradient(const ScalarField& w) {
  w.require_finite();
  VectorField v{w.grid, {}};
  for (int a = 0; a < w.grid.dim(); ++a) v.components.push_back(fft_convolve(w, 1 + a));
  return v;
}

PotentialField direct_convolution_oracle(const ScalarField& w) {
  w.require_finite();
  return PotentialField(direct_convolve(w, 0), "N w (direct)");
}

VectorField direct_gradient_oracle(const ScalarField& w) {
  w.require_finite();
  VectorField v{w.grid, {}};
  for (int a = 0; a < w.grid.dim(); ++a) v.components.push_back(direct_convolve(w, 1 + a));
  return v;
}

double analytic_ball_potential_radial(double R, int dim, double r) {
  if (!(R > 0.0)) throw Error(ErrorKind::InvalidInput, "ball radius must be positive");
  r = std::abs(r);
  const double vol = unit_ball_volume(dim) * std::pow(R, dim);
  if (r >= R) return green_radial(dim, r) * vol;
  const double c1 = green_radial(dim, R) * vol + R * R / (2.0 * dim);
  return c1 - r * r / (2.0 * dim);
}

double analytic_ball_potential_derivative(double R, int dim, double r) {
  if (!(R > 0.0)) throw Error(ErrorKind::InvalidInput, "ball radius must be positive");
  r = std::abs(r);
  if (r >= R) return green_radial_derivative(dim, r) * unit_ball_volume(dim) * std::pow(R, dim);
  return -r / dim;
}

double analytic_ball_potential(double R, int dim, const Point& x) {
  double r2 = 0.0;
  for (int a = 0; a < dim; ++a) r2 += x[a] * x[a];
  return analytic_ball_potential_radial(R, dim, std::sqrt(r2));
}

}  // namespace qd
