#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qd/greens.hpp"

using namespace qd;

namespace {

// Grid with a cell center at the origin, covering [-L, L]^d.
Grid centered(int dim, double L, double h) {
  const int n = 2 * static_cast<int>(std::llround(L / h)) + 1;
  Point o{};
  Index s{1, 1, 1};
  for (int a = 0; a < dim; ++a) {
    o[a] = -(n / 2 + 0.5) * h;
    s[a] = n;
  }
  return Grid(dim, o, h, s);
}

ScalarField ball_indicator(const Grid& g, double R) {
  ScalarField w(g);
  for (std::size_t i = 0; i < g.size(); ++i) w[i] = norm(g.center(i)) < R ? 1.0 : 0.0;
  return w;
}

ScalarField random_field(const Grid& g, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  ScalarField f(g);
  for (double& v : f.values) v = u(rng);
  return f;
}

double max_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("green kernel values") {
  CHECK(green_kernel(1, {0, 0, 0}, {2, 0, 0}) == doctest::Approx(-1.0));
  CHECK(green_kernel(2, {0, 0, 0}, {1, 0, 0}) == doctest::Approx(0.0));
  CHECK(green_kernel(3, {0, 0, 0}, {0, 1, 0}) == doctest::Approx(0.0795774715).epsilon(1e-9));
  CHECK(green_kernel(2, {0.3, 0.1, 0}, {1.1, -0.4, 0}) == green_kernel(2, {1.1, -0.4, 0}, {0.3, 0.1, 0}));
  try {
    green_kernel(2, {1, 1, 0}, {1, 1, 0});
    FAIL("singular point accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Singular);
  }
  CHECK(green_kernel(1, {1, 0, 0}, {1, 0, 0}) == 0.0);
}

TEST_CASE("singular cell values") {
  CHECK(singular_cell_value(1, 0.5) == doctest::Approx(-0.0625));
  const double h = 0.01, re = h / std::sqrt(std::numbers::pi);
  CHECK(singular_cell_value(2, h) == doctest::Approx((std::log(1 / re) + 0.5) / (2 * std::numbers::pi)));
  const double r3 = std::cbrt(3 * h * h * h / (4 * std::numbers::pi));
  CHECK(singular_cell_value(3, h) == doctest::Approx(3 / (8 * std::numbers::pi * r3)));
}

TEST_CASE("kernel symmetry and discrete harmonicity") {
  for (int dim = 1; dim <= 3; ++dim) {
    const double h = 1.0 / 32;
    const GreenKernel K(dim, h);
    const int n = dim == 3 ? 10 : 24;
    double worst = 0.0;
    for (int k = (dim >= 3 ? -n : 0); k <= (dim >= 3 ? n : 0); ++k)
      for (int j = (dim >= 2 ? -n : 0); j <= (dim >= 2 ? n : 0); ++j)
        for (int i = -n; i <= n; ++i) {
          const Index v{i, j, k};
          CHECK(K.at(v) == K.at({-i, -j, -k}));
          const double r = h * std::sqrt(double(i * i + j * j + k * k));
          if (r < 3 * h) continue;
          double lap = -2.0 * dim * K.at(v);
          for (int a = 0; a < dim; ++a) {
            Index p = v, m = v;
            ++p[a];
            --m[a];
            lap += K.at(p) + K.at(m);
          }
          lap /= h * h;
          worst = std::max(worst, std::abs(lap) * std::pow(r, dim));
        }
    CHECK(worst <= 10.0);
  }
}

TEST_CASE("fast and direct convolution agree") {
  const Grid g16(2, {0, 0, 0}, 1.0 / 16, {16, 16, 1});
  const ScalarField w16 = random_field(g16, 11);
  CHECK(max_diff(newtonian_potential(w16), direct_convolution_oracle(w16)) <= 1e-10);

  const Grid g64(2, {-1, -1, 0}, 1.0 / 32, {64, 64, 1});
  const ScalarField w64 = random_field(g64, 12);
  CHECK(max_diff(newtonian_potential(w64), direct_convolution_oracle(w64)) <= 1e-10);

  const Grid g1(1, {0, 0, 0}, 0.01, {300, 1, 1});
  const ScalarField w1 = random_field(g1, 13);
  CHECK(max_diff(newtonian_potential(w1), direct_convolution_oracle(w1)) <= 1e-10);

  const Grid g3(3, {0, 0, 0}, 0.1, {12, 10, 8});
  const ScalarField w3 = random_field(g3, 14);
  CHECK(max_diff(newtonian_potential(w3), direct_convolution_oracle(w3)) <= 1e-10);

  const VectorField fg = potential_gradient(w64), dg = direct_gradient_oracle(w64);
  for (int a = 0; a < 2; ++a) CHECK(max_diff(fg.components[a], dg.components[a]) <= 1e-10);
}

TEST_CASE("delta source reproduces a kernel column") {
  const double h = 0.05;
  const Grid g(2, {0, 0, 0}, h, {20, 20, 1});
  ScalarField w(g);
  const Index s{7, 12, 0};
  w[g.flat(s)] = 1.0 / (h * h);
  const PotentialField N = direct_convolution_oracle(w);
  const PotentialField F = newtonian_potential(w);
  const GreenKernel K(2, h);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Index c = g.unflat(i);
    const double k = K.at({c[0] - s[0], c[1] - s[1], 0});
    CHECK(N[i] == doctest::Approx(k).epsilon(1e-14));
    CHECK(std::abs(F[i] - k) <= 1e-10);
  }
}

TEST_CASE("zero source gives zero potential") {
  const Grid g(2, {0, 0, 0}, 0.1, {10, 10, 1});
  const ScalarField z(g);
  CHECK(newtonian_potential(z).max_abs() == 0.0);
  CHECK(direct_convolution_oracle(z).max_abs() == 0.0);
  const VectorField gz = potential_gradient(z);
  for (const auto& c : gz.components) CHECK(c.max_abs() == 0.0);
}

TEST_CASE("direct oracle refuses large grids") {
  const Grid g(2, {0, 0, 0}, 0.001, {400, 400, 1});
  CHECK_THROWS_AS(direct_convolution_oracle(ScalarField(g)), Error);
}

TEST_CASE("potential of the unit disk") {
  const double h = 1.0 / 128;
  const Grid g = centered(2, 2.25, h);
  const ScalarField w = ball_indicator(g, 1.0);
  const PotentialField N = newtonian_potential(w);
  const auto at = [&](const Point& p) { return N[g.flat(g.locate(p))]; };
  CHECK(std::abs(at({0, 0, 0}) - 0.25) <= 1e-3);
  CHECK(std::abs(at({2, 0, 0}) + std::log(2.0) / 2) <= 1e-3);
  CHECK(std::abs(at({0, -2, 0}) + std::log(2.0) / 2) <= 1e-3);
  CHECK(std::abs(at({1, 0, 0})) <= 1e-3);
}

TEST_CASE("potential of a radial source has the lattice symmetries") {
  const double h = 1.0 / 32;
  const Grid g = centered(2, 1.5, h);
  const ScalarField N = newtonian_potential(ball_indicator(g, 1.0));
  const int n = g.extent(0), c = n / 2;
  double worst = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double v = N[g.flat({i, j, 0})];
      const int di = i - c, dj = j - c;
      for (const auto& [a, b] : {std::pair{dj, di}, {-di, dj}, {di, -dj}, {-dj, -di}})
        worst = std::max(worst, std::abs(v - N[g.flat({c + a, c + b, 0})]));
    }
  CHECK(worst <= 1e-10);
}

TEST_CASE("discrete Laplacian of the potential in constant regions") {
  // Exact in 1D; in 2D and 3D the sampled kernel is not the lattice Green's
  // function, so the identity holds to O(h^2) relative to the source.
  struct Case {
    int dim;
    double h, tol;
  };
  for (const Case cs : {Case{1, 1.0 / 64, 1e-8}, Case{2, 1.0 / 32, 1.0 / 1024}, Case{3, 1.0 / 16, 1.0 / 256}}) {
    const Grid g = centered(cs.dim, 1.5, cs.h);
    ScalarField w(g);
    for (std::size_t i = 0; i < g.size(); ++i) w[i] = norm(g.center(i)) < 1.0 ? 2.0 : 0.0;
    const ScalarField L = discrete_laplacian(newtonian_potential(w));
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!g.is_interior(i)) continue;
      const double r = norm(g.center(i));
      if (std::abs(r - 1.0) < 3.0 * cs.h * std::sqrt(double(cs.dim))) continue;
      worst = std::max(worst, std::abs(-L[i] - w[i]));
    }
    CHECK(worst <= cs.tol * w.max_abs());
  }
}

TEST_CASE("constant-outside potential") {
  const double h = 1.0 / 32;
  const Grid g = centered(2, 1.5, h);
  ScalarField one(g);
  std::fill(one.values.begin(), one.values.end(), 1.0);
  const PotentialField P = newtonian_potential_const_outside(one, 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = norm(g.center(i));
    CHECK(std::abs(P[i] - r * r / 4) <= 1e-10);
  }

  const ScalarField b = ball_indicator(g, 1.0);
  ScalarField comp(g);
  for (std::size_t i = 0; i < g.size(); ++i) comp[i] = 1.0 - b[i];
  const PotentialField Q = newtonian_potential_const_outside(comp, 1.0);
  const PotentialField Nb = newtonian_potential(b);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = norm(g.center(i));
    CHECK(std::abs(Q[i] - (r * r / 4 - Nb[i])) <= 1e-10);
  }

  const PotentialField Z = newtonian_potential_const_outside(b, 0.0);
  CHECK(max_diff(Z, Nb) == 0.0);
  CHECK_THROWS_AS(newtonian_potential_const_outside(b, -1.0), Error);
}

TEST_CASE("gradient of the disk potential") {
  const double h = 1.0 / 64;
  const Grid g = centered(2, 2.25, h);
  const ScalarField w = ball_indicator(g, 1.0);
  const VectorField G = potential_gradient(w);
  const std::size_t o = g.flat(g.locate({0, 0, 0}));
  CHECK(std::abs(G.components[0][o]) <= 1e-6);
  CHECK(std::abs(G.components[1][o]) <= 1e-6);
  const std::size_t p = g.flat(g.locate({2, 0, 0}));
  CHECK(std::abs(G.components[0][p] + 0.25) <= 1e-2);
  const std::size_t q = g.flat(g.locate({0, 2, 0}));
  CHECK(std::abs(G.components[1][q] + 0.25) <= 1e-2);

  // Against centered differences of the potential.
  const PotentialField N = newtonian_potential(w);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!g.is_interior(i)) continue;
    for (int a = 0; a < 2; ++a) {
      const double fd = (N[i + g.stride(a)] - N[i - g.stride(a)]) / (2 * h);
      worst = std::max(worst, std::abs(fd - G.components[a][i]));
    }
  }
  CHECK(worst <= h * std::log(1 / h));
}

TEST_CASE("analytic ball potential") {
  CHECK(analytic_ball_potential(1, 2, {0, 0, 0}) == doctest::Approx(0.25));
  CHECK(analytic_ball_potential(1, 2, {0, 1, 0}) == doctest::Approx(0.0));
  CHECK(analytic_ball_potential(1, 3, {2, 0, 0}) == doctest::Approx(1.0 / 6));
  CHECK(analytic_ball_potential(1, 2, {2, 0, 0}) == doctest::Approx(-std::log(2.0) / 2));
  for (int dim = 1; dim <= 3; ++dim) {
    const double R = 1.3;
    CHECK(analytic_ball_potential_radial(R, dim, R - 1e-9) ==
          doctest::Approx(analytic_ball_potential_radial(R, dim, R + 1e-9)));
    for (double r : {0.4, 1.1, 2.0}) {
      const double d = 1e-6;
      const double fd =
          (analytic_ball_potential_radial(R, dim, r + d) - analytic_ball_potential_radial(R, dim, r - d)) / (2 * d);
      CHECK(analytic_ball_potential_derivative(R, dim, r) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}
