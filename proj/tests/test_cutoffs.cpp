#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "qd/cutoffs.hpp"
#include "qd/greens.hpp"

using namespace qd;

namespace {

std::shared_ptr<const Region> unit_disk() { return std::make_shared<BallRegion>(2, Point{0, 0, 0}, 1.0); }
std::shared_ptr<const Region> unit_square() { return std::make_shared<BoxRegion>(2, Point{0, 0, 0}, Point{1, 1, 0}); }

struct Setup {
  std::shared_ptr<const RegularizedDistance> D;
  std::vector<Point> probes;
  double K = 1.0;
};

const Setup& disk_setup() {
  static const Setup s = [] {
    Setup out;
    auto Q = unit_disk();
    out.D = std::make_shared<RegularizedDistance>(Q);
    out.probes = hedberg_probes(*Q, lattice_probes(*Q, 32), 256);
    out.K = HedbergCutoff::constant_from(probe_regularized_distance(*out.D, out.probes, 1e-5));
    return out;
  }();
  return s;
}

}  // namespace

TEST_CASE("xi") {
  CHECK(xi(1 / std::numbers::e) == doctest::Approx(std::numbers::e));
  CHECK(xi(0.01) == doctest::Approx(21.7147).epsilon(1e-5));
  CHECK(xi(0.01) > xi(0.1));
  double prev = xi(1e-6);
  for (double t = 2e-6; t < 1 / std::numbers::e; t *= 1.1) {
    CHECK(xi(t) < prev);
    prev = xi(t);
  }
  CHECK_THROWS_AS(xi(0.0), Error);
  CHECK_THROWS_AS(xi(1.0), Error);
  CHECK_THROWS_AS(xi(-0.5), Error);
}

TEST_CASE("smooth step") {
  CHECK(smooth_step(-1.0) == 0.0);
  CHECK(smooth_step(0.0) == 0.0);
  CHECK(smooth_step(1.0) == 1.0);
  CHECK(smooth_step(0.5) == doctest::Approx(0.5));
  for (double z = 0.01; z < 1.0; z += 0.01) {
    CHECK(smooth_step(z) + smooth_step(1 - z) == doctest::Approx(1.0));
    const double e = 1e-6;
    CHECK(smooth_step_d1(z) == doctest::Approx((smooth_step(z + e) - smooth_step(z - e)) / (2 * e)).epsilon(1e-5).scale(1.0));
    CHECK(smooth_step_d2(z) ==
          doctest::Approx((smooth_step_d1(z + e) - smooth_step_d1(z - e)) / (2 * e)).epsilon(1e-4).scale(1.0));
  }
}

TEST_CASE("bump invariants on dense samples") {
  for (double m : {5.0, 10.0, 100.0}) {
    const BumpFunction b = build_bump(m);
    CHECK(b.support_upper() < 1.0 / m);
    CHECK(std::abs(b.numeric_integral() - 1.0) <= 1e-6);
    CHECK(std::abs(b.H(0.999 / m) - 1.0) <= 1e-6);
    // samples uniform in log t over (1e-300, 1/m) and uniform in t near 1/m
    int violations = 0;
    for (int k = 0; k < 10000; ++k) {
      const double t = k < 5000 ? std::exp(std::log(1e-300) + (std::log(1.0 / m) - std::log(1e-300)) * k / 5000.0)
                                : (k - 5000 + 0.5) / (5000.0 * m);
      const double e = b.eta(t), ep = b.eta_prime(t);
      if (e < 0.0 || e > xi(t) / m * (1 + 1e-12)) ++violations;
      if (std::abs(ep) > xi(t) / (m * t) * (1 + 1e-12)) ++violations;
    }
    CHECK(violations == 0);
    for (double t : {1.0 / m, 1.5 / m, 0.5, 0.99}) {
      CHECK(b.eta(t) == 0.0);
      CHECK(b.eta_prime(t) == 0.0);
    }
  }
  CHECK_THROWS_AS(build_bump(2.0), Error);
  CHECK_THROWS_AS(build_bump(std::numbers::e), Error);
}

TEST_CASE("bump derivative matches finite differences") {
  const BumpFunction b = build_bump(10.0);
  const double v = 0.5 * (b.a + b.b);
  const double t = std::exp(-std::exp(b.a + 0.5 * b.w));
  const double e = t * 1e-6;
  CHECK(b.eta_prime(t) == doctest::Approx((b.eta(t + e) - b.eta(t - e)) / (2 * e)).epsilon(1e-5));
  CHECK(b.g(v) == doctest::Approx(0.1));
  CHECK(b.tail_mass(b.a) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(b.tail_mass(b.b) == 0.0);
  for (double u = b.a; u <= b.b; u += 0.05) CHECK(b.derivative_ratio(u) <= 1.0 + 1e-12);
}

TEST_CASE("Whitney cubes of the unit square") {
  const auto Q = unit_square();
  const WhitneyDecomposition wd = whitney_decompose(*Q, 8);
  const WhitneyCheck c = check_whitney(*Q, wd, 128);
  CHECK(c.cubes > 0);
  CHECK(c.inequality_violations == 0);
  CHECK(c.overlaps == 0);
  CHECK(c.multiply_covered == 0);
  CHECK(c.uncovered_deep == 0);
  CHECK(c.pass());
  for (const WhitneyCube& w : wd.cubes) {
    const double p = std::log2(w.side);
    CHECK(p == std::round(p));
    // d(w, Q^c) <= 8 side <= 4 d(w, Q^c)
    const Point lo{w.center[0] - w.side / 2, w.center[1] - w.side / 2, 0};
    const double d = Q->cube_distance(lo, w.side);
    CHECK(d <= 8 * w.side);
    CHECK(8 * w.side <= 4 * d);
  }
}

TEST_CASE("Whitney cubes of the unit disk") {
  const auto Q = unit_disk();
  const WhitneyDecomposition wd = whitney_decompose(*Q, 8);
  CHECK(wd.cubes.size() <= 100000);
  const WhitneyCheck c = check_whitney(*Q, wd, 128);
  CHECK(c.pass());
  // per-level counts grow no faster than 2^L
  std::map<int, std::size_t> per_level;
  for (const WhitneyCube& w : wd.cubes) ++per_level[w.level];
  for (const auto& [level, n] : per_level) CHECK(static_cast<double>(n) <= 64.0 * std::pow(2.0, level));

  // a point at distance 1/2 from the circle sits in a cube of side >= beta/2
  const Point x{0.5, 0, 0};
  const double beta = RegularizedDistance::beta(2);
  bool found = false;
  for (const WhitneyCube& w : wd.cubes) {
    if (std::abs(x[0] - w.center[0]) <= w.side / 2 && std::abs(x[1] - w.center[1]) <= w.side / 2) {
      found = true;
      CHECK(w.side >= 0.5 * beta);
    }
  }
  CHECK(found);

  const std::string csv = format_cubes_csv(wd);
  CHECK(csv.rfind("x1,x2,side,level\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == wd.cubes.size() + 1);
  CHECK_THROWS_AS(whitney_decompose(*Q, 41), Error);
}

TEST_CASE("regularized distance on the unit square") {
  const auto Q = unit_square();
  const RegularizedDistance D(Q);
  const BoundConstants pc = RegularizedDistance::bound_constants(2);
  CHECK(pc.beta == doctest::Approx(1.0 / (8 + 1.5 * std::sqrt(2.0))));
  CHECK(pc.N == static_cast<int>(std::floor(std::log2(2 / pc.beta) + 1)));
  CHECK(pc.C1 == doctest::Approx(pc.N * 8.0 / pc.beta));
  const std::vector<Point> probes = lattice_probes(*Q, 64);
  CHECK(probes.size() == 64 * 64);
  const DistanceProbeReport r = probe_regularized_distance(D, probes, 1.0 / 256);
  CHECK(r.min_ratio >= 1.0 - 1e-12);
  CHECK(r.max_ratio <= pc.C1);
  CHECK(r.max_gradient <= pc.C2);
  CHECK(r.max_hessian_entry <= pc.C3);
  CHECK(D.value({2, 2, 0}) == 0.0);
}

TEST_CASE("regularized distance profile") {
  for (int d = 1; d <= 3; ++d) {
    const double edge = (1 + 1 / std::sqrt(double(d))) / 2;
    CHECK(RegularizedDistance::psi(0.0, d) == 1.0);
    CHECK(RegularizedDistance::psi(0.5, d) == 1.0);
    CHECK(RegularizedDistance::psi(edge, d) == 0.0);
    CHECK(RegularizedDistance::psi(-edge - 0.1, d) == 0.0);
    const double u = 0.5 + 0.3 * (edge - 0.5), e = 1e-6;
    CHECK(RegularizedDistance::psi_d1(u, d) ==
          doctest::Approx((RegularizedDistance::psi(u + e, d) - RegularizedDistance::psi(u - e, d)) / (2 * e)).epsilon(1e-5));
  }
}

TEST_CASE("regularized distance of the disk is smooth and comparable to the distance") {
  const Setup& s = disk_setup();
  const DistanceProbeReport r = probe_regularized_distance(*s.D, lattice_probes(s.D->region(), 32), 1.0 / 128);
  const BoundConstants pc = RegularizedDistance::bound_constants(2);
  CHECK(r.min_ratio >= 1.0 - 1e-12);
  CHECK(r.max_ratio <= pc.C1);
  CHECK(r.max_gradient <= pc.C2);
  CHECK(r.max_hessian_entry <= pc.C3);
  const RegularizedDistance::Eval e = s.D->evaluate({0.3, -0.2, 0});
  const double h = 1e-5;
  const double fx = (s.D->value({0.3 + h, -0.2, 0}) - s.D->value({0.3 - h, -0.2, 0})) / (2 * h);
  CHECK(e.gradient[0] == doctest::Approx(fx).epsilon(1e-4));
}

TEST_CASE("Hedberg cutoffs on the unit disk") {
  const Setup& s = disk_setup();
  CHECK(s.K >= 1.0);
  std::vector<HedbergReport> reports;
  for (int j : {8, 16}) {
    const HedbergCutoff hc(s.D, j, s.K, 1.0 / 256);
    CHECK(hc.m() == doctest::Approx(s.K * j));
    const HedbergReport r = probe_hedberg(hc, s.probes);
    CHECK(r.min_value >= 0.0);
    CHECK(r.max_value <= 1.0);
    CHECK(r.min_deep_value == 1.0);
    CHECK(r.max_outside_value == 0.0);
    CHECK(r.gradient_ratio <= 1.1);
    CHECK(r.hessian_ratio <= 2.2);
    reports.push_back(r);
  }
  const HedbergCutoff h8(s.D, 8, s.K, 1.0 / 256), h16(s.D, 16, s.K, 1.0 / 256);
  for (const Point& p : s.probes) CHECK(h8.value(p) <= h16.value(p) + 1e-9);
  CHECK(h8.value({2, 0, 0}) == 0.0);
  CHECK(h8.value({0.95, 0, 0}) == 1.0);
}

TEST_CASE("Hedberg cutoffs converge to one inside") {
  const Setup& s = disk_setup();
  const Point x{0.0, 0.999999, 0};
  double prev = -1.0;
  for (int j : {8, 16, 32, 1 << 20, 1 << 24}) {
    const double v = HedbergCutoff(s.D, j, s.K, 1e-9).value(x);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(prev == 1.0);
}

TEST_CASE("Hedberg cutoff preconditions") {
  const Setup& s = disk_setup();
  CHECK_THROWS_AS(HedbergCutoff(s.D, 3, s.K, 1e-3), Error);
  CHECK_THROWS_AS(HedbergCutoff(s.D, 8, 0.5, 1e-3), Error);
  CHECK_THROWS_AS(HedbergCutoff(s.D, 64, s.K, 1.0 / 128), Error);
  CHECK_NOTHROW(HedbergCutoff(s.D, 32, s.K, 1.0 / 128));
}

TEST_CASE("log-Lipschitz modulus of a potential gradient") {
  const double h = 1.0 / 128;
  const int n = 2 * static_cast<int>(std::llround(2.2 / h)) + 1;
  const Grid g(2, {-(n / 2 + 0.5) * h, -(n / 2 + 0.5) * h, 0}, h, {n, n, 1});
  ScalarField phi(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = norm(g.center(i));
    phi[i] = (r < 1.0 ? 1.0 : 0.0) - (r < 2.0 ? 0.25 : 0.0);
  }
  const VectorField grad = potential_gradient(phi);
  const std::vector<double> eps{4 * h, 0.05, 0.1};
  const LogLipschitzResult r = log_lipschitz_modulus(grad, eps);
  CHECK(r.eps.size() == 3);
  CHECK(r.stable());
  CHECK(r.min_C > 0.0);

  // pairs away from the circles give a smaller modulus
  DomainMask inner(g);
  for (std::size_t i = 0; i < g.size(); ++i) inner.inside[i] = norm(g.center(i)) < 0.7 ? 1 : 0;
  const LogLipschitzResult ri = log_lipschitz_modulus(grad, eps, &inner);
  for (std::size_t k = 0; k < eps.size(); ++k) CHECK(ri.sup[k] < r.sup[k]);

  const VectorField zero = potential_gradient(ScalarField(g));
  const LogLipschitzResult rz = log_lipschitz_modulus(zero, eps);
  CHECK(rz.max_C == 0.0);

  CHECK_THROWS_AS(log_lipschitz_modulus(grad, {2 * h}), Error);
  CHECK_THROWS_AS(log_lipschitz_modulus(grad, {}), Error);
}
