#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qd/quadrature.hpp"

using namespace qd;

namespace {

WeightSpec ball_weight(Point c, double r, double amp) {
  WeightSpec w;
  w.primitives.push_back({Ball{c, r}, amp});
  return w;
}

struct Solved {
  ScalarField w;
  DomainMask Q;
};

Solved solve(const WeightSpec& spec, int dim, double h) {
  const AprioriBox box = apriori_radius(spec, dim, h);
  ScalarField w = rasterize_weight(spec, box.grid);
  const ObstacleSolution s = solve_obstacle(w, SolveParams{});
  REQUIRE(s.converged);
  DomainMask Q = extract_domain(s, w);
  return {std::move(w), std::move(Q)};
}

const Solved& radial() {
  static const Solved s = solve(ball_weight({0, 0, 0}, 1, 4), 2, 1.0 / 64);
  return s;
}

const Solved& intervals() {
  static const Solved s = [] {
    WeightSpec w;
    w.primitives.push_back({Box{{1, 0, 0}, {2, 0, 0}}, 3.0});
    w.primitives.push_back({Box{{4, 0, 0}, {5, 0, 0}}, 3.0});
    return solve(w, 1, 1.0 / 200);
  }();
  return s;
}

DomainMask disk_mask(const Grid& g, double r) {
  DomainMask m(g);
  for (std::size_t i = 0; i < g.size(); ++i) m.inside[i] = norm(g.center(i)) < r ? 1 : 0;
  return m;
}

}  // namespace

TEST_CASE("potential tolerance formula") {
  CHECK(potential_tolerance(0.5, 4.0) == doctest::Approx(20 * 0.25 * 4 * (1 + std::log(2.0))));
  CHECK(potential_tolerance(0.5, 0.0) == doctest::Approx(20 * 0.25 * (1 + std::log(2.0))));
}

TEST_CASE("identities for the radial weight") {
  const Solved& s = radial();
  const double h = 1.0 / 64;
  const VerificationReport r = verify_identities(s.Q, s.w);
  CHECK(r.measure_error <= 0.02 * 4 * std::numbers::pi);
  CHECK(r.centroid_error <= 2 * h);
  CHECK(r.inertia_slack >= -1e-8);
  CHECK(r.checks.size() == 3);
  for (const CheckResult& c : r.checks) CHECK(c.tolerance > 0.0);
  CHECK(r.passes());
}

TEST_CASE("identities for an indicator weight") {
  const Grid g(2, {-1.5, -1.5, 0}, 1.0 / 32, {96, 96, 1});
  const ScalarField w = rasterize_weight(ball_weight({0, 0, 0}, 1, 1), g);
  DomainMask Q(g);
  for (std::size_t i = 0; i < g.size(); ++i) Q.inside[i] = w[i] >= 1.0 ? 1 : 0;
  const VerificationReport r = verify_all(Q, w);
  CHECK(r.measure_error <= 1e-12);
  CHECK(r.centroid_error <= 1e-12);
  CHECK(std::abs(r.inertia_slack) <= 1e-12);
  CHECK(std::abs(r.green_max) <= 1e-10);
  CHECK(r.green_outside_max <= 1e-10);
  CHECK(r.passes());
}

TEST_CASE("identities for the two-interval example") {
  const Solved& s = intervals();
  const double h = 1.0 / 200;
  const VerificationReport r = verify_all(s.Q, s.w);
  CHECK(r.measure_error <= 3 * h);
  CHECK(std::abs((*moments(s.Q).centroid)[0] - 3.0) <= 2 * h);
  CHECK(r.inertia_slack >= -1e-8);
  CHECK(r.passes());
}

TEST_CASE("potential sign test and its negative control") {
  const Solved& s = radial();
  const PotentialTest t = potential_test(s.Q, s.w);
  CHECK(t.tolerance == doctest::Approx(potential_tolerance(1.0 / 64, 4.0)));
  CHECK(t.max_value <= t.tolerance);
  CHECK(t.max_outside <= t.tolerance);
  CHECK(t.outside_cells > 0);
  CHECK(t.pass);

  const DomainMask wrong = disk_mask(s.w.grid, 1.5);
  const PotentialTest bad = potential_test(wrong, s.w);
  CHECK(bad.max_outside > bad.tolerance);
  CHECK_FALSE(bad.pass);
  CHECK_FALSE(verify_all(wrong, s.w).passes());
}

TEST_CASE("far exterior keeps cells two spacings away") {
  const Grid g(2, {0, 0, 0}, 1.0, {9, 9, 1});
  DomainMask Q(g);
  Q.inside[g.flat({4, 4, 0})] = 1;
  const DomainMask far = far_exterior(Q);
  CHECK_FALSE(far[g.flat({4, 4, 0})]);
  CHECK_FALSE(far[g.flat({5, 5, 0})]);
  CHECK(far[g.flat({6, 4, 0})]);
  CHECK(far[g.flat({0, 0, 0})]);
}

TEST_CASE("green inequality samples") {
  const Solved& s = radial();
  const std::vector<Point> pts = default_green_sample_points(s.Q);
  REQUIRE(pts.size() == 17);
  const std::vector<double> v = green_inequality_sample(s.Q, s.w, pts);
  const PotentialTest t = potential_test(s.Q, s.w);
  const Grid& g = s.w.grid;
  CHECK(v[0] < 0.0);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    CHECK(v[k] <= t.tolerance);
    const std::size_t i = g.flat(g.locate(pts[k]));
    if (!s.Q[i]) {
      CHECK(std::abs(v[k]) <= t.tolerance);
      CHECK(std::abs(v[k] - t.Nphi[i]) <= 1e-12);
    }
  }
  for (std::size_t k = 1; k < pts.size(); ++k) CHECK_FALSE(s.Q[g.flat(g.locate(pts[k]))]);

  const Grid g0(2, {0, 0, 0}, 0.1, {10, 10, 1});
  const std::vector<double> z = green_inequality_sample(DomainMask(g0), ScalarField(g0), {{0.5, 0.5, 0}, {0.1, 0.9, 0}});
  CHECK(z == std::vector<double>{0.0, 0.0});
}

TEST_CASE("checks reject mismatched inputs") {
  const Grid a(2, {0, 0, 0}, 0.1, {10, 10, 1}), b(2, {0, 0, 0}, 0.1, {12, 10, 1});
  CHECK_THROWS_AS(verify_identities(DomainMask(a), ScalarField(b)), Error);
  CHECK_THROWS_AS(verify_identities(DomainMask(a), ScalarField(a)), Error);
  CHECK_THROWS_AS(potential_test(DomainMask(a), ScalarField(b)), Error);
}

TEST_CASE("monotonicity and uniqueness") {
  const double h = 1.0 / 32;
  WeightSpec small = ball_weight({0, 0, 0}, 1, 4);
  WeightSpec big = small;
  big.primitives.push_back({Box{{0.5, -0.5, 0}, {1.5, 0.5, 0}}, 1.0});
  const MonotonicityResult grow = monotonicity_check(small, big, 2, h);
  CHECK(grow.escape_measure <= grow.budget);
  CHECK(grow.Q_w_prime.measure() > grow.Q_w.measure());

  const MonotonicityResult same = monotonicity_check(small, small, 2, h);
  CHECK(mask_symmetric_difference(same.Q_w, same.Q_w_prime).measure() <= same.budget);
  CHECK(mask_symmetric_difference(same.Q_w, same.Q_w_prime).count() == 0);

  const MonotonicityResult unit = monotonicity_check(ball_weight({0, 0, 0}, 1, 1), ball_weight({0, 0, 0}, 1, 2), 2, h);
  CHECK(unit.pass);
  const Moments m2 = moments(unit.Q_w_prime);
  CHECK(std::abs(std::sqrt(m2.measure / std::numbers::pi) - std::sqrt(2.0)) <= 2 * h);

  CHECK_THROWS_AS(monotonicity_check(big, small, 2, h), Error);
}

TEST_CASE("translation by a lattice vector translates the domain") {
  const double h = 1.0 / 32;
  const WeightSpec spec = ball_weight({0.1, 0.05, 0}, 0.5, 3);
  const WeightSpec moved = translate(spec, {5 * h, -3 * h, 0});
  const AprioriBox b1 = apriori_radius(spec, 2, h), b2 = apriori_radius(moved, 2, h);
  REQUIRE(b1.grid.shape() == b2.grid.shape());
  CHECK(b2.grid.origin()[0] - b1.grid.origin()[0] == doctest::Approx(5 * h));
  CHECK(b2.grid.origin()[1] - b1.grid.origin()[1] == doctest::Approx(-3 * h));
  const Solved s1 = solve(spec, 2, h), s2 = solve(moved, 2, h);
  CHECK(s1.Q.inside == s2.Q.inside);
}
