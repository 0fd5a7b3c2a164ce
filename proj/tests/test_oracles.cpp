#include <doctest.h>

#include <cmath>

#include "qd/greens.hpp"
#include "qd/obstacle.hpp"
#include "qd/oracles.hpp"

using namespace qd;

namespace {

WeightSpec ball_weight(double r, double amp) {
  WeightSpec w;
  w.primitives.push_back({Ball{{0, 0, 0}, r}, amp});
  return w;
}

}  // namespace

TEST_CASE("radial solution: c = 4, R = 1, d = 2") {
  const RadialSolution s = radial_solution(4, 1, 2);
  CHECK(s.R_prime == doctest::Approx(2.0));
  CHECK(s.value(2.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(s.value(0.0) < 0.0);
  CHECK(s.value(0.0) == doctest::Approx(-2 * std::log(2.0)).epsilon(1e-12));
  for (double r = 0.0; r <= 3.0; r += 0.01) {
    CHECK(s.value(r) <= 1e-15);
    if (r >= 2.0) CHECK(s.value(r) == 0.0);
  }
}

TEST_CASE("radial solution agrees with the ball potentials") {
  for (int d = 1; d <= 3; ++d) {
    const RadialSolution s = radial_solution(3, 0.8, d);
    for (double r : {0.0, 0.3, 0.8, 1.0, s.R_prime, 1.5 * s.R_prime}) {
      const double expect = analytic_ball_potential_radial(s.R_prime, d, r) - 3 * analytic_ball_potential_radial(0.8, d, r);
      CHECK(s.value(r) == doctest::Approx(expect).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("radial solution with c = 1 vanishes") {
  for (int d = 1; d <= 3; ++d) {
    const RadialSolution s = radial_solution(1, 1.3, d);
    CHECK(s.R_prime == doctest::Approx(1.3));
    for (double r = 0.0; r < 3.0; r += 0.05) {
      CHECK(std::abs(s.value(r)) <= 1e-14);
      CHECK(std::abs(s.derivative(r)) <= 1e-14);
    }
  }
  CHECK_THROWS_AS(radial_solution(0.5, 1, 2), Error);
  CHECK_THROWS_AS(radial_solution(2, 0, 2), Error);
}

TEST_CASE("radial derivative table") {
  for (int d = 1; d <= 3; ++d) {
    const double c = 4, R = 1;
    const RadialSolution s = radial_solution(c, R, d);
    for (double r = 0.05; r < 1.5 * s.R_prime; r += 0.05) {
      const double fd = (s.value(r + 1e-5) - s.value(r - 1e-5)) / 2e-5;
      if (std::abs(r - R) > 1e-4 && std::abs(r - s.R_prime) > 1e-4) CHECK(std::abs(fd - s.derivative(r)) <= 1e-6);
      // closed forms
      double expect = 0.0;
      if (r < R)
        expect = (c - 1) * r / d;
      else if (r < s.R_prime)
        expect = r * (c * std::pow(R, d) / std::pow(r, d) - 1) / d;
      CHECK(s.derivative(r) == doctest::Approx(expect).epsilon(1e-12).scale(1.0));
      // f <= 0 with f increasing towards R'
      CHECK(s.derivative(r) >= -1e-15);
    }
  }
}

TEST_CASE("one-dimensional radial profile is C1 at R and R'") {
  const RadialSolution s = radial_solution(4, 1, 1);
  CHECK(s.R_prime == doctest::Approx(4.0));
  for (double knot : {1.0, 4.0}) {
    const double e = 1e-7;
    CHECK(std::abs(s.value(knot + e) - s.value(knot - e)) <= 1e-6);
    CHECK(std::abs(s.derivative(knot + e) - s.derivative(knot - e)) <= 1e-6);
  }
  // piecewise quadratic: constant second difference inside (0, 1)
  const double k = 1e-2;
  const double d2a = (s.value(0.2 + k) - 2 * s.value(0.2) + s.value(0.2 - k)) / (k * k);
  const double d2b = (s.value(0.7 + k) - 2 * s.value(0.7) + s.value(0.7 - k)) / (k * k);
  CHECK(d2a == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(d2b == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("exact 1D: two intervals") {
  const Interval1DSolution s = exact_1d({{1, 2, 3}, {4, 5, 3}});
  REQUIRE(s.intervals.size() == 2);
  CHECK(std::abs(s.total_length() - 6.0) <= 1e-3);
  CHECK(s.intervals[0].first == doctest::Approx(0.0).epsilon(1e-3).scale(1.0));
  CHECK(s.intervals[0].second == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(s.intervals[1].first == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(s.intervals[1].second == doctest::Approx(6.0).epsilon(1e-3));
  CHECK(std::abs(s.value_at(3.0)) <= 1e-6);
  CHECK(s.value_at(1.5) < 0.0);
  CHECK(s.value_at(-10.0) == 0.0);
  for (double v : s.f) CHECK(v <= 0.0);
}

TEST_CASE("exact 1D: single pieces") {
  const Interval1DSolution two = exact_1d({{0, 1, 2}});
  REQUIRE(two.intervals.size() == 1);
  CHECK(two.intervals[0].first == doctest::Approx(-0.5).epsilon(1e-4));
  CHECK(two.intervals[0].second == doctest::Approx(1.5).epsilon(1e-4));

  const Interval1DSolution one = exact_1d({{0, 1, 1}});
  REQUIRE(one.intervals.size() == 1);
  CHECK(one.intervals[0].first == doctest::Approx(0.0).epsilon(1e-4).scale(1.0));
  CHECK(one.intervals[0].second == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(std::abs(one.total_length() - 1.0) <= 1e-3);

  CHECK_THROWS_AS(exact_1d({{0, 1, 0.5}}), Error);
  CHECK_THROWS_AS(exact_1d({}), Error);
}

TEST_CASE("exact 1D: total length equals the mass") {
  const std::vector<std::vector<Piece1D>> cases{
      {{0, 1, 5}},
      {{0, 2, 1.5}, {0.5, 1, 2}},
      {{-1, 0, 2}, {3, 4, 4}},
      {{0, 0.3, 10}, {2, 2.5, 1}},
  };
  for (const auto& pieces : cases) {
    double mass = 0.0;
    for (const Piece1D& p : pieces) mass += p.amplitude * (p.b - p.a);
    const Interval1DSolution s = exact_1d(pieces);
    CHECK(std::abs(s.total_length() - mass) <= 1e-3 * mass);
  }
}

TEST_CASE("admissible witnesses") {
  const WeightSpec spec = ball_weight(1.0, 4.0);
  const AprioriBox box = apriori_radius(spec, 2, 1.0 / 32);
  const ScalarField w = rasterize_weight(spec, box.grid);
  const ScalarField g = admissible_witness(spec, box.grid);
  CHECK(g.max_value() <= 0.0);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (norm(box.grid.center(i)) >= 2.0) CHECK(g[i] == 0.0);
  const AdmissibilityReport a = check_admissible(g, w);
  CHECK(a.max_value <= 0.0);
  // away from the two circles the deficit is at discretization level
  const ScalarField L = discrete_laplacian(g);
  const double h = box.grid.spacing();
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!box.grid.is_interior(i)) continue;
    const double r = norm(box.grid.center(i));
    if (std::abs(r - 1.0) < 2 * h || std::abs(r - 2.0) < 2 * h) continue;
    worst = std::max(worst, (w[i] - 1.0) - L[i]);
  }
  CHECK(worst <= h);

  const ScalarField gd = discrete_admissible_witness(spec, box.grid);
  const AdmissibilityReport ad = check_admissible(gd, w);
  CHECK(ad.max_value <= 0.0);
  CHECK(ad.max_constraint_deficit <= 1e-9);

  const WeightSpec unit = ball_weight(1.0, 1.0);
  const AprioriBox ub = apriori_radius(unit, 2, 1.0 / 32);
  CHECK(admissible_witness(unit, ub.grid).max_abs() == 0.0);
}
