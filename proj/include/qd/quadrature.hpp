#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qd/field.hpp"
#include "qd/greens.hpp"
#include "qd/obstacle.hpp"

namespace qd {

struct VerifyTolerances {
  double measure_relative = 0.02;
  std::optional<double> centroid;   // default 2h
  double inertia = 1e-8;
  std::optional<double> potential;  // default potential_tolerance(h, max w)
};

struct CheckResult {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct VerificationReport {
  double measure_error = 0.0;           // |lambda(Q) - int w|
  double relative_measure_error = 0.0;  // measure_error / int w
  double centroid_error = 0.0;
  double inertia_slack = 0.0;           // int_Q |x|^2 - int |x|^2 w
  double green_max = 0.0;               // max N(1_Q - w)
  double green_outside_max = 0.0;       // max |N(1_Q - w)| at cells >= 2h from Q
  std::vector<CheckResult> checks;

  bool passes() const;
};

/// 20 h^2 max(1, max_w) (1 + log(1/h)).
double potential_tolerance(double h, double max_w);

/// Measure, centroid and inertia checks.
VerificationReport verify_identities(const DomainMask& Q, const ScalarField& w, const VerifyTolerances& tol = {});

struct PotentialTest {
  ScalarField phi;
  PotentialField Nphi;
  double max_value = 0.0;
  double max_outside = 0.0;
  std::size_t outside_cells = 0;
  double tolerance = 0.0;
  bool pass = false;
};

/// phi = 1_Q - w and its potential; sign test everywhere and vanishing test
/// at cells whose center is at least 2h from every cell center of Q.
PotentialTest potential_test(const DomainMask& Q, const ScalarField& w, std::optional<double> tol = {});

/// verify_identities plus the potential checks.
VerificationReport verify_all(const DomainMask& Q, const ScalarField& w, const VerifyTolerances& tol = {});

/// Cells with center at distance >= 2h from all cell centers of Q.
DomainMask far_exterior(const DomainMask& Q, double cells = 2.0);

/// v(x) = h^d sum_Q G(x, y) - h^d sum G(x, y) w(y) by direct summation;
/// points are snapped to the nearest cell center.
std::vector<double> green_inequality_sample(const DomainMask& Q, const ScalarField& w,
                                            const std::vector<Point>& points);

/// Centroid of Q, 8 exterior points next to the boundary, 8 far-field points.
std::vector<Point> default_green_sample_points(const DomainMask& Q);

struct MonotonicityResult {
  double escape_measure = 0.0;  // lambda(Q_w \ Q_w')
  double budget = 0.0;          // 4h * perimeter estimate of Q_w
  bool pass = false;
  DomainMask Q_w;
  DomainMask Q_w_prime;
};

/// Solves both weights on the a-priori grid of w' (spacing h).
MonotonicityResult monotonicity_check(const WeightSpec& w, const WeightSpec& w_prime, int dim, double h,
                                      const SolveParams& params = {});

/// Essential-equality budget 4h * perimeter estimate.
double band_budget(const DomainMask& Q);

}  // namespace qd
