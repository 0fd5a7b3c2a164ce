#pragma once

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "qd/field.hpp"

namespace qd {

/// Neumaier compensated summation.
class NeumaierSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// C_d: surface area of the unit sphere in R^d (2, 2pi, 4pi).
inline double unit_sphere_area(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi;
    default: throw Error(ErrorKind::InvalidInput, "dimension must be 1, 2 or 3");
  }
}

/// Volume of the unit ball, C_d / d.
inline double unit_ball_volume(int dim) { return unit_sphere_area(dim) / dim; }

/// Gauss-Legendre nodes and weights on [-1, 1].
const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int n);

/// Integral of f over [a, b] with an n-point Gauss-Legendre rule.
template <class F>
double gauss_integrate(F&& f, double a, double b, int n = 20) {
  const auto& [x, w] = gauss_legendre(n);
  const double m = 0.5 * (a + b), r = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += w[i] * f(m + r * x[i]);
  return s * r;
}

}  // namespace qd
