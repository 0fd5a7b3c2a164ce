#pragma once

#include <vector>

#include "qd/field.hpp"
#include "qd/numerics.hpp"

namespace qd {

struct AverageProbe {
  Point center{};
  std::vector<double> radii;
  int angular_samples = 256;
};

/// Multilinear interpolation between cell centers. Throws when p lies
/// outside the hull of the cell centers.
double interpolate(const ScalarField& f, const Point& p);

/// Equal-weight mean over M sphere points: two points in 1D, M angles in 2D,
/// a Fibonacci lattice in 3D.
double sphere_average(const ScalarField& f, const Point& x, double r, int M);

/// Mean over cells whose center lies in the open ball B_s(x).
double ball_average(const ScalarField& f, const Point& x, double s);

/// Midpoint rule for the radial formula int_0^s (d r^(d-1) / s^d) L_f(x; r) dr.
double radial_reconstruction(const ScalarField& f, const Point& x, double s, int n_r, int M);

/// Closed form of h_{s,t}(r) = int_r^inf (W(q/t) - W(q/s)) / (C_d q^(d-1)) dq, W(q) = min(1, q^d).
double comparison_kernel_value(double s, double t, int dim, double r);

/// Integrand of the kernel at q (the negative of its radial derivative).
double comparison_kernel_integrand(double s, double t, int dim, double q);

/// (s^2 - t^2) / (2 (d + 2)).
double comparison_kernel_mass(double s, double t, int dim);

/// int h_{s,t} d lambda by Gauss-Legendre quadrature of the radial profile.
double comparison_kernel_numeric_mass(double s, double t, int dim);

struct DifferenceIdentity {
  double lhs = 0.0;  // -sum_y h_{s,t}(|y - x|) rho(y) h^d
  double rhs = 0.0;  // A_f(x; s) - A_f(x; t), f = N rho
  double gap = 0.0;
};

DifferenceIdentity difference_identity_check(const ScalarField& rho, const Point& x, double s, double t);

/// Max over zeros x and cell centers y with min_distance <= |y - x| <= dist(x, boundary)/2
/// of f(y) / (2^d C |y - x|^2). Throws when |f(x)| > tol at a listed zero.
double quadratic_zero_bound_check(const ScalarField& f, double C, const std::vector<Point>& zeros, double tol,
                                  double min_distance);

/// Max |rho| over cells where f and its 2-cell neighbourhood vanish within tau.
double zero_set_laplacian_check(const ScalarField& f, const ScalarField& rho, double tau);

}  // namespace qd
