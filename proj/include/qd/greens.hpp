#pragma once

#include <string>

#include "qd/field.hpp"

namespace qd {

/// Free-space Green's function of -Laplace as a function of r = |x - y|:
/// -r/2 (d=1), -log(r)/(2 pi) (d=2), 1/(4 pi r) (d=3).
double green_radial(int dim, double r);

/// Radial derivative dG/dr.
double green_radial_derivative(int dim, double r);

/// Kernel between two points; throws ErrorKind::Singular when x == y in d >= 2.
double green_kernel(int dim, const Point& x, const Point& y);

/// Mean of G over the ball of volume h^d centered at the singularity.
double singular_cell_value(int dim, double h);

/// Cell-regularized kernel used by the discrete potentials.
struct GreenKernel {
  int dim;
  double spacing;
  double singular_value;

  GreenKernel(int dim, double spacing);
  /// Kernel at lattice offset (in cells).
  double at(const Index& offset) const;
  /// Component `axis` of the kernel gradient at a lattice offset; zero at 0.
  double gradient_at(const Index& offset, int axis) const;
};

struct PotentialField : ScalarField {
  std::string source_description;

  PotentialField(ScalarField f, std::string source) : ScalarField(std::move(f)), source_description(std::move(source)) {}
};

/// Nw(x_i) = h^d sum_j K(x_i - x_j) w_j, evaluated by zero-padded FFT.
PotentialField newtonian_potential(const ScalarField& w);

/// N(w - c) + (c / 2d) |x|^2.
PotentialField newtonian_potential_const_outside(const ScalarField& w, double c);

/// Gradient of Nw by convolution with the kernel gradient.
VectorField potential_gradient(const ScalarField& w);

/// Same sum as newtonian_potential, evaluated naively. Grids up to 1e5 cells.
PotentialField direct_convolution_oracle(const ScalarField& w);

/// Naive counterpart of potential_gradient (same size limit).
VectorField direct_gradient_oracle(const ScalarField& w);

/// N 1_{B_R} at x (ball centered at the origin).
double analytic_ball_potential(double R, int dim, const Point& x);
/// Same as a radial profile.
double analytic_ball_potential_radial(double R, int dim, double r);
/// Radial derivative of the profile.
double analytic_ball_potential_derivative(double R, int dim, double r);

/// Drops cached kernel spectra (tests and long-running tools).
void clear_kernel_cache();

}  // namespace qd
