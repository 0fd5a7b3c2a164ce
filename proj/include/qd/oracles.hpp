#pragma once

#include <utility>
#include <vector>

#include "qd/field.hpp"

namespace qd {

/// f = N[1_{B_R'} - c 1_{B_R}] with R' = c^(1/d) R, as a radial profile.
struct RadialSolution {
  double c = 1.0;
  double R = 1.0;
  int dim = 2;
  double R_prime = 1.0;

  double value(double r) const;
  double derivative(double r) const;
};

RadialSolution radial_solution(double c, double R, int dim);

/// Piecewise-constant 1D weight piece amplitude * 1_{(a,b)}.
struct Piece1D {
  double a = 0.0;
  double b = 0.0;
  double amplitude = 1.0;
};

struct Interval1DSolution {
  std::vector<std::pair<double, double>> intervals;  // Q as disjoint open intervals
  Grid grid;                                         // dense oracle grid
  std::vector<double> f;                             // solution on the dense grid
  int iterations = 0;

  double total_length() const;
  /// Linear interpolation of f; zero outside the dense grid.
  double value_at(double x) const;
};

/// Primal-dual active-set solve on a dense 1D grid (spacing rel_h times the
/// support width), independent of the relaxation solver.
Interval1DSolution exact_1d(const std::vector<Piece1D>& pieces, double rel_h = 1e-5);

/// Rasterized N[1_{B_R'} - c 1_{B_R}] about the weight centroid, with R, c
/// from the a-priori bound.
ScalarField admissible_witness(const WeightSpec& spec, const Grid& grid);

/// A variant that is discretely admissible on the grid: (1 - kappa) N[1_{B_rho'} - c' 1_{B_rho}]
/// with rho = R + 2h, c' = 1 + (c - 1)/(1 - kappa), rho' = c'^(1/d) rho.
ScalarField discrete_admissible_witness(const WeightSpec& spec, const Grid& grid, double kappa = 0.1);

struct AdmissibilityReport {
  double max_value = 0.0;             // wants <= 0
  double max_constraint_deficit = 0.0;  // max of (w - 1) - Lap_h g at interior cells, wants <= 0
};

AdmissibilityReport check_admissible(const ScalarField& g, const ScalarField& w);

}  // namespace qd
