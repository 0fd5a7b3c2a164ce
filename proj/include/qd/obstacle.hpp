#pragma once

#include <optional>

#include "qd/field.hpp"

namespace qd {

struct SolveParams {
  double tolerance = 1e-10;
  long max_sweeps = 5'000'000;
  double relaxation = 1.8;
  /// Empty means default_activation_threshold(h, max w).
  std::optional<double> activation_threshold;
  int margin_cells = 4;
  /// 0 means worker_count().
  int threads = 0;

  void validate() const;
};

/// kappa * h^2 * max(1, max_w - 1) with kappa = 1e-6.
double default_activation_threshold(double h, double max_w);

struct Residuals {
  double max_sign_violation = 0.0;
  double max_constraint_violation = 0.0;
  double max_complementarity = 0.0;
};

struct ObstacleSolution {
  ScalarField f;
  DomainMask active;  // {f < -tau}
  double tau = 0.0;
  long sweeps_used = 0;
  bool converged = false;
  double last_update = 0.0;
  Residuals residuals;
};

struct AprioriBox {
  Point center{};
  double R = 0.0;
  double c = 1.0;
  double R_prime = 0.0;
  Grid grid;
};

/// Support radius about the weight centroid, amplitude bound c and the
/// derived grid: centered box of half-width R' + margin_cells * h, with the
/// origin snapped to the lattice hZ^d.
AprioriBox apriori_radius(const WeightSpec& spec, int dim, double h, int margin_cells = 4);

/// Upper bound for the largest value of the primitive sum (max(1, .)).
double amplitude_bound(const WeightSpec& spec, int dim);

/// Projected red-black SOR for f <= 0, Lap_h f >= w - 1, complementarity,
/// with f = 0 on the outermost cell layer. Check `converged` on return.
ObstacleSolution solve_obstacle(const ScalarField& w, const SolveParams& params);

/// Sign, constraint and complementarity residuals over interior cells.
Residuals complementarity_residuals(const ScalarField& f, const ScalarField& w);

/// Q = {f < -tau} U {w >= 1 - 1e-12} U (cells adjacent to {f < -tau}).
DomainMask extract_domain(const ObstacleSolution& sol, const ScalarField& w, double tau);
DomainMask extract_domain(const ObstacleSolution& sol, const ScalarField& w);

/// r = Lap_h f - (w - 1) 1_A.
ScalarField laplacian_identity_residual(const ObstacleSolution& sol, const ScalarField& w);

struct IdentityResidualSummary {
  double interior_max = 0.0;  // cells whose 2-cell neighbourhood lies in A
  double exterior_max = 0.0;  // cells whose 2-cell neighbourhood misses A
  double band_max = 0.0;
  std::size_t band_cells = 0;
};

IdentityResidualSummary summarize_identity_residual(const ObstacleSolution& sol, const ScalarField& w);

}  // namespace qd
