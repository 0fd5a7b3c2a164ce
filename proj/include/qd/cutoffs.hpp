#pragma once

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "qd/field.hpp"
#include "qd/regions.hpp"

namespace qd {

/// xi(t) = 1 / (t log(1/t)) on (0, 1).
double xi(double t);

/// C-infinity step: 0 for z <= 0, 1 for z >= 1.
double smooth_step(double z);
double smooth_step_d1(double z);
double smooth_step_d2(double z);

/// Bump eta_m in C_c^inf(0, 1/m) with integral 1, 0 <= eta <= xi/m and
/// |eta'| <= xi/(m t). Stored in v = log log(1/t), where eta dt = g(v) dv and
/// eta(t) = xi(t) g(v(t)); g rises on [a, a+w], is 1/m on a plateau and falls
/// on [b-w, b] with b = a + m + w.
struct BumpFunction {
  double m = 0.0;
  double a = 0.0;
  double b = 0.0;
  double w = 0.0;

  double g(double v) const;
  double g_prime(double v) const;
  /// m |(1 - 1/L) g + g'/L| with L = e^v; the derivative bound asks for <= 1.
  double derivative_ratio(double v) const;
  /// int_v^inf g(u) du.
  double tail_mass(double v) const;
  /// int g dv by composite Gauss-Legendre.
  double numeric_integral() const;

  /// eta and eta' at t in (0, 1); zero where t is outside the support.
  double eta(double t) const;
  double eta_prime(double t) const;
  /// H(t) = int_0^t eta.
  double H(double t) const;
  /// Upper end of the support in t: exp(-e^a) < 1/m.
  double support_upper() const;
};

/// Requires m > e.
BumpFunction build_bump(double m);

// ---------------------------------------------------------------------------
// Whitney decomposition

struct WhitneyCube {
  Point center{};
  double side = 0.0;
  int level = 0;
};

struct WhitneyDecomposition {
  int dim = 0;
  std::vector<WhitneyCube> cubes;
  Point root_lo{};
  double root_side = 0.0;
  int max_level = 0;
  std::size_t unresolved = 0;  // cubes still straddling at max_level (dropped)
};

/// Keep a dyadic cube when 2 side <= d(cube, Q^c) <= 8 side; drop cubes
/// missing Q; split otherwise, down to max_level.
WhitneyDecomposition whitney_decompose(const Region& Q, int max_level = 10);

/// Root cube of the dyadic hierarchy: lower corner of the bounds, side the
/// smallest power of two covering them.
std::pair<Point, double> whitney_root(const Region& Q);

std::string format_cubes_csv(const WhitneyDecomposition& w);

struct WhitneyCheck {
  std::size_t cubes = 0;
  std::size_t inequality_violations = 0;  // cubes failing 2 side <= d(cube, Q^c) <= 8 side
  std::size_t overlaps = 0;               // cubes with an emitted ancestor
  std::size_t points = 0;                 // lattice points of Q tested for coverage
  std::size_t multiply_covered = 0;
  std::size_t uncovered_deep = 0;         // uncovered points farther than (9 + sqrt d) s_min from Q^c
  std::size_t uncovered_shallow = 0;      // uncovered points in the unresolved boundary layer
  bool pass() const { return cubes > 0 && inequality_violations == 0 && overlaps == 0 && multiply_covered == 0 && uncovered_deep == 0; }
};

/// Exhaustive validation: every cube, every ancestor pair, every point of an
/// n^d lattice over the bounds.
WhitneyCheck check_whitney(const Region& Q, const WhitneyDecomposition& w, int lattice_n);

// ---------------------------------------------------------------------------
// Regularized distance

using Hessian = std::array<std::array<double, 3>, 3>;

struct BoundConstants {
  int N = 0;
  double beta = 0.0;
  double C1 = 0.0;
  double C2 = 0.0;
  double C3 = 0.0;
};

/// Delta_Q(x) = (1/beta) sum_w side(w) h_w(x) over the Whitney cubes, with
/// h_w(x) = prod psi((x_i - c_i)/side), psi = 1 on [-1/2, 1/2] and 0 beyond
/// (1 + 1/sqrt(d))/2. Cube membership is decided lazily, so every level is
/// available.
class RegularizedDistance {
 public:
  explicit RegularizedDistance(std::shared_ptr<const Region> Q);

  struct Eval {
    double value = 0.0;
    Point gradient{};
    Hessian hessian{};
  };
  Eval evaluate(const Point& x) const;
  double value(const Point& x) const { return evaluate(x).value; }

  const Region& region() const { return *Q_; }
  int dim() const { return Q_->dim(); }
  static double beta(int dim);
  static BoundConstants bound_constants(int dim);

  /// One-dimensional profile psi and its derivatives.
  static double psi(double u, int dim);
  static double psi_d1(double u, int dim);
  static double psi_d2(double u, int dim);

 private:
  struct CubeInfo {
    double distance;
    bool meets;
  };
  using CubeKey = std::array<long long, 4>;  // level, index
  CubeInfo info(const CubeKey& key) const;
  bool present(const CubeKey& key) const;

  std::shared_ptr<const Region> Q_;
  Point root_lo_{};
  double root_side_ = 0.0;
  mutable std::mutex mu_;
  mutable std::map<CubeKey, CubeInfo> memo_;
};

struct DistanceProbeReport {
  std::size_t probes = 0;
  double min_ratio = 0.0;        // min Delta/d, wants >= 1
  double max_ratio = 0.0;        // empirical C in Delta <= C d
  double max_gradient = 0.0;     // max |grad Delta|
  double max_hessian_entry = 0.0;       // max d |d_a d_b Delta|
  double max_hessian_frobenius = 0.0;   // max d ||Hess Delta||_F
  double fd_gradient_error = 0.0;  // max |analytic - centered difference|, relative to max_gradient
  double fd_hessian_error = 0.0;   // max d |analytic - second difference|, relative to max_hessian_entry
};

/// Lattice of n^d points over the region bounds, inside Q only.
std::vector<Point> lattice_probes(const Region& Q, int n);

DistanceProbeReport probe_regularized_distance(const RegularizedDistance& D, const std::vector<Point>& probes,
                                               double fd_step);

// ---------------------------------------------------------------------------
// Hedberg cutoffs

/// h_j = H(Delta_Q) with H the primitive of eta_m, m = K j.
class HedbergCutoff {
 public:
  /// K from the probe report: max(1, G, (H2 + G^2)/2) with G the max gradient
  /// and H2 the max scaled Hessian (Frobenius). `resolution` is the smallest
  /// length the caller can resolve; 1/j < 4 resolution is rejected.
  HedbergCutoff(std::shared_ptr<const RegularizedDistance> D, int j, double K, double resolution);

  static double constant_from(const DistanceProbeReport& r);

  int j() const { return j_; }
  double m() const { return bump_.m; }
  const BumpFunction& bump() const { return bump_; }
  const Region& region() const { return D_->region(); }

  struct Eval {
    double value = 0.0;
    Point gradient{};
    Hessian hessian{};
  };
  Eval evaluate(const Point& x) const;
  double value(const Point& x) const { return evaluate(x).value; }

 private:
  std::shared_ptr<const RegularizedDistance> D_;
  int j_;
  BumpFunction bump_;
};

struct HedbergReport {
  int j = 0;
  double m = 0.0;
  std::size_t probes = 0;
  double min_value = 0.0, max_value = 0.0;
  double min_deep_value = 1.0;      // min h_j over probes with delta > 1/j
  double max_outside_value = 0.0;   // max h_j over probes outside Q
  double gradient_ratio = 0.0;      // max |grad h_j| j / xi(delta)
  double hessian_ratio = 0.0;       // max ||Hess h_j||_F j delta / xi(delta), bound 2
  double fd_gradient_error = 0.0;   // relative, probes with delta >= 100 step
};

/// Probes: the given points plus band points near the boundary found by
/// bisection on the exact distance.
std::vector<Point> hedberg_probes(const Region& Q, const std::vector<Point>& base, int count);

HedbergReport probe_hedberg(const HedbergCutoff& h, const std::vector<Point>& probes, double fd_step = 1e-5);

// ---------------------------------------------------------------------------
// Log-Lipschitz modulus of a gradient field

struct LogLipschitzResult {
  std::vector<double> eps;      // effective scales k h
  std::vector<double> sup;      // sup |grad(y) - grad(y')| over axis pairs at distance eps
  std::vector<double> C;        // sup / (eps log(1/eps))
  double min_C = 0.0, max_C = 0.0;
  bool stable(double factor = 3.0) const { return max_C <= factor * min_C; }
};

/// Pairs are axis-aligned cell pairs k = round(eps/h) apart; eps >= 4h is
/// required. When `restrict_to` is given, both ends of a pair must lie in it.
LogLipschitzResult log_lipschitz_modulus(const VectorField& grad, const std::vector<double>& eps,
                                         const DomainMask* restrict_to = nullptr);

}  // namespace qd
