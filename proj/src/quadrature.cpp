#include "qd/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "qd/numerics.hpp"

namespace qd {

bool VerificationReport::passes() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

double potential_tolerance(double h, double max_w) {
  return 20.0 * h * h * std::max(1.0, max_w) * (1.0 + std::log(1.0 / h));
}

VerificationReport verify_identities(const DomainMask& Q, const ScalarField& w, const VerifyTolerances& tol) {
  if (Q.grid != w.grid) throw Error(ErrorKind::InvalidInput, "domain and weight live on different grids");
  const Moments mw = moments(w);
  if (!(mw.measure > 0.0)) throw Error(ErrorKind::Domain, "total weight is zero");
  const Moments mq = moments(Q);
  const double h = w.grid.spacing();
  VerificationReport r;
  r.measure_error = std::abs(mq.measure - mw.measure);
  r.relative_measure_error = r.measure_error / mw.measure;
  r.centroid_error = mq.centroid ? distance(*mq.centroid, *mw.centroid) : std::numeric_limits<double>::infinity();
  r.inertia_slack = mq.second_moment - mw.second_moment;
  const double ctol = tol.centroid.value_or(2.0 * h);
  r.checks.push_back({"measure", r.relative_measure_error, tol.measure_relative,
                      r.relative_measure_error <= tol.measure_relative});
  r.checks.push_back({"centroid", r.centroid_error, ctol, r.centroid_error <= ctol});
  r.checks.push_back({"inertia", r.inertia_slack, tol.inertia, r.inertia_slack >= -tol.inertia});
  return r;
}

DomainMask far_exterior(const DomainMask& Q, double cells) {
  const Grid& g = Q.grid;
  const int dim = g.dim();
  const int reach = static_cast<int>(std::ceil(cells));
  std::vector<Index> offsets;
  for (int k = (dim >= 3 ? -reach : 0); k <= (dim >= 3 ? reach : 0); ++k)
    for (int j = (dim >= 2 ? -reach : 0); j <= (dim >= 2 ? reach : 0); ++j)
      for (int i = -reach; i <= reach; ++i)
        if (static_cast<double>(i * i + j * j + k * k) < cells * cells) offsets.push_back({i, j, k});
  DomainMask near(g);
  for (std::size_t p = 0; p < g.size(); ++p) {
    if (!Q.inside[p]) continue;
    const Index c = g.unflat(p);
    for (const Index& o : offsets) {
      const Index q{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
      bool in = true;
      for (int a = 0; a < dim; ++a)
        if (q[a] < 0 || q[a] >= g.extent(a)) in = false;
      if (in) near.inside[g.flat(q)] = 1;
    }
  }
  DomainMask out(g);
  for (std::size_t p = 0; p < g.size(); ++p) out.inside[p] = near.inside[p] ? 0 : 1;
  return out;
}

PotentialTest potential_test(const DomainMask& Q, const ScalarField& w, std::optional<double> tol) {
  if (Q.grid != w.grid) throw Error(ErrorKind::InvalidInput, "domain and weight live on different grids");
  ScalarField phi(w.grid);
  for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = (Q.inside[i] ? 1.0 : 0.0) - w[i];
  PotentialField N = newtonian_potential(phi);
  const DomainMask far = far_exterior(Q);
  PotentialTest t{phi, N, -std::numeric_limits<double>::infinity(), 0.0, 0, 0.0, false};
  for (std::size_t i = 0; i < N.size(); ++i) {
    t.max_value = std::max(t.max_value, N[i]);
    if (far.inside[i]) {
      t.max_outside = std::max(t.max_outside, std::abs(N[i]));
      ++t.outside_cells;
    }
  }
  t.tolerance = tol.value_or(potential_tolerance(w.grid.spacing(), w.max_value()));
  t.pass = t.max_value <= t.tolerance && t.max_outside <= t.tolerance;
  return t;
}

VerificationReport verify_all(const DomainMask& Q, const ScalarField& w, const VerifyTolerances& tol) {
  VerificationReport r = verify_identities(Q, w, tol);
  const PotentialTest p = potential_test(Q, w, tol.potential);
  r.green_max = p.max_value;
  r.green_outside_max = p.max_outside;
  r.checks.push_back({"green_max", p.max_value, p.tolerance, p.max_value <= p.tolerance});
  r.checks.push_back({"green_outside_max", p.max_outside, p.tolerance, p.max_outside <= p.tolerance});
  return r;
}

std::vector<double> green_inequality_sample(const DomainMask& Q, const ScalarField& w,
                                            const std::vector<Point>& points) {
  const Grid& g = w.grid;
  if (Q.grid != g) throw Error(ErrorKind::InvalidInput, "domain and weight live on different grids");
  const GreenKernel K(g.dim(), g.spacing());
  std::vector<double> out;
  out.reserve(points.size());
  for (const Point& p : points) {
    const Index x = g.locate(p);
    NeumaierSum s;
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double phi = (Q.inside[j] ? 1.0 : 0.0) - w[j];
      if (phi == 0.0) continue;
      const Index y = g.unflat(j);
      s.add(K.at({x[0] - y[0], x[1] - y[1], x[2] - y[2]}) * phi);
    }
    out.push_back(s.value() * g.cell_volume());
  }
  return out;
}

std::vector<Point> default_green_sample_points(const DomainMask& Q) {
  const Grid& g = Q.grid;
  const int dim = g.dim();
  const Moments m = moments(Q);
  if (!m.centroid) throw Error(ErrorKind::Domain, "empty domain has no sample points");
  const Point c = *m.centroid;
  std::vector<Point> dirs;
  if (dim == 1) {
    dirs = {{1, 0, 0}, {-1, 0, 0}};
  } else if (dim == 2) {
    for (int k = 0; k < 8; ++k) {
      const double th = std::numbers::pi * k / 4.0;
      dirs.push_back({std::cos(th), std::sin(th), 0});
    }
  } else {
    const double s = 1.0 / std::sqrt(3.0);
    for (int k = 0; k < 8; ++k) dirs.push_back({(k & 1 ? s : -s), (k & 2 ? s : -s), (k & 4 ? s : -s)});
  }
  const double h = g.spacing();
  auto inside_grid = [&](const Point& p) {
    for (int a = 0; a < dim; ++a)
      if (p[a] < g.lower()[a] + 0.5 * h || p[a] > g.upper()[a] - 0.5 * h) return false;
    return true;
  };
  std::vector<Point> near, far;
  const int per_dir = 8 / static_cast<int>(dirs.size());
  for (const Point& d : dirs) {
    // March outward to the last cell of Q along the ray.
    double last_in = 0.0, t = 0.0;
    while (inside_grid(c + t * d)) {
      if (Q.inside[g.flat(g.locate(c + t * d))]) last_in = t;
      t += 0.25 * h;
    }
    const double edge = t - 0.25 * h;
    for (int k = 0; k < per_dir; ++k) {
      near.push_back(g.center(g.locate(c + (last_in + (2.0 + k) * h) * d)));
      const double tf = last_in + (0.5 + 0.1 * k) * (edge - last_in);
      far.push_back(g.center(g.locate(c + tf * d)));
    }
  }
  std::vector<Point> pts{g.center(g.locate(c))};
  pts.insert(pts.end(), near.begin(), near.end());
  pts.insert(pts.end(), far.begin(), far.end());
  return pts;
}

double band_budget(const DomainMask& Q) { return 4.0 * Q.grid.spacing() * Q.perimeter_estimate(); }

MonotonicityResult monotonicity_check(const WeightSpec& w, const WeightSpec& w_prime, int dim, double h,
                                      const SolveParams& params) {
  const AprioriBox box = apriori_radius(w_prime, dim, h, params.margin_cells);
  // Both a-priori balls must fit; A_w can reach outside the ball of w'.
  const AprioriBox box_w = apriori_radius(w, dim, h, params.margin_cells);
  Point lo = box.grid.lower(), hi = box.grid.upper();
  for (int a = 0; a < dim; ++a) {
    lo[a] = std::min(lo[a], box_w.grid.lower()[a]);
    hi[a] = std::max(hi[a], box_w.grid.upper()[a]);
  }
  Index shape{1, 1, 1};
  for (int a = 0; a < dim; ++a) shape[a] = static_cast<int>(std::llround((hi[a] - lo[a]) / h));
  const Grid grid(dim, lo, h, shape);
  const ScalarField rw = rasterize_weight(w, grid);
  const ScalarField rwp = rasterize_weight(w_prime, grid);
  for (std::size_t i = 0; i < rw.size(); ++i)
    if (rw[i] > rwp[i]) throw Error(ErrorKind::InvalidInput, "monotonicity check needs w <= w' pointwise");
  const ObstacleSolution s1 = solve_obstacle(rw, params);
  const ObstacleSolution s2 = solve_obstacle(rwp, params);
  if (!s1.converged || !s2.converged) throw Error(ErrorKind::NotConverged, "obstacle solve did not converge");
  MonotonicityResult r{0.0, 0.0, false, extract_domain(s1, rw), extract_domain(s2, rwp)};
  r.escape_measure = mask_difference(r.Q_w, r.Q_w_prime).measure();
  r.budget = band_budget(r.Q_w);
  r.pass = r.escape_measure <= r.budget;
  return r;
}

}  // namespace qd
