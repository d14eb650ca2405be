#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "homoglab/homogenized_lagrangian.hpp"
#include "homoglab/minimize.hpp"
#include "homoglab/potential.hpp"

namespace homoglab {

/// Initial datum Phi with the bounds used for the y-window.
struct InitialDatum {
  std::string name;
  ScalarField fn;
  double lipschitz = 0.0;
  double sup = 0.0;  // over the region of interest
  double inf = 0.0;
};

InitialDatum plane_wave_datum(VecView p, double region_radius);
InitialDatum quadratic_datum(int dim, double region_radius);
/// min(1, |y|)
InitialDatum tent_datum(int dim);

/// Value function samples. Steady fields have an empty t_grid; otherwise
/// values[ix * nt + it].
struct ValueField {
  int dim = 1;
  std::vector<Vec> x_points;
  Vec t_grid;
  Vec values;
  nlohmann::json provenance = nlohmann::json::object();

  bool steady() const { return t_grid.empty(); }
  std::size_t nt() const { return steady() ? 1 : t_grid.size(); }
  double at(std::size_t ix, std::size_t it = 0) const { return values[ix * nt() + it]; }
  void validate() const;
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

struct FieldDistance {
  double sup = 0.0;
  double mean = 0.0;
};

/// Distances between two fields on the same grid.
FieldDistance compare_fields(const ValueField& a, const ValueField& b);

struct HJSettings {
  int min_nodes = 32;
  double nodes_per_period = 8.0;  // nodes per unit of fast length
  OptimizerSpec opt;
  QuadratureSpec quad;

  nlohmann::json to_json() const;
};

/// Radius of the y-window around x: minimizers satisfy
/// |x - y| <= min(sqrt(t^2 M + t range), (t L + sqrt(t^2 L^2 + 4 t^2 M)) / 2),
/// enlarged by 50%. M bounds the running cost gap above its infimum.
double y_window_radius(double t, double M, const InitialDatum& phi);

/// Uniform y-grid (1D) through x_points[0] covering every window [x - r, x + r].
std::vector<Vec> y_grid_1d(const std::vector<Vec>& x_points, const Vec& t_grid, double M, const InitialDatum& phi,
                           double step);

/// U(x, t) = min_y t f((x - y)/t) + Phi(y); y with (x - y)/t outside the hull
/// of f are skipped and reported as coverage.
ValueField solve_evolutionary_hom(const HomogenizedLagrangian& f, const InitialDatum& phi,
                                  const std::vector<Vec>& x_points, const Vec& t_grid,
                                  const std::vector<Vec>& y_points);

/// S_eps(y, x, t): minimum action from y at time 0 to x at time t.
OptimizeResult s_eps(const PeriodicPotential& V, const Perturbation* W, double eps, VecView y, VecView x, double t,
                     const HJSettings& settings, const std::vector<Trajectory>& warm_starts = {});

/// U_eps(x, t) = min_y S_eps(y, x, t) + Phi(y). The y loop visits candidates in
/// order of the lower bound |x - y|^2/t + t inf(V + W) + Phi(y) and stops once
/// that bound reaches the incumbent, so the result equals the full discrete min.
ValueField solve_evolutionary_eps(const PeriodicPotential& V, const Perturbation* W, double eps,
                                  const InitialDatum& phi, const std::vector<Vec>& x_points, const Vec& t_grid,
                                  const std::vector<Vec>& y_points, const HJSettings& settings);

struct Dista2Row {
  Vec y;
  Vec x;
  double t1 = 0.0;
  double t2 = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  double bound = 0.0;  // s1 + M (t2 - t1)
  bool holds = false;  // s2 <= bound (1 + rel_slack)
};

/// Checks S(y, x, t2) <= S(y, x, t1) + M (t2 - t1) on consecutive times of ts.
std::vector<Dista2Row> dista2_check(const PeriodicPotential& V, const Perturbation* W, double eps,
                                    const std::vector<Vec>& ys, const std::vector<Vec>& xs, const Vec& ts,
                                    const HJSettings& settings, double rel_slack);

/// Discounted steady problem per x; the comparison bounds
/// inf(V + W) <= lambda U <= sup(V + W) are asserted (InvariantViolation).
ValueField solve_steady_eps(const PeriodicPotential& V, const Perturbation* W, double eps, double lambda,
                            const std::vector<Vec>& x_points, const HJSettings& settings);

/// U = f0 / lambda, cross-checked against rest-after-one-segment competitors.
ValueField solve_steady_hom(const HomogenizedLagrangian& f, double lambda, const std::vector<Vec>& x_points);

}  // namespace homoglab
