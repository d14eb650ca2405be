#pragma once

#include <vector>

#include "json.hpp"

#include "homoglab/homogenized_lagrangian.hpp"

namespace homoglab {

/// Discrete conjugate f*(p) = max over the xi-grid of <p, xi> - f(xi) on a
/// tensor p-grid.
struct ConjugateTable {
  int dim = 1;
  std::vector<Vec> p_axes;
  Vec values;
  nlohmann::json source = nlohmann::json::object();

  std::size_t size() const { return values.size(); }
  Vec point(std::size_t flat) const;
  /// Value at a grid point given by coordinates; throws if p is not on the grid.
  double at(VecView p) const;
  nlohmann::json to_json() const;
};

/// Requires |p_i| <= 2 max|xi_axis_i| for every p on the grid.
ConjugateTable legendre_transform(const HomogenizedLagrangian& f, const std::vector<Vec>& p_axes);

/// Values of (f*)* on the xi-grid of f.
Vec biconjugate_values(const HomogenizedLagrangian& f, const std::vector<Vec>& p_axes);

/// max over the xi-grid of |f - (f*)*|.
double biconjugate_check(const HomogenizedLagrangian& f, const std::vector<Vec>& p_axes);

/// min over all (xi, p) grid pairs of f(xi) + f*(p) - <p, xi>; nonnegative
/// for a correct discrete conjugate.
double fenchel_young_min(const HomogenizedLagrangian& f, const ConjugateTable& g);

/// Lower convex envelope on the xi-grid: exact hull in d = 1, double
/// discrete transform on a refined p-grid otherwise.
Vec lower_convex_envelope(const HomogenizedLagrangian& f);

/// Number of grid triples along coordinate lines violating convexity by more
/// than tol.
int midpoint_convexity_violations(const std::vector<Vec>& axes, const Vec& values, double tol);

}  // namespace homoglab
