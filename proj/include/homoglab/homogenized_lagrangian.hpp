#pragma once

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "homoglab/types.hpp"

namespace homoglab {

/// Tabulated convex function f on a tensor grid in R^d (one sorted axis per
/// coordinate). Values are stored row-major with the last axis fastest.
/// Evaluation is multilinear inside the grid hull; outside it throws
/// ExtrapolationError.
struct HomogenizedLagrangian {
  int dim = 1;
  std::vector<Vec> axes;
  Vec values;
  double f0 = 0.0;
  bool envelope_applied = false;
  int convexity_violations = 0;
  nlohmann::json metadata = nlohmann::json::object();

  std::size_t size() const { return values.size(); }
  std::vector<std::size_t> unravel(std::size_t flat) const;
  std::size_t ravel(const std::vector<std::size_t>& idx) const;
  Vec point(std::size_t flat) const;
  /// Flat index of the origin; throws if 0 is not a grid point.
  std::size_t zero_index() const;
  bool in_hull(VecView xi, double slack = 1e-12) const;
  double max_abs_axis(int i) const;
  double operator()(VecView xi) const;
  void validate() const;

  nlohmann::json to_json() const;
  static HomogenizedLagrangian from_json(const nlohmann::json& j);
  /// Tabulates fn on the tensor grid; f0 is taken from fn(0) when 0 is present.
  static HomogenizedLagrangian from_function(std::vector<Vec> axes, const std::function<double(VecView)>& fn,
                                             const std::string& label);
};

/// Symmetric uniform axis {-half_width, ..., half_width} with the given step.
Vec symmetric_axis(double half_width, double step);

}  // namespace homoglab
