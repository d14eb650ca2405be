#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "homoglab/potential.hpp"
#include "homoglab/trajectory.hpp"

namespace homoglab {

struct OptimizerSpec {
  int max_iters = 400;
  double step_init = 1.0;
  double armijo_c = 1e-4;
  double grad_tol = 1e-10;
  int restarts = 2;
  std::uint64_t seed = 1;

  void validate() const;
  nlohmann::json to_json() const;
};

struct BoundaryConditions {
  double t0 = 0.0;
  double t1 = 1.0;
  Vec a;
  Vec b;
};

struct TraceRow {
  int iter = 0;
  double value = 0.0;
  double grad_norm = 0.0;
};

struct OptimizeResult {
  Trajectory path;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  std::size_t start_index = 0;  // 0 = affine/constant start, then warm starts, then random
  std::size_t starts = 0;
  std::vector<TraceRow> trace;  // of the winning start
};

struct HalflineResult : OptimizeResult {
  double tail_bound = 0.0;  // (v_max + sup W) e^{-lambda T} / lambda
};

/// Minimizes the action of L(u/eps, u') = |u'|^2 + V(u/eps) + W(u/eps) over
/// piecewise-linear paths with fixed endpoints. The value is the action of
/// the returned path, hence an upper bound of the continuous minimum.
OptimizeResult minimize_bvp(const PeriodicPotential& V, const Perturbation* W, double eps,
                            const BoundaryConditions& bc, int intervals, const OptimizerSpec& opt,
                            const QuadratureSpec& quad, const std::vector<Trajectory>& warm_starts = {});

/// Same scheme for a general Lagrangian L(u/eps, u').
OptimizeResult minimize_lagrangian_bvp(const GeneralLagrangian& L, double eps, const BoundaryConditions& bc,
                                       int intervals, const OptimizerSpec& opt, const QuadratureSpec& quad,
                                       const std::vector<Trajectory>& warm_starts = {});

/// Discounted half-line problem truncated at T_max with a free right end and
/// the constant-extension tail in closed form.
HalflineResult minimize_halfline(const PeriodicPotential& V, const Perturbation* W, double eps, double lambda,
                                 VecView x0, double T_max, int intervals, const OptimizerSpec& opt,
                                 const QuadratureSpec& quad, const std::vector<Trajectory>& warm_starts = {});

std::string trace_to_csv(const std::vector<TraceRow>& trace);

// Dynamic-programming oracles on a state-time lattice (d = 1).
struct DPGrid {
  double x_lo = -1.0;
  double x_hi = 1.0;
  int n_x = 2001;
  int n_t = 100;

  void validate() const;
  double dx() const { return (x_hi - x_lo) / (n_x - 1); }
};

using KineticCost = std::function<double(double)>;

/// Backward DP over moves x_j -> x_{j+s} per time step; the potential cost of
/// a move is the exact segment average of U from a prefix integral. The
/// default move set is every lattice displacement with slope at most
/// 4|b - a|/(t1 - t0) + 2; given slopes are snapped to lattice moves.
double dp_oracle_1d(const PeriodicPotential& V, const Perturbation* W, double eps, const BoundaryConditions& bc,
                    const DPGrid& grid, const Vec& slope_set = {}, const KineticCost& kinetic = {});

/// Discounted DP with weights int e^{-lambda t} per step, free terminal state
/// and constant tail. slope_bound <= 0 selects 2 + 2 sqrt(osc(V + W)).
double dp_discounted_1d(const PeriodicPotential& V, const Perturbation* W, double eps, double lambda, double x0,
                        double T, const DPGrid& grid, double slope_bound = 0.0);

/// min int |u'|^2 + bonus |{u = 0}| with fixed endpoints.
double dp_gamma_limit_1d(double bonus, const BoundaryConditions& bc, const DPGrid& grid);

}  // namespace homoglab
