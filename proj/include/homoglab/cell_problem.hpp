#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "homoglab/homogenized_lagrangian.hpp"
#include "homoglab/minimize.hpp"
#include "homoglab/potential.hpp"
#include "homoglab/trajectory.hpp"

namespace homoglab {

/// Minimizer of the cell problem on [0, T]: path(t) = xi t + profile(t) with
/// profile(0) = profile(T) = 0, and cell_value = action(path) / T.
struct CorrectorProfile {
  Vec xi;
  double T = 0.0;
  Trajectory profile;
  Trajectory path;
  double cell_value = 0.0;
  bool sandwich_ok = true;  // growth bounds of the Lagrangian, 1e-6 slack
  int iterations = 0;
  bool converged = false;
};

/// 1D periodic cell problem with T = 1/|xi|.
CorrectorProfile solve_corrector_1d(const PeriodicPotential& V, double xi, int intervals, const OptimizerSpec& opt,
                                    const QuadratureSpec& quad);

/// (1/T) min over v in H^1_0(0, T) of int L(v + t xi, v' + xi).
CorrectorProfile solve_corrector_general(const GeneralLagrangian& L, VecView xi, double T, int intervals,
                                         const OptimizerSpec& opt, const QuadratureSpec& quad,
                                         const std::vector<Trajectory>& warm_starts = {});

struct AsymptoticResult {
  double value = 0.0;
  Vec ladder_T;
  Vec ladder_values;
  double spread = 0.0;  // |difference| of the last two rungs
  bool blowup_warning = false;
  CorrectorProfile last;
};

/// Growing-window cell formula. Empty T_ladder selects {8, 16, 32, 64}/|xi|.
/// xi = 0 returns v_min.
AsymptoticResult f_hom_asymptotic(const PeriodicPotential& V, VecView xi, const Vec& T_ladder, int nodes_per_unit,
                                  const OptimizerSpec& opt, const QuadratureSpec& quad);

struct TabulationSettings {
  enum class Method { one_d, asymptotic };
  Method method = Method::one_d;
  int intervals = 200;       // one_d
  int nodes_per_unit = 8;    // asymptotic
  Vec T_ladder;              // asymptotic; empty = default ladder
  OptimizerSpec opt;
  QuadratureSpec quad;
  bool envelope = false;     // opt-in lower convex envelope
  double convexity_tol = 1e-6;

  nlohmann::json to_json() const;
};

/// Tabulates f_hom on a tensor grid that is symmetric and contains 0.
HomogenizedLagrangian tabulate_f_hom(const PeriodicPotential& V, const std::vector<Vec>& axes,
                                     const TabulationSettings& settings);

/// dist(x, Z^d).
double lattice_distance(VecView x);

/// Smallest tau in [window_start, window_start + window_length] found with
/// dist(tau xi, Z^d) < eta; scan points are refined to the local minimizer
/// of the distance. Throws NotFoundError when the window holds no hit.
double ergodic_shift_finder(VecView xi, double eta, double window_start, double window_length);

/// Largest gap between consecutive ergodic hits over [0, horizon].
double largest_hit_gap(VecView xi, double eta, double horizon);

struct AlmostCorrectorPlan {
  Vec xi;
  double delta = 0.0;
  double eta = 0.0;
  double L = 0.0;  // realized ergodic window length
  double T = 0.0;
  double horizon = 0.0;
  Vec shifts;                // T_0 = 0 < T_1 < ...
  Vec breakpoints;           // 0 = a_0 < ... < a_N = T
  std::vector<Vec> slopes;   // xi_j, profile slope on [a_j, a_{j+1}]
  Trajectory profile;        // piecewise-affine profile on the breakpoints
  double cell_value = 0.0;

  /// Empty when every structural invariant holds.
  std::vector<std::string> violations() const;
  nlohmann::json to_json() const;
};

AlmostCorrectorPlan build_almost_corrector(const PeriodicPotential& V, VecView xi, double delta, double horizon,
                                           const OptimizerSpec& opt, const QuadratureSpec& quad,
                                           int nodes_per_unit = 4);

/// (1/T) F_1 of t -> xi t + p(t - T_i) on each block [T_i, T_i + T].
Vec plan_block_actions(const AlmostCorrectorPlan& plan, const PeriodicPotential& V, const QuadratureSpec& quad);

struct RecoveryResult {
  Trajectory path;  // on [0, 1], path(0) = 0, path(1) = xi
  int blocks = 0;
  int shifted_pieces = 0;
  int connectors = 0;
  double fast_time = 0.0;  // total time on the fast scale after connectors
};

/// Competitor for G_eps with boundary values 0 and xi built from the plan:
/// blocks of the profile, tube shifts of each affine piece away from W,
/// connector curves at the junctions, rescaled to [0, 1].
RecoveryResult build_recovery_trajectory(const AlmostCorrectorPlan& plan, const Perturbation& W, double eps,
                                         double eta_tube, double alpha, const QuadratureSpec& quad,
                                         int nodes_per_unit = 4, int theta_samples = 16);

}  // namespace homoglab
