#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "homoglab/cell_problem.hpp"
#include "homoglab/hj.hpp"
#include "homoglab/minimize.hpp"
#include "homoglab/potential.hpp"

namespace homoglab {

/// A single JSON document. Unknown keys are rejected.
struct ExperimentConfig {
  std::string potential = "sin2";
  ParamMap potential_params;
  std::string perturbation = "zero";
  ParamMap perturbation_params;
  int dim = 1;
  Vec xi{1.0};
  Vec eps_ladder{0.2, 0.1, 0.05, 0.025};
  std::optional<double> lambda;

  // shared numerics
  double nodes_per_unit = 20.0;  // bvp intervals = ceil(nodes_per_unit max(1, |xi|) / eps)
  int cell_intervals = 200;
  OptimizerSpec opt;
  QuadratureSpec quad;
  double gap_threshold = 0.05;  // final relative gap verdict
  double alpha = 0.75;          // recovery connectors (d >= 2)
  double delta = 0.2;
  double eta_tube = 0.25;
  bool dp_check = true;  // d = 1 oracle columns
  double dp_dx = 0.001;
  int dp_nt = 100;

  // hj
  std::string hj_mode = "steady";  // steady | evolutionary
  std::string phi = "tent";        // tent | plane_wave | quadratic
  Vec phi_p;
  std::vector<Vec> x_points;
  Vec t_grid{0.5, 1.0};
  double y_step = 0.05;  // per rung min(y_step, eps/4)
  double xi_step = 0.0125;
  double xi_half_width = 3.0;
  double nodes_per_period = 8.0;

  // conditions
  Vec directions;  // angles (d = 2) or empty for the axis
  Vec radii{64.0, 256.0, 1024.0};
  double tube_radius = 1.0;
  double lp_exponent = 2.0;

  // fhom / fenchel
  std::vector<Vec> xi_axes;
  std::vector<Vec> p_axes;
  std::string tabulation = "1d";  // 1d | asymptotic
  nlohmann::json table;            // optional inline f table for fenchel

  std::uint64_t seed = 1;
  nlohmann::json raw = nlohmann::json::object();

  static ExperimentConfig from_json(const nlohmann::json& j);
  void validate() const;
};

/// FNV-1a 64-bit of a byte string.
std::uint64_t fnv1a64(const std::string& bytes);

struct ExperimentReport {
  nlohmann::json report = nlohmann::json::object();
  std::string rows_csv;
  std::vector<std::pair<std::string, std::string>> fields;  // file name, csv
  bool invariant_violation = false;
};

/// Verdict helper: every consecutive pair satisfies next <= prev * (1 + slack).
bool decreasing_with_slack(const Vec& values, double slack);

/// Classification of a decay curve: "consistent", "inconsistent" or "inconclusive".
std::string classify_decay(const Vec& values);

ExperimentReport run_stability_sweep(const ExperimentConfig& cfg);
ExperimentReport run_negative_perturbation(const ExperimentConfig& cfg);
ExperimentReport run_hj_convergence(const ExperimentConfig& cfg);
ExperimentReport run_condition_diagnostics(const ExperimentConfig& cfg);
ExperimentReport run_fhom(const ExperimentConfig& cfg);
ExperimentReport run_fenchel(const ExperimentConfig& cfg);

/// Dispatch by subcommand name.
ExperimentReport run_experiment(const std::string& subcommand, const ExperimentConfig& cfg);

/// Writes report.json, rows.csv and field files into dir.
void write_report(const ExperimentReport& r, const std::string& dir);

}  // namespace homoglab
