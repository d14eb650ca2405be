#include "homoglab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "homoglab/fenchel.hpp"
#include "homoglab/parallel.hpp"

namespace homoglab {

using nlohmann::json;

namespace {

template <class T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError("config key '" + key + "': " + e.what());
  }
}

ParamMap params_of(const json& j, const std::string& key) {
  ParamMap m;
  if (!j.at(key).is_object()) throw InputError("config key '" + key + "' must be an object of numbers");
  for (const auto& [k, v] : j.at(key).items()) {
    if (!v.is_number()) throw InputError("config key '" + key + "." + k + "' must be a number");
    m[k] = v.get<double>();
  }
  return m;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex64(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json quad_json(const QuadratureSpec& q) {
  return {{"samples_per_interval", q.samples_per_interval}, {"tolerance", q.tolerance}};
}

json provenance(const ExperimentConfig& cfg, const std::string& sub) {
  return {{"subcommand", sub},
          {"config_hash", hex64(fnv1a64(cfg.raw.dump()))},
          {"registry_version", kRegistryVersion},
          {"seed", cfg.seed},
          {"optimizer", cfg.opt.to_json()},
          {"quadrature", quad_json(cfg.quad)},
          {"nodes_per_unit", cfg.nodes_per_unit},
          {"threads", thread_count()}};
}

json maybe(double v, bool ok) { return ok ? json(v) : json(nullptr); }

std::string csv_num(double v, bool ok) { return ok ? fmt(v) : std::string(); }

int bvp_intervals(const ExperimentConfig& cfg, double eps) {
  return static_cast<int>(std::ceil(cfg.nodes_per_unit * std::max(1.0, norm(cfg.xi)) / eps));
}

double relative(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

// eps u(t/eps) for the cell path tiled over [0, 1/eps]
Trajectory tiled_corrector(const CorrectorProfile& cp, double eps) {
  const int d = cp.path.dim();
  const double T = cp.T;
  const int copies = static_cast<int>(std::ceil(1.0 / (eps * T) - 1e-9));
  Vec times, nodes;
  for (int c = 0; c < copies; ++c) {
    for (int k = c == 0 ? 0 : 1; k <= cp.path.intervals(); ++k) {
      times.push_back(eps * (c * T + cp.path.time(k)));
      auto x = cp.path.node(k);
      for (int i = 0; i < d; ++i) nodes.push_back(eps * (x[i] + c * T * cp.xi[i]));
    }
  }
  // stretch onto [0, 1]; the same factor on the nodes keeps the end at xi
  const double end = times.back();
  for (auto& t : times) t /= end;
  for (auto& x : nodes) x /= end;
  times.back() = 1.0;
  Trajectory u(times, d, nodes);
  u.set_node(0, Vec(d, 0.0));
  u.set_node(u.intervals(), cp.xi);
  return u;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw InputError("config must be a JSON object");
  ExperimentConfig c;
  c.raw = j;
  bool seed_given = false;
  for (const auto& [key, v] : j.items()) {
    if (key == "potential") {
      c.potential = get_as<std::string>(j, key);
    } else if (key == "potential_params") {
      c.potential_params = params_of(j, key);
    } else if (key == "perturbation") {
      c.perturbation = get_as<std::string>(j, key);
    } else if (key == "perturbation_params") {
      c.perturbation_params = params_of(j, key);
    } else if (key == "dim") {
      c.dim = get_as<int>(j, key);
    } else if (key == "xi") {
      c.xi = get_as<Vec>(j, key);
    } else if (key == "eps_ladder") {
      c.eps_ladder = get_as<Vec>(j, key);
    } else if (key == "lambda") {
      if (!v.is_null()) c.lambda = get_as<double>(j, key);
    } else if (key == "nodes_per_unit") {
      c.nodes_per_unit = get_as<double>(j, key);
    } else if (key == "cell_intervals") {
      c.cell_intervals = get_as<int>(j, key);
    } else if (key == "optimizer") {
      for (const auto& item : v.items()) {
        const std::string& k = item.key();
        if (k == "max_iters") {
          c.opt.max_iters = get_as<int>(v, k);
        } else if (k == "step_init") {
          c.opt.step_init = get_as<double>(v, k);
        } else if (k == "armijo_c") {
          c.opt.armijo_c = get_as<double>(v, k);
        } else if (k == "grad_tol") {
          c.opt.grad_tol = get_as<double>(v, k);
        } else if (k == "restarts") {
          c.opt.restarts = get_as<int>(v, k);
        } else {
          throw InputError("unknown optimizer key '" + k + "'");
        }
      }
    } else if (key == "quadrature") {
      for (const auto& item : v.items()) {
        const std::string& k = item.key();
        if (k == "samples_per_interval") {
          c.quad.samples_per_interval = get_as<int>(v, k);
        } else if (k == "tolerance") {
          c.quad.tolerance = get_as<double>(v, k);
        } else {
          throw InputError("unknown quadrature key '" + k + "'");
        }
      }
    } else if (key == "gap_threshold") {
      c.gap_threshold = get_as<double>(j, key);
    } else if (key == "alpha") {
      c.alpha = get_as<double>(j, key);
    } else if (key == "delta") {
      c.delta = get_as<double>(j, key);
    } else if (key == "eta_tube") {
      c.eta_tube = get_as<double>(j, key);
    } else if (key == "dp_check") {
      c.dp_check = get_as<bool>(j, key);
    } else if (key == "dp_dx") {
      c.dp_dx = get_as<double>(j, key);
    } else if (key == "dp_nt") {
      c.dp_nt = get_as<int>(j, key);
    } else if (key == "hj_mode") {
      c.hj_mode = get_as<std::string>(j, key);
    } else if (key == "phi") {
      c.phi = get_as<std::string>(j, key);
    } else if (key == "phi_p") {
      c.phi_p = get_as<Vec>(j, key);
    } else if (key == "x_points") {
      c.x_points = get_as<std::vector<Vec>>(j, key);
    } else if (key == "t_grid") {
      c.t_grid = get_as<Vec>(j, key);
    } else if (key == "y_step") {
      c.y_step = get_as<double>(j, key);
    } else if (key == "xi_step") {
      c.xi_step = get_as<double>(j, key);
    } else if (key == "xi_half_width") {
      c.xi_half_width = get_as<double>(j, key);
    } else if (key == "nodes_per_period") {
      c.nodes_per_period = get_as<double>(j, key);
    } else if (key == "directions") {
      c.directions = get_as<Vec>(j, key);
    } else if (key == "radii") {
      c.radii = get_as<Vec>(j, key);
    } else if (key == "tube_radius") {
      c.tube_radius = get_as<double>(j, key);
    } else if (key == "lp_exponent") {
      c.lp_exponent = get_as<double>(j, key);
    } else if (key == "xi_axes") {
      c.xi_axes = get_as<std::vector<Vec>>(j, key);
    } else if (key == "p_axes") {
      c.p_axes = get_as<std::vector<Vec>>(j, key);
    } else if (key == "tabulation") {
      c.tabulation = get_as<std::string>(j, key);
    } else if (key == "table") {
      c.table = v;
    } else if (key == "seed") {
      c.seed = get_as<std::uint64_t>(j, key);
      seed_given = true;
    } else if (key == "comment") {
      // free text
    } else {
      throw InputError("unknown config key '" + key + "'");
    }
  }
  if (!j.contains("xi")) c.xi.assign(c.dim, 1.0);
  if (seed_given) c.opt.seed = c.seed;
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  require(dim >= 1, "config: dim must be positive");
  require(static_cast<int>(xi.size()) == dim, "config: xi must have dim components");
  require(!eps_ladder.empty(), "config: eps_ladder must not be empty");
  for (std::size_t i = 0; i < eps_ladder.size(); ++i) {
    require(eps_ladder[i] > 0.0, "config: eps_ladder must be positive");
    require(i == 0 || eps_ladder[i] < eps_ladder[i - 1], "config: eps_ladder must be strictly decreasing");
  }
  require(!lambda || *lambda > 0.0, "config: lambda must be positive");
  require(nodes_per_unit > 0.0 && cell_intervals >= 1, "config: bad node counts");
  require(hj_mode == "steady" || hj_mode == "evolutionary", "config: hj_mode must be steady or evolutionary");
  require(phi == "tent" || phi == "plane_wave" || phi == "quadratic", "config: unknown phi '" + phi + "'");
  require(tabulation == "1d" || tabulation == "asymptotic", "config: tabulation must be 1d or asymptotic");
  require(y_step > 0.0 && xi_step > 0.0 && xi_half_width > 0.0, "config: grid steps must be positive");
  for (double t : t_grid) require(t > 0.0, "config: t_grid must be positive");
  for (double r : radii) require(r > tube_radius, "config: radii must exceed tube_radius");
  opt.validate();
  quad.validate();
  const auto& pn = potential_names();
  const auto& wn = perturbation_names();
  if (std::find(pn.begin(), pn.end(), potential) == pn.end()) {
    throw InputError("config: unknown potential '" + potential + "'");
  }
  if (std::find(wn.begin(), wn.end(), perturbation) == wn.end()) {
    throw InputError("config: unknown perturbation '" + perturbation + "'");
  }
}

bool decreasing_with_slack(const Vec& values, double slack) {
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] <= values[i - 1] * (1.0 + slack) + 1e-15)) return false;
  }
  return true;
}

std::string classify_decay(const Vec& values) {
  if (values.empty()) return "inconclusive";
  const double scale = std::max(1.0, std::abs(values.front()));
  if (std::all_of(values.begin(), values.end(), [&](double v) { return std::abs(v) <= 1e-12 * scale; })) {
    return "consistent";
  }
  bool strict = true;
  for (std::size_t i = 1; i < values.size(); ++i) strict = strict && values[i] < values[i - 1];
  if (strict && values.back() <= 0.5 * values.front()) return "consistent";
  if (values.back() >= 0.75 * values.front()) return "inconsistent";
  return "inconclusive";
}

// ---------------------------------------------------------------------------

ExperimentReport run_stability_sweep(const ExperimentConfig& cfg) {
  const PeriodicPotential V = make_potential(cfg.potential, cfg.dim, cfg.potential_params);
  const Perturbation W = make_perturbation(cfg.perturbation, cfg.dim, cfg.perturbation_params);
  if (W.sign != SignClass::nonnegative) throw InputError("stability: perturbation must be nonnegative");
  const int d = cfg.dim;

  // effective target
  double target = 0.0;
  json target_info;
  CorrectorProfile cp;
  if (d == 1) {
    cp = solve_corrector_1d(V, cfg.xi[0], cfg.cell_intervals, cfg.opt, cfg.quad);
    target = cp.cell_value;
    target_info = {{"method", "1d"}, {"intervals", cfg.cell_intervals}};
  } else {
    const AsymptoticResult a = f_hom_asymptotic(V, cfg.xi, {}, 8, cfg.opt, cfg.quad);
    target = a.value;
    target_info = {{"method", "asymptotic"}, {"ladder_T", a.ladder_T}, {"spread", a.spread}};
  }

  const std::size_t n = cfg.eps_ladder.size();
  struct Row {
    double eps = 0, g = 0, f = 0, dp_g = 0, dp_f = 0;
    bool ok = false, dp = false;
    std::string status = "ok";
  };
  std::vector<Row> rows(n);
  parallel_for(n, [&](std::size_t i) {
    Row& r = rows[i];
    r.eps = cfg.eps_ladder[i];
    try {
      BoundaryConditions bc;
      bc.a.assign(d, 0.0);
      bc.b = cfg.xi;
      const int intervals = bvp_intervals(cfg, r.eps);
      std::vector<Trajectory> warm;
      if (norm(cfg.xi) > 0.0) {
        if (d == 1) {
          warm.push_back(tiled_corrector(cp, r.eps));
        } else {
          const AlmostCorrectorPlan plan =
              build_almost_corrector(V, cfg.xi, cfg.delta, 1.0 / r.eps + 1.0, cfg.opt, cfg.quad);
          warm.push_back(
              build_recovery_trajectory(plan, W, r.eps, cfg.eta_tube, cfg.alpha, cfg.quad).path);
        }
      }
      const OptimizeResult g = minimize_bvp(V, &W, r.eps, bc, intervals, cfg.opt, cfg.quad, warm);
      // the G minimizer as a start makes min F <= F(u_G) <= G(u_G)
      std::vector<Trajectory> warm_f{g.path};
      warm_f.insert(warm_f.end(), warm.begin(), warm.end());
      const OptimizeResult f = minimize_bvp(V, nullptr, r.eps, bc, intervals, cfg.opt, cfg.quad, warm_f);
      r.g = g.value;
      r.f = f.value;
      r.ok = true;
      if (cfg.dp_check && d == 1) {
        DPGrid grid;
        grid.x_lo = std::min(0.0, cfg.xi[0]) - 0.5;
        grid.x_hi = std::max(0.0, cfg.xi[0]) + 0.5;
        grid.n_x = static_cast<int>(std::lround((grid.x_hi - grid.x_lo) / cfg.dp_dx)) + 1;
        grid.n_t = cfg.dp_nt;
        r.dp_g = dp_oracle_1d(V, &W, r.eps, bc, grid);
        r.dp_f = dp_oracle_1d(V, nullptr, r.eps, bc, grid);
        r.dp = true;
      }
    } catch (const Error& e) {
      r.ok = false;
      r.status = e.what();
    }
  });

  ExperimentReport out;
  json jrows = json::array();
  Vec gaps;
  bool order_ok = true;
  bool all_ok = true;
  out.rows_csv = "eps,min_G,min_F,f_hom_target,gap_G,gap_F,dp_G,dp_F,status\n";
  for (const Row& r : rows) {
    all_ok = all_ok && r.ok;
    if (r.ok) {
      gaps.push_back(r.g - target);
      order_ok = order_ok && r.g >= r.f;
    }
    jrows.push_back({{"eps", r.eps},
                     {"min_G", maybe(r.g, r.ok)},
                     {"min_F", maybe(r.f, r.ok)},
                     {"f_hom_target", target},
                     {"gap_G", maybe(r.g - target, r.ok)},
                     {"gap_F", maybe(r.f - target, r.ok)},
                     {"dp_G", maybe(r.dp_g, r.dp)},
                     {"dp_F", maybe(r.dp_f, r.dp)},
                     {"dp_rel_G", maybe(relative(r.g, r.dp_g), r.dp)},
                     {"status", r.status}});
    out.rows_csv += fmt(r.eps) + "," + csv_num(r.g, r.ok) + "," + csv_num(r.f, r.ok) + "," + fmt(target) + "," +
                    csv_num(r.g - target, r.ok) + "," + csv_num(r.f - target, r.ok) + "," +
                    csv_num(r.dp_g, r.dp) + "," + csv_num(r.dp_f, r.dp) + "," + (r.ok ? "ok" : "failed") + "\n";
  }
  const bool decreasing = all_ok && decreasing_with_slack(gaps, 0.1);
  const bool final_small = all_ok && !gaps.empty() && std::abs(gaps.back()) < cfg.gap_threshold * std::abs(target);
  out.invariant_violation = !order_ok;
  out.report = {{"experiment", "stability"},
                {"potential", V.name},
                {"perturbation", W.name},
                {"xi", cfg.xi},
                {"f_hom_target", target},
                {"target", target_info},
                {"rows", jrows},
                {"verdict",
                 {{"gap_decreasing", decreasing},
                  {"final_gap_below_threshold", final_small},
                  {"threshold", cfg.gap_threshold},
                  {"G_ge_F", order_ok},
                  {"all_rows_ok", all_ok}}},
                {"provenance", provenance(cfg, "stability")}};
  return out;
}

ExperimentReport run_negative_perturbation(const ExperimentConfig& cfg) {
  require(cfg.dim == 1, "negative: requires d = 1");
  const std::string vname = cfg.raw.contains("potential") ? cfg.potential : "zero";
  const PeriodicPotential V = make_potential(vname, 1, cfg.potential_params);
  const Perturbation W = make_perturbation(cfg.perturbation, 1, cfg.perturbation_params);
  if (W.sign != SignClass::nonpositive) throw InputError("negative: perturbation must be nonpositive");
  const double inf_w = W.origin_atom ? std::min(W.inf_value, *W.origin_atom) : W.inf_value;
  BoundaryConditions bc;
  bc.a = {0.0};
  bc.b = {0.0};
  DPGrid grid;
  grid.x_lo = -0.5;
  grid.x_hi = 0.5;
  grid.n_x = static_cast<int>(std::lround(1.0 / cfg.dp_dx)) + 1;
  grid.n_t = cfg.dp_nt;
  // the limit functional with V = 0 has the bonus only; with V it adds min V
  const double limit = dp_gamma_limit_1d(inf_w, bc, grid) + V.v_min;

  const std::size_t n = cfg.eps_ladder.size();
  Vec g(n, 0.0), dp(n, 0.0);
  std::vector<std::string> status(n, "ok");
  std::vector<char> ok(n, 0), have_dp(n, 0);
  parallel_for(n, [&](std::size_t i) {
    const double eps = cfg.eps_ladder[i];
    try {
      const int intervals = static_cast<int>(std::ceil(cfg.nodes_per_unit / eps));
      g[i] = minimize_bvp(V, &W, eps, bc, intervals, cfg.opt, cfg.quad).value;
      ok[i] = 1;
      if (cfg.dp_check && !W.origin_atom) {
        dp[i] = dp_oracle_1d(V, &W, eps, bc, grid);
        have_dp[i] = 1;
      }
    } catch (const Error& e) {
      status[i] = e.what();
    }
  });
  ExperimentReport out;
  out.rows_csv = "eps,min_G,dp_G,limit,status\n";
  json jrows = json::array();
  bool all_ok = true, eps_independent = true;
  for (std::size_t i = 0; i < n; ++i) {
    all_ok = all_ok && ok[i];
    if (ok[i] && std::abs(g[i] - g[0]) > 1e-12 * std::max(1.0, std::abs(g[0]))) eps_independent = false;
    jrows.push_back({{"eps", cfg.eps_ladder[i]},
                     {"min_G", maybe(g[i], ok[i])},
                     {"dp_G", maybe(dp[i], have_dp[i])},
                     {"limit", limit},
                     {"status", status[i]}});
    out.rows_csv += fmt(cfg.eps_ladder[i]) + "," + csv_num(g[i], ok[i]) + "," + csv_num(dp[i], have_dp[i]) + "," +
                    fmt(limit) + "," + (ok[i] ? "ok" : "failed") + "\n";
  }
  const bool final_close = all_ok && std::abs(g[n - 1] - limit) <= 0.05 * std::abs(limit);
  out.report = {{"experiment", "negative"},
                {"potential", V.name},
                {"perturbation", W.name},
                {"inf_W", inf_w},
                {"limit", limit},
                {"rows", jrows},
                {"verdict",
                 {{"final_within_5pct", final_close},
                  {"eps_independent", all_ok && eps_independent},
                  {"nodal", W.origin_atom.has_value()},
                  {"all_rows_ok", all_ok}}},
                {"provenance", provenance(cfg, "negative")}};
  return out;
}

namespace {

InitialDatum make_datum(const ExperimentConfig& cfg, double region) {
  if (cfg.phi == "tent") return tent_datum(cfg.dim);
  if (cfg.phi == "quadratic") return quadratic_datum(cfg.dim, region);
  require(static_cast<int>(cfg.phi_p.size()) == cfg.dim, "config: phi_p must have dim components");
  return plane_wave_datum(cfg.phi_p, region);
}

}  // namespace

ExperimentReport run_hj_convergence(const ExperimentConfig& cfg) {
  const PeriodicPotential V = make_potential(cfg.potential, cfg.dim, cfg.potential_params);
  const Perturbation W = make_perturbation(cfg.perturbation, cfg.dim, cfg.perturbation_params);
  require(cfg.dim == 1, "hj: requires d = 1");
  HJSettings hs;
  hs.nodes_per_period = cfg.nodes_per_period;
  hs.opt = cfg.opt;
  hs.quad = cfg.quad;
  const bool steady = cfg.hj_mode == "steady";
  std::vector<Vec> xs = cfg.x_points;
  if (xs.empty()) {
    for (int k = 0; k <= 10; ++k) xs.push_back({-0.475 + 0.1 * k});
  }
  TabulationSettings ts;
  ts.intervals = cfg.cell_intervals;
  ts.opt = cfg.opt;
  ts.quad = cfg.quad;

  ExperimentReport out;
  std::vector<ValueField> eps_fields;
  ValueField hom;
  if (steady) {
    require(cfg.lambda.has_value(), "hj: steady mode needs lambda");
    const HomogenizedLagrangian f = tabulate_f_hom(V, {symmetric_axis(2.0, 0.05)}, ts);
    hom = solve_steady_hom(f, *cfg.lambda, xs);
    for (double eps : cfg.eps_ladder) eps_fields.push_back(solve_steady_eps(V, &W, eps, *cfg.lambda, xs, hs));
  } else {
    double region = 0.0;
    for (const auto& x : xs) region = std::max(region, norm(x));
    const InitialDatum phi = make_datum(cfg, region + 4.0);
    const double M = V.v_max - V.v_min + std::min(W.sup_bound, 1e300) - W.inf_value;
    const HomogenizedLagrangian f = tabulate_f_hom(V, {symmetric_axis(cfg.xi_half_width, cfg.xi_step)}, ts);
    const double finest = std::min(cfg.y_step, cfg.eps_ladder.back() / 4.0);
    hom = solve_evolutionary_hom(f, phi, xs, cfg.t_grid, y_grid_1d(xs, cfg.t_grid, M, phi, finest));
    for (double eps : cfg.eps_ladder) {
      const auto ys = y_grid_1d(xs, cfg.t_grid, M, phi, std::min(cfg.y_step, eps / 4.0));
      eps_fields.push_back(solve_evolutionary_eps(V, &W, eps, phi, xs, cfg.t_grid, ys, hs));
    }
  }
  Vec sups, means;
  json jrows = json::array();
  out.rows_csv = "eps,sup_distance,mean_distance\n";
  for (std::size_t i = 0; i < eps_fields.size(); ++i) {
    const FieldDistance d = compare_fields(eps_fields[i], hom);
    sups.push_back(d.sup);
    means.push_back(d.mean);
    jrows.push_back({{"eps", cfg.eps_ladder[i]}, {"sup_distance", d.sup}, {"mean_distance", d.mean}});
    out.rows_csv += fmt(cfg.eps_ladder[i]) + "," + fmt(d.sup) + "," + fmt(d.mean) + "\n";
    char name[64];
    std::snprintf(name, sizeof name, "field_eps_%zu.csv", i);
    out.fields.emplace_back(name, eps_fields[i].to_csv());
  }
  out.fields.emplace_back("field_hom.csv", hom.to_csv());
  json fields = json::array();
  for (const auto& f : eps_fields) fields.push_back(f.provenance);
  out.report = {{"experiment", "hj"},
                {"mode", cfg.hj_mode},
                {"potential", V.name},
                {"perturbation", W.name},
                {"rows", jrows},
                {"hom", hom.provenance},
                {"eps_fields", fields},
                {"verdict", {{"distances_decreasing", decreasing_with_slack(sups, 0.1)}}},
                {"provenance", provenance(cfg, "hj")}};
  return out;
}

ExperimentReport run_condition_diagnostics(const ExperimentConfig& cfg) {
  const Perturbation W = make_perturbation(cfg.perturbation, cfg.dim, cfg.perturbation_params);
  const int d = cfg.dim;
  Vec radii = cfg.radii;
  std::sort(radii.begin(), radii.end());
  std::vector<Vec> dirs;
  Vec labels;
  if (d >= 2) {
    if (cfg.directions.empty()) {
      Vec e(d, 0.0);
      e[0] = 1.0;
      dirs.push_back(e);
      labels.push_back(0.0);
    }
    for (double a : cfg.directions) {
      require(d == 2, "conditions: angles require d = 2");
      dirs.push_back({std::cos(a), std::sin(a)});
      labels.push_back(a);
    }
  } else {
    dirs.push_back({1.0});
    labels.push_back(0.0);
  }
  std::vector<Vec> curves(dirs.size(), Vec(radii.size(), 0.0));
  std::vector<std::vector<char>> conv(dirs.size(), std::vector<char>(radii.size(), 0));
  parallel_for(dirs.size() * radii.size(), [&](std::size_t c) {
    const std::size_t a = c / radii.size();
    const std::size_t r = c % radii.size();
    const IntegralEstimate e = d >= 2 ? cylinder_average(W, dirs[a], cfg.tube_radius, radii[r], cfg.quad)
                                      : line_average(W, radii[r], cfg.quad);
    curves[a][r] = e.value;
    conv[a][r] = e.converged;
  });
  std::vector<Vec> centers{Vec(d, 0.0)};
  for (double R : radii) {
    for (const auto& u : dirs) {
      Vec c(d);
      for (int i = 0; i < d; ++i) c[i] = R * u[i];
      centers.push_back(c);
    }
  }
  const IntegralEstimate lp = lp_unif_estimate(W, cfg.lp_exponent, centers, cfg.quad);

  ExperimentReport out;
  out.rows_csv = "direction,R,average,converged\n";
  json jcurves = json::array();
  int n_consistent = 0, n_inconsistent = 0;
  for (std::size_t a = 0; a < dirs.size(); ++a) {
    const std::string cls = classify_decay(curves[a]);
    n_consistent += cls == "consistent";
    n_inconsistent += cls == "inconsistent";
    jcurves.push_back({{"direction", dirs[a]}, {"angle", labels[a]}, {"radii", radii}, {"averages", curves[a]},
                       {"classification", cls}});
    for (std::size_t r = 0; r < radii.size(); ++r) {
      out.rows_csv += fmt(labels[a]) + "," + fmt(radii[r]) + "," + fmt(curves[a][r]) + "," +
                      (conv[a][r] ? "1" : "0") + "\n";
    }
  }
  // the cylinder condition asks for decay on a dense set of directions
  std::string overall = "inconclusive";
  if (n_consistent > 0) overall = "consistent";
  if (n_inconsistent == static_cast<int>(dirs.size())) overall = "inconsistent";
  out.report = {{"experiment", "conditions"},
                {"perturbation", W.name},
                {"tube_radius", cfg.tube_radius},
                {"curves", jcurves},
                {"lp_unif_lower_estimate", {{"p", cfg.lp_exponent}, {"value", lp.value}, {"centers", centers.size()}}},
                {"classification", overall},
                {"provenance", provenance(cfg, "conditions")}};
  return out;
}

namespace {

HomogenizedLagrangian tabulate_from_cfg(const ExperimentConfig& cfg) {
  const PeriodicPotential V = make_potential(cfg.potential, cfg.dim, cfg.potential_params);
  std::vector<Vec> axes = cfg.xi_axes;
  if (axes.empty()) axes.assign(cfg.dim, symmetric_axis(2.0, 0.25));
  TabulationSettings ts;
  ts.method = cfg.tabulation == "1d" ? TabulationSettings::Method::one_d : TabulationSettings::Method::asymptotic;
  ts.intervals = cfg.cell_intervals;
  ts.opt = cfg.opt;
  ts.quad = cfg.quad;
  return tabulate_f_hom(V, axes, ts);
}

std::string grid_csv(const std::vector<Vec>& axes, const Vec& values, const std::string& prefix) {
  std::string out;
  for (std::size_t i = 0; i < axes.size(); ++i) out += prefix + "_" + std::to_string(i + 1) + ",";
  out += "value\n";
  std::size_t n = values.size();
  for (std::size_t flat = 0; flat < n; ++flat) {
    std::size_t rem = flat;
    Vec p(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      p[a] = axes[a][rem % axes[a].size()];
      rem /= axes[a].size();
    }
    for (double c : p) out += fmt(c) + ",";
    out += fmt(values[flat]) + "\n";
  }
  return out;
}

}  // namespace

ExperimentReport run_fhom(const ExperimentConfig& cfg) {
  const HomogenizedLagrangian f = tabulate_from_cfg(cfg);
  ExperimentReport out;
  out.rows_csv = grid_csv(f.axes, f.values, "xi");
  out.report = {{"experiment", "fhom"},
                {"table", f.to_json()},
                {"verdict", {{"convexity_violations", f.convexity_violations}, {"envelope_applied", f.envelope_applied}}},
                {"provenance", provenance(cfg, "fhom")}};
  return out;
}

ExperimentReport run_fenchel(const ExperimentConfig& cfg) {
  const HomogenizedLagrangian f =
      cfg.table.is_null() ? tabulate_from_cfg(cfg) : HomogenizedLagrangian::from_json(cfg.table);
  std::vector<Vec> p_axes = cfg.p_axes;
  if (p_axes.empty()) {
    for (int a = 0; a < f.dim; ++a) {
      const Vec& ax = f.axes[a];
      const double step = ax.size() > 1 ? (ax.back() - ax.front()) / static_cast<double>(ax.size() - 1) : 1.0;
      p_axes.push_back(symmetric_axis(2.0 * f.max_abs_axis(a), step));
    }
  }
  const ConjugateTable g = legendre_transform(f, p_axes);
  const double gap = biconjugate_check(f, p_axes);
  const double fy = fenchel_young_min(f, g);
  ExperimentReport out;
  out.rows_csv = grid_csv(p_axes, g.values, "p");
  out.report = {{"experiment", "fenchel"},
                {"conjugate", g.to_json()},
                {"biconjugate_gap", gap},
                {"fenchel_young_min", fy},
                {"verdict", {{"biconjugate_gap_below_1e-4", gap < 1e-4}, {"fenchel_young_nonnegative", fy >= -1e-12}}},
                {"provenance", provenance(cfg, "fenchel")}};
  out.invariant_violation = fy < -1e-12;
  return out;
}

ExperimentReport run_experiment(const std::string& sub, const ExperimentConfig& cfg) {
  if (sub == "stability") return run_stability_sweep(cfg);
  if (sub == "negative") return run_negative_perturbation(cfg);
  if (sub == "hj") return run_hj_convergence(cfg);
  if (sub == "conditions") return run_condition_diagnostics(cfg);
  if (sub == "fhom") return run_fhom(cfg);
  if (sub == "fenchel") return run_fenchel(cfg);
  throw InputError("unknown subcommand '" + sub + "'");
}

void write_report(const ExperimentReport& r, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + dir + "': " + ec.message());
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream os(fs::path(dir) / name, std::ios::binary);
    if (!os) throw InputError("cannot write '" + name + "' in '" + dir + "'");
    os << text;
  };
  write("report.json", r.report.dump(2) + "\n");
  write("rows.csv", r.rows_csv);
  for (const auto& [name, csv] : r.fields) write(name, csv);
}

}  // namespace homoglab
