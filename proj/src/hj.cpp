#include "homoglab/hj.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>

#include "homoglab/parallel.hpp"

namespace homoglab {

InitialDatum plane_wave_datum(VecView p, double region_radius) {
  Vec pv(p.begin(), p.end());
  const double n = norm(pv);
  InitialDatum d;
  d.name = "plane_wave";
  d.fn = [pv](VecView y) { return dot(pv, y); };
  d.lipschitz = n;
  d.sup = n * region_radius;
  d.inf = -n * region_radius;
  return d;
}

InitialDatum quadratic_datum(int dim, double region_radius) {
  require(dim >= 1, "quadratic_datum: dim must be positive");
  InitialDatum d;
  d.name = "quadratic";
  d.fn = [](VecView y) { return norm_sq(y); };
  d.lipschitz = 2.0 * region_radius;
  d.sup = region_radius * region_radius;
  d.inf = 0.0;
  return d;
}

InitialDatum tent_datum(int dim) {
  require(dim >= 1, "tent_datum: dim must be positive");
  InitialDatum d;
  d.name = "tent";
  d.fn = [](VecView y) { return std::min(1.0, norm(y)); };
  d.lipschitz = 1.0;
  d.sup = 1.0;
  d.inf = 0.0;
  return d;
}

void ValueField::validate() const {
  require(dim >= 1, "ValueField: dim must be positive");
  require(values.size() == x_points.size() * nt(), "ValueField: value count mismatch");
  for (const auto& x : x_points) require_dim(x.size(), dim, "ValueField point");
  for (double v : values) {
    if (!std::isfinite(v)) throw InvariantViolation("ValueField: non-finite value");
  }
}

std::string ValueField::to_csv() const {
  std::string out;
  for (int i = 0; i < dim; ++i) out += "x_" + std::to_string(i + 1) + ",";
  out += "t,value\n";
  char buf[64];
  for (std::size_t ix = 0; ix < x_points.size(); ++ix) {
    for (std::size_t it = 0; it < nt(); ++it) {
      for (double c : x_points[ix]) {
        std::snprintf(buf, sizeof buf, "%.17g,", c);
        out += buf;
      }
      if (steady()) {
        out += "steady,";
      } else {
        std::snprintf(buf, sizeof buf, "%.17g,", t_grid[it]);
        out += buf;
      }
      std::snprintf(buf, sizeof buf, "%.17g\n", at(ix, it));
      out += buf;
    }
  }
  return out;
}

nlohmann::json ValueField::to_json() const {
  nlohmann::json j{{"dim", dim}, {"x_points", x_points}, {"values", values}, {"provenance", provenance}};
  if (steady()) {
    j["t_grid"] = "steady";
  } else {
    j["t_grid"] = t_grid;
  }
  return j;
}

FieldDistance compare_fields(const ValueField& a, const ValueField& b) {
  require(a.values.size() == b.values.size() && a.x_points == b.x_points && a.t_grid == b.t_grid,
          "compare_fields: fields live on different grids");
  FieldDistance d;
  if (a.values.empty()) return d;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double e = std::abs(a.values[i] - b.values[i]);
    d.sup = std::max(d.sup, e);
    d.mean += e;
  }
  d.mean /= static_cast<double>(a.values.size());
  return d;
}

nlohmann::json HJSettings::to_json() const {
  return {{"min_nodes", min_nodes},
          {"nodes_per_period", nodes_per_period},
          {"optimizer", opt.to_json()},
          {"quadrature", {{"samples_per_interval", quad.samples_per_interval}, {"tolerance", quad.tolerance}}}};
}

double y_window_radius(double t, double M, const InitialDatum& phi) {
  require(t > 0.0 && M >= 0.0, "y_window_radius: need t > 0 and M >= 0");
  const double range = phi.sup - phi.inf;
  const double L = phi.lipschitz;
  const double by_range = std::sqrt(t * t * M + t * range);
  const double by_lip = 0.5 * (t * L + std::sqrt(t * t * L * L + 4.0 * t * t * M));
  return 1.5 * std::min(by_range, by_lip);
}

std::vector<Vec> y_grid_1d(const std::vector<Vec>& x_points, const Vec& t_grid, double M, const InitialDatum& phi,
                           double step) {
  require(step > 0.0 && !x_points.empty() && !t_grid.empty(), "y_grid_1d: empty grid or bad step");
  double lo = kInf, hi = -kInf;
  const double r = y_window_radius(*std::max_element(t_grid.begin(), t_grid.end()), M, phi);
  for (const auto& x : x_points) {
    require_dim(x.size(), 1, "y_grid_1d point");
    lo = std::min(lo, x[0] - r);
    hi = std::max(hi, x[0] + r);
  }
  // aligned so that x_points[0] is a y point
  const double origin = x_points[0][0];
  const long k0 = static_cast<long>(std::floor((lo - origin) / step));
  const long k1 = static_cast<long>(std::ceil((hi - origin) / step));
  std::vector<Vec> ys;
  for (long k = k0; k <= k1; ++k) ys.push_back({origin + k * step});
  return ys;
}

namespace {

std::string point_string(VecView x, double t) {
  std::string s = "(x=";
  for (std::size_t i = 0; i < x.size(); ++i) s += (i ? "," : "") + std::to_string(x[i]);
  return s + ", t=" + std::to_string(t) + ")";
}

void check_grids(int dim, const std::vector<Vec>& x_points, const Vec& t_grid, const std::vector<Vec>& y_points) {
  require(!x_points.empty(), "HJ solver: empty x grid");
  require(!t_grid.empty(), "HJ solver: empty t grid");
  require(!y_points.empty(), "HJ solver: empty y grid");
  for (double t : t_grid) require(t > 0.0, "HJ solver: t grid must be positive");
  for (const auto& x : x_points) require_dim(x.size(), dim, "HJ solver x point");
  for (const auto& y : y_points) require_dim(y.size(), dim, "HJ solver y point");
}

double w_sup(const Perturbation* W) { return W ? std::min(W->sup_bound, 1e300) : 0.0; }
double w_inf(const Perturbation* W) { return W ? W->inf_value : 0.0; }

}  // namespace

ValueField solve_evolutionary_hom(const HomogenizedLagrangian& f, const InitialDatum& phi,
                                  const std::vector<Vec>& x_points, const Vec& t_grid,
                                  const std::vector<Vec>& y_points) {
  f.validate();
  check_grids(f.dim, x_points, t_grid, y_points);
  ValueField out;
  out.dim = f.dim;
  out.x_points = x_points;
  out.t_grid = t_grid;
  out.values.assign(x_points.size() * t_grid.size(), 0.0);
  Vec phi_y(y_points.size());
  for (std::size_t j = 0; j < y_points.size(); ++j) phi_y[j] = phi.fn(y_points[j]);
  std::vector<std::size_t> kept(out.values.size(), 0);
  parallel_for(out.values.size(), [&](std::size_t cell) {
    const std::size_t ix = cell / t_grid.size();
    const double t = t_grid[cell % t_grid.size()];
    const Vec& x = x_points[ix];
    Vec xi(f.dim);
    double best = kInf;
    for (std::size_t j = 0; j < y_points.size(); ++j) {
      for (int i = 0; i < f.dim; ++i) xi[i] = (x[i] - y_points[j][i]) / t;
      if (!f.in_hull(xi, 1e-9)) continue;
      ++kept[cell];
      best = std::min(best, t * f(xi) + phi_y[j]);
    }
    out.values[cell] = best;
  });
  for (std::size_t cell = 0; cell < kept.size(); ++cell) {
    if (kept[cell] == 0) {
      throw SolverError("solve_evolutionary_hom: no admissible y at " +
                        point_string(x_points[cell / t_grid.size()], t_grid[cell % t_grid.size()]));
    }
  }
  const double coverage = static_cast<double>(std::accumulate(kept.begin(), kept.end(), std::size_t{0})) /
                          static_cast<double>(kept.size() * y_points.size());
  out.provenance = {{"eps", "hom"},
                    {"phi", phi.name},
                    {"f", f.metadata},
                    {"y_points", y_points.size()},
                    {"y_coverage", coverage}};
  out.validate();
  return out;
}

OptimizeResult s_eps(const PeriodicPotential& V, const Perturbation* W, double eps, VecView y, VecView x, double t,
                     const HJSettings& settings, const std::vector<Trajectory>& warm_starts) {
  require(t > 0.0, "s_eps: t must be positive");
  require(eps > 0.0, "s_eps: eps must be positive");
  require_dim(y.size(), V.dim, "s_eps(y)");
  require_dim(x.size(), V.dim, "s_eps(x)");
  BoundaryConditions bc;
  bc.t0 = 0.0;
  bc.t1 = t;
  bc.a.assign(y.begin(), y.end());
  bc.b.assign(x.begin(), x.end());
  Vec diff(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) diff[i] = x[i] - y[i];
  const int n = std::max(settings.min_nodes,
                         static_cast<int>(std::ceil(settings.nodes_per_period * (norm(diff) + t) / eps)));
  return minimize_bvp(V, W, eps, bc, n, settings.opt, settings.quad, warm_starts);
}

namespace {

// Moves the start of a path from its current left end to y_new, keeping the right end.
Trajectory shifted_start(const Trajectory& u, VecView y_new) {
  Trajectory s = u;
  const int d = u.dim();
  const double t0 = u.t0(), t1 = u.t1();
  Vec delta(d);
  for (int i = 0; i < d; ++i) delta[i] = y_new[i] - u.node(0)[i];
  for (int k = 0; k <= s.intervals(); ++k) {
    const double w = (t1 - s.time(k)) / (t1 - t0);
    auto p = s.node(k);
    for (int i = 0; i < d; ++i) p[i] += w * delta[i];
  }
  return s;
}

}  // namespace

ValueField solve_evolutionary_eps(const PeriodicPotential& V, const Perturbation* W, double eps,
                                  const InitialDatum& phi, const std::vector<Vec>& x_points, const Vec& t_grid,
                                  const std::vector<Vec>& y_points, const HJSettings& settings) {
  check_grids(V.dim, x_points, t_grid, y_points);
  require(eps > 0.0, "solve_evolutionary_eps: eps must be positive");
  ValueField out;
  out.dim = V.dim;
  out.x_points = x_points;
  out.t_grid = t_grid;
  out.values.assign(x_points.size() * t_grid.size(), 0.0);
  const double run_inf = V.v_min + w_inf(W);
  Vec phi_y(y_points.size());
  for (std::size_t j = 0; j < y_points.size(); ++j) phi_y[j] = phi.fn(y_points[j]);
  std::vector<std::size_t> solves(out.values.size(), 0);

  parallel_for(out.values.size(), [&](std::size_t cell) {
    const std::size_t ix = cell / t_grid.size();
    const double t = t_grid[cell % t_grid.size()];
    const Vec& x = x_points[ix];
    std::vector<std::pair<double, std::size_t>> order(y_points.size());
    for (std::size_t j = 0; j < y_points.size(); ++j) {
      double d2 = 0.0;
      for (int i = 0; i < V.dim; ++i) d2 += (x[i] - y_points[j][i]) * (x[i] - y_points[j][i]);
      order[j] = {d2 / t + t * run_inf + phi_y[j], j};
    }
    std::sort(order.begin(), order.end());
    double best = kInf;
    std::optional<Trajectory> last;
    for (const auto& [lb, j] : order) {
      if (lb >= best) break;
      std::vector<Trajectory> warm;
      if (last) warm.push_back(shifted_start(*last, y_points[j]));
      const OptimizeResult r = s_eps(V, W, eps, y_points[j], x, t, settings, warm);
      ++solves[cell];
      best = std::min(best, r.value + phi_y[j]);
      last = r.path;
    }
    out.values[cell] = best;
  });
  out.provenance = {{"eps", eps},
                    {"lambda", nullptr},
                    {"phi", phi.name},
                    {"potential", V.name},
                    {"perturbation", W ? nlohmann::json(W->name) : nlohmann::json(nullptr)},
                    {"settings", settings.to_json()},
                    {"y_points", y_points.size()},
                    {"bvp_solves", std::accumulate(solves.begin(), solves.end(), std::size_t{0})}};
  out.validate();
  return out;
}

std::vector<Dista2Row> dista2_check(const PeriodicPotential& V, const Perturbation* W, double eps,
                                    const std::vector<Vec>& ys, const std::vector<Vec>& xs, const Vec& ts,
                                    const HJSettings& settings, double rel_slack) {
  require(ts.size() >= 2, "dista2_check: need at least two times");
  for (std::size_t k = 1; k < ts.size(); ++k) require(ts[k] > ts[k - 1] && ts[0] > 0.0, "dista2_check: times must increase");
  const double M = V.v_max + w_sup(W);
  const std::size_t pairs = ys.size() * xs.size();
  std::vector<std::vector<Dista2Row>> per(pairs);
  parallel_for(pairs, [&](std::size_t p) {
    const Vec& y = ys[p / xs.size()];
    const Vec& x = xs[p % xs.size()];
    OptimizeResult prev = s_eps(V, W, eps, y, x, ts[0], settings);
    for (std::size_t k = 1; k < ts.size(); ++k) {
      // previous minimizer followed by resting at x
      Vec times = prev.path.times();
      times.push_back(ts[k]);
      Trajectory rest = Trajectory::on_times(times, V.dim);
      for (int m = 0; m <= prev.path.intervals(); ++m) rest.set_node(m, prev.path.node(m));
      rest.set_node(rest.intervals(), x);
      OptimizeResult cur = s_eps(V, W, eps, y, x, ts[k], settings, {rest});
      Dista2Row row;
      row.y = y;
      row.x = x;
      row.t1 = ts[k - 1];
      row.t2 = ts[k];
      row.s1 = prev.value;
      row.s2 = cur.value;
      row.bound = prev.value + M * (ts[k] - ts[k - 1]);
      row.holds = row.s2 <= row.bound + rel_slack * std::abs(row.bound);
      per[p].push_back(row);
      prev = std::move(cur);
    }
  });
  std::vector<Dista2Row> rows;
  for (auto& v : per) rows.insert(rows.end(), v.begin(), v.end());
  return rows;
}

ValueField solve_steady_eps(const PeriodicPotential& V, const Perturbation* W, double eps, double lambda,
                            const std::vector<Vec>& x_points, const HJSettings& settings) {
  require(lambda > 0.0, "solve_steady_eps: lambda must be positive");
  require(eps > 0.0, "solve_steady_eps: eps must be positive");
  require(!x_points.empty(), "solve_steady_eps: empty x grid");
  for (const auto& x : x_points) require_dim(x.size(), V.dim, "solve_steady_eps x point");
  ValueField out;
  out.dim = V.dim;
  out.x_points = x_points;
  out.values.assign(x_points.size(), 0.0);
  const double T = 5.0 / lambda;
  const int n = std::max(settings.min_nodes, static_cast<int>(std::ceil(settings.nodes_per_period * T / eps)));
  Vec tails(x_points.size());
  parallel_for(x_points.size(), [&](std::size_t ix) {
    const HalflineResult r = minimize_halfline(V, W, eps, lambda, x_points[ix], T, n, settings.opt, settings.quad);
    out.values[ix] = r.value;
    tails[ix] = r.tail_bound;
  });
  const double lo = V.v_min + w_inf(W);
  const double hi = V.v_max + w_sup(W);
  const double tol = 1e-9 * std::max(1.0, std::abs(hi));
  for (std::size_t ix = 0; ix < x_points.size(); ++ix) {
    const double lu = lambda * out.values[ix];
    if (lu < lo - tol || lu > hi + tol) {
      throw InvariantViolation("solve_steady_eps: comparison bound violated at " + point_string(x_points[ix], 0.0) +
                               ": lambda U = " + std::to_string(lu));
    }
  }
  out.provenance = {{"eps", eps},
                    {"lambda", lambda},
                    {"potential", V.name},
                    {"perturbation", W ? nlohmann::json(W->name) : nlohmann::json(nullptr)},
                    {"T_max", T},
                    {"intervals", n},
                    {"settings", settings.to_json()},
                    {"max_tail_bound", *std::max_element(tails.begin(), tails.end())}};
  out.validate();
  return out;
}

ValueField solve_steady_hom(const HomogenizedLagrangian& f, double lambda, const std::vector<Vec>& x_points) {
  require(lambda > 0.0, "solve_steady_hom: lambda must be positive");
  f.validate();
  require(!x_points.empty(), "solve_steady_hom: empty x grid");
  for (const auto& x : x_points) require_dim(x.size(), f.dim, "solve_steady_hom x point");
  const double constant = f.f0 / lambda;
  // competitors: slope xi on [0, tau], then rest; value
  // f(xi)(1 - e^{-lambda tau})/lambda + f0 e^{-lambda tau}/lambda
  double best_competitor = kInf;
  for (double tau : {0.1, 0.5, 1.0, 2.0}) {
    const double w = std::exp(-lambda * tau);
    for (std::size_t i = 0; i < f.size(); ++i) {
      best_competitor = std::min(best_competitor, f.values[i] * (1.0 - w) / lambda + f.f0 * w / lambda);
    }
  }
  ValueField out;
  out.dim = f.dim;
  out.x_points = x_points;
  out.values.assign(x_points.size(), constant);
  out.provenance = {{"eps", "hom"},
                    {"lambda", lambda},
                    {"f", f.metadata},
                    {"branch", "constant"},
                    {"constant_value", constant},
                    {"best_competitor", best_competitor},
                    {"constant_optimal", best_competitor >= constant - 1e-12 * std::max(1.0, std::abs(constant))}};
  out.validate();
  return out;
}

}  // namespace homoglab
