#include "homoglab/cell_problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "homoglab/fenchel.hpp"
#include "homoglab/parallel.hpp"

namespace homoglab {

// ---------------------------------------------------------------------------
// Correctors

CorrectorProfile solve_corrector_general(const GeneralLagrangian& L, VecView xi, double T, int intervals,
                                         const OptimizerSpec& opt, const QuadratureSpec& quad,
                                         const std::vector<Trajectory>& warm_starts) {
  require_dim(xi.size(), L.dim, "solve_corrector_general(xi)");
  require(T > 0.0, "solve_corrector_general: T must be positive");
  const int d = L.dim;
  BoundaryConditions bc;
  bc.t0 = 0.0;
  bc.t1 = T;
  bc.a.assign(d, 0.0);
  bc.b.resize(d);
  for (int i = 0; i < d; ++i) bc.b[i] = T * xi[i];
  const OptimizeResult r = minimize_lagrangian_bvp(L, 1.0, bc, intervals, opt, quad, warm_starts);

  CorrectorProfile out;
  out.xi.assign(xi.begin(), xi.end());
  out.T = T;
  out.path = r.path;
  out.profile = r.path;
  for (int k = 0; k <= out.profile.intervals(); ++k) {
    auto x = out.profile.node(k);
    const double t = out.profile.time(k);
    for (int i = 0; i < d; ++i) x[i] -= t * xi[i];
  }
  const Vec zero(d, 0.0);
  out.profile.set_node(0, zero);
  out.profile.set_node(out.profile.intervals(), zero);
  out.cell_value = r.value / T;
  out.iterations = r.iterations;
  out.converged = r.converged;
  const double m = std::pow(norm(xi), L.growth_exponent);
  out.sandwich_ok = out.cell_value >= L.c1 * m - 1e-6 && out.cell_value <= L.c2 * (1.0 + m) + 1e-6;
  return out;
}

CorrectorProfile solve_corrector_1d(const PeriodicPotential& V, double xi, int intervals, const OptimizerSpec& opt,
                                    const QuadratureSpec& quad) {
  require(V.dim == 1, "solve_corrector_1d: requires d = 1");
  require(xi != 0.0, "solve_corrector_1d: xi must be nonzero");
  const GeneralLagrangian L = quadratic_lagrangian(V);
  const Vec x{xi};
  CorrectorProfile out = solve_corrector_general(L, x, 1.0 / std::abs(xi), intervals, opt, quad);
  out.sandwich_ok = out.cell_value >= xi * xi + V.v_min - 1e-6 && out.cell_value <= xi * xi + V.v_max + 1e-6;
  return out;
}

namespace {

// Tiles a cell path ceil(T / Tp) times and rescales it onto [0, T].
Trajectory tiled_warm_start(const Trajectory& prev, VecView xi, double T) {
  const double Tp = prev.t1();
  const int copies = std::max(1, static_cast<int>(std::ceil(T / Tp - 1e-9)));
  const int d = prev.dim();
  const int n = prev.intervals();
  Vec times, nodes;
  for (int c = 0; c < copies; ++c) {
    for (int k = c == 0 ? 0 : 1; k <= n; ++k) {
      times.push_back(c * Tp + prev.time(k));
      auto x = prev.node(k);
      for (int i = 0; i < d; ++i) nodes.push_back(x[i] + c * Tp * xi[i]);
    }
  }
  const double scale = T / (copies * Tp);
  for (auto& t : times) t *= scale;
  times.back() = T;
  // keep the same endpoint xi T after rescaling by rescaling the drift part
  Trajectory tiled(times, d, nodes);
  for (int k = 0; k <= tiled.intervals(); ++k) {
    auto x = tiled.node(k);
    const double t = tiled.time(k);
    for (int i = 0; i < d; ++i) x[i] += t * xi[i] - (t / scale) * xi[i];
  }
  return tiled;
}

// Lines z + xi s with the lowest average of V, entered from 0 and left
// towards xi T over tau each. The detour costs O(1) and vanishes in the average.
std::vector<Trajectory> valley_starts(const PeriodicPotential& V, VecView xi, double T, int intervals, int keep) {
  const int d = V.dim;
  const int per_axis = d <= 2 ? 16 : 8;
  const int samples = std::max(64, static_cast<int>(std::ceil(16.0 * T * std::max(1.0, norm(xi)))));
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= per_axis;
  std::vector<std::pair<double, Vec>> lines;
  Vec x(d);
  for (std::size_t flat = 0; flat < total; ++flat) {
    Vec z(d);
    std::size_t rest = flat;
    for (int i = 0; i < d; ++i) {
      z[i] = static_cast<double>(rest % per_axis) / per_axis;
      if (z[i] > 0.5) z[i] -= 1.0;
      rest /= per_axis;
    }
    double avg = 0.0;
    for (int m = 0; m < samples; ++m) {
      const double s = T * (m + 0.5) / samples;
      for (int i = 0; i < d; ++i) x[i] = z[i] + s * xi[i];
      avg += V(x);
    }
    lines.emplace_back(avg / samples, std::move(z));
  }
  std::stable_sort(lines.begin(), lines.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  const double tau = std::min(1.0, T / 4.0);
  std::vector<Trajectory> out;
  for (const auto& [avg, z] : lines) {
    if (static_cast<int>(out.size()) >= keep) break;
    if (norm(z) == 0.0) continue;
    Trajectory u = Trajectory::uniform(0.0, T, intervals, d);
    for (int k = 0; k <= intervals; ++k) {
      const double t = u.time(k);
      auto p = u.node(k);
      for (int i = 0; i < d; ++i) {
        if (t <= tau) {
          p[i] = (t / tau) * z[i];
        } else if (t >= T - tau) {
          p[i] = ((T - t) / tau) * z[i] + T * xi[i];
        } else {
          p[i] = z[i] + (t - tau) * T / (T - 2.0 * tau) * xi[i];
        }
      }
    }
    u.set_node(0, Vec(d, 0.0));
    Vec end(d);
    for (int i = 0; i < d; ++i) end[i] = T * xi[i];
    u.set_node(intervals, end);
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace

AsymptoticResult f_hom_asymptotic(const PeriodicPotential& V, VecView xi, const Vec& T_ladder, int nodes_per_unit,
                                  const OptimizerSpec& opt, const QuadratureSpec& quad) {
  require_dim(xi.size(), V.dim, "f_hom_asymptotic(xi)");
  require(nodes_per_unit >= 1, "f_hom_asymptotic: nodes_per_unit must be positive");
  AsymptoticResult out;
  const double len = norm(xi);
  if (len == 0.0) {
    out.value = V.v_min;
    return out;
  }
  Vec ladder = T_ladder;
  if (ladder.empty()) ladder = {8.0 / len, 16.0 / len, 32.0 / len, 64.0 / len};
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    require(ladder[i] > 0.0 && (i == 0 || ladder[i] > ladder[i - 1]), "f_hom_asymptotic: T_ladder must increase");
  }
  const GeneralLagrangian L = quadratic_lagrangian(V);
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    const double T = ladder[i];
    const int intervals = static_cast<int>(std::ceil(nodes_per_unit * std::max(T, len * T)));
    std::vector<Trajectory> warm;
    if (i > 0) {
      warm.push_back(tiled_warm_start(out.last.path, xi, T));
    } else if (V.v_max > V.v_min) {
      warm = valley_starts(V, xi, T, intervals, 2);
    }
    out.last = solve_corrector_general(L, xi, T, intervals, opt, quad, warm);
    out.ladder_T.push_back(T);
    out.ladder_values.push_back(out.last.cell_value);
  }
  const double xi2 = len * len;
  out.last.sandwich_ok = out.last.cell_value >= xi2 + V.v_min - 1e-6 && out.last.cell_value <= xi2 + V.v_max + 1e-6;
  out.value = out.ladder_values.back();
  const std::size_t n = out.ladder_values.size();
  out.spread = n >= 2 ? std::abs(out.ladder_values[n - 1] - out.ladder_values[n - 2]) : 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    if (out.ladder_values[i] > out.ladder_values[i - 1] + 1e-3 * std::max(1.0, std::abs(out.ladder_values[i - 1]))) {
      out.blowup_warning = true;
    }
  }
  return out;
}

nlohmann::json TabulationSettings::to_json() const {
  return {{"method", method == Method::one_d ? "1d" : "asymptotic"},
          {"intervals", intervals},
          {"nodes_per_unit", nodes_per_unit},
          {"T_ladder", T_ladder},
          {"optimizer", opt.to_json()},
          {"quadrature", {{"samples_per_interval", quad.samples_per_interval}, {"tolerance", quad.tolerance}}},
          {"envelope", envelope},
          {"convexity_tol", convexity_tol}};
}

HomogenizedLagrangian tabulate_f_hom(const PeriodicPotential& V, const std::vector<Vec>& axes,
                                     const TabulationSettings& settings) {
  require(static_cast<int>(axes.size()) == V.dim, "tabulate_f_hom: grid dimension mismatch");
  for (const auto& ax : axes) {
    require(!ax.empty(), "tabulate_f_hom: empty axis");
    for (std::size_t i = 0; i < ax.size(); ++i) {
      require(std::abs(ax[i] + ax[ax.size() - 1 - i]) <= 1e-12 * std::max(1.0, std::abs(ax[i])),
              "tabulate_f_hom: grid must be symmetric under xi -> -xi");
    }
  }
  if (settings.method == TabulationSettings::Method::one_d) {
    require(V.dim == 1, "tabulate_f_hom: method 1d requires d = 1");
  }
  HomogenizedLagrangian f;
  f.dim = V.dim;
  f.axes = axes;
  std::size_t n = 1;
  for (const auto& ax : axes) n *= ax.size();
  f.values.assign(n, 0.0);
  const std::size_t zero = f.zero_index();
  std::vector<std::string> failures(n);
  Vec spreads(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    if (i == zero) return;
    const Vec xi = f.point(i);
    try {
      if (settings.method == TabulationSettings::Method::one_d) {
        f.values[i] = solve_corrector_1d(V, xi[0], settings.intervals, settings.opt, settings.quad).cell_value;
      } else {
        const AsymptoticResult r =
            f_hom_asymptotic(V, xi, settings.T_ladder, settings.nodes_per_unit, settings.opt, settings.quad);
        f.values[i] = r.value;
        spreads[i] = r.spread;
      }
    } catch (const Error& e) {
      failures[i] = e.what();
    }
  });
  std::string failed;
  for (std::size_t i = 0; i < n; ++i) {
    if (failures[i].empty()) continue;
    const Vec p = f.point(i);
    failed += " (";
    for (std::size_t a = 0; a < p.size(); ++a) failed += (a ? "," : "") + std::to_string(p[a]);
    failed += "): " + failures[i] + ";";
  }
  if (!failed.empty()) throw SolverError("tabulate_f_hom: solver failed at" + failed);

  f.f0 = V.v_min;
  f.values[zero] = V.v_min;
  f.convexity_violations = midpoint_convexity_violations(f.axes, f.values, settings.convexity_tol);
  if (settings.envelope && f.convexity_violations > 0) {
    f.values = lower_convex_envelope(f);
    f.values[zero] = std::min(f.values[zero], V.v_min);
    f.envelope_applied = true;
  }
  f.metadata["potential"] = V.name;
  f.metadata["potential_params"] = V.params;
  f.metadata["settings"] = settings.to_json();
  f.metadata["convergence_spreads"] = spreads;
  f.validate();
  return f;
}

// ---------------------------------------------------------------------------
// Ergodic shifts

double lattice_distance(VecView x) {
  double s = 0.0;
  for (double v : x) {
    const double r = v - std::round(v);
    s += r * r;
  }
  return std::sqrt(s);
}

namespace {

// Refines a scan point to the tau minimizing |tau xi - z| for z = round(tau xi),
// clamped to [lo, hi].
double refine_hit(VecView xi, double tau, double lo, double hi) {
  const double xi2 = norm_sq(xi);
  double zx = 0.0;
  for (double v : xi) zx += std::round(tau * v) * v;
  return std::clamp(zx / xi2, lo, hi);
}

double dist_at(VecView xi, double tau) {
  Vec x(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) x[i] = tau * xi[i];
  return lattice_distance(x);
}

}  // namespace

double ergodic_shift_finder(VecView xi, double eta, double window_start, double window_length) {
  const double len = norm(xi);
  require(len > 0.0, "ergodic_shift_finder: xi must be nonzero");
  require(eta > 0.0 && eta < 0.5, "ergodic_shift_finder: eta must lie in (0, 1/2)");
  require(window_length >= 0.0, "ergodic_shift_finder: window_length must be nonnegative");
  const double lo = window_start;
  const double hi = window_start + window_length;
  if (xi.size() == 1) {
    const double period = 1.0 / len;
    const double k = std::ceil(lo / period - 1e-12);
    const double tau = k * period;
    if (tau <= hi + 1e-12) return std::clamp(tau, lo, hi);
    throw NotFoundError("ergodic_shift_finder: no multiple of 1/|xi| in the window", window_start, window_length);
  }
  const double step = eta / (2.0 * len);
  const long steps = static_cast<long>(std::ceil(window_length / step));
  for (long s = 0; s <= steps; ++s) {
    const double tau = std::min(hi, lo + s * step);
    if (dist_at(xi, tau) >= 1.5 * eta) continue;
    const double refined = refine_hit(xi, tau, lo, hi);
    if (dist_at(xi, refined) < eta) return refined;
    if (dist_at(xi, tau) < eta) return tau;
  }
  throw NotFoundError("ergodic_shift_finder: no tau with dist(tau xi, Z^d) < eta in the window", window_start,
                      window_length);
}

double largest_hit_gap(VecView xi, double eta, double horizon) {
  const double len = norm(xi);
  require(len > 0.0 && horizon > 0.0, "largest_hit_gap: need xi != 0 and horizon > 0");
  double prev = 0.0;
  double gap = 0.0;
  double cursor = 0.0;
  const double min_advance = 1.0 / len;  // distinct lattice points are at least this far apart in tau
  while (cursor < horizon) {
    double hit;
    try {
      hit = ergodic_shift_finder(xi, eta, cursor + 0.5 * min_advance, horizon - cursor - 0.5 * min_advance);
    } catch (const NotFoundError&) {
      return std::max(gap, horizon - prev);
    }
    gap = std::max(gap, hit - prev);
    prev = hit;
    cursor = hit;
  }
  return gap;
}

// ---------------------------------------------------------------------------
// Almost-corrector plans

std::vector<std::string> AlmostCorrectorPlan::violations() const {
  std::vector<std::string> v;
  if (!(T >= (L + 1.0) / delta)) v.push_back("T < (L + 1) / delta");
  if (shifts.empty() || shifts.front() != 0.0) v.push_back("T_0 != 0");
  for (std::size_t i = 0; i < shifts.size(); ++i) {
    Vec x(xi.size());
    for (std::size_t k = 0; k < xi.size(); ++k) x[k] = shifts[i] * xi[k];
    if (!(lattice_distance(x) < eta)) v.push_back("dist(T_" + std::to_string(i) + " xi, Z^d) >= eta");
    if (i > 0) {
      const double gap = shifts[i] - shifts[i - 1];
      if (!(gap >= T + 1.0 && gap <= T + L)) v.push_back("spacing of T_" + std::to_string(i) + " outside [T+1, T+L]");
    }
  }
  if (breakpoints.size() < 2 || breakpoints.front() != 0.0 || breakpoints.back() != T) {
    v.push_back("breakpoints must run from 0 to T");
  }
  for (std::size_t j = 1; j < breakpoints.size(); ++j) {
    if (!(breakpoints[j] > breakpoints[j - 1])) v.push_back("breakpoints not increasing");
  }
  if (slopes.size() + 1 != breakpoints.size()) v.push_back("slope count mismatch");
  for (const auto& s : slopes) {
    double n2 = 0.0;
    for (std::size_t k = 0; k < xi.size(); ++k) n2 += (s[k] + xi[k]) * (s[k] + xi[k]);
    if (n2 == 0.0) v.push_back("xi_j + xi == 0 on some piece");
  }
  if (profile.node_count() > 0) {
    if (norm(profile.node(0)) != 0.0 || norm(profile.node(profile.intervals())) != 0.0) {
      v.push_back("profile does not vanish at the endpoints");
    }
  }
  return v;
}

nlohmann::json AlmostCorrectorPlan::to_json() const {
  return {{"xi", xi},       {"delta", delta},       {"eta", eta},           {"L", L},
          {"T", T},         {"horizon", horizon},   {"shifts", shifts},     {"pieces", slopes.size()},
          {"cell_value", cell_value}};
}

AlmostCorrectorPlan build_almost_corrector(const PeriodicPotential& V, VecView xi, double delta, double horizon,
                                           const OptimizerSpec& opt, const QuadratureSpec& quad,
                                           int nodes_per_unit) {
  require_dim(xi.size(), V.dim, "build_almost_corrector(xi)");
  const double len = norm(xi);
  require(len > 0.0, "build_almost_corrector: xi must be nonzero");
  require(delta > 0.0, "build_almost_corrector: delta must be positive");
  require(horizon > 0.0, "build_almost_corrector: horizon must be positive");
  require(V.modulus != nullptr, "build_almost_corrector: potential has no continuity modulus");
  const int d = V.dim;

  AlmostCorrectorPlan plan;
  plan.xi.assign(xi.begin(), xi.end());
  plan.delta = delta;
  plan.horizon = horizon;

  // largest eta <= 1/2 (kept below 1/2 for the finder) with omega(eta) < delta
  double lo = 0.0, hi = 0.49;
  if (V.modulus(hi) < delta) {
    lo = hi;
  } else {
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (V.modulus(mid) < delta ? lo : hi) = mid;
    }
  }
  require(lo > 0.0, "build_almost_corrector: no eta > 0 with omega(eta) < delta");
  plan.eta = lo;

  double scan = std::max(200.0, 40.0 / (plan.eta * len));
  double gap = largest_hit_gap(xi, plan.eta, scan);
  for (int retry = 0; retry < 4 && gap >= 0.5 * scan; ++retry) {
    scan *= 4.0;
    gap = largest_hit_gap(xi, plan.eta, scan);
  }
  double L = std::max(2.0, 2.0 * gap);

  for (int attempt = 0; attempt < 4; ++attempt) {
    plan.L = L;
    plan.T = std::ceil((L + 1.0) / delta);
    plan.shifts = {0.0};
    bool ok = true;
    while (plan.shifts.back() <= horizon) {
      try {
        plan.shifts.push_back(ergodic_shift_finder(xi, plan.eta, plan.shifts.back() + plan.T + 1.0, L - 1.0));
      } catch (const NotFoundError&) {
        ok = false;
        break;
      }
    }
    if (ok) break;
    L *= 2.0;
    if (attempt == 3) throw SolverError("build_almost_corrector: ergodic window estimate did not stabilize");
  }

  const int intervals = static_cast<int>(std::ceil(nodes_per_unit * std::max(plan.T, len * plan.T)));
  const CorrectorProfile cp = solve_corrector_general(quadratic_lagrangian(V), xi, plan.T, intervals, opt, quad);
  plan.cell_value = cp.cell_value;
  plan.profile = cp.profile;
  // nudge nodes so that every piece of xi t + p(t) moves
  for (int k = 0; k < plan.profile.intervals(); ++k) {
    Vec s = plan.profile.slope(k);
    double n2 = 0.0;
    for (int i = 0; i < d; ++i) n2 += (s[i] + xi[i]) * (s[i] + xi[i]);
    if (n2 > 0.0 || k + 1 == plan.profile.intervals()) continue;
    auto x = plan.profile.node(k + 1);
    for (int i = 0; i < d; ++i) x[i] += 1e-9 * xi[i] / len;
  }
  plan.breakpoints = plan.profile.times();
  plan.breakpoints.front() = 0.0;
  plan.breakpoints.back() = plan.T;
  plan.slopes.clear();
  for (int k = 0; k < plan.profile.intervals(); ++k) plan.slopes.push_back(plan.profile.slope(k));
  return plan;
}

namespace {

Trajectory block_path(const AlmostCorrectorPlan& plan, double shift) {
  Vec times = plan.profile.times();
  for (auto& t : times) t += shift;
  Trajectory u = Trajectory::on_times(times, plan.profile.dim());
  for (int k = 0; k <= u.intervals(); ++k) {
    auto x = u.node(k);
    auto p = plan.profile.node(k);
    for (std::size_t i = 0; i < plan.xi.size(); ++i) x[i] = plan.xi[i] * times[k] + p[i];
  }
  return u;
}

}  // namespace

Vec plan_block_actions(const AlmostCorrectorPlan& plan, const PeriodicPotential& V, const QuadratureSpec& quad) {
  Vec out(plan.shifts.size());
  parallel_for(plan.shifts.size(),
               [&](std::size_t i) { out[i] = action_F(block_path(plan, plan.shifts[i]), V, 1.0, quad) / plan.T; });
  return out;
}

// ---------------------------------------------------------------------------
// Recovery trajectories

namespace {

struct Piece {
  Vec a;
  Vec b;
  double duration = 0.0;
};

std::vector<Vec> orth_complement(VecView e) {
  const std::size_t d = e.size();
  std::vector<Vec> basis;
  std::vector<Vec> all{Vec(e.begin(), e.end())};
  for (std::size_t k = 0; k < d && all.size() < d; ++k) {
    Vec v(d, 0.0);
    v[k] = 1.0;
    for (const auto& b : all) {
      const double c = dot(v, b);
      for (std::size_t i = 0; i < d; ++i) v[i] -= c * b[i];
    }
    const double n = norm(v);
    if (n < 1e-8) continue;
    for (auto& c : v) c /= n;
    all.push_back(v);
    basis.push_back(std::move(v));
  }
  return basis;
}

double segment_w_integral(const Perturbation& W, VecView a, VecView b, VecView z, double duration, int samples) {
  const std::size_t d = a.size();
  Vec x(d);
  double total = 0.0;
  for (int m = 0; m < samples; ++m) {
    const double s = (m + 0.5) / samples;
    for (std::size_t i = 0; i < d; ++i) x[i] = a[i] + s * (b[i] - a[i]) + z[i];
    total += W(x);
  }
  return total * duration / samples;
}

}  // namespace

RecoveryResult build_recovery_trajectory(const AlmostCorrectorPlan& plan, const Perturbation& W, double eps,
                                         double eta_tube, double alpha, const QuadratureSpec& quad,
                                         int nodes_per_unit, int theta_samples) {
  quad.validate();
  const int d = static_cast<int>(plan.xi.size());
  require(W.dim == d, "build_recovery_trajectory: W dimension mismatch");
  require(W.sign == SignClass::nonnegative, "build_recovery_trajectory: W must be nonnegative");
  require(eps > 0.0 && eta_tube >= 0.0, "build_recovery_trajectory: need eps > 0 and eta_tube >= 0");
  require(nodes_per_unit >= 1, "build_recovery_trajectory: nodes_per_unit must be positive");
  if (d >= 2) {
    const double p = W.effective_exponent();
    require(alpha > 0.5 && alpha < p / d, "build_recovery_trajectory: alpha must lie in (1/2, p/d)");
  }
  const double S = 1.0 / eps;
  require(plan.horizon >= S, "build_recovery_trajectory: plan horizon must cover 1/eps");
  const auto violations = plan.violations();
  if (!violations.empty()) throw InvariantViolation("build_recovery_trajectory: invalid plan: " + violations.front());

  // pieces on the fast scale
  std::vector<Piece> pieces;
  auto drift = [&](double s) {
    Vec x(d);
    for (int i = 0; i < d; ++i) x[i] = plan.xi[i] * s;
    return x;
  };
  double cursor = 0.0;
  RecoveryResult out;
  for (double Ti : plan.shifts) {
    if (Ti + plan.T > S) break;
    if (Ti > cursor) pieces.push_back({drift(cursor), drift(Ti), Ti - cursor});
    const Trajectory blk = block_path(plan, Ti);
    for (int k = 0; k < blk.intervals(); ++k) {
      auto a = blk.node(k);
      auto b = blk.node(k + 1);
      pieces.push_back({Vec(a.begin(), a.end()), Vec(b.begin(), b.end()), blk.step(k)});
    }
    cursor = Ti + plan.T;
    ++out.blocks;
  }
  if (S > cursor) pieces.push_back({drift(cursor), drift(S), S - cursor});

  // tube shifts, |z| first so that z = 0 wins ties
  std::vector<Vec> shifts(pieces.size(), Vec(d, 0.0));
  if (d >= 2 && eta_tube > 0.0) {
    const int per_axis = 9;
    const int m = d - 1;
    std::vector<Vec> offsets;
    std::vector<int> idx(m, 0);
    for (bool more = true; more;) {
      Vec c(m);
      double r2 = 0.0;
      for (int j = 0; j < m; ++j) {
        c[j] = -eta_tube + 2.0 * eta_tube * idx[j] / (per_axis - 1);
        r2 += c[j] * c[j];
      }
      if (r2 <= eta_tube * eta_tube * (1.0 + 1e-12)) offsets.push_back(c);
      more = false;
      for (int j = 0; j < m; ++j) {
        if (++idx[j] < per_axis) {
          more = true;
          break;
        }
        idx[j] = 0;
      }
    }
    std::stable_sort(offsets.begin(), offsets.end(), [](const Vec& l, const Vec& r) { return norm_sq(l) < norm_sq(r); });
    for (std::size_t p = 0; p < pieces.size(); ++p) {
      const Piece& pc = pieces[p];
      Vec e(d);
      for (int i = 0; i < d; ++i) e[i] = pc.b[i] - pc.a[i];
      const double len = norm(e);
      if (len == 0.0) continue;
      for (auto& c : e) c /= len;
      const auto basis = orth_complement(e);
      const int samples =
          std::max(quad.samples_per_interval,
                   static_cast<int>(std::ceil(quad.samples_per_interval * nodes_per_unit * std::max(pc.duration, len))));
      double best = kInf;
      for (const auto& c : offsets) {
        Vec z(d, 0.0);
        for (int j = 0; j < m; ++j) {
          for (int i = 0; i < d; ++i) z[i] += c[j] * basis[j][i];
        }
        const double wi = segment_w_integral(W, pc.a, pc.b, z, pc.duration, samples);
        if (wi < best) {
          best = wi;
          shifts[p] = z;
        }
      }
      if (norm_sq(shifts[p]) > 0.0) ++out.shifted_pieces;
    }
  }

  // assemble on the fast scale
  Vec times{0.0};
  Vec nodes(d, 0.0);
  auto current = [&]() { return Vec(nodes.end() - d, nodes.end()); };
  auto append_connector = [&](const Vec& from, const Vec& to) {
    Vec diff(d);
    for (int i = 0; i < d; ++i) diff[i] = to[i] - from[i];
    if (norm(diff) == 0.0) return;
    const ConnectorResult c = build_connector(from, to, alpha, W, theta_samples);
    const double base = times.back() - c.path.t0();
    for (int k = 1; k <= c.path.intervals(); ++k) {
      times.push_back(base + c.path.time(k));
      for (double v : c.path.node(k)) nodes.push_back(v);
    }
    ++out.connectors;
  };
  for (std::size_t p = 0; p < pieces.size(); ++p) {
    const Piece& pc = pieces[p];
    Vec start(d), end(d);
    for (int i = 0; i < d; ++i) {
      start[i] = pc.a[i] + shifts[p][i];
      end[i] = pc.b[i] + shifts[p][i];
    }
    if (d >= 2) append_connector(current(), start);
    const int sub = std::max(1, static_cast<int>(std::ceil(nodes_per_unit * pc.duration)));
    const double t_start = times.back();
    for (int k = 1; k <= sub; ++k) {
      const double s = static_cast<double>(k) / sub;
      times.push_back(t_start + s * pc.duration);
      for (int i = 0; i < d; ++i) nodes.push_back(start[i] + s * (end[i] - start[i]));
    }
  }
  if (d >= 2) append_connector(current(), drift(S));

  out.fast_time = times.back();
  for (auto& t : times) t /= out.fast_time;
  for (auto& v : nodes) v *= eps;
  times.front() = 0.0;
  times.back() = 1.0;
  Trajectory path(std::move(times), d, std::move(nodes));
  path.set_node(0, Vec(d, 0.0));
  path.set_node(path.intervals(), plan.xi);
  out.path = std::move(path);
  return out;
}

}  // namespace homoglab
