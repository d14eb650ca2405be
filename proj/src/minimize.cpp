#include "homoglab/minimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "homoglab/parallel.hpp"

namespace homoglab {

void OptimizerSpec::validate() const {
  require(max_iters >= 1, "OptimizerSpec: max_iters must be positive");
  require(step_init > 0.0, "OptimizerSpec: step_init must be positive");
  require(armijo_c > 0.0 && armijo_c < 1.0, "OptimizerSpec: armijo_c must lie in (0, 1)");
  require(grad_tol > 0.0, "OptimizerSpec: grad_tol must be positive");
  require(restarts >= 0, "OptimizerSpec: restarts must be nonnegative");
}

nlohmann::json OptimizerSpec::to_json() const {
  return {{"max_iters", max_iters}, {"step_init", step_init}, {"armijo_c", armijo_c},
          {"grad_tol", grad_tol},   {"restarts", restarts},   {"seed", seed}};
}

void DPGrid::validate() const {
  require(x_lo < x_hi, "DPGrid: need x_lo < x_hi");
  require(n_x >= 2 && n_t >= 2, "DPGrid: n_x and n_t must be >= 2");
}

std::string trace_to_csv(const std::vector<TraceRow>& trace) {
  std::string out = "iter,value,grad_norm\n";
  char buf[96];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", r.iter, r.value, r.grad_norm);
    out += buf;
  }
  return out;
}

namespace {

using Objective = std::function<double(const Trajectory&, Vec*)>;
using WeightFn = std::function<Vec(const Trajectory&)>;

std::string dump_iterate(const Trajectory& u) {
  std::ostringstream s;
  s.precision(17);
  s << "nodes=[";
  const auto& d = u.data();
  for (std::size_t i = 0; i < d.size(); ++i) s << (i ? "," : "") << d[i];
  s << "]";
  return s.str();
}

// Solves the tridiagonal system of the kinetic Hessian (weights 2 w_k) on the
// free nodes, one coordinate at a time. The first node is always fixed.
void precondition(const Vec& w, bool free_end, int dim, const Vec& g, Vec& out) {
  const int n = static_cast<int>(w.size());
  const int last = free_end ? n : n - 1;
  out.assign(g.size(), 0.0);
  if (last < 1) return;
  const int m = last;  // unknowns are nodes 1..last
  Vec diag(m), upper(m), rhs(m), c(m), dd(m);
  for (int i = 0; i < m; ++i) {
    const int node = i + 1;
    diag[i] = 2.0 * w[node - 1] + (node < n ? 2.0 * w[node] : 0.0);
    upper[i] = node < n ? -2.0 * w[node] : 0.0;
  }
  for (int comp = 0; comp < dim; ++comp) {
    for (int i = 0; i < m; ++i) rhs[i] = g[static_cast<std::size_t>(i + 1) * dim + comp];
    // Thomas algorithm; the matrix is symmetric diagonally dominant
    c[0] = upper[0] / diag[0];
    dd[0] = rhs[0] / diag[0];
    for (int i = 1; i < m; ++i) {
      const double denom = diag[i] - upper[i - 1] * c[i - 1];
      c[i] = upper[i] / denom;
      dd[i] = (rhs[i] - upper[i - 1] * dd[i - 1]) / denom;
    }
    for (int i = m - 1; i >= 0; --i) {
      if (i + 1 < m) dd[i] -= c[i] * dd[i + 1];
      out[static_cast<std::size_t>(i + 1) * dim + comp] = dd[i];
    }
  }
}

struct DescentOutcome {
  Trajectory path;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<TraceRow> trace;
};

DescentOutcome descend(const Objective& f, const WeightFn& weights, bool free_end, Trajectory u,
                       const OptimizerSpec& opt) {
  const int dim = u.dim();
  const int n = u.intervals();
  Vec g, dir;
  double value = f(u, &g);
  if (!std::isfinite(value)) throw NumericError("non-finite action at start", dump_iterate(u));
  auto clear_fixed = [&](Vec& v) {
    for (int i = 0; i < dim; ++i) {
      v[i] = 0.0;
      if (!free_end) v[static_cast<std::size_t>(n) * dim + i] = 0.0;
    }
  };
  clear_fixed(g);
  DescentOutcome out;
  double step = opt.step_init;
  int stalls = 0;
  Trajectory trial = u;
  Vec trial_g;
  for (int it = 0; it < opt.max_iters; ++it) {
    precondition(weights(u), free_end, dim, g, dir);
    const double decrement = dot(g, dir);
    out.trace.push_back({it, value, std::sqrt(std::max(0.0, decrement))});
    out.iterations = it;
    if (!(decrement > opt.grad_tol * opt.grad_tol)) {
      out.converged = true;
      break;
    }
    step = std::min(opt.step_init, 2.0 * step);
    bool accepted = false;
    bool saw_finite = false;
    double trial_value = 0.0;
    for (int bt = 0; bt < 50; ++bt) {
      auto& td = trial.data();
      const auto& ud = u.data();
      for (std::size_t i = 0; i < td.size(); ++i) td[i] = ud[i] - step * dir[i];
      try {
        trial_value = f(trial, &trial_g);
      } catch (const NumericError&) {
        trial_value = std::numeric_limits<double>::quiet_NaN();
      }
      if (std::isfinite(trial_value)) {
        saw_finite = true;
        if (trial_value <= value - opt.armijo_c * step * decrement) {
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!saw_finite) throw NumericError("non-finite action during descent", dump_iterate(u));
      out.converged = true;  // no descent possible at machine precision
      break;
    }
    const double gain = value - trial_value;
    std::swap(u, trial);
    std::swap(g, trial_g);
    clear_fixed(g);
    value = trial_value;
    stalls = gain <= 1e-15 * std::max(1.0, std::abs(value)) ? stalls + 1 : 0;
    if (stalls >= 5) {
      out.converged = true;
      break;
    }
    out.iterations = it + 1;
  }
  out.path = std::move(u);
  out.value = value;
  return out;
}

Trajectory random_start(const Trajectory& base, double amplitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  Trajectory u = base;
  const int dim = u.dim();
  const int n = u.intervals();
  const double span = u.t1() - u.t0();
  double c[3][8];
  for (auto& row : c) {
    for (double& v : row) v = coef(rng);
  }
  for (int k = 1; k < n; ++k) {
    const double s = (u.time(k) - u.t0()) / span;
    auto x = u.node(k);
    for (int i = 0; i < dim; ++i) {
      double bump = 0.0;
      for (int j = 0; j < 3; ++j) bump += c[j][i % 8] * std::sin((j + 1) * std::numbers::pi * s);
      x[i] += amplitude * bump / 3.0;
    }
  }
  return u;
}

// Runs every start and keeps the best value, ties to the lowest index.
OptimizeResult run_starts(const Objective& f, const WeightFn& weights, bool free_end,
                          const std::vector<Trajectory>& starts, const OptimizerSpec& opt) {
  std::vector<DescentOutcome> outcomes(starts.size());
  parallel_for(starts.size(), [&](std::size_t i) { outcomes[i] = descend(f, weights, free_end, starts[i], opt); });
  std::size_t best = 0;
  for (std::size_t i = 1; i < outcomes.size(); ++i) {
    if (outcomes[i].value < outcomes[best].value) best = i;
  }
  OptimizeResult r;
  r.path = std::move(outcomes[best].path);
  r.value = outcomes[best].value;
  r.iterations = outcomes[best].iterations;
  r.converged = outcomes[best].converged;
  r.trace = std::move(outcomes[best].trace);
  r.start_index = best;
  r.starts = starts.size();
  return r;
}

std::vector<Trajectory> bvp_starts(const BoundaryConditions& bc, int intervals, double eps,
                                   const std::vector<Trajectory>& warm_starts, const OptimizerSpec& opt) {
  const Trajectory affine = Trajectory::affine(bc.t0, bc.t1, bc.a, bc.b, intervals);
  std::vector<Trajectory> starts{affine};
  for (const auto& w : warm_starts) {
    require_dim(static_cast<std::size_t>(w.dim()), affine.dim(), "warm start");
    Trajectory s = w.resampled(affine.times());
    s.set_node(0, bc.a);
    s.set_node(intervals, bc.b);
    starts.push_back(std::move(s));
  }
  for (int r = 0; r < opt.restarts; ++r) {
    starts.push_back(random_start(affine, 0.5 * eps, opt.seed * 1000003ULL + static_cast<std::uint64_t>(r)));
  }
  return starts;
}

void check_bc(const BoundaryConditions& bc, int dim, int intervals) {
  require(bc.t1 > bc.t0, "boundary conditions: need t0 < t1");
  require_dim(bc.a.size(), dim, "boundary condition a");
  require_dim(bc.b.size(), dim, "boundary condition b");
  require(intervals >= 1, "minimize: need at least one interval");
}

}  // namespace

OptimizeResult minimize_bvp(const PeriodicPotential& V, const Perturbation* W, double eps,
                            const BoundaryConditions& bc, int intervals, const OptimizerSpec& opt,
                            const QuadratureSpec& quad, const std::vector<Trajectory>& warm_starts) {
  opt.validate();
  quad.validate();
  require(eps > 0.0, "minimize_bvp: eps must be positive");
  check_bc(bc, V.dim, intervals);
  if (W) require_dim(static_cast<std::size_t>(W->dim), V.dim, "minimize_bvp(W)");
  detail::SeparableAction act{&V, W, eps, quad.samples_per_interval, std::nullopt};
  Objective f = [&](const Trajectory& u, Vec* g) { return act.evaluate(u, g); };
  WeightFn w = [&](const Trajectory& u) { return act.kinetic_weights(u); };
  return run_starts(f, w, false, bvp_starts(bc, intervals, eps, warm_starts, opt), opt);
}

OptimizeResult minimize_lagrangian_bvp(const GeneralLagrangian& L, double eps, const BoundaryConditions& bc,
                                       int intervals, const OptimizerSpec& opt, const QuadratureSpec& quad,
                                       const std::vector<Trajectory>& warm_starts) {
  opt.validate();
  quad.validate();
  require(eps > 0.0, "minimize_lagrangian_bvp: eps must be positive");
  check_bc(bc, L.dim, intervals);
  detail::LagrangianActionEval act{&L, eps, quad.samples_per_interval};
  Objective f = [&](const Trajectory& u, Vec* g) { return act.evaluate(u, g); };
  WeightFn w = [&](const Trajectory& u) { return act.kinetic_weights(u); };
  return run_starts(f, w, false, bvp_starts(bc, intervals, eps, warm_starts, opt), opt);
}

HalflineResult minimize_halfline(const PeriodicPotential& V, const Perturbation* W, double eps, double lambda,
                                 VecView x0, double T_max, int intervals, const OptimizerSpec& opt,
                                 const QuadratureSpec& quad, const std::vector<Trajectory>& warm_starts) {
  opt.validate();
  quad.validate();
  require(eps > 0.0, "minimize_halfline: eps must be positive");
  require(lambda > 0.0, "minimize_halfline: lambda must be positive");
  require(T_max >= 5.0 / lambda * (1.0 - 1e-12), "minimize_halfline: T_max must be >= 5/lambda");
  require(intervals >= 1, "minimize_halfline: need at least one interval");
  require_dim(x0.size(), V.dim, "minimize_halfline(x0)");
  if (W) require_dim(static_cast<std::size_t>(W->dim), V.dim, "minimize_halfline(W)");
  const int d = V.dim;

  const Trajectory constant = Trajectory::affine(0.0, T_max, x0, x0, intervals);
  std::vector<Trajectory> starts{constant};
  for (const auto& w : warm_starts) {
    Trajectory s = w.resampled(constant.times());
    s.set_node(0, x0);
    starts.push_back(std::move(s));
  }
  // short moves into nearby cells of the eps-lattice, then rest
  const int combos = static_cast<int>(std::pow(3, d));
  const double move_time = std::min(eps, 0.5 * T_max);
  for (int c = 0; c < combos; ++c) {
    Vec target(d);
    int code = c;
    for (int i = 0; i < d; ++i) {
      const double base = std::floor(x0[i] / eps);
      target[i] = eps * (base + 0.5 * (code % 3));
      code /= 3;
    }
    Trajectory s = constant;
    for (int k = 0; k <= intervals; ++k) {
      const double frac = std::min(1.0, s.time(k) / move_time);
      auto x = s.node(k);
      for (int i = 0; i < d; ++i) x[i] = (1.0 - frac) * x0[i] + frac * target[i];
    }
    s.set_node(0, x0);
    starts.push_back(std::move(s));
  }
  detail::SeparableAction act{&V, W, eps, quad.samples_per_interval, lambda};
  // escapes from W: linear moves along an axis to a low point of a nearby
  // cell, then rest; the two cheapest (unoptimized) are kept as starts
  if (W) {
    const int per = d == 1 ? 64 : 8;
    Vec cell(d, 0.0), y(d);
    double low = kInf;
    const long total = static_cast<long>(std::pow(per, d));
    for (long c = 0; c < total; ++c) {
      long code = c;
      for (int i = 0; i < d; ++i) {
        y[i] = static_cast<double>(code % per) / per;
        code /= per;
      }
      const double v = V(y);
      if (v < low) {
        low = v;
        cell = y;
      }
    }
    std::vector<std::pair<double, Trajectory>> escapes;
    for (int i = 0; i < d; ++i) {
      for (int sign : {-1, 1}) {
        for (int j = 1; j <= 64; ++j) {
          Vec target(d);
          for (int a = 0; a < d; ++a) target[a] = eps * (std::round(x0[a] / eps - cell[a]) + cell[a]);
          target[i] += sign * j * eps;
          for (double tau = 0.5 * eps; tau <= 0.5 * T_max; tau *= 1.25) {
            Trajectory s = constant;
            for (int k = 1; k <= intervals; ++k) {
              const double frac = std::min(1.0, s.time(k) / tau);
              auto x = s.node(k);
              for (int a = 0; a < d; ++a) x[a] = (1.0 - frac) * x0[a] + frac * target[a];
            }
            double v;
            try {
              v = act.evaluate(s, nullptr);
            } catch (const NumericError&) {
              continue;
            }
            escapes.emplace_back(v, std::move(s));
            std::stable_sort(escapes.begin(), escapes.end(),
                             [](const auto& l, const auto& r) { return l.first < r.first; });
            if (escapes.size() > 2) escapes.pop_back();
          }
        }
      }
    }
    for (auto& e : escapes) starts.push_back(std::move(e.second));
  }
  for (int r = 0; r < opt.restarts; ++r) {
    starts.push_back(random_start(constant, 0.5 * eps, opt.seed * 1000003ULL + static_cast<std::uint64_t>(r)));
  }

  Objective f = [&](const Trajectory& u, Vec* g) { return act.evaluate(u, g); };
  WeightFn w = [&](const Trajectory& u) { return act.kinetic_weights(u); };
  HalflineResult out;
  static_cast<OptimizeResult&>(out) = run_starts(f, w, true, starts, opt);
  const double sup_w = W ? (std::isfinite(W->sup_bound) ? W->sup_bound : 0.0) : 0.0;
  out.tail_bound = (V.v_max + sup_w) * std::exp(-lambda * T_max) / lambda;
  return out;
}

// ---------------------------------------------------------------------------
// Dynamic programming

namespace {

struct Lattice {
  DPGrid grid;
  Vec x;       // states
  Vec prefix;  // int_{x_lo}^{x_j} U
  Vec u_at;    // U(x_j)
  long zero_state = -1;
};

Lattice make_lattice(const DPGrid& grid, const std::function<double(double)>& U) {
  Lattice L;
  L.grid = grid;
  const int n = grid.n_x;
  const double dx = grid.dx();
  L.x.resize(n);
  L.prefix.assign(n, 0.0);
  L.u_at.resize(n);
  for (int j = 0; j < n; ++j) {
    L.x[j] = grid.x_lo + j * dx;
    L.u_at[j] = U(L.x[j]);
    if (!std::isfinite(L.u_at[j])) throw EvaluationError("dp oracle: non-finite potential sample");
    if (std::abs(L.x[j]) < 1e-9 * dx) L.zero_state = j;
  }
  // composite Simpson with four panels per cell
  const int panels = 4;
  for (int j = 1; j < n; ++j) {
    const double a = L.x[j - 1];
    const double hp = dx / panels;
    double s = 0.0;
    for (int p = 0; p < panels; ++p) {
      const double l = a + p * hp;
      const double fl = p == 0 ? L.u_at[j - 1] : U(l);
      const double fr = p == panels - 1 ? L.u_at[j] : U(l + hp);
      s += hp / 6.0 * (fl + 4.0 * U(l + 0.5 * hp) + fr);
    }
    L.prefix[j] = L.prefix[j - 1] + s;
  }
  return L;
}

int nearest_state(const Lattice& L, double x, const char* what) {
  if (x < L.grid.x_lo - 1e-12 || x > L.grid.x_hi + 1e-12) {
    throw InputError(std::string("dp oracle: ") + what + " lies outside [x_lo, x_hi]");
  }
  const long j = std::lround((x - L.grid.x_lo) / L.grid.dx());
  return static_cast<int>(std::clamp<long>(j, 0, L.grid.n_x - 1));
}

std::vector<int> displacement_set(const Lattice& L, double h, double slope_bound, const Vec& slopes) {
  const double dx = L.grid.dx();
  std::vector<int> moves;
  if (slopes.empty()) {
    const int smax = static_cast<int>(std::floor(slope_bound * h / dx + 1e-9));
    for (int s = -smax; s <= smax; ++s) moves.push_back(s);
  } else {
    for (double v : slopes) moves.push_back(static_cast<int>(std::lround(v * h / dx)));
    std::sort(moves.begin(), moves.end());
    moves.erase(std::unique(moves.begin(), moves.end()), moves.end());
  }
  return moves;
}

struct LatticeRun {
  const Lattice* L;
  KineticCost kinetic;
  double atom = 0.0;
  double t0 = 0.0, t1 = 1.0;
  int n_t = 100;
  std::vector<int> moves;
  std::optional<double> lambda;
  int start = 0;
  std::optional<int> end;  // pinned terminal state, free otherwise
};

double run_lattice(const LatticeRun& run) {
  const Lattice& L = *run.L;
  const int n = L.grid.n_x;
  const double h = (run.t1 - run.t0) / run.n_t;
  const double dx = L.grid.dx();
  const double inf = std::numeric_limits<double>::infinity();

  // per-move base cost: kinetic(slope) + segment average of U (+ atom while resting at 0)
  std::vector<Vec> base(run.moves.size(), Vec(n, inf));
  for (std::size_t m = 0; m < run.moves.size(); ++m) {
    const int s = run.moves[m];
    const double kin = run.kinetic(s * dx / h);
    for (int j = 0; j < n; ++j) {
      const int k = j + s;
      if (k < 0 || k >= n) continue;
      const double avg = s == 0 ? L.u_at[j] : (L.prefix[k] - L.prefix[j]) / (s * dx);
      double c = kin + avg;
      if (s == 0 && j == L.zero_state) c += run.atom;
      base[m][j] = c;
    }
  }

  Vec next(n, inf), cur(n);
  if (run.end) {
    next[*run.end] = 0.0;
  } else {
    const double factor = std::exp(-*run.lambda * run.t1) / *run.lambda;
    for (int j = 0; j < n; ++j) next[j] = factor * (L.u_at[j] + (j == L.zero_state ? run.atom : 0.0));
  }
  for (int step = run.n_t - 1; step >= 0; --step) {
    const double ta = run.t0 + step * h;
    const double w = run.lambda ? std::exp(-*run.lambda * ta) * -std::expm1(-*run.lambda * h) / *run.lambda : h;
    std::fill(cur.begin(), cur.end(), inf);
    for (std::size_t m = 0; m < run.moves.size(); ++m) {
      const int s = run.moves[m];
      const int lo = std::max(0, -s);
      const int hi = std::min(n, n - s);
      const double* b = base[m].data();
      const double* nx = next.data() + s;
      double* c = cur.data();
      for (int j = lo; j < hi; ++j) {
        const double cand = nx[j] + w * b[j];
        if (cand < c[j]) c[j] = cand;
      }
    }
    std::swap(cur, next);
  }
  const double value = next[run.start];
  if (!std::isfinite(value)) throw SolverError("dp oracle: terminal state unreachable with the given move set");
  return value;
}

std::function<double(double)> physical_potential(const PeriodicPotential& V, const Perturbation* W, double eps) {
  const bool use_w = W && !W->origin_atom;
  return [&V, W, eps, use_w](double x) {
    const double y[1] = {x / eps};
    double v = V.value(VecView(y, 1));
    if (use_w) v += W->value(VecView(y, 1));
    return v;
  };
}

}  // namespace

double dp_oracle_1d(const PeriodicPotential& V, const Perturbation* W, double eps, const BoundaryConditions& bc,
                    const DPGrid& grid, const Vec& slope_set, const KineticCost& kinetic) {
  require(V.dim == 1, "dp_oracle_1d: requires d = 1");
  require(eps > 0.0, "dp_oracle_1d: eps must be positive");
  grid.validate();
  check_bc(bc, 1, 1);
  if (W) require(W->dim == 1, "dp_oracle_1d: W must be one-dimensional");
  const Lattice L = make_lattice(grid, physical_potential(V, W, eps));
  LatticeRun run;
  run.L = &L;
  run.kinetic = kinetic ? kinetic : KineticCost([](double s) { return s * s; });
  run.atom = W && W->origin_atom ? *W->origin_atom : 0.0;
  run.t0 = bc.t0;
  run.t1 = bc.t1;
  run.n_t = grid.n_t;
  const double h = (bc.t1 - bc.t0) / grid.n_t;
  const double bound = 4.0 * std::abs(bc.b[0] - bc.a[0]) / (bc.t1 - bc.t0) + 2.0;
  run.moves = displacement_set(L, h, bound, slope_set);
  run.start = nearest_state(L, bc.a[0], "initial state");
  run.end = nearest_state(L, bc.b[0], "terminal state");
  return run_lattice(run);
}

double dp_discounted_1d(const PeriodicPotential& V, const Perturbation* W, double eps, double lambda, double x0,
                        double T, const DPGrid& grid, double slope_bound) {
  require(V.dim == 1, "dp_discounted_1d: requires d = 1");
  require(eps > 0.0 && lambda > 0.0 && T > 0.0, "dp_discounted_1d: eps, lambda, T must be positive");
  grid.validate();
  if (W) require(W->dim == 1, "dp_discounted_1d: W must be one-dimensional");
  const Lattice L = make_lattice(grid, physical_potential(V, W, eps));
  LatticeRun run;
  run.L = &L;
  run.kinetic = [](double s) { return s * s; };
  run.atom = W && W->origin_atom ? *W->origin_atom : 0.0;
  run.t0 = 0.0;
  run.t1 = T;
  run.n_t = grid.n_t;
  run.lambda = lambda;
  if (slope_bound <= 0.0) {
    const auto [lo, hi] = std::minmax_element(L.u_at.begin(), L.u_at.end());
    slope_bound = 2.0 + 2.0 * std::sqrt(std::max(0.0, *hi - *lo));
  }
  run.moves = displacement_set(L, T / grid.n_t, slope_bound, {});
  run.start = nearest_state(L, x0, "initial state");
  return run_lattice(run);
}

double dp_gamma_limit_1d(double bonus, const BoundaryConditions& bc, const DPGrid& grid) {
  grid.validate();
  check_bc(bc, 1, 1);
  const Lattice L = make_lattice(grid, [](double) { return 0.0; });
  LatticeRun run;
  run.L = &L;
  run.kinetic = [](double s) { return s * s; };
  run.atom = bonus;
  run.t0 = bc.t0;
  run.t1 = bc.t1;
  run.n_t = grid.n_t;
  const double h = (bc.t1 - bc.t0) / grid.n_t;
  run.moves = displacement_set(L, h, 4.0 * std::abs(bc.b[0] - bc.a[0]) / (bc.t1 - bc.t0) + 2.0, {});
  run.start = nearest_state(L, bc.a[0], "initial state");
  run.end = nearest_state(L, bc.b[0], "terminal state");
  return run_lattice(run);
}

}  // namespace homoglab
