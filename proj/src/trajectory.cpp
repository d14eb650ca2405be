#include "homoglab/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace homoglab {

namespace {

constexpr double kPi = std::numbers::pi;

double discount_integral(double lambda, double a, double b) {
  // int_a^b e^{-lambda t} dt, written to stay accurate for small lambda (b - a)
  return std::exp(-lambda * a) * -std::expm1(-lambda * (b - a)) / lambda;
}

std::vector<Vec> frame_from(VecView e) {
  const std::size_t d = e.size();
  std::vector<Vec> basis{Vec(e.begin(), e.end())};
  for (std::size_t k = 0; k < d && basis.size() < d; ++k) {
    Vec v(d, 0.0);
    v[k] = 1.0;
    for (const auto& b : basis) {
      const double c = dot(v, b);
      for (std::size_t i = 0; i < d; ++i) v[i] -= c * b[i];
    }
    const double n = norm(v);
    if (n < 1e-8) continue;
    for (auto& c : v) c /= n;
    basis.push_back(std::move(v));
  }
  return basis;
}

double halton(std::size_t index, int base) {
  double f = 1.0;
  double r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Trajectory

Trajectory::Trajectory(Vec times, int dim, Vec nodes) : times_(std::move(times)), dim_(dim), nodes_(std::move(nodes)) {
  validate();
}

Vec uniform_times(double t0, double t1, int intervals) {
  require(intervals >= 1, "Trajectory: need at least one interval");
  require(t1 > t0, "Trajectory: need t1 > t0");
  Vec t(intervals + 1);
  const double h = (t1 - t0) / intervals;
  for (int k = 0; k <= intervals; ++k) t[k] = t0 + k * h;
  t.back() = t1;
  return t;
}

Trajectory Trajectory::uniform(double t0, double t1, int intervals, int dim) {
  return on_times(uniform_times(t0, t1, intervals), dim);
}

Trajectory Trajectory::on_times(Vec times, int dim) {
  require(dim >= 1, "Trajectory: dimension must be positive");
  const std::size_t n = times.size();
  return Trajectory(std::move(times), dim, Vec(n * dim, 0.0));
}

Trajectory Trajectory::affine(double t0, double t1, VecView a, VecView b, int intervals) {
  require(a.size() == b.size(), "Trajectory::affine: endpoint dimensions differ");
  Trajectory u = uniform(t0, t1, intervals, static_cast<int>(a.size()));
  for (int k = 0; k <= intervals; ++k) {
    const double s = static_cast<double>(k) / intervals;
    auto x = u.node(k);
    for (std::size_t i = 0; i < a.size(); ++i) x[i] = (1.0 - s) * a[i] + s * b[i];
  }
  u.set_node(intervals, b);
  return u;
}

void Trajectory::set_node(int k, VecView x) {
  require_dim(x.size(), dim_, "Trajectory::set_node");
  std::copy(x.begin(), x.end(), node(k).begin());
}

bool Trajectory::is_uniform(double rel_tol) const {
  const double h = (t1() - t0()) / intervals();
  for (int k = 0; k < intervals(); ++k) {
    if (std::abs(step(k) - h) > rel_tol * std::max(1.0, std::abs(h))) return false;
  }
  return true;
}

Vec Trajectory::value_at(double t) const {
  Vec out(dim_);
  if (t <= t0()) {
    auto x = node(0);
    return Vec(x.begin(), x.end());
  }
  if (t >= t1()) {
    auto x = node(intervals());
    return Vec(x.begin(), x.end());
  }
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const int k = static_cast<int>(it - times_.begin()) - 1;
  const double s = (t - times_[k]) / step(k);
  auto a = node(k);
  auto b = node(k + 1);
  for (int i = 0; i < dim_; ++i) out[i] = a[i] + s * (b[i] - a[i]);
  return out;
}

Vec Trajectory::slope(int k) const {
  Vec out(dim_);
  const double h = step(k);
  auto a = node(k);
  auto b = node(k + 1);
  for (int i = 0; i < dim_; ++i) out[i] = (b[i] - a[i]) / h;
  return out;
}

Trajectory Trajectory::resampled(const Vec& new_times) const {
  Trajectory out = on_times(new_times, dim_);
  for (int k = 0; k <= out.intervals(); ++k) out.set_node(k, value_at(new_times[k]));
  return out;
}

void Trajectory::validate() const {
  require(dim_ >= 1, "Trajectory: dimension must be positive");
  require(times_.size() >= 2, "Trajectory: need at least one interval");
  require(nodes_.size() == times_.size() * dim_, "Trajectory: node array size mismatch");
  for (std::size_t k = 1; k < times_.size(); ++k) {
    require(times_[k] > times_[k - 1], "Trajectory: node times must be strictly increasing");
  }
  for (double v : nodes_) require(std::isfinite(v), "Trajectory: non-finite node value");
}

// ---------------------------------------------------------------------------
// Shared action kernels

namespace detail {

Vec SeparableAction::kinetic_weights(const Trajectory& u) const {
  Vec w(u.intervals());
  for (int k = 0; k < u.intervals(); ++k) {
    const double h = u.step(k);
    w[k] = lambda ? discount_integral(*lambda, u.time(k), u.time(k + 1)) / (h * h) : 1.0 / h;
  }
  return w;
}

double SeparableAction::evaluate(const Trajectory& u, Vec* grad) const {
  const int d = u.dim();
  const int n = u.intervals();
  const int M = samples;
  const bool atom_mode = W && W->origin_atom.has_value();
  const bool use_w = W && !atom_mode;
  if (grad) grad->assign(u.data().size(), 0.0);
  const Vec wk = kinetic_weights(u);

  Vec x(d), y(d), gy(d);
  double kinetic = 0.0;
  double vsum = 0.0;
  double wsum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double h = u.step(k);
    auto a = u.node(k);
    auto b = u.node(k + 1);
    double dd = 0.0;
    for (int i = 0; i < d; ++i) dd += (b[i] - a[i]) * (b[i] - a[i]);
    kinetic += wk[k] * dd;
    if (grad) {
      double* ga = grad->data() + static_cast<std::size_t>(k) * d;
      double* gb = ga + d;
      for (int i = 0; i < d; ++i) {
        const double g = 2.0 * wk[k] * (b[i] - a[i]);
        ga[i] -= g;
        gb[i] += g;
      }
    }
    for (int m = 0; m < M; ++m) {
      const double sigma = (m + 0.5) / M;
      // midpoint sample, exact discount mass of its subinterval
      const double weight =
          lambda ? discount_integral(*lambda, u.time(k) + m * h / M, u.time(k) + (m + 1) * h / M) : h / M;
      for (int i = 0; i < d; ++i) {
        x[i] = a[i] + sigma * (b[i] - a[i]);
        y[i] = x[i] / eps;
      }
      vsum += weight * V->value(y);
      if (use_w) wsum += weight * W->value(y);
      if (grad) {
        double* ga = grad->data() + static_cast<std::size_t>(k) * d;
        double* gb = ga + d;
        V->grad(y, gy);
        for (int i = 0; i < d; ++i) {
          const double g = weight * gy[i] / eps;
          ga[i] += (1.0 - sigma) * g;
          gb[i] += sigma * g;
        }
        if (use_w) {
          W->grad(y, gy);
          for (int i = 0; i < d; ++i) {
            const double g = weight * gy[i] / eps;
            ga[i] += (1.0 - sigma) * g;
            gb[i] += sigma * g;
          }
        }
      }
    }
  }

  double tail = 0.0;
  if (lambda) {
    auto last = u.node(n);
    for (int i = 0; i < d; ++i) y[i] = last[i] / eps;
    const double factor = std::exp(-*lambda * u.t1()) / *lambda;
    tail = factor * V->value(y);
    if (use_w) tail += factor * W->value(y);
    if (atom_mode && norm_sq(last) == 0.0) tail += factor * *W->origin_atom;
    if (grad) {
      double* gl = grad->data() + static_cast<std::size_t>(n) * d;
      V->grad(y, gy);
      for (int i = 0; i < d; ++i) gl[i] += factor * gy[i] / eps;
      if (use_w) {
        W->grad(y, gy);
        for (int i = 0; i < d; ++i) gl[i] += factor * gy[i] / eps;
      }
    }
  }

  double atom = 0.0;
  if (atom_mode) {
    double measure = 0.0;
    for (const auto& [lo, hi] : zero_set_intervals(u, 0.0)) {
      measure += lambda ? discount_integral(*lambda, lo, hi) : hi - lo;
    }
    atom = *W->origin_atom * measure;
  }

  const double total = (kinetic + vsum) + wsum + tail + atom;
  if (!std::isfinite(total)) {
    std::ostringstream msg;
    msg << "kinetic=" << kinetic << " V=" << vsum << " W=" << wsum << " tail=" << tail;
    throw NumericError("non-finite action", msg.str());
  }
  return total;
}

Vec LagrangianActionEval::kinetic_weights(const Trajectory& u) const {
  const int d = u.dim();
  Vec w(u.intervals());
  Vec x(d), xi(d), probe(d);
  for (int k = 0; k < u.intervals(); ++k) {
    const double h = u.step(k);
    auto a = u.node(k);
    auto b = u.node(k + 1);
    for (int i = 0; i < d; ++i) {
      x[i] = 0.5 * (a[i] + b[i]) / eps;
      xi[i] = (b[i] - a[i]) / h;
    }
    Vec e(d, 0.0);
    const double len = norm(xi);
    if (len > 0.0) {
      for (int i = 0; i < d; ++i) e[i] = xi[i] / len;
    } else {
      e[0] = 1.0;
    }
    const double delta = 1e-4 * std::max(1.0, len);
    for (int i = 0; i < d; ++i) probe[i] = xi[i] + delta * e[i];
    const double up = L->value(x, probe);
    for (int i = 0; i < d; ++i) probe[i] = xi[i] - delta * e[i];
    const double down = L->value(x, probe);
    const double curv = (up - 2.0 * L->value(x, xi) + down) / (delta * delta);
    w[k] = std::max(curv, 1e-6) / (2.0 * h);
  }
  return w;
}

double LagrangianActionEval::evaluate(const Trajectory& u, Vec* grad) const {
  const int d = u.dim();
  const int n = u.intervals();
  const int M = samples;
  if (grad) grad->assign(u.data().size(), 0.0);
  Vec y(d), xi(d), gx(d), gxi(d);
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    const double h = u.step(k);
    auto a = u.node(k);
    auto b = u.node(k + 1);
    for (int i = 0; i < d; ++i) xi[i] = (b[i] - a[i]) / h;
    for (int m = 0; m < M; ++m) {
      const double sigma = (m + 0.5) / M;
      const double weight = h / M;
      for (int i = 0; i < d; ++i) y[i] = (a[i] + sigma * (b[i] - a[i])) / eps;
      total += weight * L->value(y, xi);
      if (grad) {
        L->grad(y, xi, gx, gxi);
        double* ga = grad->data() + static_cast<std::size_t>(k) * d;
        double* gb = ga + d;
        for (int i = 0; i < d; ++i) {
          ga[i] += weight * ((1.0 - sigma) * gx[i] / eps - gxi[i] / h);
          gb[i] += weight * (sigma * gx[i] / eps + gxi[i] / h);
        }
      }
    }
  }
  if (!std::isfinite(total)) throw NumericError("non-finite Lagrangian action", "total=" + std::to_string(total));
  return total;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public actions

namespace {

void check_action_inputs(const Trajectory& u, int dim, double eps, const QuadratureSpec& quad) {
  quad.validate();
  require(eps > 0.0, "action: eps must be positive");
  require_dim(static_cast<std::size_t>(u.dim()), dim, "action");
}

}  // namespace

double action_F(const Trajectory& u, const PeriodicPotential& V, double eps, const QuadratureSpec& quad) {
  check_action_inputs(u, V.dim, eps, quad);
  detail::SeparableAction act{&V, nullptr, eps, quad.samples_per_interval, std::nullopt};
  try {
    return act.evaluate(u, nullptr);
  } catch (const NumericError& e) {
    throw EvaluationError(std::string(e.what()) + ": " + e.diagnostics());
  }
}

double action_G(const Trajectory& u, const PeriodicPotential& V, const Perturbation& W, double eps,
                const QuadratureSpec& quad) {
  check_action_inputs(u, V.dim, eps, quad);
  require_dim(static_cast<std::size_t>(W.dim), V.dim, "action_G(W)");
  detail::SeparableAction act{&V, &W, eps, quad.samples_per_interval, std::nullopt};
  try {
    return act.evaluate(u, nullptr);
  } catch (const NumericError& e) {
    throw EvaluationError(std::string(e.what()) + ": " + e.diagnostics());
  }
}

double discounted_action(const Trajectory& u, const PeriodicPotential& V, const Perturbation* W, double eps,
                         double lambda, const QuadratureSpec& quad) {
  check_action_inputs(u, V.dim, eps, quad);
  require(u.t0() == 0.0, "discounted_action: trajectory must start at t0 = 0");
  require(lambda > 0.0, "discounted_action: lambda must be positive");
  if (W) require_dim(static_cast<std::size_t>(W->dim), V.dim, "discounted_action(W)");
  detail::SeparableAction act{&V, W, eps, quad.samples_per_interval, lambda};
  try {
    return act.evaluate(u, nullptr);
  } catch (const NumericError& e) {
    throw EvaluationError(std::string(e.what()) + ": " + e.diagnostics());
  }
}

double lagrangian_action(const Trajectory& u, const GeneralLagrangian& L, double eps, const QuadratureSpec& quad) {
  check_action_inputs(u, L.dim, eps, quad);
  detail::LagrangianActionEval act{&L, eps, quad.samples_per_interval};
  try {
    return act.evaluate(u, nullptr);
  } catch (const NumericError& e) {
    throw EvaluationError(std::string(e.what()) + ": " + e.diagnostics());
  }
}

double homogenized_action(const Trajectory& u, const HomogenizedLagrangian& f, std::optional<double> lambda) {
  require_dim(static_cast<std::size_t>(u.dim()), f.dim, "homogenized_action");
  if (lambda) {
    require(*lambda > 0.0, "homogenized_action: lambda must be positive");
    require(u.t0() == 0.0, "homogenized_action: discounted form requires t0 = 0");
  }
  double total = 0.0;
  for (int k = 0; k < u.intervals(); ++k) {
    const Vec s = u.slope(k);
    const double fk = f(s);
    total += lambda ? fk * discount_integral(*lambda, u.time(k), u.time(k + 1)) : fk * u.step(k);
  }
  if (lambda) total += f.f0 * std::exp(-*lambda * u.t1()) / *lambda;
  return total;
}

std::vector<std::pair<double, double>> zero_set_intervals(const Trajectory& u, double tol) {
  require(tol >= 0.0, "zero_set_measure: tol must be nonnegative");
  std::vector<std::pair<double, double>> out;
  auto push = [&](double lo, double hi) {
    if (hi <= lo) return;
    if (!out.empty() && out.back().second >= lo) {
      out.back().second = std::max(out.back().second, hi);
    } else {
      out.emplace_back(lo, hi);
    }
  };
  const int d = u.dim();
  for (int k = 0; k < u.intervals(); ++k) {
    auto a = u.node(k);
    auto b = u.node(k + 1);
    double A = 0.0, B = 0.0, C = -tol * tol;
    for (int i = 0; i < d; ++i) {
      const double delta = b[i] - a[i];
      A += delta * delta;
      B += 2.0 * a[i] * delta;
      C += a[i] * a[i];
    }
    double s_lo, s_hi;
    if (A == 0.0) {
      if (C > 0.0) continue;
      s_lo = 0.0;
      s_hi = 1.0;
    } else {
      const double disc = B * B - 4.0 * A * C;
      if (disc <= 0.0) continue;
      const double root = std::sqrt(disc);
      s_lo = std::max(0.0, (-B - root) / (2.0 * A));
      s_hi = std::min(1.0, (-B + root) / (2.0 * A));
      if (s_hi <= s_lo) continue;
    }
    const double t = u.time(k);
    const double h = u.step(k);
    push(s_lo == 0.0 ? t : t + s_lo * h, s_hi == 1.0 ? u.time(k + 1) : t + s_hi * h);
  }
  return out;
}

double zero_set_measure(const Trajectory& u, double tol) {
  double total = 0.0;
  for (const auto& [lo, hi] : zero_set_intervals(u, tol)) total += hi - lo;
  return total;
}

// ---------------------------------------------------------------------------
// Connector curves

namespace {

struct ConnectorGeometry {
  Vec x0, y0;
  std::vector<Vec> frame;  // frame[0] = (x0 - y0) / r
  double r = 0.0;
  double alpha = 0.0;
  double R1 = 0.0;
  Vec times;
};

Trajectory connector_path(const ConnectorGeometry& g, const Vec& theta) {
  const int d = static_cast<int>(g.x0.size());
  Vec dir(d, 0.0), mirrored(d, 0.0);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) dir[i] += theta[j] * g.frame[j][i];
  }
  for (int i = 0; i < d; ++i) mirrored[i] = dir[i] - 2.0 * theta[0] * g.frame[0][i];
  const double scale = -1.0 / (2.0 * theta[0]);
  Trajectory path = Trajectory::on_times(g.times, d);
  const int n = path.intervals() / 2;
  for (int k = 0; k <= 2 * n; ++k) {
    auto x = path.node(k);
    const double t = g.times[k];
    if (k <= n) {
      const double s = k == 0 ? 0.0 : std::pow(t + g.R1, g.alpha) * scale;
      for (int i = 0; i < d; ++i) x[i] = g.x0[i] + s * dir[i];
    } else {
      const double s = k == 2 * n ? 0.0 : std::pow(g.R1 - t, g.alpha) * scale;
      for (int i = 0; i < d; ++i) x[i] = g.y0[i] + s * mirrored[i];
    }
  }
  path.set_node(0, g.x0);
  path.set_node(2 * n, g.y0);
  return path;
}

double path_w_integral(const Trajectory& path, const Perturbation& W, int samples) {
  const int d = path.dim();
  Vec x(d);
  double total = 0.0;
  for (int k = 0; k < path.intervals(); ++k) {
    auto a = path.node(k);
    auto b = path.node(k + 1);
    const double h = path.step(k);
    for (int m = 0; m < samples; ++m) {
      const double sigma = (m + 0.5) / samples;
      for (int i = 0; i < d; ++i) x[i] = a[i] + sigma * (b[i] - a[i]);
      total += h / samples * W(x);
    }
  }
  return total;
}

std::vector<Vec> theta_candidates(int d, int count) {
  std::vector<Vec> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Vec th(d, 0.0);
    if (d == 2) {
      const double phi = 2.0 * kPi / 3.0 + (i + 0.5) * (2.0 * kPi / 3.0) / count;
      th[0] = std::cos(phi);
      th[1] = std::sin(phi);
    } else {
      // first coordinate uniform in (-1, -1/2), the rest along a Halton direction
      const double c = -0.5 - 0.5 * (i + 0.5) / count;
      const double rest = std::sqrt(1.0 - c * c);
      Vec v(d - 1);
      if (d == 3) {
        const double psi = 2.0 * kPi * halton(i + 1, 3);
        v[0] = std::cos(psi);
        v[1] = std::sin(psi);
      } else {
        static const int primes[] = {3, 5, 7, 11, 13, 17, 19, 23};
        for (int j = 0; j < d - 1; ++j) v[j] = 2.0 * halton(i + 1, primes[j % 8]) - 1.0;
        double nv = norm(v);
        if (nv < 1e-12) {
          v.assign(d - 1, 0.0);
          v[0] = 1.0;
          nv = 1.0;
        }
        for (auto& c2 : v) c2 /= nv;
      }
      th[0] = c;
      for (int j = 0; j < d - 1; ++j) th[j + 1] = rest * v[j];
    }
    out.push_back(std::move(th));
  }
  return out;
}

}  // namespace

ConnectorResult build_connector(VecView x0, VecView y0, double alpha, const Perturbation& W, int theta_samples,
                                int nodes_per_branch, int samples_per_interval) {
  const int d = static_cast<int>(x0.size());
  require(d >= 2, "build_connector: requires d >= 2");
  require_dim(y0.size(), d, "build_connector(y0)");
  require_dim(static_cast<std::size_t>(W.dim), d, "build_connector(W)");
  require(theta_samples >= 1 && nodes_per_branch >= 1 && samples_per_interval >= 1,
          "build_connector: sample counts must be positive");
  const double p = W.effective_exponent();
  require(alpha > 0.5 && alpha < p / d, "build_connector: alpha must lie in (1/2, p/d)");

  ConnectorGeometry g;
  g.x0.assign(x0.begin(), x0.end());
  g.y0.assign(y0.begin(), y0.end());
  Vec e(d);
  for (int i = 0; i < d; ++i) e[i] = x0[i] - y0[i];
  g.r = norm(e);
  require(g.r > 0.0, "build_connector: endpoints must be distinct");
  for (auto& c : e) c /= g.r;
  g.frame = frame_from(e);
  g.alpha = alpha;
  g.R1 = std::pow(g.r, 1.0 / alpha);

  // graded towards both cusps at +-R1
  const int n = nodes_per_branch;
  const double grading = 3.0;
  g.times.resize(2 * n + 1);
  for (int k = 0; k <= n; ++k) g.times[k] = -g.R1 + g.R1 * std::pow(static_cast<double>(k) / n, grading);
  for (int k = 1; k <= n; ++k) g.times[n + k] = g.R1 - g.R1 * std::pow(static_cast<double>(n - k) / n, grading);
  g.times[0] = -g.R1;
  g.times[n] = 0.0;
  g.times[2 * n] = g.R1;

  ConnectorResult best;
  best.w_integral = kInf;
  const auto candidates = theta_candidates(d, theta_samples);
  for (int i = 0; i < theta_samples; ++i) {
    Trajectory path = connector_path(g, candidates[i]);
    const double wi = path_w_integral(path, W, samples_per_interval);
    if (wi < best.w_integral) {
      best.w_integral = wi;
      best.path = std::move(path);
      best.theta = candidates[i];
      best.theta_index = i;
    }
  }
  double kinetic = 0.0;
  for (int k = 0; k < best.path.intervals(); ++k) {
    double dd = 0.0;
    auto a = best.path.node(k);
    auto b = best.path.node(k + 1);
    for (int i = 0; i < d; ++i) dd += (b[i] - a[i]) * (b[i] - a[i]);
    kinetic += dd / best.path.step(k);
  }
  best.kinetic = kinetic;
  best.kinetic_bound = 2.0 * alpha * alpha / (2.0 * alpha - 1.0) * std::pow(g.r, (2.0 * alpha - 1.0) / alpha);
  return best;
}

// ---------------------------------------------------------------------------
// Polar bound

PolarBound polar_bound_check(const Perturbation& W, double p, double alpha, double r, const QuadratureSpec& quad) {
  quad.validate();
  const int d = W.dim;
  require(d == 2 || d == 3, "polar_bound_check: supports d = 2 and d = 3");
  require(r > 0.0, "polar_bound_check: r must be positive");
  require(1.0 < alpha * d && alpha * d < p, "polar_bound_check: requires 1 < alpha d < p");
  const double R1 = std::pow(r, 1.0 / alpha);
  const double sphere = d == 2 ? 2.0 * kPi : 4.0 * kPi;

  auto lhs_at = [&](int per) {
    const int nt = 32 * per;
    const int na = (d == 2 ? 32 : 16) * per;
    const double ht = R1 / nt;
    Vec x(d);
    double total = 0.0;
    if (d == 2) {
      const double ha = 2.0 * kPi / na;
      for (int a = 0; a < na; ++a) {
        const double phi = (a + 0.5) * ha;
        const double c = std::cos(phi), s = std::sin(phi);
        double line = 0.0;
        for (int j = 0; j < nt; ++j) {
          const double rho = std::pow((j + 0.5) * ht, alpha);
          x[0] = rho * c;
          x[1] = rho * s;
          line += W(x);
        }
        total += line * ht * ha;
      }
    } else {
      const double hz = 2.0 / na;
      const double hphi = 2.0 * kPi / na;
      for (int zi = 0; zi < na; ++zi) {
        const double z = -1.0 + (zi + 0.5) * hz;
        const double rz = std::sqrt(std::max(0.0, 1.0 - z * z));
        for (int a = 0; a < na; ++a) {
          const double phi = (a + 0.5) * hphi;
          double line = 0.0;
          for (int j = 0; j < nt; ++j) {
            const double rho = std::pow((j + 0.5) * ht, alpha);
            x[0] = rho * rz * std::cos(phi);
            x[1] = rho * rz * std::sin(phi);
            x[2] = rho * z;
            line += W(x);
          }
          total += line * ht * hz * hphi;
        }
      }
    }
    return total;
  };

  PolarBound out;
  out.lhs_estimate.coarse_value = lhs_at(quad.samples_per_interval);
  out.lhs_estimate.value = lhs_at(2 * quad.samples_per_interval);
  out.lhs_estimate.converged = out.lhs_estimate.self_check_delta() < quad.tolerance * std::max(1.0, out.lhs_estimate.value);
  out.lhs = out.lhs_estimate.value;

  const int per_unit = std::max(1, static_cast<int>(std::ceil(16.0 * quad.samples_per_interval / r)));
  const Vec origin(d, 0.0);
  const double lp = ball_power_integral(W, p, origin, r, per_unit);
  const double beta = (p - alpha * d) / (alpha * p);
  const double C = std::pow((p - 1.0) / (p - alpha * d) * sphere, 1.0 - 1.0 / p);
  out.rhs_printed = std::pow(r, beta) * C * std::pow(lp, 1.0 / p);
  out.rhs = std::pow(alpha, -1.0 / p) * out.rhs_printed;
  out.holds = out.lhs <= out.rhs * (1.0 + quad.tolerance);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

std::string trajectory_to_csv(const Trajectory& u) {
  std::string out = "t";
  for (int i = 0; i < u.dim(); ++i) out += ",u_" + std::to_string(i + 1);
  out += "\n";
  char buf[64];
  for (int k = 0; k <= u.intervals(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", u.time(k));
    out += buf;
    for (double v : u.node(k)) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

Trajectory trajectory_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InputError("trajectory CSV: empty input");
  const int dim = static_cast<int>(std::count(line.begin(), line.end(), ','));
  require(dim >= 1, "trajectory CSV: header must list t and at least one coordinate");
  Vec times, nodes;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    int col = 0;
    while (std::getline(row, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw InputError("trajectory CSV: bad number '" + cell + "'");
      (col == 0 ? times : nodes).push_back(v);
      ++col;
    }
    require(col == dim + 1, "trajectory CSV: wrong column count");
  }
  return Trajectory(std::move(times), dim, std::move(nodes));
}

nlohmann::json trajectory_to_json(const Trajectory& u) {
  return {{"dim", u.dim()}, {"times", u.times()}, {"nodes", u.data()}};
}

Trajectory trajectory_from_json(const nlohmann::json& j) {
  try {
    return Trajectory(j.at("times").get<Vec>(), j.at("dim").get<int>(), j.at("nodes").get<Vec>());
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("trajectory JSON: ") + e.what());
  }
}

}  // namespace homoglab
