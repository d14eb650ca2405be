#include "homoglab/potential.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace homoglab {

namespace {

constexpr double kPi = std::numbers::pi;

void central_difference(const ScalarField& f, VecView x, VecSpan g) {
  Vec probe(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
}

double param_or(const ParamMap& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw EvaluationError(std::string(what) + ": evaluator returned a non-finite value");
}

// Orthonormal basis of the complement of the unit vector e.
std::vector<Vec> complement_basis(const Vec& e) {
  const std::size_t d = e.size();
  std::vector<Vec> basis;
  for (std::size_t k = 0; k < d && basis.size() + 1 < d; ++k) {
    Vec v(d, 0.0);
    v[k] = 1.0;
    auto project_out = [&](const Vec& u) {
      const double c = dot(v, u);
      for (std::size_t i = 0; i < d; ++i) v[i] -= c * u[i];
    };
    project_out(e);
    for (const auto& b : basis) project_out(b);
    const double n = norm(v);
    if (n < 1e-8) continue;
    for (auto& c : v) c /= n;
    basis.push_back(std::move(v));
  }
  return basis;
}

}  // namespace

std::string to_string(SignClass s) {
  switch (s) {
    case SignClass::nonnegative: return "nonnegative";
    case SignClass::nonpositive: return "nonpositive";
    case SignClass::signed_: return "signed";
  }
  return "signed";
}

void PeriodicPotential::grad(VecView x, VecSpan g) const {
  if (gradient) {
    gradient(x, g);
  } else {
    central_difference(value, x, g);
  }
}

void Perturbation::grad(VecView x, VecSpan g) const {
  if (gradient) {
    gradient(x, g);
  } else {
    central_difference(value, x, g);
  }
}

double Perturbation::effective_exponent() const {
  if (integrability_exponent) return *integrability_exponent;
  if (std::isfinite(sup_bound)) return kInf;
  throw InputError("perturbation '" + name + "' is unbounded and declares no integrability exponent");
}

void GeneralLagrangian::grad(VecView x, VecView xi, VecSpan gx, VecSpan gxi) const {
  if (gradient) {
    gradient(x, xi, gx, gxi);
    return;
  }
  Vec xp(x.begin(), x.end());
  Vec vp(xi.begin(), xi.end());
  for (std::size_t i = 0; i < xp.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(xp[i]));
    xp[i] = x[i] + h;
    const double up = value(xp, xi);
    xp[i] = x[i] - h;
    const double down = value(xp, xi);
    xp[i] = x[i];
    gx[i] = (up - down) / (2.0 * h);
  }
  for (std::size_t i = 0; i < vp.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(vp[i]));
    vp[i] = xi[i] + h;
    const double up = value(x, vp);
    vp[i] = xi[i] - h;
    const double down = value(x, vp);
    vp[i] = xi[i];
    gxi[i] = (up - down) / (2.0 * h);
  }
}

// ---------------------------------------------------------------------------
// Potentials

PeriodicPotential zero_potential(int dim) {
  require(dim >= 1, "zero_potential: dimension must be positive");
  PeriodicPotential V;
  V.name = "zero";
  V.dim = dim;
  V.value = [](VecView) { return 0.0; };
  V.gradient = [](VecView, VecSpan g) { std::fill(g.begin(), g.end(), 0.0); };
  V.v_min = 0.0;
  V.v_max = 0.0;
  V.modulus = [](double) { return 0.0; };
  return V;
}

PeriodicPotential constant_potential(int dim, double c) {
  require(dim >= 1, "constant_potential: dimension must be positive");
  PeriodicPotential V;
  V.name = "constant";
  V.dim = dim;
  V.value = [c](VecView) { return c; };
  V.gradient = [](VecView, VecSpan g) { std::fill(g.begin(), g.end(), 0.0); };
  V.v_min = c;
  V.v_max = c;
  V.modulus = [](double) { return 0.0; };
  V.params = {{"c", c}};
  return V;
}

PeriodicPotential sin2_potential(int dim, double amplitude) {
  require(dim >= 1, "sin2_potential: dimension must be positive");
  require(amplitude >= 0.0, "sin2_potential: amplitude must be nonnegative");
  PeriodicPotential V;
  V.name = "sin2";
  V.dim = dim;
  V.value = [amplitude](VecView x) {
    double s = 0.0;
    for (double xi : x) {
      const double v = std::sin(kPi * xi);
      s += v * v;
    }
    return amplitude * s;
  };
  V.gradient = [amplitude](VecView x, VecSpan g) {
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = amplitude * kPi * std::sin(2.0 * kPi * x[i]);
  };
  V.v_min = 0.0;
  V.v_max = amplitude * dim;
  const double lip = amplitude * kPi * std::sqrt(static_cast<double>(dim));
  const double range = amplitude * dim;
  V.modulus = [lip, range](double delta) { return std::min(lip * delta, range); };
  V.params = {{"amplitude", amplitude}};
  return V;
}

PeriodicPotential cos_sum_potential(int dim, double amplitude) {
  require(dim >= 1, "cos_sum_potential: dimension must be positive");
  require(amplitude >= 0.0, "cos_sum_potential: amplitude must be nonnegative");
  PeriodicPotential V;
  V.name = "cos_sum";
  V.dim = dim;
  V.value = [amplitude](VecView x) {
    double s = 0.0;
    for (double xi : x) s += std::cos(2.0 * kPi * xi);
    return amplitude * s;
  };
  V.gradient = [amplitude](VecView x, VecSpan g) {
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = -2.0 * kPi * amplitude * std::sin(2.0 * kPi * x[i]);
  };
  V.v_min = -amplitude * dim;
  V.v_max = amplitude * dim;
  const double lip = 2.0 * kPi * amplitude * std::sqrt(static_cast<double>(dim));
  const double range = 2.0 * amplitude * dim;
  V.modulus = [lip, range](double delta) { return std::min(lip * delta, range); };
  V.params = {{"amplitude", amplitude}};
  return V;
}

// ---------------------------------------------------------------------------
// Perturbations

Perturbation zero_perturbation(int dim) {
  require(dim >= 1, "zero_perturbation: dimension must be positive");
  Perturbation W;
  W.name = "zero";
  W.dim = dim;
  W.value = [](VecView) { return 0.0; };
  W.gradient = [](VecView, VecSpan g) { std::fill(g.begin(), g.end(), 0.0); };
  W.sign = SignClass::nonnegative;
  W.sup_bound = 0.0;
  W.inf_value = 0.0;
  W.support_radius = 0.0;
  return W;
}

Perturbation constant_perturbation(int dim, double c) {
  require(dim >= 1, "constant_perturbation: dimension must be positive");
  Perturbation W;
  W.name = "constant";
  W.dim = dim;
  W.value = [c](VecView) { return c; };
  W.gradient = [](VecView, VecSpan g) { std::fill(g.begin(), g.end(), 0.0); };
  W.sign = c >= 0.0 ? SignClass::nonnegative : SignClass::nonpositive;
  W.sup_bound = std::abs(c);
  W.inf_value = c;
  W.params = {{"c", c}};
  return W;
}

Perturbation runge_decay(int dim, double amplitude, double exponent) {
  require(dim >= 1, "runge_decay: dimension must be positive");
  require(amplitude >= 0.0, "runge_decay: amplitude must be nonnegative");
  require(exponent > dim / 2.0, "runge_decay: exponent must exceed d/2");
  Perturbation W;
  W.name = "runge_decay";
  W.dim = dim;
  W.value = [amplitude](VecView x) { return amplitude / (1.0 + norm_sq(x)); };
  W.gradient = [amplitude](VecView x, VecSpan g) {
    const double q = 1.0 + norm_sq(x);
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = -2.0 * amplitude * x[i] / (q * q);
  };
  W.sign = SignClass::nonnegative;
  W.sup_bound = amplitude;
  W.inf_value = 0.0;
  W.integrability_exponent = exponent;
  W.params = {{"amplitude", amplitude}, {"p", exponent}};
  return W;
}

Perturbation indicator_ball(int dim, double radius, double value, double exponent) {
  require(dim >= 1, "indicator_ball: dimension must be positive");
  require(radius > 0.0, "indicator_ball: radius must be positive");
  require(exponent > dim / 2.0, "indicator_ball: exponent must exceed d/2");
  Perturbation W;
  W.name = "indicator_ball";
  W.dim = dim;
  const double r2 = radius * radius;
  W.value = [r2, value](VecView x) { return norm_sq(x) < r2 ? value : 0.0; };
  W.gradient = [](VecView, VecSpan g) { std::fill(g.begin(), g.end(), 0.0); };
  W.sign = value >= 0.0 ? SignClass::nonnegative : SignClass::nonpositive;
  W.sup_bound = std::abs(value);
  W.inf_value = std::min(0.0, value);
  W.integrability_exponent = exponent;
  W.support_radius = radius;
  W.params = {{"radius", radius}, {"value", value}, {"p", exponent}};
  return W;
}

Perturbation neg_spike(int dim, double c, double width) {
  require(dim >= 1, "neg_spike: dimension must be positive");
  require(c >= 0.0, "neg_spike: depth c must be nonnegative");
  require(width > 0.0, "neg_spike: width must be positive");
  Perturbation W;
  W.name = "neg_spike";
  W.dim = dim;
  W.value = [c, width](VecView x) { return -c * std::max(0.0, 1.0 - norm(x) / width); };
  W.gradient = [c, width](VecView x, VecSpan g) {
    const double r = norm(x);
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = (r > 0.0 && r < width) ? c * x[i] / (r * width) : 0.0;
  };
  W.sign = SignClass::nonpositive;
  W.sup_bound = c;
  W.inf_value = -c;
  W.support_radius = width;
  W.params = {{"c", c}, {"width", width}};
  return W;
}

Perturbation nodal_indicator(int dim, double c) {
  require(dim >= 1, "nodal_indicator: dimension must be positive");
  require(c >= 0.0, "nodal_indicator: depth c must be nonnegative");
  Perturbation W;
  W.name = "neg_spike";
  W.dim = dim;
  W.value = [c](VecView x) { return norm_sq(x) == 0.0 ? -c : 0.0; };
  W.gradient = [](VecView, VecSpan g) { std::fill(g.begin(), g.end(), 0.0); };
  W.sign = SignClass::nonpositive;
  W.sup_bound = c;
  W.inf_value = -c;
  W.support_radius = 0.0;
  W.origin_atom = -c;
  W.params = {{"c", c}, {"nodal", 1.0}};
  return W;
}

bool in_parabola_set(double x, double y) {
  const double rho = std::hypot(x, y);
  if (rho < 4.0) return false;
  double theta = std::atan2(y, x);
  if (theta <= 0.0) theta += 2.0 * kPi;  // theta in (0, 2pi]
  for (int k = 2; std::ldexp(1.0, k) <= rho; ++k) {
    const long long n = 1LL << k;
    const double step = 2.0 * kPi / static_cast<double>(n);
    const double window = std::ldexp(1.0, -2 * k);
    const double vertex = std::ldexp(1.0, k);
    const double opening = std::ldexp(1.0, -3 * k);  // 4^{-2k} 2^k
    const long long below = 2 * static_cast<long long>(std::floor(theta / step / 2.0)) + 1;
    for (long long cand = below - 2; cand <= below + 2; cand += 2) {
      const long long h = ((cand % n) + n) % n;
      const double axis = static_cast<double>(h) * step;
      double gap = std::fmod(std::abs(theta - axis), 2.0 * kPi);
      gap = std::min(gap, 2.0 * kPi - gap);
      if (gap > window) continue;
      const double ux = std::cos(axis);
      const double uy = std::sin(axis);
      const double along = x * ux + y * uy;
      const double across = -x * uy + y * ux;
      if (along >= vertex && across * across <= opening * (along - vertex)) return true;
    }
  }
  return false;
}

Perturbation parabola_example() {
  Perturbation W;
  W.name = "parabola_example";
  W.dim = 2;
  W.value = [](VecView x) { return in_parabola_set(x[0], x[1]) ? 0.0 : 1.0; };
  W.gradient = [](VecView, VecSpan g) { std::fill(g.begin(), g.end(), 0.0); };
  W.sign = SignClass::nonnegative;
  W.sup_bound = 1.0;
  W.inf_value = 0.0;
  W.integrability_exponent = 2.0;
  return W;
}

// ---------------------------------------------------------------------------
// Registry

const std::vector<std::string>& potential_names() {
  static const std::vector<std::string> names{"zero", "sin2", "cos_sum", "constant"};
  return names;
}

const std::vector<std::string>& perturbation_names() {
  static const std::vector<std::string> names{"zero",           "constant",  "runge_decay",
                                              "indicator_ball", "neg_spike", "parabola_example"};
  return names;
}

PeriodicPotential make_potential(const std::string& name, int dim, const ParamMap& params) {
  if (name == "zero") return zero_potential(dim);
  if (name == "sin2") return sin2_potential(dim, param_or(params, "amplitude", 1.0));
  if (name == "cos_sum") return cos_sum_potential(dim, param_or(params, "amplitude", 1.0));
  if (name == "constant") return constant_potential(dim, param_or(params, "c", 0.0));
  throw InputError("unknown periodic potential '" + name + "'");
}

Perturbation make_perturbation(const std::string& name, int dim, const ParamMap& params) {
  if (name == "zero") return zero_perturbation(dim);
  if (name == "constant") return constant_perturbation(dim, param_or(params, "c", 0.0));
  if (name == "runge_decay") {
    return runge_decay(dim, param_or(params, "amplitude", 1.0), param_or(params, "p", 2.0));
  }
  if (name == "indicator_ball") {
    return indicator_ball(dim, param_or(params, "radius", 1.0), param_or(params, "value", 1.0),
                          param_or(params, "p", 2.0));
  }
  if (name == "neg_spike") {
    const double c = param_or(params, "c", 1.0);
    if (param_or(params, "nodal", 0.0) != 0.0) return nodal_indicator(dim, c);
    return neg_spike(dim, c, param_or(params, "width", 1.0));
  }
  if (name == "parabola_example") {
    require(dim == 2, "parabola_example is defined in d = 2 only");
    return parabola_example();
  }
  throw InputError("unknown perturbation '" + name + "'");
}

GeneralLagrangian quadratic_lagrangian(const PeriodicPotential& V) {
  GeneralLagrangian L;
  L.name = "quadratic+" + V.name;
  L.dim = V.dim;
  L.value = [V](VecView x, VecView xi) { return norm_sq(xi) + V(x); };
  L.gradient = [V](VecView x, VecView xi, VecSpan gx, VecSpan gxi) {
    V.grad(x, gx);
    for (std::size_t i = 0; i < xi.size(); ++i) gxi[i] = 2.0 * xi[i];
  };
  L.growth_exponent = 2.0;
  L.c1 = 1.0;
  L.c2 = std::max(1.0, V.v_max);
  return L;
}

GeneralLagrangian quartic_lagrangian(const PeriodicPotential& V) {
  GeneralLagrangian L;
  L.name = "quartic+" + V.name;
  L.dim = V.dim;
  L.value = [V](VecView x, VecView xi) {
    const double s = norm_sq(xi);
    return s * s + V(x);
  };
  L.gradient = [V](VecView x, VecView xi, VecSpan gx, VecSpan gxi) {
    V.grad(x, gx);
    const double s = norm_sq(xi);
    for (std::size_t i = 0; i < xi.size(); ++i) gxi[i] = 4.0 * s * xi[i];
  };
  L.growth_exponent = 4.0;
  L.c1 = 1.0;
  L.c2 = std::max(1.0, V.v_max);
  return L;
}

double eval_lagrangian(const PeriodicPotential& V, const Perturbation* W, VecView x, VecView xi) {
  require_dim(x.size(), V.dim, "eval_lagrangian(x)");
  require_dim(xi.size(), V.dim, "eval_lagrangian(xi)");
  if (W) require_dim(static_cast<std::size_t>(W->dim), V.dim, "eval_lagrangian(W)");
  double v = norm_sq(xi) + V(x);
  if (W) v += (*W)(x);
  return v;
}

double eval_hamiltonian(const PeriodicPotential& V, const Perturbation* W, VecView x, VecView p) {
  require_dim(x.size(), V.dim, "eval_hamiltonian(x)");
  require_dim(p.size(), V.dim, "eval_hamiltonian(p)");
  if (W) require_dim(static_cast<std::size_t>(W->dim), V.dim, "eval_hamiltonian(W)");
  double h = 0.25 * norm_sq(p) - V(x);
  if (W) h -= (*W)(x);
  return h;
}

// ---------------------------------------------------------------------------
// Integral estimators

namespace {

double cylinder_sum(const Perturbation& W, const Vec& axis, const std::vector<Vec>& across, double r,
                    double R, int per_unit, std::size_t* cells) {
  const std::size_t d = axis.size();
  const std::size_t m = across.size();
  const auto n_s = static_cast<std::size_t>(std::ceil(2.0 * R * per_unit));
  const auto n_z = static_cast<std::size_t>(std::ceil(2.0 * r * per_unit));
  const double hs = 2.0 * R / static_cast<double>(n_s);
  const double hz = 2.0 * r / static_cast<double>(n_z);
  const double cell = hs * std::pow(hz, static_cast<double>(m));
  std::vector<std::size_t> idx(m, 0);
  Vec z(m), x(d);
  double total = 0.0;
  std::size_t count = 0;
  // odometer over the transverse grid
  for (bool more = true; more;) {
    double zz = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      z[j] = -r + (static_cast<double>(idx[j]) + 0.5) * hz;
      zz += z[j] * z[j];
    }
    if (zz < r * r) {
      double line = 0.0;
      for (std::size_t i = 0; i < n_s; ++i) {
        const double s = -R + (static_cast<double>(i) + 0.5) * hs;
        if (s * s + zz >= R * R) continue;
        for (std::size_t c = 0; c < d; ++c) {
          double v = s * axis[c];
          for (std::size_t j = 0; j < m; ++j) v += z[j] * across[j][c];
          x[c] = v;
        }
        const double w = W(x);
        check_finite(w, "cylinder_average");
        line += w;
        ++count;
      }
      total += line;
    }
    more = false;
    for (std::size_t j = 0; j < m; ++j) {
      if (++idx[j] < n_z) {
        more = true;
        break;
      }
      idx[j] = 0;
    }
  }
  if (cells) *cells = count;
  return total * cell / R;
}


}  // namespace

double ball_power_integral(const Perturbation& W, double p, VecView center, double radius, int per_unit) {
  const std::size_t d = center.size();
  const auto n = static_cast<std::size_t>(std::ceil(2.0 * radius * per_unit));
  const double h = 2.0 * radius / static_cast<double>(n);
  std::vector<std::size_t> idx(d, 0);
  Vec x(d);
  double total = 0.0;
  for (bool more = true; more;) {
    double rr = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double off = -radius + (static_cast<double>(idx[j]) + 0.5) * h;
      rr += off * off;
      x[j] = center[j] + off;
    }
    if (rr < radius * radius) {
      const double w = W(x);
      check_finite(w, "lp_unif_estimate");
      total += std::pow(std::abs(w), p);
    }
    more = false;
    for (std::size_t j = 0; j < d; ++j) {
      if (++idx[j] < n) {
        more = true;
        break;
      }
      idx[j] = 0;
    }
  }
  return total * std::pow(h, static_cast<double>(d));
}

IntegralEstimate cylinder_average(const Perturbation& W, VecView xi, double r, double R,
                                  const QuadratureSpec& quad) {
  quad.validate();
  require(W.dim >= 2, "cylinder_average: requires d >= 2 (use line_average in d = 1)");
  require_dim(xi.size(), W.dim, "cylinder_average(xi)");
  require(r > 0.0 && R > r, "cylinder_average: requires 0 < r < R");
  const double len = norm(xi);
  require(len > 0.0, "cylinder_average: direction must be nonzero");
  Vec axis(xi.begin(), xi.end());
  for (auto& c : axis) c /= len;
  const auto across = complement_basis(axis);
  IntegralEstimate est;
  est.coarse_value = cylinder_sum(W, axis, across, r, R, quad.samples_per_interval, &est.cells);
  est.value = cylinder_sum(W, axis, across, r, R, 2 * quad.samples_per_interval, nullptr);
  est.converged = est.self_check_delta() < quad.tolerance;
  return est;
}

IntegralEstimate line_average(const Perturbation& W, double R, const QuadratureSpec& quad) {
  quad.validate();
  require(W.dim == 1, "line_average: requires d = 1");
  require(R > 0.0, "line_average: R must be positive");
  auto sum = [&](int per_unit, std::size_t* cells) {
    const auto n = static_cast<std::size_t>(std::ceil(2.0 * R * per_unit));
    const double h = 2.0 * R / static_cast<double>(n);
    double total = 0.0;
    double x[1];
    for (std::size_t i = 0; i < n; ++i) {
      x[0] = -R + (static_cast<double>(i) + 0.5) * h;
      const double w = W(VecView(x, 1));
      check_finite(w, "line_average");
      total += w;
    }
    if (cells) *cells = n;
    return total * h / R;
  };
  IntegralEstimate est;
  est.coarse_value = sum(quad.samples_per_interval, &est.cells);
  est.value = sum(2 * quad.samples_per_interval, nullptr);
  est.converged = est.self_check_delta() < quad.tolerance;
  return est;
}

IntegralEstimate lp_unif_estimate(const Perturbation& W, double p, const std::vector<Vec>& centers,
                                  const QuadratureSpec& quad) {
  quad.validate();
  require(!centers.empty(), "lp_unif_estimate: centers must be nonempty");
  require(p > W.dim / 2.0, "lp_unif_estimate: exponent must exceed d/2");
  IntegralEstimate est;
  est.coarse_value = -kInf;
  est.value = -kInf;
  for (const auto& c : centers) {
    require_dim(c.size(), W.dim, "lp_unif_estimate(center)");
    est.coarse_value = std::max(est.coarse_value, ball_power_integral(W, p, c, 1.0, quad.samples_per_interval));
    est.value = std::max(est.value, ball_power_integral(W, p, c, 1.0, 2 * quad.samples_per_interval));
  }
  est.cells = static_cast<std::size_t>(std::pow(2.0 * quad.samples_per_interval, W.dim)) * centers.size();
  est.converged = est.self_check_delta() < quad.tolerance;
  return est;
}

// ---------------------------------------------------------------------------
// Sampled invariant checks

SampleCheck check_potential(const PeriodicPotential& V, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-5.0, 5.0);
  std::uniform_int_distribution<int> shift(-3, 3);
  SampleCheck out;
  Vec x(V.dim), y(V.dim);
  for (int s = 0; s < samples; ++s) {
    for (int i = 0; i < V.dim; ++i) {
      x[i] = coord(rng);
      y[i] = x[i] + shift(rng);
    }
    const double vx = V(x);
    const double vy = V(y);
    const double per = std::abs(vx - vy);
    out.worst = std::max(out.worst, per);
    if (per > 1e-12 * std::max(1.0, std::abs(vx))) {
      out.ok = false;
      out.detail = "periodicity violated";
    }
    if (vx < V.v_min - 1e-12 || vx > V.v_max + 1e-12) {
      out.ok = false;
      out.detail = "value outside [v_min, v_max]";
    }
  }
  return out;
}

SampleCheck check_perturbation(const Perturbation& W, int samples, double radius, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-radius, radius);
  SampleCheck out;
  Vec x(W.dim);
  for (int s = 0; s < samples; ++s) {
    for (auto& c : x) c = coord(rng);
    const double w = W(x);
    if (W.sign == SignClass::nonnegative && w < 0.0) {
      out.ok = false;
      out.detail = "negative value for nonnegative perturbation";
    }
    if (W.sign == SignClass::nonpositive && w > 0.0) {
      out.ok = false;
      out.detail = "positive value for nonpositive perturbation";
    }
    if (std::isfinite(W.sup_bound) && std::abs(w) > W.sup_bound) {
      out.ok = false;
      out.detail = "sup bound exceeded";
    }
    out.worst = std::max(out.worst, std::abs(w));
  }
  return out;
}

SampleCheck check_lagrangian_growth(const GeneralLagrangian& L, int samples, double xi_radius,
                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-3.0, 3.0);
  std::uniform_real_distribution<double> vel(-xi_radius, xi_radius);
  SampleCheck out;
  Vec x(L.dim), xi(L.dim);
  for (int s = 0; s < samples; ++s) {
    for (auto& c : x) c = coord(rng);
    for (auto& c : xi) c = vel(rng);
    const double v = L(x, xi);
    const double m = std::pow(norm(xi), L.growth_exponent);
    const double lo = L.c1 * m;
    const double hi = L.c2 * (1.0 + m);
    if (v < lo - 1e-12 || v > hi + 1e-12) {
      out.ok = false;
      std::ostringstream msg;
      msg << "growth bounds violated: L=" << v << " not in [" << lo << ", " << hi << "]";
      out.detail = msg.str();
    }
  }
  return out;
}

}  // namespace homoglab
