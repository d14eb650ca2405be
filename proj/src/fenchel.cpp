#include "homoglab/fenchel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "homoglab/parallel.hpp"

namespace homoglab {

namespace {

std::size_t grid_size(const std::vector<Vec>& axes) {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.size();
  return n;
}

Vec grid_point(const std::vector<Vec>& axes, std::size_t flat) {
  Vec p(axes.size());
  for (std::size_t a = axes.size(); a-- > 0;) {
    p[a] = axes[a][flat % axes[a].size()];
    flat /= axes[a].size();
  }
  return p;
}

// all grid points, row-major
std::vector<Vec> points_of(const std::vector<Vec>& axes) {
  const std::size_t n = grid_size(axes);
  std::vector<Vec> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = grid_point(axes, i);
  return pts;
}

Vec discrete_sup(const std::vector<Vec>& out_pts, const std::vector<Vec>& in_pts, const Vec& in_values) {
  Vec out(out_pts.size());
  parallel_for(out_pts.size(), [&](std::size_t i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < in_pts.size(); ++j) best = std::max(best, dot(out_pts[i], in_pts[j]) - in_values[j]);
    out[i] = best;
  });
  return out;
}

}  // namespace

Vec ConjugateTable::point(std::size_t flat) const { return grid_point(p_axes, flat); }

double ConjugateTable::at(VecView p) const {
  require_dim(p.size(), dim, "ConjugateTable::at");
  std::size_t flat = 0;
  for (int a = 0; a < dim; ++a) {
    const Vec& ax = p_axes[a];
    auto it = std::min_element(ax.begin(), ax.end(),
                               [&](double l, double r) { return std::abs(l - p[a]) < std::abs(r - p[a]); });
    if (std::abs(*it - p[a]) > 1e-9 * std::max(1.0, std::abs(p[a]))) {
      throw InputError("ConjugateTable::at: p is not a grid point");
    }
    flat = flat * ax.size() + static_cast<std::size_t>(it - ax.begin());
  }
  return values[flat];
}

nlohmann::json ConjugateTable::to_json() const {
  return {{"dim", dim}, {"p_axes", p_axes}, {"values", values}, {"source", source}};
}

ConjugateTable legendre_transform(const HomogenizedLagrangian& f, const std::vector<Vec>& p_axes) {
  f.validate();
  require(static_cast<int>(p_axes.size()) == f.dim, "legendre_transform: p-grid dimension mismatch");
  for (int a = 0; a < f.dim; ++a) {
    require(!p_axes[a].empty(), "legendre_transform: empty p axis");
    const double limit = 2.0 * f.max_abs_axis(a) * (1.0 + 1e-12);
    for (double p : p_axes[a]) {
      if (std::abs(p) > limit) {
        throw InputError("legendre_transform: p component " + std::to_string(p) + " on axis " + std::to_string(a) +
                         " exceeds the hull rule |p| <= 2 max|xi| = " + std::to_string(limit));
      }
    }
  }
  ConjugateTable g;
  g.dim = f.dim;
  g.p_axes = p_axes;
  g.values = discrete_sup(points_of(p_axes), points_of(f.axes), f.values);
  g.source = f.metadata;
  return g;
}

Vec biconjugate_values(const HomogenizedLagrangian& f, const std::vector<Vec>& p_axes) {
  const ConjugateTable g = legendre_transform(f, p_axes);
  return discrete_sup(points_of(f.axes), points_of(p_axes), g.values);
}

double biconjugate_check(const HomogenizedLagrangian& f, const std::vector<Vec>& p_axes) {
  const Vec bi = biconjugate_values(f, p_axes);
  double gap = 0.0;
  for (std::size_t i = 0; i < bi.size(); ++i) gap = std::max(gap, std::abs(f.values[i] - bi[i]));
  return gap;
}

double fenchel_young_min(const HomogenizedLagrangian& f, const ConjugateTable& g) {
  const auto xs = points_of(f.axes);
  const auto ps = points_of(g.p_axes);
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < ps.size(); ++j) worst = std::min(worst, f.values[i] + g.values[j] - dot(ps[j], xs[i]));
  }
  return worst;
}

Vec lower_convex_envelope(const HomogenizedLagrangian& f) {
  f.validate();
  if (f.dim == 1) {
    const Vec& x = f.axes[0];
    const Vec& y = f.values;
    std::vector<std::size_t> hull;
    for (std::size_t i = 0; i < x.size(); ++i) {
      while (hull.size() >= 2) {
        const std::size_t a = hull[hull.size() - 2], b = hull.back();
        // drop b when it lies on or above the chord a-i
        if ((y[b] - y[a]) * (x[i] - x[a]) >= (y[i] - y[a]) * (x[b] - x[a])) {
          hull.pop_back();
        } else {
          break;
        }
      }
      hull.push_back(i);
    }
    Vec env(x.size());
    std::size_t h = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      while (h + 1 < hull.size() && hull[h + 1] <= i) ++h;
      if (hull[h] == i || h + 1 >= hull.size()) {
        env[i] = y[i];
        continue;
      }
      const std::size_t a = hull[h], b = hull[h + 1];
      env[i] = y[a] + (y[b] - y[a]) * (x[i] - x[a]) / (x[b] - x[a]);
    }
    return env;
  }
  std::vector<Vec> p_axes(f.dim);
  for (int a = 0; a < f.dim; ++a) {
    const double P = 2.0 * f.max_abs_axis(a);
    const int n = 4 * static_cast<int>(f.axes[a].size());
    for (int k = 0; k <= n; ++k) p_axes[a].push_back(-P + 2.0 * P * k / n);
  }
  Vec env = biconjugate_values(f, p_axes);
  for (std::size_t i = 0; i < env.size(); ++i) env[i] = std::min(env[i], f.values[i]);
  return env;
}

int midpoint_convexity_violations(const std::vector<Vec>& axes, const Vec& values, double tol) {
  const std::size_t n = grid_size(axes);
  require(values.size() == n, "midpoint_convexity_violations: size mismatch");
  const int d = static_cast<int>(axes.size());
  std::vector<std::size_t> stride(d, 1);
  for (int a = d - 2; a >= 0; --a) stride[a] = stride[a + 1] * axes[a + 1].size();
  int count = 0;
  for (std::size_t flat = 0; flat < n; ++flat) {
    for (int a = 0; a < d; ++a) {
      const std::size_t j = (flat / stride[a]) % axes[a].size();
      if (j == 0 || j + 1 >= axes[a].size()) continue;
      const double xl = axes[a][j - 1], xm = axes[a][j], xr = axes[a][j + 1];
      const double fl = values[flat - stride[a]], fm = values[flat], fr = values[flat + stride[a]];
      const double chord = ((xr - xm) * fl + (xm - xl) * fr) / (xr - xl);
      if (fm > chord + tol) ++count;
    }
  }
  return count;
}

}  // namespace homoglab
