#include "homoglab/homogenized_lagrangian.hpp"

#include <algorithm>
#include <cmath>

namespace homoglab {

Vec symmetric_axis(double half_width, double step) {
  require(half_width >= 0.0 && step > 0.0, "symmetric_axis: need half_width >= 0 and step > 0");
  const auto k = static_cast<long>(std::llround(half_width / step));
  require(std::abs(k * step - half_width) < 1e-9 * std::max(1.0, half_width),
          "symmetric_axis: half_width must be a multiple of step");
  Vec axis;
  axis.reserve(2 * k + 1);
  for (long i = -k; i <= k; ++i) axis.push_back(static_cast<double>(i) * step);
  return axis;
}

std::vector<std::size_t> HomogenizedLagrangian::unravel(std::size_t flat) const {
  require(flat < values.size(), "HomogenizedLagrangian: flat index out of range");
  std::vector<std::size_t> idx(axes.size());
  for (std::size_t a = axes.size(); a-- > 0;) {
    idx[a] = flat % axes[a].size();
    flat /= axes[a].size();
  }
  return idx;
}

std::size_t HomogenizedLagrangian::ravel(const std::vector<std::size_t>& idx) const {
  std::size_t flat = 0;
  for (std::size_t a = 0; a < axes.size(); ++a) flat = flat * axes[a].size() + idx[a];
  return flat;
}

Vec HomogenizedLagrangian::point(std::size_t flat) const {
  const auto idx = unravel(flat);
  Vec p(axes.size());
  for (std::size_t a = 0; a < axes.size(); ++a) p[a] = axes[a][idx[a]];
  return p;
}

std::size_t HomogenizedLagrangian::zero_index() const {
  std::vector<std::size_t> idx(axes.size());
  for (std::size_t a = 0; a < axes.size(); ++a) {
    auto it = std::find(axes[a].begin(), axes[a].end(), 0.0);
    if (it == axes[a].end()) throw InputError("HomogenizedLagrangian: grid does not contain 0");
    idx[a] = static_cast<std::size_t>(it - axes[a].begin());
  }
  return ravel(idx);
}

bool HomogenizedLagrangian::in_hull(VecView xi, double slack) const {
  if (static_cast<int>(xi.size()) != dim) return false;
  for (int a = 0; a < dim; ++a) {
    if (xi[a] < axes[a].front() - slack || xi[a] > axes[a].back() + slack) return false;
  }
  return true;
}

double HomogenizedLagrangian::max_abs_axis(int i) const {
  return std::max(std::abs(axes[i].front()), std::abs(axes[i].back()));
}

double HomogenizedLagrangian::operator()(VecView xi) const {
  require_dim(xi.size(), dim, "HomogenizedLagrangian");
  if (!in_hull(xi)) {
    std::string msg = "slope (";
    for (int a = 0; a < dim; ++a) msg += (a ? ", " : "") + std::to_string(xi[a]);
    throw ExtrapolationError(msg + ") lies outside the tabulated hull");
  }
  std::vector<std::size_t> lo(dim);
  Vec frac(dim);
  for (int a = 0; a < dim; ++a) {
    const Vec& ax = axes[a];
    const double x = std::clamp(xi[a], ax.front(), ax.back());
    if (ax.size() == 1) {
      lo[a] = 0;
      frac[a] = 0.0;
      continue;
    }
    auto it = std::upper_bound(ax.begin(), ax.end(), x);
    std::size_t j = it == ax.begin() ? 0 : static_cast<std::size_t>(it - ax.begin()) - 1;
    j = std::min(j, ax.size() - 2);
    lo[a] = j;
    frac[a] = (x - ax[j]) / (ax[j + 1] - ax[j]);
  }
  double total = 0.0;
  std::vector<std::size_t> idx(dim);
  for (std::size_t corner = 0; corner < (std::size_t{1} << dim); ++corner) {
    double w = 1.0;
    for (int a = 0; a < dim; ++a) {
      const bool up = (corner >> a) & 1U;
      if (up && axes[a].size() == 1) {
        w = 0.0;
        break;
      }
      idx[a] = lo[a] + (up ? 1 : 0);
      w *= up ? frac[a] : 1.0 - frac[a];
    }
    if (w == 0.0) continue;
    total += w * values[ravel(idx)];
  }
  return total;
}

void HomogenizedLagrangian::validate() const {
  require(dim >= 1 && static_cast<int>(axes.size()) == dim, "HomogenizedLagrangian: axes/dimension mismatch");
  std::size_t n = 1;
  for (const auto& ax : axes) {
    require(!ax.empty(), "HomogenizedLagrangian: empty axis");
    for (std::size_t i = 1; i < ax.size(); ++i) require(ax[i] > ax[i - 1], "HomogenizedLagrangian: axis not increasing");
    n *= ax.size();
  }
  require(values.size() == n, "HomogenizedLagrangian: value count does not match grid");
  for (double v : values) require(std::isfinite(v), "HomogenizedLagrangian: non-finite value");
}

nlohmann::json HomogenizedLagrangian::to_json() const {
  nlohmann::json j;
  j["dim"] = dim;
  j["axes"] = axes;
  j["values"] = values;
  j["f0"] = f0;
  j["envelope_applied"] = envelope_applied;
  j["convexity_violations"] = convexity_violations;
  j["metadata"] = metadata;
  return j;
}

HomogenizedLagrangian HomogenizedLagrangian::from_json(const nlohmann::json& j) {
  HomogenizedLagrangian f;
  try {
    f.dim = j.at("dim").get<int>();
    f.axes = j.at("axes").get<std::vector<Vec>>();
    f.values = j.at("values").get<Vec>();
    f.f0 = j.at("f0").get<double>();
    f.envelope_applied = j.value("envelope_applied", false);
    f.convexity_violations = j.value("convexity_violations", 0);
    f.metadata = j.value("metadata", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("HomogenizedLagrangian JSON: ") + e.what());
  }
  f.validate();
  return f;
}

HomogenizedLagrangian HomogenizedLagrangian::from_function(std::vector<Vec> axes,
                                                           const std::function<double(VecView)>& fn,
                                                           const std::string& label) {
  HomogenizedLagrangian f;
  f.dim = static_cast<int>(axes.size());
  f.axes = std::move(axes);
  std::size_t n = 1;
  for (const auto& ax : f.axes) n *= ax.size();
  f.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) f.values[i] = fn(f.point(i));
  f.validate();
  const Vec zero(f.dim, 0.0);
  f.f0 = fn(zero);
  f.metadata["source"] = label;
  return f;
}

}  // namespace homoglab
