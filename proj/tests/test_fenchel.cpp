#include <cmath>
#include <random>

#include "doctest.h"

#include "homoglab/fenchel.hpp"

using namespace homoglab;

namespace {

HomogenizedLagrangian table(const std::vector<Vec>& axes, const std::function<double(VecView)>& g) {
  return HomogenizedLagrangian::from_function(axes, g, "test");
}

}  // namespace

TEST_CASE("conjugate of xi^2 is p^2 / 4 up to the grid error") {
  const double h = 0.05;
  const auto f = table({symmetric_axis(3.0, h)}, [](VecView x) { return x[0] * x[0]; });
  const Vec p = symmetric_axis(4.0, 0.1);
  const auto g = legendre_transform(f, {p});
  for (double q : p) {
    const double exact = q * q / 4;
    CHECK(g.at(Vec{q}) <= exact + 1e-12);
    CHECK(g.at(Vec{q}) >= exact - h * h / 4 - 1e-12);
  }
  CHECK(fenchel_young_min(f, g) >= -1e-12);
  CHECK(biconjugate_check(f, {symmetric_axis(6.0, 0.01)}) < 1e-3);
}

TEST_CASE("conjugate in two dimensions separates for a sum") {
  const auto ax = symmetric_axis(2.0, 0.25);
  const auto f = table({ax, ax}, [](VecView x) { return x[0] * x[0] + std::abs(x[1]); });
  const auto f1 = table({ax}, [](VecView x) { return x[0] * x[0]; });
  const auto f2 = table({ax}, [](VecView x) { return std::abs(x[0]); });
  const Vec p = symmetric_axis(2.0, 0.5);
  const auto g = legendre_transform(f, {p, p});
  const auto g1 = legendre_transform(f1, {p});
  const auto g2 = legendre_transform(f2, {p});
  for (double a : p)
    for (double b : p) CHECK(g.at(Vec{a, b}) == doctest::Approx(g1.at(Vec{a}) + g2.at(Vec{b})).epsilon(1e-12));
}

TEST_CASE("shift, scaling and order rules hold on the grid") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto ax = symmetric_axis(2.0, 0.25);
  Vec base(ax.size());
  for (auto& v : base) v = u(rng);
  auto f_of = [&](const Vec& vals) {
    auto f = table({ax}, [](VecView) { return 0.0; });
    f.values = vals;
    return f;
  };
  const auto f = f_of(base);
  const Vec p = symmetric_axis(2.0, 0.25);
  const auto g = legendre_transform(f, {p});

  // (f + c)* = f* - c
  Vec plus = base;
  for (auto& v : plus) v += 0.7;
  const auto gc = legendre_transform(f_of(plus), {p});
  for (double q : p) CHECK(gc.at(Vec{q}) == doctest::Approx(g.at(Vec{q}) - 0.7).epsilon(1e-12));

  // (f + <a, .>)*(p) = f*(p - a) for grid-aligned a
  const double a = 0.5;
  Vec tilt = base;
  for (std::size_t i = 0; i < ax.size(); ++i) tilt[i] += a * ax[i];
  const auto gt = legendre_transform(f_of(tilt), {p});
  for (double q : p) {
    if (std::abs(q - a) > 2.0) continue;
    CHECK(gt.at(Vec{q}) == doctest::Approx(g.at(Vec{q - a})).epsilon(1e-12));
  }

  // f <= h implies f* >= h*
  Vec big = base;
  for (auto& v : big) v += u(rng);
  const auto gb = legendre_transform(f_of(big), {p});
  for (double q : p) CHECK(gb.at(Vec{q}) <= g.at(Vec{q}) + 1e-12);
}

TEST_CASE("p-grid outside the allowed hull is rejected") {
  const auto f = table({symmetric_axis(1.0, 0.5)}, [](VecView x) { return x[0] * x[0]; });
  CHECK_THROWS_AS(legendre_transform(f, {symmetric_axis(2.5, 0.5)}), InputError);
  CHECK_THROWS_AS(table({symmetric_axis(1.0, 0.5)}, [](VecView) { return 0.0; }).point(99), InputError);
}

TEST_CASE("lower convex envelope of a double well") {
  const auto ax = symmetric_axis(2.0, 0.25);
  const auto f = table({ax}, [](VecView x) { return std::pow(x[0] * x[0] - 1.0, 2); });
  CHECK(midpoint_convexity_violations({ax}, f.values, 1e-9) > 0);
  const Vec env = lower_convex_envelope(f);
  CHECK(midpoint_convexity_violations({ax}, env, 1e-9) == 0);
  for (std::size_t i = 0; i < ax.size(); ++i) {
    CHECK(env[i] <= f.values[i] + 1e-12);
    if (std::abs(ax[i]) <= 1.0) CHECK(env[i] == doctest::Approx(0.0).epsilon(1e-12));
    else CHECK(env[i] == doctest::Approx(f.values[i]).epsilon(1e-12));
  }
  // a convex table is its own envelope and its own biconjugate
  const auto c = table({ax}, [](VecView x) { return std::abs(x[0]) + x[0] * x[0]; });
  const Vec same = lower_convex_envelope(c);
  for (std::size_t i = 0; i < ax.size(); ++i) CHECK(same[i] == doctest::Approx(c.values[i]).epsilon(1e-12));
}
