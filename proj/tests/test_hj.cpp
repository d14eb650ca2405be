#include <algorithm>
#include <cmath>

#include "doctest.h"

#include "homoglab/hj.hpp"

using namespace homoglab;

namespace {

HomogenizedLagrangian quadratic_table(double half_width, double step, double c = 0.0) {
  return HomogenizedLagrangian::from_function({symmetric_axis(half_width, step)},
                                              [c](VecView x) { return x[0] * x[0] + c; }, "sq");
}

std::vector<Vec> points(std::initializer_list<double> xs) {
  std::vector<Vec> out;
  for (double x : xs) out.push_back({x});
  return out;
}

std::vector<Vec> grid(double lo, double hi, double step) {
  std::vector<Vec> out;
  const int n = static_cast<int>(std::lround((hi - lo) / step));
  for (int i = 0; i <= n; ++i) out.push_back({lo + i * step});
  return out;
}

}  // namespace

TEST_CASE("S_eps without potential is the free-particle action") {
  HJSettings s;
  const auto r = s_eps(zero_potential(1), nullptr, 0.1, Vec{0.2}, Vec{-0.5}, 0.7, s);
  CHECK(r.value == doctest::Approx(0.49 / 0.7).epsilon(1e-12));
}

TEST_CASE("S_eps is symmetric under reversal for an even potential") {
  HJSettings s;
  const auto V = sin2_potential(1);
  const double a = s_eps(V, nullptr, 0.2, Vec{0.0}, Vec{0.6}, 1.0, s).value;
  const double b = s_eps(V, nullptr, 0.2, Vec{0.6}, Vec{0.0}, 1.0, s).value;
  CHECK(a == doctest::Approx(b).epsilon(1e-3));
}

TEST_CASE("homogenized Hopf-Lax: quadratic datum gives x^2 / (1 + t)") {
  const auto f = quadratic_table(4.0, 0.01);
  const auto phi = quadratic_datum(1, 3.0);
  const auto xs = points({-0.5, 0.0, 0.3, 1.0});
  const Vec ts{0.5, 1.0};
  const auto u = solve_evolutionary_hom(f, phi, xs, ts, grid(-3.0, 3.0, 0.005));
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const double x = xs[i][0];
      CHECK(u.at(i, k) == doctest::Approx(x * x / (1 + ts[k])).epsilon(1e-4));
    }
}

TEST_CASE("homogenized Hopf-Lax: plane wave gives <p, x> - t f*(p)") {
  const auto f = quadratic_table(4.0, 0.01);
  const double p = 0.8;
  const auto phi = plane_wave_datum(Vec{p}, 4.0);
  const auto xs = points({-0.5, 0.25});
  const Vec ts{0.5, 1.0};
  const auto u = solve_evolutionary_hom(f, phi, xs, ts, grid(-4.0, 4.0, 0.005));
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t k = 0; k < ts.size(); ++k)
      CHECK(u.at(i, k) == doctest::Approx(p * xs[i][0] - ts[k] * p * p / 4).epsilon(1e-4));
}

TEST_CASE("constant V and W: oscillatory and homogenized fields coincide") {
  const double c = 0.4;
  HJSettings s;
  const auto V = constant_potential(1, c);
  const auto W = constant_perturbation(1, 0.1);
  const auto f = quadratic_table(6.0, 0.05, c + 0.1);
  const auto phi = tent_datum(1);
  const auto xs = points({-0.3, 0.45});
  const Vec ts{0.5, 1.0};
  const auto ys = y_grid_1d(xs, ts, 0.0, phi, 0.05);
  const auto ue = solve_evolutionary_eps(V, &W, 0.1, phi, xs, ts, ys, s);
  const auto uh = solve_evolutionary_hom(f, phi, xs, ts, ys);
  CHECK(compare_fields(ue, uh).sup < 1e-9);
}

TEST_CASE("a nonnegative perturbation can only raise the value") {
  HJSettings s;
  const auto V = sin2_potential(1);
  const auto W = runge_decay(1);
  const auto phi = tent_datum(1);
  const auto xs = points({-0.25, 0.35});
  const Vec ts{0.5};
  const auto ys = y_grid_1d(xs, ts, V.v_max + 1.0, phi, 0.05);
  const auto u0 = solve_evolutionary_eps(V, nullptr, 0.2, phi, xs, ts, ys, s);
  const auto uw = solve_evolutionary_eps(V, &W, 0.2, phi, xs, ts, ys, s);
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(uw.at(i) >= u0.at(i) - 1e-9);
}

TEST_CASE("steady problem: constants, comparison bounds and lambda scaling") {
  HJSettings s;
  const auto xs = points({0.0, 0.3});
  const auto uc = solve_steady_eps(constant_potential(1, 0.6), nullptr, 0.1, 2.0, xs, s);
  CHECK(uc.steady());
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(uc.at(i) == doctest::Approx(0.3).epsilon(1e-12));

  const auto V = sin2_potential(1);
  const auto W = runge_decay(1);
  const auto u = solve_steady_eps(V, &W, 0.2, 1.0, xs, s);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK(u.at(i) >= V.v_min);
    CHECK(u.at(i) <= V.v_max + 1.0);
  }

  const auto f = quadratic_table(2.0, 0.05, 0.25);
  const auto h1 = solve_steady_hom(f, 1.0, xs);
  const auto h2 = solve_steady_hom(f, 2.0, xs);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK(h1.at(i) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(h2.at(i) == doctest::Approx(0.125).epsilon(1e-12));
  }
}

TEST_CASE("time-monotonicity of S_eps with the running-cost bound") {
  HJSettings s;
  const auto V = sin2_potential(1);
  const auto W = runge_decay(1);
  const auto rows = dista2_check(V, &W, 0.2, points({0.0}), points({0.0, 0.5}), Vec{0.5, 1.0, 1.5}, s, 1e-6);
  CHECK(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK(r.holds);
    CHECK(r.s2 <= r.bound * (1 + 1e-6));
  }
}

TEST_CASE("y window and grid") {
  const auto phi = tent_datum(1);
  // L = 1, range = 1, t = 1, M = 0: min(1, 1) * 1.5
  CHECK(y_window_radius(1.0, 0.0, phi) == doctest::Approx(1.5));
  const auto xs = points({-0.475, 0.125});
  const auto ys = y_grid_1d(xs, Vec{1.0}, 0.0, phi, 0.05);
  const bool has_x0 =
      std::any_of(ys.begin(), ys.end(), [](const Vec& y) { return std::abs(y[0] + 0.475) < 1e-12; });
  CHECK(has_x0);
  CHECK(ys.front()[0] <= -0.475 - 1.5 + 1e-12);
  CHECK(ys.back()[0] >= 0.125 + 1.5 - 1e-12);
}

TEST_CASE("field comparison and CSV") {
  ValueField a;
  a.x_points = points({0.0, 1.0});
  a.t_grid = {0.5, 1.0};
  a.values = {0.0, 1.0, 2.0, 3.0};
  ValueField b = a;
  b.values = {0.0, 1.5, 2.0, 2.0};
  const auto d = compare_fields(a, b);
  CHECK(d.sup == 1.0);
  CHECK(d.mean == doctest::Approx(0.375));
  CHECK(a.to_csv().rfind("x_1,t,value\n", 0) == 0);
  ValueField c = a;
  c.t_grid = {0.5};
  CHECK_THROWS_AS(compare_fields(a, c), InputError);
}
