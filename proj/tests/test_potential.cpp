#include <cmath>
#include <random>

#include "doctest.h"

#include "homoglab/potential.hpp"

using namespace homoglab;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("sin2 is periodic with the declared range") {
  const auto V = sin2_potential(2);
  CHECK(V.v_min == 0.0);
  CHECK(V.v_max == 2.0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    const Vec x{u(rng), u(rng)};
    const Vec y{x[0] + 3.0, x[1] - 2.0};
    CHECK(V(x) == doctest::Approx(V(y)).epsilon(1e-12));
    CHECK(V(x) >= V.v_min - 1e-15);
    CHECK(V(x) <= V.v_max + 1e-15);
  }
  CHECK(check_potential(V, 500, 3).ok);
}

TEST_CASE("analytic gradient agrees with central differences") {
  const auto V = cos_sum_potential(2, 0.7);
  const Vec x{0.13, -0.41};
  Vec g(2);
  V.grad(x, g);
  const double h = 1e-6;
  for (int i = 0; i < 2; ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    CHECK(g[i] == doctest::Approx((V(xp) - V(xm)) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("registry builds every name and rejects unknown ones") {
  for (const auto& n : potential_names()) CHECK(make_potential(n, 1).dim == 1);
  for (const auto& n : perturbation_names()) {
    const int d = n == "parabola_example" ? 2 : 1;
    CHECK(make_perturbation(n, d).dim == d);
  }
  CHECK_THROWS_AS(make_potential("nope", 1), InputError);
  CHECK_THROWS_AS(make_perturbation("nope", 1), InputError);
  CHECK_THROWS_AS(make_perturbation("parabola_example", 3), InputError);
}

TEST_CASE("nodal indicator is an origin atom") {
  const auto W = make_perturbation("neg_spike", 1, {{"c", 2.0}, {"nodal", 1.0}});
  REQUIRE(W.origin_atom.has_value());
  CHECK(*W.origin_atom == -2.0);
  CHECK(W.sign == SignClass::nonpositive);
  CHECK(W(Vec{0.3}) == 0.0);
}

TEST_CASE("neg_spike shape") {
  const auto W = neg_spike(1, 1.0, 1.0);
  CHECK(W(Vec{0.0}) == -1.0);
  CHECK(W(Vec{0.5}) == doctest::Approx(-0.5));
  CHECK(W(Vec{1.5}) == 0.0);
}

TEST_CASE("Hamiltonian is the conjugate of the Lagrangian in xi") {
  const auto V = sin2_potential(1);
  const auto W = runge_decay(1);
  const Vec x{0.3};
  for (double p : {-2.0, -0.5, 0.0, 1.3}) {
    double best = -1e300;
    for (int k = -40000; k <= 40000; ++k) {
      const Vec xi{k * 1e-4};
      best = std::max(best, p * xi[0] - eval_lagrangian(V, &W, x, xi));
    }
    CHECK(best == doctest::Approx(eval_hamiltonian(V, &W, x, Vec{p})).epsilon(1e-7));
  }
}

TEST_CASE("line average of the Runge decay matches its closed form") {
  const auto W = runge_decay(1);
  QuadratureSpec q{8, 1e-6};
  for (double R : {1.0, 10.0, 100.0}) {
    const auto est = line_average(W, R, q);
    const double exact = 2.0 * std::atan(R) / R;
    CHECK(est.value == doctest::Approx(exact).epsilon(5e-4));
    // midpoint rule: doubling the resolution cuts the error about 4x
    CHECK(std::abs(est.value - exact) < 0.3 * std::abs(est.coarse_value - exact) + 1e-15);
  }
}

TEST_CASE("cylinder average of a unit disk is pi / R") {
  const auto W = indicator_ball(2, 1.0);
  QuadratureSpec q{16, 1e-6};
  for (double R : {4.0, 16.0}) {
    const auto est = cylinder_average(W, Vec{1.0, 0.0}, 1.0, R, q);
    CHECK(est.value == doctest::Approx(kPi / R).epsilon(0.02));
  }
  CHECK_THROWS_AS(cylinder_average(W, Vec{0.0, 0.0}, 1.0, 4.0, q), InputError);
}

TEST_CASE("ball power integral: closed form and Monte Carlo") {
  const auto W = runge_decay(2);
  // int_{B_1} (1 + |y|^2)^{-2} = pi / 2
  CHECK(ball_power_integral(W, 2.0, Vec{0.0, 0.0}, 1.0, 64) == doctest::Approx(kPi / 2).epsilon(2e-3));
  // off-center ball against 10^6 uniform samples
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Vec c{0.7, -0.2};
  double sum = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double a = u(rng), b = u(rng);
    if (a * a + b * b >= 1.0) continue;
    const double w = W(Vec{c[0] + a, c[1] + b});
    sum += w * w;
  }
  const double mc = 4.0 * sum / n;
  CHECK(ball_power_integral(W, 2.0, c, 1.0, 64) == doctest::Approx(mc).epsilon(5e-3));
}

TEST_CASE("lp_unif estimate is the max over centers") {
  const auto W = runge_decay(2);
  QuadratureSpec q{16, 1e-6};
  const auto est = lp_unif_estimate(W, 2.0, {{5.0, 0.0}, {0.0, 0.0}, {0.0, 9.0}}, q);
  CHECK(est.value == doctest::Approx(kPi / 2).epsilon(5e-3));
  CHECK_THROWS_AS(lp_unif_estimate(W, 0.5, {{0.0, 0.0}}, q), InputError);
}

TEST_CASE("parabola set: dyadic axes inside, generic directions outside far out") {
  // on the axis of A^k_h beyond its vertex
  CHECK(in_parabola_set(0.0, 100.0));
  const double a = kPi / 4;
  CHECK(in_parabola_set(300.0 * std::cos(a), 300.0 * std::sin(a)));
  CHECK_FALSE(in_parabola_set(1.0, 1.0));
  const auto W = parabola_example();
  CHECK(W(Vec{0.0, 100.0}) == 0.0);
  CHECK(W(Vec{700.0 * std::cos(1.0), 700.0 * std::sin(1.0)}) == 1.0);
}

TEST_CASE("Lagrangian growth bounds hold on samples") {
  CHECK(check_lagrangian_growth(quadratic_lagrangian(sin2_potential(2)), 500, 3.0, 5).ok);
  CHECK(check_lagrangian_growth(quartic_lagrangian(sin2_potential(1)), 500, 3.0, 5).ok);
  CHECK(check_perturbation(runge_decay(2), 500, 10.0, 5).ok);
}
