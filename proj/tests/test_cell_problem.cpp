#include <cmath>

#include "doctest.h"

#include "homoglab/cell_problem.hpp"

using namespace homoglab;

namespace {

constexpr double kPi = 3.14159265358979323846;
const QuadratureSpec kQuad{4, 1e-6};

// 1D closed form for |v|^2 + sin^2(pi x): with c > 0 solving
// int_0^1 dy / sqrt(c + V) = 1/xi, f(xi) = xi int_0^1 2 sqrt(c + V) dy - c.
double sin2_exact(double xi) {
  const int n = 200000;
  auto integral = [n](auto g) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += g(std::pow(std::sin(kPi * (i + 0.5) / n), 2));
    return s / n;
  };
  double lo = 1e-12, hi = 100.0;
  for (int it = 0; it < 200; ++it) {
    const double c = 0.5 * (lo + hi);
    const double inv = integral([c](double v) { return 1.0 / std::sqrt(c + v); });
    (inv > 1.0 / xi ? lo : hi) = c;
  }
  const double c = 0.5 * (lo + hi);
  return xi * integral([c](double v) { return 2.0 * std::sqrt(c + v); }) - c;
}

}  // namespace

TEST_CASE("free and constant potentials give |xi|^2 + c exactly") {
  OptimizerSpec opt;
  for (double xi : {0.5, 1.0, 2.0}) {
    CHECK(solve_corrector_1d(zero_potential(1), xi, 100, opt, kQuad).cell_value ==
          doctest::Approx(xi * xi).epsilon(1e-12));
    CHECK(solve_corrector_1d(constant_potential(1, 0.3), xi, 100, opt, kQuad).cell_value ==
          doctest::Approx(xi * xi + 0.3).epsilon(1e-12));
  }
}

TEST_CASE("1D corrector matches the closed-form effective Lagrangian") {
  OptimizerSpec opt;
  const auto V = sin2_potential(1);
  for (double xi : {0.5, 1.0, 2.0}) {
    const auto c = solve_corrector_1d(V, xi, 200, opt, kQuad);
    CHECK(c.cell_value == doctest::Approx(sin2_exact(xi)).epsilon(1e-4));
    CHECK(c.sandwich_ok);
    CHECK(c.cell_value >= xi * xi + V.v_min);
    CHECK(c.cell_value <= xi * xi + V.v_max);
    CHECK(c.profile.node(0)[0] == 0.0);
    CHECK(c.profile.node(c.profile.intervals())[0] == 0.0);
  }
}

TEST_CASE("general corrector with quartic kinetic term agrees with DP") {
  OptimizerSpec opt;
  const auto L = quartic_lagrangian(sin2_potential(1));
  const auto c = solve_corrector_general(L, Vec{1.0}, 1.0, 200, opt, kQuad);
  BoundaryConditions bc;
  bc.t0 = 0.0;
  bc.t1 = 1.0;
  bc.a = {0.0};
  bc.b = {1.0};
  DPGrid g;
  g.x_lo = -0.5;
  g.x_hi = 1.5;
  g.n_x = 2001;
  g.n_t = 100;
  const double dp = dp_oracle_1d(sin2_potential(1), nullptr, 1.0, bc, g, {}, [](double s) { return s * s * s * s; });
  CHECK(c.cell_value == doctest::Approx(dp).epsilon(0.01));
  CHECK(c.cell_value <= dp + 1e-9);
}

TEST_CASE("asymptotic formula agrees with the 1D corrector and is exact for V = 0") {
  OptimizerSpec opt;
  const auto a = f_hom_asymptotic(sin2_potential(1), Vec{1.0}, {}, 8, opt, kQuad);
  CHECK(a.value == doctest::Approx(sin2_exact(1.0)).epsilon(2e-3));
  CHECK(a.ladder_T.size() == 4);
  const auto z = f_hom_asymptotic(zero_potential(2), Vec{1.0, 0.5}, {}, 8, opt, kQuad);
  CHECK(z.value == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(f_hom_asymptotic(sin2_potential(2), Vec{0.0, 0.0}, {}, 8, opt, kQuad).value == 0.0);
}

TEST_CASE("tabulation: even, f(0) = min V, rejects asymmetric grids") {
  TabulationSettings s;
  s.intervals = 100;
  const auto V = sin2_potential(1);
  const auto f = tabulate_f_hom(V, {symmetric_axis(1.0, 0.5)}, s);
  REQUIRE(f.size() == 5);
  CHECK(f(Vec{0.0}) == V.v_min);
  CHECK(f(Vec{1.0}) == doctest::Approx(f(Vec{-1.0})).epsilon(1e-10));
  CHECK(f(Vec{0.5}) == doctest::Approx(f(Vec{-0.5})).epsilon(1e-10));
  CHECK(f(Vec{1.0}) == doctest::Approx(sin2_exact(1.0)).epsilon(1e-3));
  CHECK(f.metadata.contains("settings"));
  CHECK_THROWS_AS(tabulate_f_hom(V, {Vec{-1.0, 0.0, 0.5}}, s), InputError);
}

TEST_CASE("lattice distance and the ergodic shift finder") {
  CHECK(lattice_distance(Vec{0.3, -1.9}) == doctest::Approx(std::sqrt(0.09 + 0.01)));
  // d = 1: hits are exactly k / |xi|
  CHECK(ergodic_shift_finder(Vec{2.0}, 0.1, 0.3, 1.0) == doctest::Approx(0.5));
  // rational direction: first hit after 0.5 is tau = 1
  const double t = ergodic_shift_finder(Vec{1.0, 1.0}, 0.05, 0.5, 1.5);
  CHECK(t >= 0.5);
  CHECK(lattice_distance(Vec{t, t}) < 0.05);
  CHECK_THROWS_AS(ergodic_shift_finder(Vec{1.0, std::sqrt(2.0)}, 1e-3, 0.5, 0.5), NotFoundError);
  const double gap = largest_hit_gap(Vec{1.0, std::sqrt(2.0)}, 0.1, 200.0);
  CHECK(gap > 0.0);
  CHECK(gap < 200.0);
}

TEST_CASE("almost corrector plan: invariants, block actions, recovery") {
  OptimizerSpec opt;
  const auto V = sin2_potential(2);
  const Vec xi{1.0, std::sqrt(2.0)};
  const double delta = 0.2;
  const auto plan = build_almost_corrector(V, xi, delta, 400.0, opt, kQuad);
  CHECK(plan.violations().empty());
  CHECK(plan.T >= (plan.L + 1) / delta);
  REQUIRE(plan.shifts.size() >= 2);
  for (std::size_t i = 0; i < plan.shifts.size(); ++i) {
    Vec p(2);
    for (int k = 0; k < 2; ++k) p[k] = plan.shifts[i] * xi[k];
    CHECK(lattice_distance(p) < plan.eta);
  }
  for (double b : plan_block_actions(plan, V, kQuad)) CHECK(b <= plan.cell_value + 2 * delta);
  CHECK(plan.to_json()["shifts"].size() == plan.shifts.size());

  const double eps = 0.003;
  const auto rec = build_recovery_trajectory(plan, runge_decay(2), eps, 0.2, 0.75, kQuad);
  const auto& p = rec.path;
  CHECK(rec.blocks >= 1);
  CHECK(p.t0() == 0.0);
  CHECK(p.t1() == 1.0);
  CHECK(p.node(0)[0] == 0.0);
  CHECK(p.node(0)[1] == 0.0);
  CHECK(p.node(p.intervals())[0] == xi[0]);
  CHECK(p.node(p.intervals())[1] == xi[1]);

  // a corrupted plan is refused
  auto bad = plan;
  bad.shifts[1] = bad.shifts[0] + 0.5;
  CHECK_FALSE(bad.violations().empty());
  CHECK_THROWS_AS(build_recovery_trajectory(bad, runge_decay(2), eps, 0.2, 0.75, kQuad), InvariantViolation);
}

TEST_CASE("separable potential in d = 2 reduces to the 1D corrector") {
  OptimizerSpec opt;
  const auto a = f_hom_asymptotic(sin2_potential(2), Vec{1.0, 0.0}, {}, 8, opt, kQuad);
  const auto c = solve_corrector_1d(sin2_potential(1), 1.0, 200, opt, kQuad);
  CHECK(a.value == doctest::Approx(c.cell_value).epsilon(0.02));
}

TEST_CASE("asymptotic formula finds the low line off the origin") {
  // cos(2 pi x1) + cos(2 pi x2): the line x2 = 1/2 gives f_1d(0.5) - 1 < -1,
  // the line through 0 only f_1d(0.5) + 1
  OptimizerSpec opt;
  const auto a = f_hom_asymptotic(cos_sum_potential(2), Vec{0.5, 0.0}, {}, 8, opt, kQuad);
  CHECK(a.value < -1.0);
  CHECK(a.value > -2.0);
}
