#include <cmath>
#include <random>

#include "doctest.h"

#include "homoglab/trajectory.hpp"

using namespace homoglab;

namespace {
constexpr double kPi = 3.14159265358979323846;
const QuadratureSpec kQuad{4, 1e-6};
}  // namespace

TEST_CASE("affine path: kinetic action is exact") {
  const auto V = zero_potential(2);
  const Vec a{0.1, -0.3}, b{1.2, 0.4};
  const auto u = Trajectory::affine(0.5, 2.0, a, b, 17);
  const double expect = (1.1 * 1.1 + 0.7 * 0.7) / 1.5;
  CHECK(action_F(u, V, 0.1, kQuad) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("constant path sees V at a single point") {
  const auto V = sin2_potential(1);
  const Vec x{0.37};
  const auto u = Trajectory::affine(0.0, 3.0, x, x, 9);
  const double v = std::pow(std::sin(kPi * 0.37 / 0.2), 2);
  CHECK(action_F(u, V, 0.2, kQuad) == doctest::Approx(3.0 * v).epsilon(1e-13));
}

TEST_CASE("potential quadrature converges to the closed-form integral") {
  // int_0^1 sin^2(pi t / eps) dt = 1/2 - sin(2 pi / eps) / (4 pi / eps)
  const auto V = sin2_potential(1);
  const double eps = 0.37;
  const double exact = 1.0 + 0.5 - std::sin(2 * kPi / eps) / (4 * kPi / eps);
  double prev_err = 1e300;
  for (int n : {8, 32, 128}) {
    const auto u = Trajectory::affine(0.0, 1.0, Vec{0.0}, Vec{1.0}, n);
    const double err = std::abs(action_F(u, V, eps, kQuad) - exact);
    CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(prev_err < 1e-5);
}

TEST_CASE("G - F is the W integral; constant W shifts by c (t1 - t0)") {
  const auto V = sin2_potential(1);
  const auto W = constant_perturbation(1, 0.5);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 0.3);
  auto u = Trajectory::uniform(0.0, 1.0, 40, 1);
  for (int k = 0; k <= 40; ++k) u.node(k)[0] = g(rng);
  CHECK(action_G(u, V, W, 0.1, kQuad) - action_F(u, V, 0.1, kQuad) == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("origin atom is charged on the exact zero set") {
  const auto V = zero_potential(1);
  const auto W = nodal_indicator(1, 1.0);
  // rest at 0 on [0, 0.5], then move to 1
  Trajectory u = Trajectory::on_times({0.0, 0.25, 0.5, 1.0}, 1);
  u.set_node(3, Vec{1.0});
  CHECK(zero_set_measure(u, 0.0) == doctest::Approx(0.5));
  const double kinetic = 1.0 / 0.5;
  CHECK(action_G(u, V, W, 0.3, kQuad) == doctest::Approx(kinetic - 0.5).epsilon(1e-14));
  // crossing 0 transversally has measure zero
  const auto v = Trajectory::affine(0.0, 1.0, Vec{-1.0}, Vec{1.0}, 5);
  CHECK(zero_set_measure(v, 0.0) == 0.0);
}

TEST_CASE("discounted action: constant path gives U(x/eps)/lambda") {
  const auto V = sin2_potential(1);
  const auto W = runge_decay(1);
  const Vec x{0.23};
  const double eps = 0.1, lambda = 1.5;
  const auto u = Trajectory::affine(0.0, 4.0, x, x, 33);
  const double U = V(Vec{2.3}) + W(Vec{2.3});
  CHECK(discounted_action(u, V, &W, eps, lambda, kQuad) == doctest::Approx(U / lambda).epsilon(1e-12));
}

TEST_CASE("discounted action of a moving path converges under refinement") {
  const auto V = sin2_potential(1);
  auto build = [](int n) {
    auto u = Trajectory::uniform(0.0, 5.0, n, 1);
    for (int k = 0; k <= n; ++k) u.node(k)[0] = 0.3 * std::sin(u.time(k));
    return u;
  };
  const double coarse = discounted_action(build(400), V, nullptr, 0.2, 1.0, kQuad);
  const double fine = discounted_action(build(3200), V, nullptr, 0.2, 1.0, kQuad);
  const double finer = discounted_action(build(12800), V, nullptr, 0.2, 1.0, QuadratureSpec{16, 1e-6});
  CHECK(std::abs(fine - finer) < std::abs(coarse - finer));
  CHECK(std::abs(fine - finer) < 1e-4);
}

TEST_CASE("homogenized action of an affine path") {
  const auto f = HomogenizedLagrangian::from_function({symmetric_axis(2.0, 0.25)},
                                                      [](VecView x) { return x[0] * x[0]; }, "sq");
  const auto u = Trajectory::affine(0.0, 2.0, Vec{0.0}, Vec{1.0}, 8);
  CHECK(homogenized_action(u, f, std::nullopt) == doctest::Approx(0.5).epsilon(1e-12));
  const auto far = Trajectory::affine(0.0, 0.1, Vec{0.0}, Vec{1.0}, 2);
  CHECK_THROWS_AS(homogenized_action(far, f, std::nullopt), ExtrapolationError);
}

TEST_CASE("resampling and evaluation") {
  const auto u = Trajectory::affine(0.0, 1.0, Vec{0.0, 1.0}, Vec{2.0, -1.0}, 4);
  const auto v = u.resampled(uniform_times(0.0, 1.0, 7));
  CHECK(v.value_at(0.3)[0] == doctest::Approx(0.6));
  CHECK(v.value_at(0.3)[1] == doctest::Approx(0.4));
  CHECK(v.slope(2)[0] == doctest::Approx(2.0));
  CHECK_THROWS_AS(Trajectory(Vec{0.0, 0.0}, 1, Vec{0.0, 1.0}).validate(), InputError);
}

TEST_CASE("CSV and JSON round trips are bit exact") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  auto u = Trajectory::uniform(0.0, 1.0, 12, 2);
  for (auto& x : u.data()) x = d(rng);
  const auto a = trajectory_from_csv(trajectory_to_csv(u));
  const auto b = trajectory_from_json(trajectory_to_json(u));
  CHECK(a.data() == u.data());
  CHECK(a.times() == u.times());
  CHECK(b.data() == u.data());
  CHECK(b.times() == u.times());
}

TEST_CASE("connector: exact endpoints and the kinetic bound") {
  const auto W = runge_decay(2);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  for (double alpha : {0.6, 0.9}) {
    for (int i = 0; i < 4; ++i) {
      const Vec x0{d(rng), d(rng)};
      const Vec y0{x0[0] + 0.4, x0[1] - 0.7};
      const auto c = build_connector(x0, y0, alpha, W, 12);
      const auto& p = c.path;
      CHECK(p.node(0)[0] == x0[0]);
      CHECK(p.node(0)[1] == x0[1]);
      CHECK(p.node(p.intervals())[0] == y0[0]);
      CHECK(p.node(p.intervals())[1] == y0[1]);
      CHECK(c.kinetic <= c.kinetic_bound * (1.0 + 1e-3));
    }
  }
  CHECK_THROWS_AS(build_connector(Vec{0.0, 0.0}, Vec{1.0, 0.0}, 0.4, W, 8), InputError);
}

TEST_CASE("polar integral of W = 1 is 2 pi r^(1/alpha)") {
  const auto W = constant_perturbation(2, 1.0);
  const auto pb = polar_bound_check(W, 2.0, 0.6, 1.5, kQuad);
  CHECK(pb.lhs == doctest::Approx(2 * kPi * std::pow(1.5, 1 / 0.6)).epsilon(1e-9));
}

TEST_CASE("polar bound needs the alpha^(-1/p) Jacobian factor") {
  // W = 1, d = p = 2, alpha = 0.6, r = 1: the constant without the factor
  // gives a right-hand side below the left-hand side
  const auto W = constant_perturbation(2, 1.0);
  const auto pb = polar_bound_check(W, 2.0, 0.6, 1.0, kQuad);
  CHECK(pb.rhs_printed < pb.lhs);
  CHECK(pb.rhs >= pb.lhs);
  CHECK(pb.holds);
  CHECK(pb.rhs == doctest::Approx(pb.rhs_printed / std::sqrt(0.6)).epsilon(1e-12));
}
