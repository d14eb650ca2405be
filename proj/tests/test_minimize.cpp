#include <cmath>

#include "doctest.h"

#include "homoglab/minimize.hpp"

using namespace homoglab;

namespace {

const QuadratureSpec kQuad{4, 1e-6};

BoundaryConditions bvp(double a, double b, double t1 = 1.0) {
  BoundaryConditions bc;
  bc.t0 = 0.0;
  bc.t1 = t1;
  bc.a = {a};
  bc.b = {b};
  return bc;
}

DPGrid grid(double lo, double hi, double dx, int nt) {
  DPGrid g;
  g.x_lo = lo;
  g.x_hi = hi;
  g.n_x = static_cast<int>(std::lround((hi - lo) / dx)) + 1;
  g.n_t = nt;
  return g;
}

}  // namespace

TEST_CASE("free particle: the affine path is optimal") {
  const auto V = zero_potential(1);
  OptimizerSpec opt;
  const auto r = minimize_bvp(V, nullptr, 0.1, bvp(0.2, 1.7, 2.0), 40, opt, kQuad);
  CHECK(r.value == doctest::Approx(1.5 * 1.5 / 2.0).epsilon(1e-12));
  CHECK(r.path.node(0)[0] == 0.2);
  CHECK(r.path.node(40)[0] == 1.7);
}

TEST_CASE("optimizer agrees with the DP oracle on an oscillatory problem") {
  const auto V = sin2_potential(1);
  OptimizerSpec opt;
  for (double eps : {0.2, 0.1}) {
    const auto bc = bvp(0.0, 1.0);
    const auto r = minimize_bvp(V, nullptr, eps, bc, static_cast<int>(std::ceil(20 / eps)), opt, kQuad);
    const double dp = dp_oracle_1d(V, nullptr, eps, bc, grid(-0.5, 1.5, 0.001, 100));
    CHECK(r.value == doctest::Approx(dp).epsilon(0.01));
  }
}

TEST_CASE("DP oracle is refinement consistent") {
  const auto V = sin2_potential(1);
  const auto bc = bvp(0.0, 1.0);
  const double coarse = dp_oracle_1d(V, nullptr, 0.2, bc, grid(-0.5, 1.5, 0.002, 50));
  const double fine = dp_oracle_1d(V, nullptr, 0.2, bc, grid(-0.5, 1.5, 0.001, 100));
  CHECK(std::abs(coarse - fine) < 0.01 * fine);
}

TEST_CASE("DP oracle: free particle") {
  const auto V = zero_potential(1);
  const double v = dp_oracle_1d(V, nullptr, 1.0, bvp(0.0, 0.6), grid(-1.0, 1.0, 0.01, 20));
  CHECK(v == doctest::Approx(0.36).epsilon(1e-9));
}

TEST_CASE("warm starts never make the result worse") {
  const auto V = sin2_potential(1);
  const auto W = runge_decay(1);
  OptimizerSpec opt;
  opt.restarts = 0;
  const auto bc = bvp(0.0, 1.0);
  const auto first = minimize_bvp(V, &W, 0.1, bc, 200, opt, kQuad);
  const auto again = minimize_bvp(V, &W, 0.1, bc, 200, opt, kQuad, {first.path});
  CHECK(again.value <= first.value);
}

TEST_CASE("optimizer output is deterministic") {
  const auto V = sin2_potential(1);
  OptimizerSpec opt;
  const auto a = minimize_bvp(V, nullptr, 0.1, bvp(0.0, 0.7), 150, opt, kQuad);
  const auto b = minimize_bvp(V, nullptr, 0.1, bvp(0.0, 0.7), 150, opt, kQuad);
  CHECK(a.value == b.value);
  CHECK(a.path.data() == b.path.data());
}

TEST_CASE("constant W shifts the minimum exactly") {
  const auto V = sin2_potential(1);
  const auto W = constant_perturbation(1, 0.5);
  OptimizerSpec opt;
  const auto bc = bvp(0.0, 1.0);
  const auto g = minimize_bvp(V, &W, 0.1, bc, 200, opt, kQuad);
  const auto f = minimize_bvp(V, nullptr, 0.1, bc, 200, opt, kQuad);
  CHECK(g.value - f.value == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("half-line problem: constant potential gives v0 / lambda") {
  const auto V = constant_potential(1, 0.7);
  OptimizerSpec opt;
  const auto r = minimize_halfline(V, nullptr, 0.1, 2.0, Vec{0.3}, 2.5, 50, opt, kQuad);
  CHECK(r.value == doctest::Approx(0.35).epsilon(1e-12));
  CHECK_THROWS_AS(minimize_halfline(V, nullptr, 0.1, 2.0, Vec{0.3}, 1.0, 50, opt, kQuad), InputError);
}

TEST_CASE("half-line problem agrees with the discounted DP oracle") {
  const auto V = sin2_potential(1);
  const auto W = runge_decay(1);
  OptimizerSpec opt;
  for (double x : {0.0, 0.5}) {
    const auto r = minimize_halfline(V, &W, 0.1, 1.0, Vec{x}, 5.0, 400, opt, kQuad);
    const double dp = dp_discounted_1d(V, &W, 0.1, 1.0, x, 5.0, grid(x - 3.0, x + 3.0, 0.001, 500));
    CHECK(r.value == doctest::Approx(dp).epsilon(0.03));
  }
}

TEST_CASE("Gamma-limit DP: staying at the bonus point") {
  // bonus -1, 0 -> 0: stay at 0, value -1
  CHECK(dp_gamma_limit_1d(-1.0, bvp(0.0, 0.0), grid(-0.5, 0.5, 0.01, 100)) == doctest::Approx(-1.0));
  // bonus -1, 0 -> 0.5: rest for s, then move; min over s of 0.25/(1-s) - s = 0 at s = 1/2
  CHECK(dp_gamma_limit_1d(-1.0, bvp(0.0, 0.5), grid(-0.5, 1.0, 0.005, 200)) ==
        doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("input validation") {
  const auto V = zero_potential(1);
  OptimizerSpec opt;
  opt.max_iters = 0;
  CHECK_THROWS_AS(minimize_bvp(V, nullptr, 0.1, bvp(0.0, 1.0), 10, opt, kQuad), InputError);
  OptimizerSpec ok;
  CHECK_THROWS_AS(minimize_bvp(V, nullptr, -0.1, bvp(0.0, 1.0), 10, ok, kQuad), InputError);
  CHECK_THROWS_AS(minimize_bvp(V, nullptr, 0.1, bvp(0.0, 1.0, 0.0), 10, ok, kQuad), InputError);
}

TEST_CASE("trace CSV has a header and one row per iteration") {
  const auto V = sin2_potential(1);
  OptimizerSpec opt;
  const auto r = minimize_bvp(V, nullptr, 0.2, bvp(0.0, 1.0), 50, opt, kQuad);
  const std::string csv = trace_to_csv(r.trace);
  CHECK(csv.rfind("iter,value,grad_norm\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == r.trace.size() + 1);
}
