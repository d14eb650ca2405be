#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "homoglab/experiments.hpp"

using namespace homoglab;
using nlohmann::json;

namespace {

ExperimentConfig cfg_of(const char* text) { return ExperimentConfig::from_json(json::parse(text)); }

}  // namespace

TEST_CASE("config parsing: defaults, unknown keys, validation") {
  const auto c = cfg_of(R"({"dim": 2, "comment": "x"})");
  CHECK(c.xi == Vec{1.0, 1.0});
  CHECK(c.potential == "sin2");
  CHECK_THROWS_AS(cfg_of(R"({"epsilon_ladder": [0.1]})"), InputError);
  CHECK_THROWS_AS(cfg_of(R"({"eps_ladder": [0.1, -0.2]})"), InputError);
  CHECK_THROWS_AS(cfg_of(R"({"dim": 1, "xi": [1, 2]})"), InputError);
  CHECK_THROWS_AS(cfg_of(R"({"optimizer": {"bogus": 1}})"), InputError);
  CHECK_THROWS_AS(cfg_of(R"({"dim": "two"})"), InputError);
  CHECK(cfg_of(R"({"seed": 42})").opt.seed == 42);
}

TEST_CASE("FNV-1a 64") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("decay classification") {
  CHECK(classify_decay({0.0, 0.0, 0.0}) == "consistent");
  CHECK(classify_decay({1.0, 0.5, 0.2}) == "consistent");
  CHECK(classify_decay({1.0, 0.9, 0.8}) == "inconsistent");
  CHECK(classify_decay({1.0, 0.7, 0.6}) == "inconclusive");
  CHECK(classify_decay({}) == "inconclusive");
  CHECK(decreasing_with_slack({1.0, 1.05, 0.5}, 0.1));
  CHECK_FALSE(decreasing_with_slack({1.0, 1.2}, 0.1));
}

TEST_CASE("stability sweep: a constant W shifts G by exactly that constant") {
  const auto c = cfg_of(R"({"perturbation": "constant", "perturbation_params": {"c": 0.5},
                            "eps_ladder": [0.2, 0.1], "dp_check": false})");
  const auto r = run_stability_sweep(c);
  for (const auto& row : r.report["rows"]) {
    CHECK(row["min_G"].get<double>() - row["min_F"].get<double>() == doctest::Approx(0.5).epsilon(1e-9));
  }
  CHECK(r.report["verdict"]["G_ge_F"].get<bool>());
  CHECK_FALSE(r.invariant_violation);
}

TEST_CASE("stability sweep: W = 0 makes G and F coincide, DP columns agree") {
  const auto c = cfg_of(R"({"perturbation": "zero", "eps_ladder": [0.2, 0.1], "dp_dx": 0.002, "dp_nt": 50})");
  const auto r = run_stability_sweep(c);
  for (const auto& row : r.report["rows"]) {
    CHECK(row["gap_G"].get<double>() == doctest::Approx(row["gap_F"].get<double>()).epsilon(1e-12));
    CHECK(row["dp_rel_G"].get<double>() < 0.01);
  }
  CHECK(r.rows_csv.rfind("eps,min_G,min_F,f_hom_target,gap_G,gap_F,dp_G,dp_F,status\n", 0) == 0);
}

TEST_CASE("negative perturbation with a nodal atom: constant -c for every eps") {
  const auto c = cfg_of(R"({"perturbation": "neg_spike", "perturbation_params": {"c": 1, "nodal": 1},
                            "eps_ladder": [0.2, 0.1], "nodes_per_unit": 10})");
  const auto r = run_negative_perturbation(c);
  CHECK(r.report["limit"].get<double>() == doctest::Approx(-1.0));
  for (const auto& row : r.report["rows"]) CHECK(row["min_G"].get<double>() == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(r.report["verdict"]["eps_independent"].get<bool>());
  CHECK(r.report["verdict"]["final_within_5pct"].get<bool>());
  CHECK_THROWS_AS(run_negative_perturbation(cfg_of(R"({"perturbation": "runge_decay"})")), InputError);
}

TEST_CASE("condition diagnostics on trivial perturbations") {
  const auto zero = run_condition_diagnostics(cfg_of(R"({"perturbation": "zero", "dim": 2, "radii": [4, 16]})"));
  CHECK(zero.report["classification"] == "consistent");
  const auto one = run_condition_diagnostics(
      cfg_of(R"({"perturbation": "constant", "perturbation_params": {"c": 1}, "dim": 2, "radii": [4, 16]})"));
  CHECK(one.report["classification"] == "inconsistent");
}

TEST_CASE("runs are deterministic and write their files") {
  const auto c = cfg_of(R"({"potential": "zero", "xi_axes": [[-1, -0.5, 0, 0.5, 1]], "cell_intervals": 50})");
  const auto a = run_experiment("fenchel", c);
  const auto b = run_experiment("fenchel", c);
  CHECK(a.report.dump() == b.report.dump());
  CHECK_THROWS_AS(run_experiment("nope", c), InputError);

  const auto dir = std::filesystem::temp_directory_path() / "homoglab_test_report";
  std::filesystem::remove_all(dir);
  write_report(a, dir.string());
  std::ifstream is(dir / "report.json");
  REQUIRE(is);
  CHECK(json::parse(is) == a.report);
  CHECK(std::filesystem::exists(dir / "rows.csv"));
  std::filesystem::remove_all(dir);
}
