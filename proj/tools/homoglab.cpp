// homoglab <subcommand> --config cfg.json --out dir [--threads N] [--seed S]

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "homoglab/experiments.hpp"
#include "homoglab/parallel.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kSolver = 3, kInvariant = 4 };

int run(const std::string& sub, const std::string& config_path, const std::string& out_dir, int threads,
        std::optional<std::uint64_t> seed) {
  using namespace homoglab;
  nlohmann::json j;
  try {
    std::ifstream is(config_path);
    if (!is) throw InputError("cannot open config '" + config_path + "'");
    j = nlohmann::json::parse(is);
    if (seed) j["seed"] = *seed;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const InputError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  }
  try {
    set_thread_count(threads);
    const ExperimentConfig cfg = ExperimentConfig::from_json(j);
    const ExperimentReport r = run_experiment(sub, cfg);
    write_report(r, out_dir);
    if (r.invariant_violation) {
      std::fprintf(stderr, "invariant violation recorded in %s/report.json\n", out_dir.c_str());
      return kInvariant;
    }
    std::printf("%s: wrote %s/report.json\n", sub.c_str(), out_dir.c_str());
    return kOk;
  } catch (const InputError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const InvariantViolation& e) {
    std::fprintf(stderr, "invariant violation: %s\n", e.what());
    return kInvariant;
  } catch (const Error& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return kSolver;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"periodic homogenization experiments"};
  app.require_subcommand(1);
  std::string config, out;
  int threads = 1;
  std::optional<std::uint64_t> seed;
  std::string chosen;
  for (const char* name : {"stability", "negative", "hj", "conditions", "fhom", "fenchel"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "JSON config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory")->required();
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "override the config seed");
    sub->callback([&chosen, name] { chosen = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfig;
  }
  return run(chosen, config, out, threads, seed);
}
