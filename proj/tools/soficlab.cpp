// soficlab run | verify | list-scenarios
//
// Exit codes: 0 success, 1 other failure (including failed verification),
// 2 config schema violation, 3 budget exceeded, 4 rejection sampling
// exhausted, 5 missing outputs.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "soficlab/experiment.hpp"

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("soficlab");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("SOFICLAB_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

nlohmann::json load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw soficlab::Error("cannot open config " + path);
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw soficlab::SchemaError("/", std::string("not valid JSON: ") + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"sofic entropy numerical laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  unsigned jobs = 1;
  std::uint64_t seed_override = 0, budget_cells = 10'000'000, budget_samples = 10'000'000;
  auto* run = app.add_subcommand("run", "run the scenarios of a config");
  run->add_option("--config", config_path, "scenario config (JSON)")->required();
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  auto* seed_opt = run->add_option("--seed-override", seed_override, "replace every seed in the config");
  run->add_option("--budget-cells", budget_cells, "largest type-class table to enumerate");
  run->add_option("--budget-samples", budget_samples, "largest Monte Carlo sample count");

  std::string verify_dir;
  auto* verify = app.add_subcommand("verify", "re-check the invariants of a finished run");
  verify->add_option("--out", verify_dir, "output directory of a run")->required();

  auto* list = app.add_subcommand("list-scenarios", "list bundled scenario names");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list) {
      for (const auto& s : soficlab::scenario_registry()) std::cout << s.name << "\t" << s.description << "\n";
      return 0;
    }
    if (*verify) {
      const auto report = soficlab::verify_output(verify_dir);
      std::cout << report.tsv();
      if (report.missing) return 5;
      return report.passed() ? 0 : 1;
    }
    soficlab::ExperimentOptions options;
    options.out = out_dir;
    options.context.jobs = jobs;
    options.context.budget_cells = budget_cells;
    options.context.budget_samples = budget_samples;
    options.context.log = [](const std::string& s) { spdlog::info("{}", s); };
    if (*seed_opt) options.seed_override = seed_override;
    const auto summary = soficlab::run_experiment(load_config(config_path), options);
    for (const auto& s : summary.results.at("scenarios")) {
      for (const auto& c : s.at("checks")) {
        if (!c.at("passed").get<bool>()) spdlog::warn("{}: check {} failed", s.at("id").get<std::string>(),
                                                      c.at("name").get<std::string>());
      }
    }
    std::cout << (out_dir.empty() ? "." : out_dir) << "/manifest.json\n";
    return 0;
  } catch (const soficlab::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return 2;
  } catch (const soficlab::BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return 3;
  } catch (const soficlab::RejectionBudgetExhausted& e) {
    std::cerr << "rejection sampling failed: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
