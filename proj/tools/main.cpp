#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cfprop/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitRuntimeError = 2;

std::size_t worker_count() {
  const char* env = std::getenv("CFPROP_WORKERS");
  if (env == nullptr) return 1;
  const long parsed = std::strtol(env, nullptr, 10);
  return parsed > 0 ? static_cast<std::size_t>(parsed) : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"counterfactual propagation experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string report_dir;
  std::string report_reference = "cp";

  auto add_config_args = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "experiment config (JSON)")->required();
    cmd->add_option("overrides", overrides, "key=value config overrides (dotted paths)");
  };

  CLI::App* gen = app.add_subcommand("gen", "generate the synthetic dataset as CSV");
  add_config_args(gen);
  CLI::App* run = app.add_subcommand("run", "run trials for every configured method");
  add_config_args(run);
  CLI::App* noise =
      app.add_subcommand("noise", "run the label-noise experiment over noise_levels");
  add_config_args(noise);
  CLI::App* ablate =
      app.add_subcommand("ablate", "run with methods = [cp, cp_lo0, cp_le0]");
  add_config_args(ablate);
  CLI::App* report = app.add_subcommand("report", "re-aggregate existing trial reports");
  report->add_option("dir", report_dir, "results directory with a trials/ subdirectory")
      ->required();
  report->add_option("--reference", report_reference, "reference method for paired tests");

  CLI11_PARSE(app, argc, argv);

  try {
    if (report->parsed()) {
      return cfprop::cmd_report(report_dir, report_reference).ok ? kExitOk
                                                                 : kExitRuntimeError;
    }

    cfprop::ExperimentConfig cfg;
    try {
      if (ablate->parsed()) {
        overrides.insert(overrides.begin(), "methods=[\"cp\",\"cp_lo0\",\"cp_le0\"]");
      }
      cfg = cfprop::load_config_file(config_path, overrides);
    } catch (const std::invalid_argument& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kExitConfigError;
    }

    cfprop::RunOptions opts;
    opts.workers = worker_count();

    if (gen->parsed()) {
      cfprop::cmd_gen(cfg);
      return kExitOk;
    }
    if (noise->parsed()) {
      return cfprop::cmd_noise(cfg, opts).ok ? kExitOk : kExitRuntimeError;
    }
    return cfprop::cmd_run(cfg, opts).ok ? kExitOk : kExitRuntimeError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
}
