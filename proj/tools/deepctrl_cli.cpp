// deepctrl: experiment harness for the stacked-subnetwork stochastic control
// solver. Subcommands: train, baseline, report, gradcheck, make-env.

#include <CLI11.hpp>

#include <iostream>

#include "deepctrl/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"stacked-subnetwork stochastic control experiments"};
  app.require_subcommand(1);

  deepctrl::cli::CommonOptions common;
  std::string config_path, out_path, seeds_csv;
  long samples = 0;

  auto wire_common = [&](CLI::App* cmd, bool needs_config) {
    auto* c = cmd->add_option("--config", config_path, "run configuration file (json)");
    if (needs_config) c->required();
    cmd->add_option("--out", out_path, "output directory override");
    cmd->add_option("--seeds", seeds_csv, "comma-separated seed list override");
    cmd->add_option("--samples", samples, "evaluation sample count override");
  };
  auto fill_common = [&]() {
    common = {};
    common.config = config_path;
    if (!out_path.empty()) common.out = out_path;
    if (samples > 0) common.samples = samples;
    if (!seeds_csv.empty()) {
      std::vector<std::uint64_t> seeds;
      std::stringstream ss(seeds_csv);
      std::string item;
      while (std::getline(ss, item, ',')) seeds.push_back(std::stoull(item));
      common.seeds = seeds;
    }
  };

  CLI::App* train = app.add_subcommand("train", "train one policy per seed and write run artifacts");
  wire_common(train, true);

  CLI::App* baseline = app.add_subcommand("baseline", "compute the oracle report for an environment");
  wire_common(baseline, true);

  CLI::App* report = app.add_subcommand("report", "score trained runs against a baseline report");
  std::vector<std::string> run_dirs;
  std::string baseline_path, report_out = "comparison.csv";
  report->add_option("--runs", run_dirs, "seed run directories")->required();
  report->add_option("--baseline", baseline_path, "baseline report json")->required();
  report->add_option("--out", report_out, "comparison csv path");
  report->add_option("--samples", samples, "test sample count");

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "end-to-end gradient check");
  std::string gc_config;
  double gc_tol = 1e-4;
  gradcheck->add_option("--config", gc_config, "use this configuration's environment");
  gradcheck->add_option("--tolerance", gc_tol, "relative error tolerance");

  CLI::App* make_env = app.add_subcommand("make-env", "write a canonical environment definition");
  std::string kind, env_out;
  int horizon = 5, devices = 2;
  std::uint64_t seed = 2718;
  make_env->add_option("--kind", kind, "lq | execution | energy_single | energy_multi")->required();
  make_env->add_option("--out", env_out, "output file")->required();
  make_env->add_option("--horizon", horizon, "problem horizon");
  make_env->add_option("--devices", devices, "device count (energy_multi)");
  make_env->add_option("--seed", seed, "generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      fill_common();
      return deepctrl::cli::cmd_train(common, std::cout);
    }
    if (baseline->parsed()) {
      fill_common();
      return deepctrl::cli::cmd_baseline(common, std::cout);
    }
    if (report->parsed()) {
      std::vector<std::filesystem::path> dirs(run_dirs.begin(), run_dirs.end());
      std::optional<long> n;
      if (samples > 0) n = samples;
      return deepctrl::cli::cmd_report(dirs, baseline_path, n, report_out, std::cout);
    }
    if (gradcheck->parsed()) {
      std::optional<std::filesystem::path> cfg;
      if (!gc_config.empty()) cfg = gc_config;
      return deepctrl::cli::cmd_gradcheck(cfg, gc_tol, std::cout);
    }
    if (make_env->parsed()) {
      return deepctrl::cli::cmd_make_env(kind, env_out, horizon, devices, seed, std::cout);
    }
  } catch (const deepctrl::io::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
