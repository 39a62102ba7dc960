#pragma once

// Experiment harness behind the command-line interface: seeded training runs
// with artifact directories, oracle reports, policy-vs-oracle comparisons and
// the end-to-end gradient check. Kept callable as a library so tests can
// drive whole runs in-process.

#include <filesystem>
#include <optional>
#include <ostream>
#include <vector>

#include "deepctrl/io.hpp"

namespace deepctrl::cli {

struct CommonOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::vector<std::uint64_t>> seeds;    // overrides the config
  std::optional<long> samples;                        // overrides the config
};

// Artifacts per seed: config_snapshot.json (with the environment definition
// embedded), checkpoint.json, curve.csv, eval_report.json; plus an
// aggregate.csv across seeds. Returns a process exit code.
int cmd_train(const CommonOptions& opt, std::ostream& log);

// Oracle report for the configured environment: riccati cost and gains (lq),
// backward-induction cost and feedback (execution), dp value plus the
// serialized lookup table (energy_single), or an explicit no-oracle report
// (energy_multi).
int cmd_baseline(const CommonOptions& opt, std::ostream& log);

// Relative metrics of trained runs against a baseline report on a fresh test
// noise stream, with post-projection feasibility statistics.
int cmd_report(const std::vector<std::filesystem::path>& run_dirs,
               const std::filesystem::path& baseline_report, std::optional<long> samples,
               const std::filesystem::path& out_csv, std::ostream& log);

// End-to-end gradient check; with no config a small built-in lq instance is
// used. Exit code 0 iff the worst relative error stays below the tolerance.
int cmd_gradcheck(const std::optional<std::filesystem::path>& config, double tolerance,
                  std::ostream& log);

// Canonical environment generator (writes an environment definition file).
int cmd_make_env(const std::string& kind, const std::filesystem::path& out, int horizon, int devices,
                 std::uint64_t seed, std::ostream& log);

// Shared pieces, exposed for the acceptance suite.
struct SeedRunResult {
  std::uint64_t seed = 0;
  ctl::TrainResult train;
  ctl::EvalReport eval;
};
SeedRunResult run_one_seed(const ctl::ControlProblem& problem, ctl::TrainingConfig train_config,
                           std::uint64_t seed, long evaluation_samples);

// Test-stream evaluation used by cmd_report (salt keeps it disjoint from the
// per-run test streams).
ctl::EvalReport evaluate_on_test_stream(const ctl::ControlProblem& problem, ctl::StackedPolicy& policy,
                                        long samples, std::uint64_t seed, int chunk);

}  // namespace deepctrl::cli
