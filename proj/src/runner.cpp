#include "deepctrl/runner.hpp"

#include <algorithm>
#include <fstream>
#include <cmath>

#include "deepctrl/baselines/execution_dp.hpp"
#include "deepctrl/baselines/riccati.hpp"

namespace deepctrl::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kReportStreamSalt = 0xbeef;

io::RunConfig load_config_with_overrides(const CommonOptions& opt) {
  io::RunConfig cfg = io::load_run_config(opt.config);
  if (opt.out) cfg.output_dir = *opt.out;
  if (opt.seeds) cfg.seeds = *opt.seeds;
  if (opt.samples) cfg.evaluation_samples = *opt.samples;
  cfg.validate();
  return cfg;
}

json eval_report_to_json(const ctl::EvalReport& r) {
  return json{{"mean_objective", r.mean_objective},
              {"std_error", r.std_error},
              {"samples", r.samples},
              {"max_violation_post_projection", r.max_violation},
              {"infeasible_samples", r.infeasible_samples},
              {"feasibility_tolerance", r.feasibility_tolerance}};
}

}  // namespace

SeedRunResult run_one_seed(const ctl::ControlProblem& problem, ctl::TrainingConfig train_config,
                           std::uint64_t seed, long evaluation_samples) {
  SeedRunResult result;
  result.seed = seed;
  train_config.seed = seed;
  result.train = ctl::train(problem, train_config);
  RngStream test_stream(seed, StreamKind::Test);
  result.eval = ctl::evaluate(problem, result.train.policy, evaluation_samples, test_stream,
                              train_config.eval_chunk);
  return result;
}

ctl::EvalReport evaluate_on_test_stream(const ctl::ControlProblem& problem, ctl::StackedPolicy& policy,
                                        long samples, std::uint64_t seed, int chunk) {
  RngStream stream(seed, StreamKind::Test, kReportStreamSalt);
  return ctl::evaluate(problem, policy, samples, stream, chunk);
}

int cmd_train(const CommonOptions& opt, std::ostream& log) {
  io::RunConfig cfg = load_config_with_overrides(opt);
  const io::Environment env = io::load_environment(cfg.environment_file);
  const ctl::ControlProblem problem = io::environment_problem(env);

  fs::create_directories(cfg.output_dir);
  std::vector<std::vector<ctl::LearningCurvePoint>> curves;
  for (std::uint64_t seed : cfg.seeds) {
    SeedRunResult run = run_one_seed(problem, cfg.train, seed, cfg.evaluation_samples);
    const fs::path dir = cfg.output_dir / ("seed_" + std::to_string(seed));
    fs::create_directories(dir);

    json snapshot = io::run_config_to_json(cfg);
    snapshot["seed"] = seed;
    snapshot["environment_definition"] = io::environment_to_json(env);
    snapshot["diverged"] = run.train.diverged;
    io::write_json(dir / "config_snapshot.json", snapshot);
    io::write_json(dir / "checkpoint.json", io::policy_to_json(run.train.policy));
    io::write_curve_csv(dir / "curve.csv", run.train.curve);
    io::write_json(dir / "eval_report.json", eval_report_to_json(run.eval));
    curves.push_back(run.train.curve);

    log << "seed " << seed << ": val_projected="
        << (run.train.curve.empty() ? 0.0 : run.train.curve.back().val_objective_projected)
        << " eval_mean=" << run.eval.mean_objective << " max_violation=" << run.eval.max_violation
        << (run.train.diverged ? " DIVERGED" : "") << "\n";
  }
  io::write_aggregate_csv(cfg.output_dir / "aggregate.csv", curves);
  log << "artifacts in " << cfg.output_dir.string() << "\n";
  return 0;
}

int cmd_baseline(const CommonOptions& opt, std::ostream& log) {
  io::RunConfig cfg = load_config_with_overrides(opt);
  const io::Environment env = io::load_environment(cfg.environment_file);
  const fs::path out_dir = opt.out.value_or(cfg.output_dir);
  fs::create_directories(out_dir);

  json report;
  report["kind"] = io::environment_kind(env);
  report["environment_definition"] = io::environment_to_json(env);

  if (const auto* lq = std::get_if<envs::LqProblem>(&env)) {
    dp::LqSolution sol = dp::lq_riccati(*lq);
    report["oracle"] = "riccati";
    report["expected_cost"] = sol.expected_cost(lq->s0, lq->noise_covariance());
    json gains = json::array();
    for (const Tensor& k : sol.gains) gains.push_back(io::tensor_to_json(k));
    report["feedback_gains"] = gains;
  } else if (const auto* ex = std::get_if<envs::ExecutionModel>(&env)) {
    dp::ExecutionValue val = dp::execution_optimal(*ex);
    report["oracle"] = "backward_induction";
    report["expected_cost"] = val.expected_optimal_cost();
    report["no_impact_cost"] = ex->no_impact_cost();
    json kw = json::array(), kx = json::array(), kc = json::array();
    for (const Tensor& t : val.Kw) kw.push_back(io::tensor_to_json(t));
    for (const Tensor& t : val.Kx) kx.push_back(io::tensor_to_json(t));
    for (const Tensor& t : val.kc) kc.push_back(io::tensor_to_json(t));
    report["feedback"] = json{{"Kw", kw}, {"Kx", kx}, {"kc", kc}};
  } else if (const auto* es = std::get_if<envs::EnergySingleModel>(&env)) {
    dp::ValueTable table = dp::energy_dp_lookup(*es);
    report["oracle"] = "dp_lookup";
    report["dp_value"] = table.root_value(*es);
    const fs::path table_path = out_dir / "value_table.json";
    io::write_json(table_path, io::value_table_to_json(table));
    report["value_table"] = table_path.string();
  } else {
    report["oracle"] = "none";
    report["note"] = "no benchmark solution available for the multi-device storage model";
  }
  const fs::path report_path = out_dir / "baseline_report.json";
  io::write_json(report_path, report);
  log << "baseline report: " << report_path.string() << "\n";
  return 0;
}

int cmd_report(const std::vector<fs::path>& run_dirs, const fs::path& baseline_report,
               std::optional<long> samples, const fs::path& out_csv, std::ostream& log) {
  const json baseline = io::read_json(baseline_report);
  const json& baseline_env = baseline.at("environment_definition");
  const io::Environment env = io::environment_from_json(baseline_env);
  const ctl::ControlProblem problem = io::environment_problem(env);
  const std::string kind = baseline.at("kind").get<std::string>();

  std::ofstream out(out_csv);
  if (!out) throw std::runtime_error("cannot write " + out_csv.string());
  out << "run_dir,seed,environment,objective_mean,objective_std_error,benchmark,relative_metric,"
         "max_violation,infeasible_samples\n";

  for (const fs::path& dir : run_dirs) {
    const json snapshot = io::read_json(dir / "config_snapshot.json");
    if (snapshot.at("environment_definition") != baseline_env) {
      throw io::ConfigError("run " + dir.string() + ": environment differs from the baseline report");
    }
    const std::uint64_t seed = snapshot.at("seed").get<std::uint64_t>();
    const long n = samples.value_or(snapshot.value("evaluation_samples", 100000L));
    ctl::StackedPolicy policy = io::policy_from_json(io::read_json(dir / "checkpoint.json"));
    ctl::EvalReport eval = evaluate_on_test_stream(problem, policy, n, seed,
                                                   snapshot.at("training").at("eval_chunk").get<int>());

    double benchmark = 0.0;
    double relative = 0.0;
    bool has_benchmark = true;
    if (kind == "lq") {
      benchmark = baseline.at("expected_cost").get<double>();
      relative = ctl::relative_metric(eval.mean_objective, benchmark, ctl::MetricSense::Minimize);
    } else if (kind == "execution") {
      benchmark = baseline.at("expected_cost").get<double>();
      relative = envs::execution_relative_cost(eval.mean_objective, benchmark,
                                               std::get<envs::ExecutionModel>(env));
    } else if (kind == "energy_single") {
      // common noise for the table benchmark and the policy under test
      const auto& model = std::get<envs::EnergySingleModel>(env);
      dp::ValueTable table =
          io::value_table_from_json(io::read_json(baseline.at("value_table").get<std::string>()));
      RngStream stream(seed, StreamKind::Test, kReportStreamSalt);
      dp::TableEval bench = dp::table_policy_evaluate(table, model, n, stream);
      benchmark = bench.mean;
      relative = ctl::relative_metric(-eval.mean_objective, benchmark, ctl::MetricSense::Maximize);
    } else {
      has_benchmark = false;  // declared gap: no oracle for multi-device storage
    }

    out << dir.string() << ',' << seed << ',' << kind << ',' << io::format_double(eval.mean_objective)
        << ',' << io::format_double(eval.std_error) << ','
        << (has_benchmark ? io::format_double(benchmark) : "na") << ','
        << (has_benchmark ? io::format_double(relative) : "na") << ','
        << io::format_double(eval.max_violation) << ',' << eval.infeasible_samples << '\n';
    log << dir.string() << ": mean=" << eval.mean_objective
        << (has_benchmark ? " relative=" + io::format_double(relative) : " (no oracle)") << "\n";
  }
  log << "comparison table: " << out_csv.string() << "\n";
  return 0;
}

int cmd_gradcheck(const std::optional<fs::path>& config, double tolerance, std::ostream& log) {
  ctl::ControlProblem problem;
  if (config) {
    io::RunConfig cfg = io::load_run_config(*config);
    problem = io::environment_problem(io::load_environment(cfg.environment_file));
  } else {
    problem = envs::make_default_lq(2, 2, 3).to_control_problem();
  }
  // a full tape with finite differences over every coordinate: keep it small
  ctl::StackedPolicy policy = ctl::StackedPolicy::init(problem, {3}, true, 12345);
  ctl::GradCheckReport report;
  for (std::uint64_t attempt = 0; attempt < 16; ++attempt) {
    RngStream rng(900 + attempt, StreamKind::Misc);
    ctl::ExoBatch exo = problem.sample_exo(rng, 4);
    report = ctl::gradient_check(problem, policy, exo, tolerance);
    if (report.kink_distance >= 1e-4) break;  // resample draws that sit on a kink
  }
  log << (report.pass ? "PASS" : "FAIL") << " worst_rel_error=" << report.worst_rel_error
      << " worst_param=" << (report.worst_param.empty() ? "-" : report.worst_param)
      << " parameters=" << report.parameters_checked << " kink_distance=" << report.kink_distance
      << "\n";
  return report.pass ? 0 : 1;
}

int cmd_make_env(const std::string& kind, const fs::path& out, int horizon, int devices,
                 std::uint64_t seed, std::ostream& log) {
  io::Environment env;
  if (kind == "lq") {
    env = envs::make_default_lq(2, 2, horizon);
  } else if (kind == "execution") {
    env = envs::make_canonical_execution_model(seed, 10, 3, horizon);
  } else if (kind == "energy_single") {
    env = envs::make_canonical_single(horizon);
  } else if (kind == "energy_multi") {
    env = envs::make_canonical_multi(devices, horizon, seed);
  } else {
    log << "unknown environment kind: " << kind << "\n";
    return 2;
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  io::save_environment(out, env);
  log << "wrote " << out.string() << "\n";
  return 0;
}

}  // namespace deepctrl::cli
