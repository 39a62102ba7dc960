#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "deepctrl/runner.hpp"

using namespace deepctrl;
namespace fs = std::filesystem;

namespace {

fs::path make_temp_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("deepctrl_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// learning-curve csv without the wall_seconds column (the only column that
// legitimately differs between reruns)
std::string strip_wall_column(const std::string& csv) {
  std::stringstream in(csv), out;
  std::string line;
  while (std::getline(in, line)) {
    const auto cut = line.rfind(',');
    out << line.substr(0, cut) << '\n';
  }
  return out.str();
}

fs::path write_lq_setup(const fs::path& dir, long iterations, const std::string& out_name) {
  std::ostream& devnull = *(new std::stringstream());  // keep logs quiet
  REQUIRE(cli::cmd_make_env("lq", dir / "lq.json", 3, 0, 1, devnull) == 0);
  const fs::path cfg = dir / "run.json";
  std::ofstream out(cfg);
  out << R"({
    "version": 1,
    "environment": {"kind": "lq", "file": "lq.json"},
    "training": {
      "batch_size": 16, "iterations": )"
      << iterations << R"(,
      "learning_rate": [[0, 0.01]],
      "validation_batch_size": 64, "validation_every": 25,
      "hidden": [6], "use_batchnorm": true
    },
    "evaluation_samples": 512,
    "seeds": [7, 8],
    "output_dir": ")"
      << out_name << R"("
  })";
  return cfg;
}

}  // namespace

TEST_CASE("environment files round trip") {
  const fs::path dir = make_temp_dir("envio");
  std::stringstream log;
  for (const char* kind : {"lq", "execution", "energy_single", "energy_multi"}) {
    const fs::path file = dir / (std::string(kind) + ".json");
    REQUIRE(cli::cmd_make_env(kind, file, 4, 3, 11, log) == 0);
    io::Environment env = io::load_environment(file);
    CHECK(io::environment_kind(env) == kind);
    // serialize -> parse -> serialize is a fixed point
    const auto j1 = io::environment_to_json(env);
    const auto j2 = io::environment_to_json(io::environment_from_json(j1));
    CHECK(j1 == j2);
  }
}

TEST_CASE("checkpoints are lossless") {
  envs::LqProblem lq = envs::make_default_lq(2, 2, 4);
  ctl::ControlProblem p = lq.to_control_problem();
  ctl::StackedPolicy policy = ctl::StackedPolicy::init(p, {5, 4}, true, 99);
  // make the moving statistics nontrivial before the round trip
  RngStream rng(4, StreamKind::Test);
  ctl::ExoBatch exo = p.sample_exo(rng, 8);
  ctl::rollout_batch(p, policy, exo, ctl::RolloutMode::Train, true);

  ctl::StackedPolicy restored = io::policy_from_json(io::policy_to_json(policy));
  auto a = policy.parameters();
  auto b = restored.parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    CHECK(a[i].tensor->data == b[i].tensor->data);  // bitwise
  }
  for (std::size_t t = 0; t < policy.subnets.size(); ++t) {
    REQUIRE(restored.subnets[t].bn.size() == policy.subnets[t].bn.size());
    for (std::size_t l = 0; l < policy.subnets[t].bn.size(); ++l) {
      CHECK(restored.subnets[t].bn[l].moving_mean.data == policy.subnets[t].bn[l].moving_mean.data);
      CHECK(restored.subnets[t].bn[l].moving_var.data == policy.subnets[t].bn[l].moving_var.data);
    }
  }
}

TEST_CASE("value tables round trip") {
  envs::EnergySingleModel m = envs::make_canonical_single(3);
  dp::ValueTable table = dp::energy_dp_lookup(m, 11, 5);
  dp::ValueTable restored = io::value_table_from_json(io::value_table_to_json(table));
  CHECK(restored.values == table.values);
  CHECK(restored.greedy_charge == table.greedy_charge);
  CHECK(restored.greedy_discharge == table.greedy_discharge);
  CHECK(restored.r_grid == table.r_grid);
}

TEST_CASE("run config validation yields field-level errors") {
  const fs::path dir = make_temp_dir("cfg");
  std::stringstream log;

  SUBCASE("missing environment file path") {
    std::ofstream(dir / "bad.json") << R"({"environment": {}, "training": {}, "seeds": [1]})";
    CHECK_THROWS_WITH_AS(io::load_run_config(dir / "bad.json"), doctest::Contains("environment.file"),
                         io::ConfigError);
  }
  SUBCASE("missing training fields are named") {
    std::ofstream(dir / "bad.json")
        << R"({"environment": {"file": "nope.json"}, "training": {"batch_size": 8}, "seeds": [1]})";
    CHECK_THROWS_WITH_AS(io::load_run_config(dir / "bad.json"), doctest::Contains("training.iterations"),
                         io::ConfigError);
  }
  SUBCASE("nonexistent environment file fails validate with the path") {
    std::ofstream(dir / "bad.json") << R"({"environment": {"file": "nope.json"},
      "training": {"batch_size": 8, "iterations": 1, "learning_rate": [[0, 0.01]], "hidden": [4]},
      "seeds": [1]})";
    io::RunConfig cfg = io::load_run_config(dir / "bad.json");
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("nope.json"), io::ConfigError);
  }
  SUBCASE("duplicate seeds are rejected") {
    write_lq_setup(dir, 1, "out");
    io::RunConfig cfg = io::load_run_config(dir / "run.json");
    cfg.seeds = {3, 3};
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("seeds"), io::ConfigError);
  }
}

TEST_CASE("config snapshot reloads to an equivalent configuration") {
  const fs::path dir = make_temp_dir("snapshot");
  write_lq_setup(dir, 1, "out");
  io::RunConfig cfg = io::load_run_config(dir / "run.json");
  io::RunConfig again = io::run_config_from_json(io::run_config_to_json(cfg), dir);
  CHECK(again.environment_file == cfg.environment_file);
  CHECK(again.seeds == cfg.seeds);
  CHECK(again.evaluation_samples == cfg.evaluation_samples);
  CHECK(again.train.batch_size == cfg.train.batch_size);
  CHECK(again.train.iterations == cfg.train.iterations);
  CHECK(again.train.hidden == cfg.train.hidden);
  CHECK(again.train.lr_schedule.size() == cfg.train.lr_schedule.size());
}

TEST_CASE("cmd_train writes per-seed artifacts and an aggregate") {
  const fs::path dir = make_temp_dir("train");
  const fs::path cfg = write_lq_setup(dir, 50, "out");
  std::stringstream log;
  cli::CommonOptions opt;
  opt.config = cfg;
  REQUIRE(cli::cmd_train(opt, log) == 0);
  for (int seed : {7, 8}) {
    const fs::path sd = dir / "out" / ("seed_" + std::to_string(seed));
    CHECK(fs::exists(sd / "config_snapshot.json"));
    CHECK(fs::exists(sd / "checkpoint.json"));
    CHECK(fs::exists(sd / "curve.csv"));
    CHECK(fs::exists(sd / "eval_report.json"));
  }
  CHECK(fs::exists(dir / "out" / "aggregate.csv"));
  // header is pinned
  const std::string curve = slurp(dir / "out" / "seed_7" / "curve.csv");
  CHECK(curve.rfind("iteration,train_objective,val_objective_penalized,val_objective_projected,"
                    "max_violation,wall_seconds\n",
                    0) == 0);

  SUBCASE("zero iterations leaves only the initialized-policy evaluation") {
    const fs::path dir2 = make_temp_dir("train0");
    const fs::path cfg2 = write_lq_setup(dir2, 0, "out");
    cli::CommonOptions opt2;
    opt2.config = cfg2;
    REQUIRE(cli::cmd_train(opt2, log) == 0);
    std::stringstream curve0(slurp(dir2 / "out" / "seed_7" / "curve.csv"));
    std::string line;
    int lines = 0;
    while (std::getline(curve0, line)) ++lines;
    CHECK(lines == 2);  // header plus the single iteration-0 point
  }
}

TEST_CASE("repeated runs produce byte-identical tables up to wall clock") {
  const fs::path dir_a = make_temp_dir("det_a");
  const fs::path dir_b = make_temp_dir("det_b");
  std::stringstream log;
  cli::CommonOptions opt_a;
  opt_a.config = write_lq_setup(dir_a, 75, "out");
  REQUIRE(cli::cmd_train(opt_a, log) == 0);
  cli::CommonOptions opt_b;
  opt_b.config = write_lq_setup(dir_b, 75, "out");
  REQUIRE(cli::cmd_train(opt_b, log) == 0);
  for (int seed : {7, 8}) {
    const std::string a = slurp(dir_a / "out" / ("seed_" + std::to_string(seed)) / "curve.csv");
    const std::string b = slurp(dir_b / "out" / ("seed_" + std::to_string(seed)) / "curve.csv");
    CHECK(strip_wall_column(a) == strip_wall_column(b));
    // checkpoints carry no timing and must match exactly
    CHECK(slurp(dir_a / "out" / ("seed_" + std::to_string(seed)) / "checkpoint.json") ==
          slurp(dir_b / "out" / ("seed_" + std::to_string(seed)) / "checkpoint.json"));
  }
}

TEST_CASE("cmd_baseline and cmd_report work end to end on the lq toy") {
  const fs::path dir = make_temp_dir("report");
  std::stringstream log;
  cli::CommonOptions opt;
  opt.config = write_lq_setup(dir, 150, "out");
  REQUIRE(cli::cmd_train(opt, log) == 0);

  cli::CommonOptions bopt;
  bopt.config = opt.config;
  bopt.out = dir / "baseline";
  REQUIRE(cli::cmd_baseline(bopt, log) == 0);
  const fs::path report_json = dir / "baseline" / "baseline_report.json";
  REQUIRE(fs::exists(report_json));
  CHECK(io::read_json(report_json).at("oracle") == "riccati");

  const fs::path out_csv = dir / "comparison.csv";
  std::vector<fs::path> runs{dir / "out" / "seed_7", dir / "out" / "seed_8"};
  REQUIRE(cli::cmd_report(runs, report_json, 2048, out_csv, log) == 0);
  const std::string csv = slurp(out_csv);
  CHECK(csv.rfind("run_dir,seed,environment,objective_mean,objective_std_error,benchmark,"
                  "relative_metric,max_violation,infeasible_samples\n",
                  0) == 0);
  std::stringstream ss(csv);
  std::string line;
  int rows = 0;
  while (std::getline(ss, line)) ++rows;
  CHECK(rows == 3);

  SUBCASE("environment mismatch between run and baseline is rejected") {
    const fs::path dir2 = make_temp_dir("report_mismatch");
    std::stringstream log2;
    cli::CommonOptions opt2;
    opt2.config = write_lq_setup(dir2, 1, "out");
    // different horizon -> different embedded environment definition
    REQUIRE(cli::cmd_make_env("lq", dir2 / "lq.json", 4, 0, 1, log2) == 0);
    REQUIRE(cli::cmd_train(opt2, log2) == 0);
    CHECK_THROWS_AS(
        cli::cmd_report({dir2 / "out" / "seed_7"}, report_json, 512, dir2 / "cmp.csv", log2),
        io::ConfigError);
  }
}

TEST_CASE("cmd_baseline reports the declared oracle gap for multi-device storage") {
  const fs::path dir = make_temp_dir("noor");
  std::stringstream log;
  REQUIRE(cli::cmd_make_env("energy_multi", dir / "multi.json", 3, 2, 5, log) == 0);
  std::ofstream(dir / "run.json") << R"({
    "environment": {"kind": "energy_multi", "file": "multi.json"},
    "training": {"batch_size": 8, "iterations": 1, "learning_rate": [[0, 0.01]], "hidden": [4]},
    "seeds": [1], "output_dir": "out"})";
  cli::CommonOptions opt;
  opt.config = dir / "run.json";
  opt.out = dir / "baseline";
  REQUIRE(cli::cmd_baseline(opt, log) == 0);
  const auto report = io::read_json(dir / "baseline" / "baseline_report.json");
  CHECK(report.at("oracle") == "none");
}

TEST_CASE("cmd_gradcheck passes on the built-in instance") {
  std::stringstream log;
  CHECK(cli::cmd_gradcheck(std::nullopt, 1e-4, log) == 0);
  CHECK(log.str().rfind("PASS", 0) == 0);
}
