#pragma once

// Serialization: environment definition files, run configs, parameter
// checkpoints, value tables (all versioned JSON) and deterministic CSV
// tables. Doubles survive every round trip bit-exactly.

#include <json.hpp>

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "deepctrl/baselines/energy_dp.hpp"
#include "deepctrl/control.hpp"
#include "deepctrl/envs/energy.hpp"
#include "deepctrl/envs/execution.hpp"
#include "deepctrl/envs/lq.hpp"

namespace deepctrl::io {

// Configuration / schema problems carry the offending field path.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

nlohmann::json tensor_to_json(const Tensor& t);
Tensor tensor_from_json(const nlohmann::json& j, const std::string& field);

using Environment =
    std::variant<envs::LqProblem, envs::ExecutionModel, envs::EnergySingleModel, envs::EnergyMultiModel>;

std::string environment_kind(const Environment& env);
ctl::ControlProblem environment_problem(const Environment& env);

nlohmann::json environment_to_json(const Environment& env);
Environment environment_from_json(const nlohmann::json& j);
Environment load_environment(const std::filesystem::path& path);
void save_environment(const std::filesystem::path& path, const Environment& env);

struct RunConfig {
  std::filesystem::path environment_file;
  ctl::TrainingConfig train;
  long evaluation_samples = 100000;
  std::vector<std::uint64_t> seeds{1};
  std::filesystem::path output_dir = "runs/out";

  void validate() const;  // seeds distinct, referenced file exists
};

RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);

// Parameter checkpoint, keyed by (timestep, layer); lossless round trip.
nlohmann::json policy_to_json(ctl::StackedPolicy& policy);
ctl::StackedPolicy policy_from_json(const nlohmann::json& j);

nlohmann::json value_table_to_json(const dp::ValueTable& table);
dp::ValueTable value_table_from_json(const nlohmann::json& j);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

// Learning-curve table: iteration, train_objective, val_objective_penalized,
// val_objective_projected, max_violation, wall_seconds.
void write_curve_csv(const std::filesystem::path& path, const std::vector<ctl::LearningCurvePoint>& curve);

// Mean and standard deviation across seeds per validation point.
void write_aggregate_csv(const std::filesystem::path& path,
                         const std::vector<std::vector<ctl::LearningCurvePoint>>& curves);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace deepctrl::io
