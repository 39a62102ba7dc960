#pragma once

// The core solver. A ControlProblem describes dynamics, costs, constraints and
// projection as tape-builder callbacks; rollout_batch wires T subnetworks and
// the dynamics into one differentiable graph; train() runs Monte-Carlo SGD on
// it; evaluate() scores a policy with projected controls.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "deepctrl/adam.hpp"
#include "deepctrl/nets.hpp"
#include "deepctrl/rng.hpp"
#include "deepctrl/tape.hpp"
#include "deepctrl/tensor.hpp"

namespace deepctrl::ctl {

// Exogenous noise for a batch of rollouts: steps[t] is the (batch, exo_dim)
// block realized between t and t+1 (so it may enter the state at t+1).
struct ExoBatch {
  std::vector<Tensor> steps;
  int batch = 0;
};

struct ControlProblem {
  std::string name;
  int state_dim = 0;
  int control_dim = 0;
  int horizon = 0;
  int exo_dim = 0;
  Tensor initial_state;  // (1, m), deterministic

  std::function<ExoBatch(RngStream&, int)> sample_exo;

  // next state from (s_t, a_t, exogenous block realized at t+1)
  std::function<ad::NodeId(ad::Tape&, ad::NodeId, ad::NodeId, ad::NodeId, int)> build_step;
  // c_t(s_t, a_t) as a (batch, 1) node
  std::function<ad::NodeId(ad::Tape&, ad::NodeId, ad::NodeId, int)> build_stage_cost;
  // c_T(s_T) as a (batch, 1) node; null means zero terminal cost
  std::function<ad::NodeId(ad::Tape&, ad::NodeId)> build_terminal_cost;
  // g_i(s, a) stacked as (batch, I); null means no equality constraints
  std::function<ad::NodeId(ad::Tape&, ad::NodeId, ad::NodeId, int)> build_equality;
  // h_j(s, a) stacked as (batch, J); null means no inequality constraints
  std::function<ad::NodeId(ad::Tape&, ad::NodeId, ad::NodeId, int)> build_inequality;
  std::vector<double> lambda;  // one per equality constraint
  std::vector<double> sigma;   // one per inequality constraint

  // Deterministic projection of a raw control batch onto the admissible set.
  std::function<Tensor(const Tensor&, const Tensor&, int)> project;  // (s, a, t)

  // Forced-control rule: when is_forced(t), the control is built from the
  // state and the subnetwork at t is skipped.
  std::function<bool(int)> is_forced;
  std::function<ad::NodeId(ad::Tape&, ad::NodeId, int)> build_forced_control;

  nets::OutputHead head = nets::OutputHead::Linear;

  // Policy input features: (s - feature_offset) / feature_scale (empty = raw
  // state). Physical control: net_output * action_scale + action_offset
  // (empty = raw output). A NonNegative head requires a nonnegative offset
  // and positive scale so the transform preserves the sign guarantee.
  Tensor feature_offset, feature_scale;  // (1, m)
  Tensor action_offset, action_scale;    // (1, n)

  void validate() const;
};

struct StackedPolicy {
  std::vector<nets::Subnetwork> subnets;   // exactly horizon entries
  bool skip_batchnorm_first = true;        // subnet 0 consumes the deterministic s_0

  static StackedPolicy init(const ControlProblem& problem, const std::vector<int>& hidden,
                            bool use_batchnorm, std::uint64_t seed);

  std::vector<nets::ParamRef> parameters();
};

struct TrainingConfig {
  int batch_size = 64;
  long iterations = 1000;
  std::vector<nets::LrScheduleEntry> lr_schedule{{0, 1e-3}};
  int validation_batch_size = 4096;
  long validation_every = 100;
  std::uint64_t seed = 1;
  std::vector<int> hidden{32, 32};
  bool use_batchnorm = true;
  std::optional<std::vector<double>> lambda_override;
  std::optional<std::vector<double>> sigma_override;
  int eval_chunk = 4096;

  void validate() const;
};

enum class RolloutMode { Train, TrainFrozen, EvalRaw, EvalProjected };

struct RolloutResult {
  std::unique_ptr<ad::Tape> tape;
  ad::NodeId mean_objective = 0;  // scalar node: batch mean of the objective
  nets::ParamRegistry params;

  Tensor total_cost;           // (batch, 1) C_T, penalized or not per the call
  Tensor cumulative;           // (batch, T) C_t
  Tensor penalty_total;        // (batch, 1)
  std::vector<Tensor> states;  // T+1 tensors (batch, m)
  std::vector<Tensor> actions; // T tensors (batch, n), post-projection in EvalProjected
  double max_violation = 0.0;  // worst single-constraint violation over batch x steps
  double mean_violation = 0.0; // mean over (sample, step) of summed violations
  Tensor violation_per_sample; // (batch, 1) max violation per sample
};

// Quadratic penalty: sum_i lambda_i g_i^2 + sum_j sigma_j min{0, h_j}^2.
double apply_penalties(const ControlProblem& problem, const Tensor& state, const Tensor& control,
                       int t = 0);

RolloutResult rollout_batch(const ControlProblem& problem, StackedPolicy& policy, const ExoBatch& exo,
                            RolloutMode mode, bool penalized);

struct LearningCurvePoint {
  long iteration = 0;
  double train_objective = 0.0;
  double val_objective_penalized = 0.0;
  double val_objective_projected = 0.0;
  double max_violation = 0.0;
  double mean_violation = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  StackedPolicy policy;
  std::vector<LearningCurvePoint> curve;
  bool diverged = false;
};

TrainResult train(const ControlProblem& problem, const TrainingConfig& config);

struct EvalReport {
  double mean_objective = 0.0;
  double std_error = 0.0;
  long samples = 0;
  double max_violation = 0.0;  // post-projection
  long infeasible_samples = 0; // samples with violation above tolerance
  double feasibility_tolerance = 1e-9;
};

// Projected-control evaluation; the objective excludes penalty terms.
EvalReport evaluate(const ControlProblem& problem, StackedPolicy& policy, long samples,
                    RngStream& stream, int chunk = 4096);

// candidate/benchmark; 1.0 is optimal from above (min) or below (max).
enum class MetricSense { Minimize, Maximize };
double relative_metric(double candidate, double benchmark, MetricSense sense);

struct GradCheckReport {
  bool pass = false;
  double worst_rel_error = 0.0;
  std::string worst_param;
  double kink_distance = 0.0;
  long parameters_checked = 0;
};

// Backward vs central finite differences on a fixed exogenous batch, batch
// statistics held fixed (TrainFrozen). Exhaustive over every coordinate, so
// intended for small instances only.
GradCheckReport gradient_check(const ControlProblem& problem, StackedPolicy& policy,
                               const ExoBatch& exo, double tolerance = 1e-4, double h = 1e-6);

// Compares externally supplied gradients against finite differences (lets a
// corrupted-gradient fixture demonstrate that the check actually fails).
GradCheckReport check_gradients_against_fd(const ControlProblem& problem, StackedPolicy& policy,
                                           const ExoBatch& exo,
                                           const std::vector<std::pair<std::string, Tensor>>& grads,
                                           double tolerance = 1e-4, double h = 1e-6);

}  // namespace deepctrl::ctl
