#include "deepctrl/control.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace deepctrl::ctl {

namespace {

ad::BnMode bn_mode_for(RolloutMode mode) {
  switch (mode) {
    case RolloutMode::Train: return ad::BnMode::Train;
    case RolloutMode::TrainFrozen: return ad::BnMode::TrainFrozen;
    default: return ad::BnMode::Eval;
  }
}

// penalty = sum_i lambda_i g_i^2 + sum_j sigma_j min{0, h_j}^2, per sample.
ad::NodeId penalty_node(ad::Tape& tape, ad::NodeId values, const std::vector<double>& coeffs, bool is_equality) {
  const std::size_t k = tape.value(values).cols();
  if (coeffs.size() != k) {
    throw std::invalid_argument("penalty coefficients: expected " + std::to_string(k) + " entries, got " +
                                std::to_string(coeffs.size()));
  }
  ad::NodeId v = is_equality ? values : tape.min_zero(values);
  ad::NodeId sq = tape.square(v);
  ad::NodeId weighted = tape.mul(sq, tape.constant(Tensor::row(coeffs)));
  return ad::sum_cols(tape, weighted);
}

struct ViolationStats {
  double max_single = 0.0;
  Tensor per_sample;  // (batch, 1) max violation per sample

  void init(int batch) { per_sample = Tensor::zeros({static_cast<std::size_t>(batch), 1}); }

  void absorb(const Tensor& g_values, bool is_equality, Tensor& step_sum) {
    for (std::size_t r = 0; r < g_values.rows(); ++r) {
      for (std::size_t c = 0; c < g_values.cols(); ++c) {
        const double raw = g_values.at(r, c);
        const double viol = is_equality ? std::abs(raw) : std::max(0.0, -raw);
        max_single = std::max(max_single, viol);
        per_sample.data[r] = std::max(per_sample.data[r], viol);
        step_sum.data[r] += viol;
      }
    }
  }
};

}  // namespace

void ControlProblem::validate() const {
  if (state_dim <= 0 || control_dim <= 0 || horizon <= 0 || exo_dim < 0) {
    throw std::invalid_argument(name + ": dimensions and horizon must be positive");
  }
  if (initial_state.rows() != 1 || static_cast<int>(initial_state.cols()) != state_dim) {
    throw std::invalid_argument(name + ": initial state must be (1, " + std::to_string(state_dim) + ")");
  }
  if (!initial_state.all_finite()) throw std::invalid_argument(name + ": initial state not finite");
  if (!sample_exo || !build_step || !build_stage_cost) {
    throw std::invalid_argument(name + ": sample_exo, build_step and build_stage_cost are required");
  }
  for (double l : lambda) {
    if (!(l >= 0.0)) throw std::invalid_argument(name + ": lambda must be nonnegative");
  }
  for (double s : sigma) {
    if (!(s >= 0.0)) throw std::invalid_argument(name + ": sigma must be nonnegative");
  }
  auto check_row = [&](const Tensor& t, int dim, const char* what) {
    if (t.numel() == 0) return;
    if (t.rows() != 1 || static_cast<int>(t.cols()) != dim) {
      throw std::invalid_argument(name + ": " + what + " must be (1, " + std::to_string(dim) + ")");
    }
  };
  check_row(feature_offset, state_dim, "feature_offset");
  check_row(feature_scale, state_dim, "feature_scale");
  check_row(action_offset, control_dim, "action_offset");
  check_row(action_scale, control_dim, "action_scale");
  if (head == nets::OutputHead::NonNegative) {
    for (double v : action_offset.data) {
      if (v < 0.0) throw std::invalid_argument(name + ": nonnegative head needs action_offset >= 0");
    }
    for (double v : action_scale.data) {
      if (v <= 0.0) throw std::invalid_argument(name + ": nonnegative head needs action_scale > 0");
    }
  }
}

void TrainingConfig::validate() const {
  if (batch_size < 2) throw std::invalid_argument("TrainingConfig: batch_size must be at least 2");
  if (iterations < 0) throw std::invalid_argument("TrainingConfig: iterations must be nonnegative");
  if (validation_batch_size <= 0 || validation_every <= 0 || eval_chunk <= 0) {
    throw std::invalid_argument("TrainingConfig: validation/eval sizes must be positive");
  }
  if (lr_schedule.empty()) throw std::invalid_argument("TrainingConfig: empty learning-rate schedule");
  for (int w : hidden) {
    if (w <= 0) throw std::invalid_argument("TrainingConfig: hidden widths must be positive");
  }
}

StackedPolicy StackedPolicy::init(const ControlProblem& problem, const std::vector<int>& hidden,
                                  bool use_batchnorm, std::uint64_t seed) {
  StackedPolicy policy;
  policy.skip_batchnorm_first = true;
  for (int t = 0; t < problem.horizon; ++t) {
    RngStream rng(seed, StreamKind::Init, static_cast<std::uint64_t>(t));
    const bool bn = use_batchnorm && !(policy.skip_batchnorm_first && t == 0);
    policy.subnets.push_back(nets::init_subnetwork(problem.state_dim, hidden, problem.control_dim,
                                                   problem.head, bn, rng));
  }
  return policy;
}

std::vector<nets::ParamRef> StackedPolicy::parameters() {
  std::vector<nets::ParamRef> out;
  for (std::size_t t = 0; t < subnets.size(); ++t) {
    auto sub = nets::subnetwork_parameters(subnets[t], "t" + std::to_string(t));
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

double apply_penalties(const ControlProblem& problem, const Tensor& state, const Tensor& control, int t) {
  ad::Tape tape;
  ad::NodeId s = tape.constant(state);
  ad::NodeId a = tape.constant(control);
  double total = 0.0;
  if (problem.build_equality) {
    ad::NodeId p = penalty_node(tape, problem.build_equality(tape, s, a, t), problem.lambda, true);
    for (double v : tape.value(p).data) total += v;
  }
  if (problem.build_inequality) {
    ad::NodeId p = penalty_node(tape, problem.build_inequality(tape, s, a, t), problem.sigma, false);
    for (double v : tape.value(p).data) total += v;
  }
  return total;
}

RolloutResult rollout_batch(const ControlProblem& problem, StackedPolicy& policy, const ExoBatch& exo,
                            RolloutMode mode, bool penalized) {
  problem.validate();
  const int T = problem.horizon;
  const int batch = exo.batch;
  if (static_cast<int>(policy.subnets.size()) != T) {
    throw std::invalid_argument(problem.name + ": policy has " + std::to_string(policy.subnets.size()) +
                                " subnetworks, horizon is " + std::to_string(T));
  }
  if (static_cast<int>(exo.steps.size()) != T) {
    throw std::invalid_argument(problem.name + ": exogenous batch has " + std::to_string(exo.steps.size()) +
                                " steps, horizon is " + std::to_string(T));
  }
  for (const Tensor& e : exo.steps) {
    if (static_cast<int>(e.rows()) != batch || static_cast<int>(e.cols()) != problem.exo_dim) {
      throw std::invalid_argument(problem.name + ": exogenous block shape " + e.shape_str());
    }
  }
  const bool training = mode == RolloutMode::Train || mode == RolloutMode::TrainFrozen;
  if (training && batch < 2) {
    throw std::invalid_argument(problem.name + ": train mode requires a batch of at least 2");
  }

  RolloutResult result;
  result.tape = std::make_unique<ad::Tape>();
  ad::Tape& tape = *result.tape;
  const ad::BnMode bn = bn_mode_for(mode);

  // s_0 replicated across the batch.
  Tensor s0 = Tensor::zeros({static_cast<std::size_t>(batch), static_cast<std::size_t>(problem.state_dim)});
  for (int r = 0; r < batch; ++r) {
    for (int c = 0; c < problem.state_dim; ++c) s0.at(r, c) = problem.initial_state.at(0, c);
  }
  ad::NodeId s = tape.constant(std::move(s0));

  const bool has_feature_transform = problem.feature_offset.numel() > 0;
  ad::NodeId feat_offset = 0, feat_inv_scale = 0;
  if (has_feature_transform) {
    Tensor inv = problem.feature_scale;
    for (double& v : inv.data) v = 1.0 / v;
    feat_offset = tape.constant(problem.feature_offset);
    feat_inv_scale = tape.constant(std::move(inv));
  }
  const bool has_action_transform = problem.action_scale.numel() > 0;
  ad::NodeId act_offset = 0, act_scale = 0;
  if (has_action_transform) {
    act_offset = tape.constant(problem.action_offset);
    act_scale = tape.constant(problem.action_scale);
  }

  ViolationStats violations;
  violations.init(batch);
  result.cumulative = Tensor::zeros({static_cast<std::size_t>(batch), static_cast<std::size_t>(T)});
  Tensor violation_sum = Tensor::zeros({static_cast<std::size_t>(batch), 1});

  ad::NodeId running_cost = tape.constant(Tensor::zeros({static_cast<std::size_t>(batch), 1}));
  ad::NodeId running_penalty = tape.constant(Tensor::zeros({static_cast<std::size_t>(batch), 1}));
  result.states.push_back(tape.value(s));

  for (int t = 0; t < T; ++t) {
    try {
      // Control: forced rule, or subnetwork with input/output transforms.
      ad::NodeId a;
      if (problem.is_forced && problem.is_forced(t)) {
        a = problem.build_forced_control(tape, s, t);
      } else {
        ad::NodeId features = s;
        if (has_feature_transform) features = tape.mul(tape.sub(s, feat_offset), feat_inv_scale);
        ad::NodeId out = nets::subnetwork_forward(tape, policy.subnets[t], features, bn,
                                                  training ? &result.params : nullptr,
                                                  "t" + std::to_string(t));
        a = has_action_transform ? tape.add(tape.mul(out, act_scale), act_offset) : out;
      }
      if (mode == RolloutMode::EvalProjected && problem.project) {
        a = tape.constant(problem.project(tape.value(s), tape.value(a), t));
      }
      result.actions.push_back(tape.value(a));

      // Constraint values feed both the penalty terms and the violation stats.
      Tensor step_viol = Tensor::zeros({static_cast<std::size_t>(batch), 1});
      if (problem.build_equality) {
        ad::NodeId g = problem.build_equality(tape, s, a, t);
        violations.absorb(tape.value(g), true, step_viol);
        if (penalized) running_penalty = tape.add(running_penalty, penalty_node(tape, g, problem.lambda, true));
      }
      if (problem.build_inequality) {
        ad::NodeId h = problem.build_inequality(tape, s, a, t);
        violations.absorb(tape.value(h), false, step_viol);
        if (penalized) running_penalty = tape.add(running_penalty, penalty_node(tape, h, problem.sigma, false));
      }
      for (int r = 0; r < batch; ++r) violation_sum.data[r] += step_viol.data[r];

      running_cost = tape.add(running_cost, problem.build_stage_cost(tape, s, a, t));
      ad::NodeId c_t = penalized ? tape.add(running_cost, running_penalty) : running_cost;
      for (int r = 0; r < batch; ++r) result.cumulative.at(r, t) = tape.value(c_t).data[r];

      s = problem.build_step(tape, s, a, tape.constant(exo.steps[t]), t);
      result.states.push_back(tape.value(s));
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(problem.name + ": rollout failed at timestep " + std::to_string(t) + ": " +
                               e.what());
    }
  }

  ad::NodeId total = running_cost;
  if (problem.build_terminal_cost) total = tape.add(total, problem.build_terminal_cost(tape, s));
  if (penalized) total = tape.add(total, running_penalty);

  result.total_cost = tape.value(total);
  result.penalty_total = tape.value(running_penalty);
  result.mean_objective = tape.reduce_mean_batch(total);
  result.max_violation = violations.max_single;
  double mv = 0.0;
  for (double v : violation_sum.data) mv += v;
  result.mean_violation = mv / static_cast<double>(batch * T);
  result.violation_per_sample = violations.per_sample;
  return result;
}

namespace {

struct ValidationPoint {
  double penalized = 0.0;
  double projected = 0.0;
  double max_violation = 0.0;
  double mean_violation = 0.0;
};

ValidationPoint run_validation(const ControlProblem& problem, StackedPolicy& policy, const ExoBatch& exo) {
  ValidationPoint p;
  RolloutResult raw = rollout_batch(problem, policy, exo, RolloutMode::EvalRaw, true);
  p.penalized = raw.tape->value(raw.mean_objective).data[0];
  p.max_violation = raw.max_violation;
  p.mean_violation = raw.mean_violation;
  RolloutResult proj = rollout_batch(problem, policy, exo, RolloutMode::EvalProjected, false);
  p.projected = proj.tape->value(proj.mean_objective).data[0];
  return p;
}

}  // namespace

TrainResult train(const ControlProblem& problem_in, const TrainingConfig& config) {
  config.validate();
  ControlProblem problem = problem_in;
  if (config.lambda_override) problem.lambda = *config.lambda_override;
  if (config.sigma_override) problem.sigma = *config.sigma_override;
  problem.validate();

  TrainResult result;
  result.policy = StackedPolicy::init(problem, config.hidden, config.use_batchnorm, config.seed);

  auto params = result.policy.parameters();
  std::vector<Tensor*> tensors;
  std::vector<std::string> names;
  for (auto& p : params) {
    tensors.push_back(p.tensor);
    names.push_back(p.name);
  }
  nets::AdamState adam;
  adam.schedule = config.lr_schedule;
  adam.init(tensors);

  RngStream train_stream(config.seed, StreamKind::Train);
  RngStream val_stream(config.seed, StreamKind::Validation);
  const ExoBatch val_exo = problem.sample_exo(val_stream, config.validation_batch_size);

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  double last_train_obj = std::numeric_limits<double>::quiet_NaN();
  auto record = [&](long iter) -> bool {
    ValidationPoint v = run_validation(problem, result.policy, val_exo);
    result.curve.push_back({iter, last_train_obj, v.penalized, v.projected, v.max_violation,
                            v.mean_violation, elapsed()});
    return std::isfinite(v.penalized) && std::isfinite(v.projected);
  };

  for (long iter = 0; iter < config.iterations; ++iter) {
    try {
      ExoBatch exo = problem.sample_exo(train_stream, config.batch_size);
      RolloutResult ro = rollout_batch(problem, result.policy, exo, RolloutMode::Train, true);
      last_train_obj = ro.tape->value(ro.mean_objective).data[0];
      if (iter % config.validation_every == 0 && !record(iter)) {
        result.diverged = true;
        return result;
      }
      auto grad_map = ro.tape->backward(ro.mean_objective);
      std::unordered_map<Tensor*, const Tensor*> by_tensor;
      for (const auto& e : ro.params.entries) by_tensor[e.tensor] = &grad_map.at(e.leaf);
      std::vector<Tensor> grads;
      grads.reserve(tensors.size());
      for (Tensor* t : tensors) {
        auto it = by_tensor.find(t);
        grads.push_back(it != by_tensor.end() ? *it->second : Tensor::zeros({t->rows(), t->cols()}));
      }
      nets::adam_step(tensors, grads, names, adam);
    } catch (const std::runtime_error&) {
      // Non-finite values mid-training: stop and hand back the partial curve.
      result.diverged = true;
      return result;
    }
  }
  if (!record(config.iterations)) result.diverged = true;
  return result;
}

EvalReport evaluate(const ControlProblem& problem, StackedPolicy& policy, long samples, RngStream& stream,
                    int chunk) {
  if (samples <= 0) throw std::invalid_argument("evaluate: sample count must be positive");
  EvalReport report;
  report.samples = samples;
  double sum = 0.0, sumsq = 0.0;
  long done = 0;
  while (done < samples) {
    const int n = static_cast<int>(std::min<long>(chunk, samples - done));
    ExoBatch exo = problem.sample_exo(stream, n);
    RolloutResult ro = rollout_batch(problem, policy, exo, RolloutMode::EvalProjected, false);
    for (double c : ro.total_cost.data) {
      sum += c;
      sumsq += c * c;
    }
    report.max_violation = std::max(report.max_violation, ro.max_violation);
    for (double v : ro.violation_per_sample.data) {
      if (v > report.feasibility_tolerance) report.infeasible_samples += 1;
    }
    done += n;
  }
  const double n = static_cast<double>(samples);
  report.mean_objective = sum / n;
  if (samples > 1) {
    const double var = std::max(0.0, (sumsq - n * report.mean_objective * report.mean_objective) / (n - 1.0));
    report.std_error = std::sqrt(var / n);
  }
  return report;
}

double relative_metric(double candidate, double benchmark, MetricSense) {
  if (benchmark == 0.0) throw std::invalid_argument("relative_metric: zero benchmark");
  return candidate / benchmark;
}

namespace {

double rollout_objective(const ControlProblem& problem, StackedPolicy& policy, const ExoBatch& exo) {
  RolloutResult ro = rollout_batch(problem, policy, exo, RolloutMode::TrainFrozen, true);
  return ro.tape->value(ro.mean_objective).data[0];
}

}  // namespace

GradCheckReport check_gradients_against_fd(const ControlProblem& problem, StackedPolicy& policy,
                                           const ExoBatch& exo,
                                           const std::vector<std::pair<std::string, Tensor>>& grads,
                                           double tolerance, double h) {
  GradCheckReport report;
  double objective_scale = 0.0;
  {
    RolloutResult ro = rollout_batch(problem, policy, exo, RolloutMode::TrainFrozen, true);
    report.kink_distance = ro.tape->min_kink_distance();
    objective_scale = std::abs(ro.tape->value(ro.mean_objective).data[0]);
  }
  // Central differences cannot resolve gradients below the cancellation
  // noise |f| eps / (2h); tensors whose gradients sit under that floor (a
  // bias feeding batch norm has an exactly-zero gradient) are counted as
  // matching rather than compared in the noise.
  const double per_coord_noise = std::max(1.0, objective_scale) * 2.2e-16 / (2.0 * h);
  auto params = policy.parameters();
  std::unordered_map<std::string, Tensor*> by_name;
  for (auto& p : params) by_name[p.name] = p.tensor;

  for (const auto& [name, bp] : grads) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw std::invalid_argument("check_gradients_against_fd: unknown parameter " + name);
    Tensor* tensor = it->second;
    Tensor fd = Tensor::zeros({tensor->rows(), tensor->cols()});
    for (std::size_t i = 0; i < tensor->data.size(); ++i) {
      const double orig = tensor->data[i];
      tensor->data[i] = orig + h;
      const double fp = rollout_objective(problem, policy, exo);
      tensor->data[i] = orig - h;
      const double fm = rollout_objective(problem, policy, exo);
      tensor->data[i] = orig;
      fd.data[i] = (fp - fm) / (2.0 * h);
    }
    report.parameters_checked += static_cast<long>(tensor->data.size());
    double diff = 0.0, ref_fd = 0.0, ref_bp = 0.0;
    for (std::size_t i = 0; i < fd.data.size(); ++i) {
      const double d = fd.data[i] - bp.data[i];
      diff += d * d;
      ref_fd += fd.data[i] * fd.data[i];
      ref_bp += bp.data[i] * bp.data[i];
    }
    const double denom = std::max(std::sqrt(ref_fd), std::sqrt(ref_bp));
    const double floor =
        std::max(1e-7, 20.0 * per_coord_noise * std::sqrt(static_cast<double>(fd.numel())));
    const double rel = denom < floor ? 0.0 : std::sqrt(diff) / denom;
    if (rel > report.worst_rel_error) {
      report.worst_rel_error = rel;
      report.worst_param = name;
    }
  }
  report.pass = report.worst_rel_error < tolerance;
  return report;
}

GradCheckReport gradient_check(const ControlProblem& problem, StackedPolicy& policy, const ExoBatch& exo,
                               double tolerance, double h) {
  RolloutResult ro = rollout_batch(problem, policy, exo, RolloutMode::TrainFrozen, true);
  auto grad_map = ro.tape->backward(ro.mean_objective);
  std::vector<std::pair<std::string, Tensor>> named;
  for (const auto& e : ro.params.entries) named.emplace_back(e.name, grad_map.at(e.leaf));
  return check_gradients_against_fd(problem, policy, exo, named, tolerance, h);
}

}  // namespace deepctrl::ctl
