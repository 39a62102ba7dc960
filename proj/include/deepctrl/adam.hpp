#pragma once

// Adam with bias correction and a piecewise-constant learning-rate schedule.

#include <string>
#include <vector>

#include "deepctrl/tensor.hpp"

namespace deepctrl::nets {

struct LrScheduleEntry {
  long start_iteration = 0;
  double rate = 1e-3;
};

// Rate of the last entry whose start_iteration <= iteration.
double resolve_learning_rate(const std::vector<LrScheduleEntry>& schedule, long iteration);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon_hat = 1e-8;
  std::vector<LrScheduleEntry> schedule{{0, 1e-3}};
  long step_count = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;

  void init(const std::vector<Tensor*>& params);
};

// One update over an aligned parameter/gradient list. Rejects non-finite
// gradients with a diagnostic naming the offending tensor.
void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               const std::vector<std::string>& names, AdamState& state);

}  // namespace deepctrl::nets
