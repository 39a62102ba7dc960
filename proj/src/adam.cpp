#include "deepctrl/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace deepctrl::nets {

double resolve_learning_rate(const std::vector<LrScheduleEntry>& schedule, long iteration) {
  if (schedule.empty()) throw std::invalid_argument("learning-rate schedule is empty");
  double rate = schedule.front().rate;
  for (const LrScheduleEntry& e : schedule) {
    if (e.start_iteration <= iteration) rate = e.rate;
  }
  return rate;
}

void AdamState::init(const std::vector<Tensor*>& params) {
  step_count = 0;
  first_moment.clear();
  second_moment.clear();
  for (const Tensor* p : params) {
    first_moment.push_back(Tensor::zeros({p->rows(), p->cols()}));
    second_moment.push_back(Tensor::zeros({p->rows(), p->cols()}));
  }
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               const std::vector<std::string>& names, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
  }
  const double lr = resolve_learning_rate(state.schedule, state.step_count);
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = grads[i];
    if (g.numel() != p.numel()) {
      throw std::invalid_argument("adam_step: gradient shape mismatch for " +
                                  (i < names.size() ? names[i] : std::to_string(i)));
    }
    if (!g.all_finite()) {
      throw std::runtime_error("adam_step: non-finite gradient for " +
                               (i < names.size() ? names[i] : std::to_string(i)));
    }
    Tensor& m = state.first_moment[i];
    Tensor& v = state.second_moment[i];
    for (std::size_t k = 0; k < p.data.size(); ++k) {
      m.data[k] = state.beta1 * m.data[k] + (1.0 - state.beta1) * g.data[k];
      v.data[k] = state.beta2 * v.data[k] + (1.0 - state.beta2) * g.data[k] * g.data[k];
      const double m_hat = m.data[k] / bc1;
      const double v_hat = v.data[k] / bc2;
      p.data[k] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon_hat);
    }
  }
}

}  // namespace deepctrl::nets
