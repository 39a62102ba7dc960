#pragma once

// Exact finite-horizon discrete-time LQR by backward Riccati recursion; the
// oracle the trained LQ policies are scored against.

#include <vector>

#include "deepctrl/envs/lq.hpp"
#include "deepctrl/tensor.hpp"

namespace deepctrl::dp {

struct LqSolution {
  std::vector<Tensor> gains;  // K_t (n, m); the optimal control is a = -K_t s
  std::vector<Tensor> value;  // P_t (m, m), t = 0..T

  // s0 P0 s0' plus the accumulated noise trace terms.
  double expected_cost(const Tensor& s0, const Tensor& noise_cov) const;
  Tensor optimal_control(int t, const Tensor& state_row) const;
};

LqSolution lq_riccati(const envs::LqProblem& lq);

}  // namespace deepctrl::dp
