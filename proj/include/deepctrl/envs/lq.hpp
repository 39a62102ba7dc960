#pragma once

// Linear-quadratic toy: s' = F s + G a + xi, quadratic stage and terminal
// costs, Gaussian noise. Small enough that the exact Riccati solution is a
// practical oracle for the whole training stack.

#include "deepctrl/control.hpp"
#include "deepctrl/tensor.hpp"

namespace deepctrl::envs {

struct LqProblem {
  Tensor F;           // (m, m)
  Tensor G;           // (m, n)
  Tensor Q;           // (m, m), positive semidefinite
  Tensor R;           // (n, n), positive definite
  Tensor Q_T;         // (m, m), positive semidefinite
  Tensor noise_chol;  // (m, m) lower-triangular L, covariance L Lᵀ
  Tensor s0;          // (1, m)
  int horizon = 1;

  int state_dim() const { return static_cast<int>(F.rows()); }
  int control_dim() const { return static_cast<int>(G.cols()); }
  Tensor noise_covariance() const;

  void validate() const;
  ctl::ControlProblem to_control_problem() const;
};

// The desk-scale instance used by the experiment harness.
LqProblem make_default_lq(int state_dim = 2, int control_dim = 2, int horizon = 5);

}  // namespace deepctrl::envs
