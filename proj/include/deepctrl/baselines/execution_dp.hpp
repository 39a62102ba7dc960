#pragma once

// Backward induction for the execution model. The value-to-go admits a
// quadratic ansatz in (u, x) with u = p_tilde ⊙ w (price-proportional
// structure):
//
//   V_t(p, x, w) = u'Q_t u + u'S_t x + x'M_t x + lu_t'u + lx_t'x + q_t
//
// because per-period costs are quadratic in the dollar trade y = p_tilde ⊙ a
// and the lognormal price growth only rescales u through its first two
// moments. The recursion yields linear feedback for the optimal dollar trade
// y* = Kw_t u + Kx_t x + kc_t; the final trade is forced to the remainder.

#include <vector>

#include "deepctrl/envs/execution.hpp"
#include "deepctrl/rng.hpp"
#include "deepctrl/tensor.hpp"

namespace deepctrl::dp {

struct ExecutionValue {
  envs::ExecutionModel model;
  std::vector<Tensor> Q;    // (n, n), t = 0..T-1
  std::vector<Tensor> S;    // (n, m)
  std::vector<Tensor> M;    // (m, m)
  std::vector<Tensor> lu;   // (1, n)
  std::vector<Tensor> lx;   // (1, m)
  std::vector<double> q;
  std::vector<Tensor> Kw;   // (n, n), t = 0..T-2
  std::vector<Tensor> Kx;   // (n, m)
  std::vector<Tensor> kc;   // (1, n)

  double value(int t, const Tensor& p_tilde, const Tensor& x, const Tensor& w) const;
  double expected_optimal_cost() const;  // V_0 at (p0, x0, target)

  // optimal trade in shares; at t = T-1 this is the forced remainder w
  Tensor optimal_trade(int t, const Tensor& p_tilde, const Tensor& x, const Tensor& w) const;

  // One-step consistency of the stored coefficients: re-evaluates
  // min_y [stage cost + E V_{t+1}] at y* directly from the model pieces and
  // the t+1 coefficients, and probes the first-order condition by central
  // differences. Returns the relative mismatch.
  double bellman_residual(int t, const Tensor& p_tilde, const Tensor& x, const Tensor& w) const;
};

// Runs the backward recursion and verifies the ansatz on sampled states
// (relative residual above `residual_tolerance` is rejected with diagnostics).
ExecutionValue execution_optimal(const envs::ExecutionModel& model, double residual_tolerance = 1e-8);

// Plain Monte-Carlo rollout of a trade rule on the model (no tape involved);
// the rule is called for t < T-1 and the last trade is forced. Returns the
// mean cost; std_error_out may be null.
using TradeRule = std::function<Tensor(int, const Tensor&, const Tensor&, const Tensor&)>;
double simulate_policy_cost(const envs::ExecutionModel& model, const TradeRule& rule, long samples,
                            RngStream& rng, double* std_error_out = nullptr);

}  // namespace deepctrl::dp
