#pragma once

// Optimal trade execution with linear percentage price impact. The executed
// price is p = p_tilde + diag(p_tilde) (A diag(p_tilde) a + B x); the
// no-impact price follows geometric Brownian motion and the market factors an
// AR(1) process, both independent of the control. State: (p_tilde, x, w) with
// w the remaining shares; the final trade is forced to w so the share target
// holds exactly.

#include <vector>

#include "deepctrl/control.hpp"
#include "deepctrl/rng.hpp"
#include "deepctrl/tensor.hpp"

namespace deepctrl::envs {

struct ExecutionModel {
  int n = 0;  // stocks
  int m = 0;  // market factors
  int horizon = 0;

  Tensor A;              // (n, n) impact, symmetric positive definite
  Tensor B;              // (n, m) factor impact
  Tensor C;              // (m, m) factor AR(1), spectral radius < 1
  Tensor drift;          // (1, n) GBM drift per stock
  Tensor vol_chol;       // (n, n) lower chol of the log-return covariance per unit time
  Tensor eta_chol;       // (m, m) lower chol of the factor noise covariance
  double dt = 1.0;
  Tensor target_shares;  // (1, n)
  Tensor p0;             // (1, n), componentwise positive
  Tensor x0;             // (1, m)

  void validate() const;

  int state_dim() const { return 2 * n + m; }
  // state layout: [p_tilde | x | w]
  std::size_t price_begin() const { return 0; }
  std::size_t factor_begin() const { return static_cast<std::size_t>(n); }
  std::size_t shares_begin() const { return static_cast<std::size_t>(n + m); }

  // executed price p = p_tilde + diag(p_tilde)(A diag(p_tilde) a + B x)
  Tensor price(const Tensor& p_tilde, const Tensor& x, const Tensor& a) const;
  // period cost p(p_tilde, x, a)ᵀ a
  double trade_cost(const Tensor& p_tilde, const Tensor& x, const Tensor& a) const;
  // exact lognormal update of p_tilde given standard normals z
  Tensor price_step(const Tensor& p_tilde, const Tensor& z) const;
  // x' = C x + eta_chol eps
  Tensor factor_step(const Tensor& x, const Tensor& eps) const;

  // E[g_i] of the one-period price growth factor
  Tensor growth_mean() const;
  // E[g_i g_j]
  Tensor growth_second_moment() const;
  double no_impact_cost() const;  // p0ᵀ target

  ctl::ControlProblem to_control_problem() const;
};

// Canonical desk-scale parameter set; the random pieces (impact coupling U,
// factor matrices) are drawn from the given seed so instances are
// reproducible and serializable.
ExecutionModel make_canonical_execution_model(std::uint64_t seed = 2718, int n = 10, int m = 3,
                                              int horizon = 5);

// (policy cost - p0ᵀ target) / (oracle cost - p0ᵀ target); both costs measured
// above the no-impact benchmark. Rejects a degenerate (zero-impact) oracle.
double execution_relative_cost(double policy_cost, double oracle_cost, const ExecutionModel& model);

}  // namespace deepctrl::envs
