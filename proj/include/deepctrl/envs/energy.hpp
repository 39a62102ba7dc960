#pragma once

// Energy storage environments. Single device: control (a_wd, a_md, a_rd,
// a_wr, a_rm) serves stochastic demand from wind, storage and the spot
// market; reward p (d + a_rm - a_md); storage moves by phi'a with
// phi = (0, 0, -1, 1, -1). Multi device: pure arbitrage (d = 0), per-device
// control (a_wr, a_rm, a_mr) with charge/discharge efficiencies, holding
// costs and phi_i = (eta_c_i, -1, eta_c_i).

#include <array>
#include <cstdint>
#include <vector>

#include "deepctrl/control.hpp"
#include "deepctrl/envs/markov.hpp"
#include "deepctrl/rng.hpp"
#include "deepctrl/tensor.hpp"

namespace deepctrl::envs {

// control component indices, single device
enum SingleControl : std::size_t { kWd = 0, kMd = 1, kRd = 2, kWr = 3, kRm = 4 };

// Chain index paths for a batch: index_paths[t][sample] = {wind, price,
// demand} at time t, t = 0..T. Shared by the neural rollouts and the lookup
// table evaluation so both can run on common noise.
struct ChainPaths {
  std::vector<std::vector<std::array<int, 3>>> index_paths;
  int batch = 0;
};

struct EnergySingleModel {
  MarkovChain wind, price, demand;
  double gamma_c = 0.0;  // max charge rate
  double gamma_d = 0.0;  // max discharge rate
  double r_max = 0.0;    // storage capacity
  double r0 = 0.0;
  int w0 = 0, p0 = 0, d0 = 0;  // initial chain indices
  int horizon = 0;

  void validate() const;

  // reward p (d + a_rm - a_md)
  static double reward(double p, double d, const double* a);
  // r' = r + phi'a
  static double storage_step(double r, const double* a);
  // same, rejecting results outside [0, r_max] beyond 1e-9 (projection should
  // prevent that; this guards the plain rollout paths)
  double storage_step_checked(double r, const double* a) const;

  // Deterministic three-stage projection onto the admissible set:
  // (1) clip to >= 0 and cap a_wr by min(r_max - r, gamma_c);
  // (2) scale (a_wr, a_wd) onto the wind budget and (a_rd, a_rm) onto the
  //     discharge budget;
  // (3) scale (a_wd, a_rd) onto the demand and set a_md = d - a_wd - a_rd.
  void project_row(double r, double w, double d, double* a) const;
  Tensor project(const Tensor& state, const Tensor& control) const;

  // Largest violation over the admissible-set conditions (independent oracle
  // used by tests against the projection).
  double max_violation(double r, double w, double d, const double* a) const;

  ChainPaths sample_chain_paths(RngStream& rng, int batch) const;
  ctl::ControlProblem to_control_problem() const;
};

EnergySingleModel make_canonical_single(int horizon = 10);

struct EnergyDevice {
  double r_max = 0.0;
  double gamma_c = 0.0;
  double gamma_d = 0.0;
  double eta_c = 1.0;
  double eta_d = 1.0;
  double beta = 0.0;  // holding cost
};

struct EnergyMultiModel {
  std::vector<EnergyDevice> devices;
  MarkovChain wind, price;
  std::vector<double> r0;
  int w0 = 0, p0 = 0;
  int horizon = 0;

  int device_count() const { return static_cast<int>(devices.size()); }
  void validate() const;  // includes the capacity/parameter monotonicity

  // reward sum_i [p (eta_d_i a_rm_i - a_mr_i) - beta_i r_i]
  double reward(double p, const double* r, const double* a) const;
  // per-device r_i' = r_i + phi_i'a_i
  void storage_step(const double* r, const double* a, double* r_next) const;

  // Deterministic projection: per device clip, cap a_rm by the discharge
  // budget, scale (a_wr, a_mr) onto the charge headroom
  // min{(r_max_i - r_i)/eta_c_i, gamma_c_i}, then scale all a_wr onto the
  // shared wind budget.
  void project_row(const double* r, double w, double* a) const;
  Tensor project(const Tensor& state, const Tensor& control) const;
  double max_violation(const double* r, double w, const double* a) const;

  ctl::ControlProblem to_control_problem() const;
};

// Seeded instance generator: capacities ascend linearly over [20, 100] while
// transfer caps, efficiencies and holding costs descend (higher capacity,
// slower and lossier and cheaper to hold).
EnergyMultiModel make_canonical_multi(int devices, int horizon = 10, std::uint64_t seed = 424242);

}  // namespace deepctrl::envs
