#pragma once

// Backward dynamic programming for the single-device storage model on a
// discretized state space: r on a uniform grid, the exogenous chains on their
// own levels. The five-component control reduces exactly to two free action
// dimensions (wind-to-storage charge c and total discharge dis): given
// (c, dis) the reward p (d + a_rm - a_md) = p (dis + a_wd) is maximized by
// serving demand from wind first, a_wd = min(d, w - c), and the dis split
// between demand and market does not affect the dynamics. The greedy policy
// is stored as mesh indices over (c, dis) per state and timestep.

#include <cstdint>
#include <vector>

#include "deepctrl/envs/energy.hpp"
#include "deepctrl/rng.hpp"

namespace deepctrl::dp {

struct ValueTable {
  std::vector<double> r_grid;
  int wind_states = 0, price_states = 0, demand_states = 0;
  int horizon = 0;
  int mesh = 0;  // points per free action dimension (plus one breakpoint)

  // values[t][state], t = 0..T; terminal slice all zero
  std::vector<std::vector<double>> values;
  // greedy candidate indices, t = 0..T-1
  std::vector<std::vector<std::uint8_t>> greedy_charge;
  std::vector<std::vector<std::uint8_t>> greedy_discharge;

  std::size_t state_count() const;
  std::size_t state_index(int ir, int iw, int ip, int id) const;
  int snap_r(double r) const;
  double root_value(const envs::EnergySingleModel& model) const;
};

// Candidate action values at a state; deterministic so the stored indices can
// be decoded at rollout time. Charge candidates live in
// [0, min(r_max - r, gamma_c, w)] (a mesh plus the wind/demand breakpoint
// w - d); discharge candidates in [0, min(r, gamma_d)].
std::vector<double> charge_candidates(const envs::EnergySingleModel& model, double r, double w, double d,
                                      int mesh);
std::vector<double> discharge_candidates(const envs::EnergySingleModel& model, double r, int mesh);

// Full five-component control from the two free dimensions.
void reconstruct_action(double r, double w, double d, double charge, double discharge, double* a);

ValueTable energy_dp_lookup(const envs::EnergySingleModel& model, int r_points = 51, int mesh = 11);

struct TableEval {
  double mean = 0.0;
  double std_error = 0.0;
};

// Monte-Carlo rollout of the stored greedy policy on the discretized model
// (r snapped to its grid every step, chains on their levels).
TableEval table_policy_evaluate(const ValueTable& table, const envs::EnergySingleModel& model,
                                const envs::ChainPaths& paths);
TableEval table_policy_evaluate(const ValueTable& table, const envs::EnergySingleModel& model,
                                long samples, RngStream& rng);

}  // namespace deepctrl::dp
