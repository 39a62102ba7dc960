#pragma once

// Finite-state first-order Markov chain over a list of real levels, stepped
// by inverse-CDF sampling of the transition row.

#include <vector>

#include "deepctrl/rng.hpp"

namespace deepctrl::envs {

struct MarkovChain {
  std::vector<double> levels;
  std::vector<std::vector<double>> rows;  // row-stochastic transition matrix

  void validate() const;  // rows sum to 1 within 1e-12, sizes consistent
  int size() const { return static_cast<int>(levels.size()); }

  // Inverse-CDF step: u in [0, 1).
  int step(int index, double u) const;

  // Stationary distribution by power iteration.
  std::vector<double> stationary(int iterations = 20000) const;
};

// Persistent walk: 85% mass on a lazy +/-1 step (folded at the boundaries)
// plus a 15% uniform component that keeps the mixing time short.
MarkovChain make_persistent_chain(int states, double lo, double hi);

}  // namespace deepctrl::envs
