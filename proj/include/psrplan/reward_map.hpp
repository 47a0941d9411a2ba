#pragma once

#include <string>
#include <vector>

#include "psrplan/types.hpp"

namespace psrplan {

// Translates between raw environment rewards and the augmented observation
// alphabet. Distinguished reward values become observation symbols of their
// own; every other reward is recovered from (action, symbol) through the
// residual table, so a planner driving the learned model never needs the
// true reward function.
struct RewardObservationMap {
  struct Promoted {
    double value = 0;
    int symbol = -1;
    bool terminal = false;  // ends simulated episodes when sampled
  };

  int n_base = 0;  // base observations occupy symbols [0, n_base)
  int n_aug = 0;
  std::vector<Promoted> promoted;  // values are pairwise distinct
  std::vector<double> residual;    // [action * n_aug + symbol] -> reward
  std::vector<char> terminal_obs;  // [n_aug]

  // Group encoding, used when a state-revealing reward component rides on
  // every step (POSyadmin's failing-computer cost): the symbol is
  // base * reward_groups + group, and the group is decoded from the emitted
  // reward after subtracting the action's own cost.
  int reward_groups = 0;  // 0 disables the encoding
  double group_unit = 0;  // cost per group step, positive
  std::vector<double> action_cost;

  int augment(int action, int base_obs, double reward) const;
  double reward_of(int action, int aug_obs) const;
  bool is_terminal(int aug_obs) const {
    return terminal_obs[static_cast<size_t>(aug_obs)] != 0;
  }
};

}  // namespace psrplan
