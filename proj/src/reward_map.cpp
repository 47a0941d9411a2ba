#include "psrplan/reward_map.hpp"

#include <cmath>
#include <stdexcept>

namespace psrplan {

int RewardObservationMap::augment(int action, int base_obs, double reward) const {
  if (reward_groups > 0) {
    double raw = (-reward - action_cost[static_cast<size_t>(action)]) / group_unit;
    int group = static_cast<int>(std::lround(raw));
    if (group < 0) group = 0;
    if (group >= reward_groups) group = reward_groups - 1;
    return base_obs * reward_groups + group;
  }
  for (const Promoted& p : promoted)
    if (std::abs(reward - p.value) < 1e-9) return p.symbol;
  return base_obs;
}

double RewardObservationMap::reward_of(int action, int aug_obs) const {
  for (const Promoted& p : promoted)
    if (p.symbol == aug_obs) return p.value;
  return residual[static_cast<size_t>(action * n_aug + aug_obs)];
}

}  // namespace psrplan
