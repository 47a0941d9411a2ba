#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace psrplan {

// One (action, augmented-observation) step of a test or history.
struct AoPair {
  int action = 0;
  int obs = 0;
  friend bool operator==(const AoPair&, const AoPair&) = default;
  friend auto operator<=>(const AoPair&, const AoPair&) = default;
};

// A test or history; the empty sequence is the empty history.
using Sequence = std::vector<AoPair>;

struct StepRecord {
  int action = 0;
  int obs = 0;        // augmented symbol
  double reward = 0;  // raw environment reward
};

struct Trajectory {
  std::vector<StepRecord> steps;
};

// The augmented planning alphabet: actions crossed with the observation
// symbols (base observations plus promoted rewards).
struct Alphabet {
  int n_actions = 0;
  int n_obs = 0;
  std::vector<std::string> action_names;
  std::vector<std::string> obs_names;

  int pair_id(int action, int obs) const { return action * n_obs + obs; }
  int n_pairs() const { return n_actions * n_obs; }
  AoPair pair_of(int id) const { return {id / n_obs, id % n_obs}; }
};

}  // namespace psrplan
