#pragma once

#include <memory>
#include <string>

#include "psrplan/pomdp.hpp"

namespace psrplan {

struct EnvConfig {
  std::string domain = "tiger";  // tiger | posyadmin | rocksample
  double gamma = 0.95;

  // tiger
  double listen_accuracy = 0.85;

  // posyadmin
  int computers = 3;
  double fail_prob = 0.1;

  // rocksample
  int grid = 5;
  int rocks = 5;
  double sensor_half_dist = 20.0;
};

// A ground-truth environment together with its reward promotion and the
// augmented alphabet the planner and learner operate on.
struct Environment {
  std::shared_ptr<const PomdpSpec> spec;
  RewardObservationMap map;
  Alphabet alphabet;
};

Environment make_environment(const EnvConfig& cfg);

// Augmented alphabet induced by a spec and its promotion map.
Alphabet make_alphabet(const PomdpSpec& spec, const RewardObservationMap& map);

}  // namespace psrplan
