#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "psrplan/reward_map.hpp"
#include "psrplan/rng.hpp"
#include "psrplan/types.hpp"

namespace psrplan {

struct StepResult {
  int state = 0;  // successor hidden state
  int base_obs = 0;
  double reward = 0;
  bool terminal = false;
};

// Ground-truth discrete POMDP. Dynamics are exposed both distributionally
// (rows of the transition and observation kernels, used by the exact oracle)
// and generatively (step, used by simulation and data generation). Concrete
// environments override step with direct sampling where the generic row
// sampler would be slow.
class PomdpSpec {
 public:
  virtual ~PomdpSpec() = default;

  std::string id;
  int n_states = 0;
  int n_actions = 0;
  int n_base_obs = 0;
  double discount = 0.95;
  double reward_min = 0;
  double reward_max = 0;
  Eigen::VectorXd initial_belief;
  std::vector<char> terminal_state;
  std::vector<std::string> action_names;
  std::vector<std::string> base_obs_names;

  virtual void transition_row(int s, int a, Eigen::Ref<Eigen::VectorXd> out) const = 0;
  virtual void observation_row(int a, int s_next, Eigen::Ref<Eigen::VectorXd> out) const = 0;
  virtual double reward(int s, int a, int s_next) const = 0;

  virtual int sample_initial(Rng& rng) const;
  virtual StepResult step(int s, int a, Rng& rng) const;

  bool is_terminal(int s) const { return terminal_state[static_cast<size_t>(s)] != 0; }
};

// Samples a hidden start state. Deterministic given the Rng state.
int reset(const PomdpSpec& spec, Rng& rng);

// Advances the hidden state. Stepping a terminal state is a contract
// violation and throws.
StepResult env_step(const PomdpSpec& spec, int state, int action, Rng& rng);

// Checks the stochastic-matrix invariants (rows sum to one, belief sums to
// one, discount in (0,1]). Throws std::runtime_error on violation.
void validate_spec(const PomdpSpec& spec);

}  // namespace psrplan
