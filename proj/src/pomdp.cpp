#include "psrplan/pomdp.hpp"

#include <cmath>
#include <stdexcept>

namespace psrplan {

namespace {

int sample_row(const Eigen::VectorXd& row, Rng& rng) {
  double u = rng.uniform();
  double acc = 0.0;
  int last = 0;
  for (int i = 0; i < row.size(); ++i) {
    if (row[i] <= 0.0) continue;
    acc += row[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

}  // namespace

int PomdpSpec::sample_initial(Rng& rng) const { return sample_row(initial_belief, rng); }

StepResult PomdpSpec::step(int s, int a, Rng& rng) const {
  Eigen::VectorXd row(n_states);
  transition_row(s, a, row);
  int s2 = sample_row(row, rng);
  Eigen::VectorXd obs(n_base_obs);
  observation_row(a, s2, obs);
  int o = sample_row(obs, rng);
  return {s2, o, reward(s, a, s2), is_terminal(s2)};
}

int reset(const PomdpSpec& spec, Rng& rng) { return spec.sample_initial(rng); }

StepResult env_step(const PomdpSpec& spec, int state, int action, Rng& rng) {
  if (spec.is_terminal(state))
    throw std::logic_error(spec.id + ": step on a terminal state");
  if (action < 0 || action >= spec.n_actions)
    throw std::out_of_range(spec.id + ": action out of range");
  return spec.step(state, action, rng);
}

void validate_spec(const PomdpSpec& spec) {
  auto check_sum = [&](double sum, const std::string& what) {
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::runtime_error(spec.id + ": " + what + " does not sum to 1");
  };
  if (!(spec.discount > 0.0 && spec.discount <= 1.0))
    throw std::runtime_error(spec.id + ": discount outside (0,1]");
  check_sum(spec.initial_belief.sum(), "initial belief");
  Eigen::VectorXd row(spec.n_states);
  Eigen::VectorXd obs(spec.n_base_obs);
  for (int s = 0; s < spec.n_states; ++s) {
    if (spec.is_terminal(s)) continue;
    for (int a = 0; a < spec.n_actions; ++a) {
      spec.transition_row(s, a, row);
      check_sum(row.sum(), "transition row");
    }
  }
  for (int a = 0; a < spec.n_actions; ++a)
    for (int s2 = 0; s2 < spec.n_states; ++s2) {
      spec.observation_row(a, s2, obs);
      check_sum(obs.sum(), "observation row");
    }
}

}  // namespace psrplan
