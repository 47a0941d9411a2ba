#pragma once

#include <Eigen/Dense>
#include <vector>

#include "psrplan/data.hpp"
#include "psrplan/pomdp.hpp"

namespace psrplan {

struct Belief {
  Eigen::VectorXd probs;
};

Belief initial_belief(const PomdpSpec& spec);

// Bayes filter over base observations. Throws ImpossibleEvidence when the
// observation has probability zero under the belief.
Belief belief_update(const PomdpSpec& spec, const Belief& b, int action, int base_obs);

// Pr[o | belief, a] over base observations; sums to one.
Eigen::VectorXd exact_obs_prob(const PomdpSpec& spec, const Belief& b, int action);

struct ImpossibleEvidence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exact calculations over the augmented alphabet for small environments.
// Precomputes one |S| x |S| propagation operator per (action, symbol): entry
// (s', s) is T(s,a,s') times the probability that the step emits the symbol.
class AugmentedOracle {
 public:
  AugmentedOracle(const PomdpSpec& spec, const RewardObservationMap& map,
                  const Alphabet& alphabet);

  const Alphabet& alphabet() const { return alphabet_; }
  const PomdpSpec& spec() const { return *spec_; }

  // Unnormalized belief propagation: beta' = M_{a,o} beta.
  Eigen::VectorXd propagate(const Eigen::VectorXd& beta, int action, int obs) const;

  // Posterior belief after an augmented observation; throws ImpossibleEvidence.
  Belief update(const Belief& b, int action, int obs) const;

  // Pr[augmented o | belief, a]; sums to one.
  Eigen::VectorXd obs_prob(const Belief& b, int action) const;

  // Action-conditional probability of the observation sequence given the
  // action sequence, from the initial belief.
  double sequence_prob(const Sequence& seq) const;

  // Unnormalized belief after a history (p(h) = sum of entries).
  Eigen::VectorXd unnormalized_after(const Sequence& h) const;

  // Exact Hankel matrices by belief propagation.
  HankelEstimates exact_hankel(const TestHistorySets& sets) const;

 private:
  const PomdpSpec* spec_;
  const RewardObservationMap* map_;
  Alphabet alphabet_;
  std::vector<Eigen::MatrixXd> ops_;  // [pair_id]
};

}  // namespace psrplan
