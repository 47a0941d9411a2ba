#include "psrplan/oracle.hpp"

#include <cmath>

namespace psrplan {

Belief initial_belief(const PomdpSpec& spec) { return {spec.initial_belief}; }

Belief belief_update(const PomdpSpec& spec, const Belief& b, int action, int base_obs) {
  Eigen::VectorXd post = Eigen::VectorXd::Zero(spec.n_states);
  Eigen::VectorXd row(spec.n_states);
  Eigen::VectorXd obs(spec.n_base_obs);
  for (int s = 0; s < spec.n_states; ++s) {
    if (b.probs[s] <= 0.0) continue;
    spec.transition_row(s, action, row);
    for (int s2 = 0; s2 < spec.n_states; ++s2) {
      if (row[s2] <= 0.0) continue;
      spec.observation_row(action, s2, obs);
      post[s2] += b.probs[s] * row[s2] * obs[base_obs];
    }
  }
  double z = post.sum();
  if (z <= 0.0)
    throw ImpossibleEvidence(spec.id + ": observation has probability zero");
  post /= z;
  return {post};
}

Eigen::VectorXd exact_obs_prob(const PomdpSpec& spec, const Belief& b, int action) {
  Eigen::VectorXd dist = Eigen::VectorXd::Zero(spec.n_base_obs);
  Eigen::VectorXd row(spec.n_states);
  Eigen::VectorXd obs(spec.n_base_obs);
  for (int s = 0; s < spec.n_states; ++s) {
    if (b.probs[s] <= 0.0) continue;
    spec.transition_row(s, action, row);
    for (int s2 = 0; s2 < spec.n_states; ++s2) {
      if (row[s2] <= 0.0) continue;
      spec.observation_row(action, s2, obs);
      dist += b.probs[s] * row[s2] * obs;
    }
  }
  return dist;
}

AugmentedOracle::AugmentedOracle(const PomdpSpec& spec, const RewardObservationMap& map,
                                 const Alphabet& alphabet)
    : spec_(&spec), map_(&map), alphabet_(alphabet) {
  int n = spec.n_states;
  ops_.assign(static_cast<size_t>(alphabet_.n_pairs()), Eigen::MatrixXd::Zero(n, n));

  // Terminal states absorb: the episode keeps emitting the terminal symbol,
  // matching the padding convention of the sampling estimator.
  int term_sym = -1;
  for (int o = 0; o < map.n_aug; ++o)
    if (map.is_terminal(o)) {
      if (term_sym >= 0)
        throw std::runtime_error(spec.id + ": multiple terminal symbols are not supported");
      term_sym = o;
    }
  for (int s = 0; s < n; ++s) {
    if (!spec.is_terminal(s)) continue;
    if (term_sym < 0)
      throw std::runtime_error(spec.id + ": terminal state without a terminal symbol");
    for (int a = 0; a < spec.n_actions; ++a)
      ops_[static_cast<size_t>(alphabet_.pair_id(a, term_sym))](s, s) = 1.0;
  }

  Eigen::VectorXd row(n);
  Eigen::VectorXd obs(spec.n_base_obs);
  for (int a = 0; a < spec.n_actions; ++a) {
    for (int s = 0; s < n; ++s) {
      if (spec.is_terminal(s)) continue;
      spec.transition_row(s, a, row);
      for (int s2 = 0; s2 < n; ++s2) {
        if (row[s2] <= 0.0) continue;
        spec.observation_row(a, s2, obs);
        double r = spec.reward(s, a, s2);
        for (int o = 0; o < spec.n_base_obs; ++o) {
          if (obs[o] <= 0.0) continue;
          int sym = map.augment(a, o, r);
          ops_[static_cast<size_t>(alphabet_.pair_id(a, sym))](s2, s) += row[s2] * obs[o];
        }
      }
    }
  }
}

Eigen::VectorXd AugmentedOracle::propagate(const Eigen::VectorXd& beta, int action, int obs) const {
  return ops_[static_cast<size_t>(alphabet_.pair_id(action, obs))] * beta;
}

Belief AugmentedOracle::update(const Belief& b, int action, int obs) const {
  Eigen::VectorXd post = propagate(b.probs, action, obs);
  double z = post.sum();
  if (z <= 0.0)
    throw ImpossibleEvidence(spec_->id + ": augmented observation has probability zero");
  return {post / z};
}

Eigen::VectorXd AugmentedOracle::obs_prob(const Belief& b, int action) const {
  Eigen::VectorXd dist(alphabet_.n_obs);
  for (int o = 0; o < alphabet_.n_obs; ++o)
    dist[o] = propagate(b.probs, action, o).sum();
  return dist;
}

Eigen::VectorXd AugmentedOracle::unnormalized_after(const Sequence& h) const {
  Eigen::VectorXd beta = spec_->initial_belief;
  for (const AoPair& p : h) beta = propagate(beta, p.action, p.obs);
  return beta;
}

double AugmentedOracle::sequence_prob(const Sequence& seq) const {
  return unnormalized_after(seq).sum();
}

HankelEstimates AugmentedOracle::exact_hankel(const TestHistorySets& sets) const {
  HankelEstimates est;
  est.sets = sets;
  est.exact = true;
  int nh = static_cast<int>(sets.histories.size());
  int nt = static_cast<int>(sets.tests.size());
  est.p_h.resize(nh);
  est.p_th.resize(nt, nh);
  est.h_snapshots = Eigen::VectorXi::Zero(nh);
  est.h_attempts = Eigen::VectorXi::Zero(nh);

  std::vector<Eigen::VectorXd> betas;
  betas.reserve(static_cast<size_t>(nh));
  for (int h = 0; h < nh; ++h) {
    betas.push_back(unnormalized_after(sets.histories[static_cast<size_t>(h)]));
    est.p_h[h] = betas.back().sum();
  }

  // u_t(s) = Pr[t's observations | t's actions, start state s], built by
  // pulling the all-ones vector backwards through the step operators.
  auto test_vector = [&](const Sequence& t) {
    Eigen::VectorXd u = Eigen::VectorXd::Ones(spec_->n_states);
    for (auto it = t.rbegin(); it != t.rend(); ++it)
      u = ops_[static_cast<size_t>(alphabet_.pair_id(it->action, it->obs))].transpose() * u;
    return u;
  };

  std::vector<Eigen::VectorXd> test_vecs;
  test_vecs.reserve(static_cast<size_t>(nt));
  for (const Sequence& t : sets.tests) test_vecs.push_back(test_vector(t));

  for (int t = 0; t < nt; ++t)
    for (int h = 0; h < nh; ++h)
      est.p_th(t, h) = test_vecs[static_cast<size_t>(t)].dot(betas[static_cast<size_t>(h)]);

  est.p_t_ao_h.assign(static_cast<size_t>(alphabet_.n_pairs()),
                      Eigen::SparseMatrix<double>(nt, nh));
  for (int pair = 0; pair < alphabet_.n_pairs(); ++pair) {
    AoPair ao = alphabet_.pair_of(pair);
    std::vector<Eigen::Triplet<double>> trips;
    for (int h = 0; h < nh; ++h) {
      Eigen::VectorXd beta = propagate(betas[static_cast<size_t>(h)], ao.action, ao.obs);
      if (beta.sum() <= 0.0) continue;
      for (int t = 0; t < nt; ++t) {
        double v = test_vecs[static_cast<size_t>(t)].dot(beta);
        if (v != 0.0) trips.emplace_back(t, h, v);
      }
    }
    est.p_t_ao_h[static_cast<size_t>(pair)].setFromTriplets(trips.begin(), trips.end());
  }
  return est;
}

}  // namespace psrplan
