#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "psrplan/oracle.hpp"
#include "psrplan/pomdp.hpp"
#include "psrplan/psr.hpp"
#include "psrplan/rng.hpp"

namespace psrplan {

struct PlannerConfig {
  int n_sims = 1000;
  int max_depth = 20;
  double c = 1.0;  // UCB exploration constant
  double gamma = 0.95;
  double norm_eps = kDefaultNormEps;
  int particles = 10000;  // POMCP root belief size on large domains
};

struct PlannerDiag {
  long fallbacks = 0;  // uniform-fallback observation draws (simulation aborts)
  long resets = 0;     // real-execution state recoveries / particle refills
};

// Lookahead tree keyed by the (action, observation) suffix below the root.
class SearchTree {
 public:
  struct ActionStats {
    int n = 0;
    double v = 0;
    std::vector<std::pair<int, int>> children;  // (obs, node index)
  };
  struct Node {
    int n = 0;
    std::vector<ActionStats> act;
  };

  explicit SearchTree(int n_actions) : n_actions_(n_actions) { clear(); }

  void clear() {
    nodes_.assign(1, make_node());
    root_ = 0;
  }

  int root() const { return root_; }
  Node& node(int i) { return nodes_[static_cast<size_t>(i)]; }
  const Node& node(int i) const { return nodes_[static_cast<size_t>(i)]; }

  int child(int node_idx, int a, int o) const {
    for (const auto& [obs, idx] : nodes_[static_cast<size_t>(node_idx)].act[static_cast<size_t>(a)].children)
      if (obs == o) return idx;
    return -1;
  }

  int ensure_child(int node_idx, int a, int o) {
    int idx = child(node_idx, a, o);
    if (idx >= 0) return idx;
    idx = static_cast<int>(nodes_.size());
    nodes_.push_back(make_node());
    nodes_[static_cast<size_t>(node_idx)].act[static_cast<size_t>(a)].children.emplace_back(o, idx);
    return idx;
  }

  // The child under the executed (a, o) becomes the root; the rest of the
  // tree is abandoned in place until the next clear().
  void advance_root(int a, int o) {
    int idx = child(root_, a, o);
    root_ = idx >= 0 ? idx : fresh_node();
  }

  size_t size() const { return nodes_.size(); }

 private:
  Node make_node() const {
    Node n;
    n.act.resize(static_cast<size_t>(n_actions_));
    return n;
  }
  int fresh_node() {
    nodes_.push_back(make_node());
    return static_cast<int>(nodes_.size()) - 1;
  }

  int n_actions_;
  std::vector<Node> nodes_;
  int root_;
};

// UCB1 action selection: untried actions first (uniformly), then
// argmax V(h,a) + c sqrt(log N(h) / N(h,a)), ties uniform.
int ucb_select(const SearchTree::Node& node, double c, Rng& rng);

// argmax_a V(h,a) among actions with N(h,a) > 0; ties uniform.
int greedy_action(const SearchTree::Node& node, Rng& rng);

struct SimOutcome {
  int obs = -1;       // augmented symbol
  double reward = 0;  // reward credited to the simulated step
  bool terminal = false;
  bool aborted = false;  // impossible transition; simulation returns 0
};

// Generative simulator over the learned model. reward comes from the
// promotion map (promoted value or residual), never from the true model.
struct PsrSimulator {
  using State = PredictiveState;

  const PsrModel* model = nullptr;
  const RewardObservationMap* map = nullptr;
  double norm_eps = kDefaultNormEps;
  PredictiveState root;

  int n_actions() const { return model->alphabet.n_actions; }
  State draw_root(Rng&) const { return root; }
  SimOutcome sim_step(State& s, int action, Rng& rng, PlannerDiag& diag);

 private:
  ObsDistribution scratch_;
  Eigen::VectorXd tmp_;
};

// Generative simulator over the true environment, for the informed POMCP
// baseline. Roots are hidden states drawn from an exact belief or from a
// particle set.
struct TrueSimulator {
  using State = int;

  const PomdpSpec* spec = nullptr;
  const RewardObservationMap* map = nullptr;
  const Belief* belief = nullptr;               // exact root belief, or
  const std::vector<int>* particles = nullptr;  // particle root belief

  int n_actions() const { return spec->n_actions; }
  State draw_root(Rng& rng) const;
  SimOutcome sim_step(State& s, int action, Rng& rng, PlannerDiag& diag);
};

// Algorithms Act-Search / Simulate / RollOut over either simulator.
template <class Sim>
class Mcts {
 public:
  Mcts(Sim sim, const PlannerConfig& cfg, uint64_t seed)
      : sim_(std::move(sim)), cfg_(cfg), tree_(sim_.n_actions()), rng_(seed) {}

  // Runs cfg.n_sims simulations from a copy of the root state, then returns
  // the greedy action at the root.
  int act_search() {
    for (int i = 0; i < cfg_.n_sims; ++i) {
      typename Sim::State s = sim_.draw_root(rng_);
      simulate(std::move(s), 0, tree_.root(), false);
    }
    return greedy_action(tree_.node(tree_.root()), rng_);
  }

  void advance(int action, int obs) { tree_.advance_root(action, obs); }
  void reset_tree() { tree_.clear(); }

  Sim& sim() { return sim_; }
  SearchTree& tree() { return tree_; }
  const SearchTree& tree() const { return tree_; }
  PlannerDiag& diag() { return diag_; }
  Rng& rng() { return rng_; }

  // Uniform-random playout; no statistics are recorded.
  double rollout(typename Sim::State& s, int depth, bool terminal) {
    if (depth >= cfg_.max_depth || terminal) return 0.0;
    int a = rng_.uniform_int(sim_.n_actions());
    SimOutcome out = sim_.sim_step(s, a, rng_, diag_);
    if (out.aborted) return 0.0;
    return out.reward + cfg_.gamma * rollout(s, depth + 1, out.terminal);
  }

 private:
  double simulate(typename Sim::State s, int depth, int node_idx, bool terminal) {
    if (depth >= cfg_.max_depth || terminal) return 0.0;
    int a = ucb_select(tree_.node(node_idx), cfg_.c, rng_);
    SimOutcome out = sim_.sim_step(s, a, rng_, diag_);
    double r = 0.0;
    if (!out.aborted && out.obs < 0) {
      r = out.reward;  // terminal step without an observable continuation
    } else if (!out.aborted) {
      int child = tree_.child(node_idx, a, out.obs);
      if (child >= 0) {
        r = out.reward + cfg_.gamma * simulate(std::move(s), depth + 1, child, out.terminal);
      } else {
        tree_.ensure_child(node_idx, a, out.obs);
        r = out.reward + cfg_.gamma * rollout(s, depth + 1, out.terminal);
      }
    }
    SearchTree::Node& node = tree_.node(node_idx);
    SearchTree::ActionStats& st = node.act[static_cast<size_t>(a)];
    node.n += 1;
    st.n += 1;
    st.v += (r - st.v) / st.n;
    return r;
  }

  Sim sim_;
  PlannerConfig cfg_;
  SearchTree tree_;
  Rng rng_;
  PlannerDiag diag_;
};

struct EpisodeRecord {
  std::vector<int> actions;
  std::vector<int> observations;  // augmented symbols as emitted by the world
  std::vector<double> rewards;    // raw environment rewards
  double undiscounted = 0;
  double discounted = 0;
  double mean_action_seconds = 0;
  long fallback_count = 0;
  long reset_count = 0;
};

// Algorithm-1 episode: search, execute, promote the real observation (mapped
// through the seen set when the model is restricted), update the predictive
// state (recovering to b* on impossible transitions), reroot the tree.
EpisodeRecord plan_psr_episode(const PsrModel& model, const PomdpSpec& spec,
                               const RewardObservationMap& map, const PlannerConfig& cfg,
                               int max_steps, uint64_t seed);

// POMCP with the true simulator: exact root belief for small state spaces,
// particle filtering otherwise.
EpisodeRecord pomcp_episode(const PomdpSpec& spec, const RewardObservationMap& map,
                            const PlannerConfig& cfg, int max_steps, uint64_t seed);

EpisodeRecord random_episode(const PomdpSpec& spec, const RewardObservationMap& map,
                             double gamma, int max_steps, uint64_t seed);

}  // namespace psrplan
