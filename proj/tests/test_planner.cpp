#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "psrplan/data.hpp"
#include "psrplan/envs.hpp"
#include "psrplan/harness.hpp"
#include "psrplan/oracle.hpp"
#include "psrplan/planner.hpp"

using namespace psrplan;

namespace {

Environment tiger() {
  EnvConfig cfg;
  cfg.domain = "tiger";
  return make_environment(cfg);
}

PsrModel exact_tiger_model(const Environment& env) {
  AugmentedOracle oracle(*env.spec, env.map, env.alphabet);
  TestHistorySets sets;
  sets.alphabet = env.alphabet;
  sets.histories = enumerate_sequences(env.alphabet, 2);
  sets.histories.insert(sets.histories.begin(), Sequence{});
  sets.tests = enumerate_sequences(env.alphabet, 2);
  return learn(oracle.exact_hankel(sets), 2);
}

// Two-state chain: 'advance' pays +1 and ends the episode, 'wait' pays
// nothing and stays put. The +1 symbol is terminal and absorbing.
struct ToyChain {
  Alphabet alphabet{2, 2, {"advance", "wait"}, {"null", "r+1"}};
  RewardObservationMap map;
  PsrModel model;
  ToyChain() {
    map.n_base = 1;
    map.n_aug = 2;
    map.promoted = {{1.0, 1, true}};
    map.residual.assign(4, 0.0);
    map.terminal_obs = {0, 1};

    model.rank = 2;
    model.alphabet = alphabet;
    model.b_star = Eigen::Vector2d{1, 0};
    model.b_inf = Eigen::Vector2d{1, 1};
    model.b_ao.assign(4, Eigen::MatrixXd::Zero(2, 2));
    auto set = [&](int a, int o, std::initializer_list<double> rows) {
      Eigen::MatrixXd m(2, 2);
      auto it = rows.begin();
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) m(r, c) = *it++;
      model.b_ao[static_cast<size_t>(alphabet.pair_id(a, o))] = m;
    };
    set(0, 1, {0, 0, 1, 1});  // advance pays: s0 -> done, done keeps paying
    set(0, 0, {0, 0, 0, 0});
    set(1, 0, {1, 0, 0, 0});  // wait: s0 -> s0
    set(1, 1, {0, 0, 0, 1});
    model.w_ao.resize(4);
    for (int p = 0; p < 4; ++p)
      model.w_ao[static_cast<size_t>(p)] = model.b_inf.transpose() * model.b_ao[static_cast<size_t>(p)];
    model.candidates = {{0, 1}, {0, 1}};
  }
};

// Depth-limited expectimax over an exact model: the independent optimum the
// search must reproduce.
double expectimax(const ToyChain& toy, const PredictiveState& b, int depth, int max_depth,
                  double gamma, int* best_action = nullptr) {
  if (depth >= max_depth) return 0.0;
  double best = -1e300;
  for (int a = 0; a < 2; ++a) {
    double value = 0;
    for (int o = 0; o < 2; ++o) {
      double w = toy.model.w_ao[static_cast<size_t>(toy.alphabet.pair_id(a, o))].dot(b.b);
      if (w <= 1e-12) continue;
      double r = toy.map.reward_of(a, o);
      double cont = 0;
      if (!toy.map.is_terminal(o)) {
        auto nb = try_update_state(toy.model, b, a, o);
        if (nb) cont = expectimax(toy, *nb, depth + 1, max_depth, gamma);
      }
      value += w * (r + gamma * cont);
    }
    if (value > best) {
      best = value;
      if (best_action) *best_action = a;
    }
  }
  return best;
}

// Scripted single-action simulator for exercising the statistics updates.
struct ScriptedSim {
  using State = int;
  std::vector<double> rewards;
  size_t next = 0;
  int n_actions() const { return 1; }
  State draw_root(Rng&) const { return 0; }
  SimOutcome sim_step(State&, int, Rng&, PlannerDiag&) {
    double r = rewards[next++];
    return {0, r, true, false};
  }
};

void check_tree_consistency(const SearchTree& tree, int node, double v_lo, double v_hi) {
  const SearchTree::Node& n = tree.node(node);
  int total = 0;
  for (const auto& st : n.act) {
    total += st.n;
    if (st.n > 0) {
      CHECK(st.v >= v_lo);
      CHECK(st.v <= v_hi);
    }
    for (const auto& [obs, child] : st.children) check_tree_consistency(tree, child, v_lo, v_hi);
  }
  CHECK(n.n == total);
}

}  // namespace

TEST_CASE("ucb action selection") {
  Rng rng(1);

  SUBCASE("pure exploitation picks the higher value") {
    SearchTree::Node node;
    node.act.resize(2);
    node.act[0] = {5, 1.0, {}};
    node.act[1] = {5, 2.0, {}};
    node.n = 10;
    for (int i = 0; i < 20; ++i) CHECK(ucb_select(node, 0.0, rng) == 1);
  }

  SUBCASE("untried actions come first") {
    SearchTree::Node node;
    node.act.resize(3);
    node.act[0] = {5, 10.0, {}};
    node.act[1] = {0, 0.0, {}};
    node.act[2] = {3, 10.0, {}};
    node.n = 8;
    for (int i = 0; i < 20; ++i) CHECK(ucb_select(node, 1.0, rng) == 1);
  }

  SUBCASE("two-armed bernoulli bandit concentrates on the better arm") {
    SearchTree::Node node;
    node.act.resize(2);
    node.n = 0;
    Rng arm_rng(42);
    int pulls0 = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      int a = ucb_select(node, 1.0, arm_rng);
      double p = a == 0 ? 0.8 : 0.2;
      double r = arm_rng.bernoulli(p) ? 1.0 : 0.0;
      auto& st = node.act[static_cast<size_t>(a)];
      node.n += 1;
      st.n += 1;
      st.v += (r - st.v) / st.n;
      if (a == 0) ++pulls0;
    }
    CHECK(pulls0 > n * 9 / 10);
  }
}

TEST_CASE("running-mean statistics") {
  ScriptedSim sim;
  sim.rewards = {2.0, 4.0};
  PlannerConfig cfg;
  cfg.n_sims = 2;
  cfg.max_depth = 5;
  cfg.gamma = 1.0;
  cfg.c = 1.0;
  Mcts<ScriptedSim> mcts(sim, cfg, 3);
  mcts.act_search();
  const SearchTree::Node& root = mcts.tree().node(mcts.tree().root());
  CHECK(root.n == 2);
  CHECK(root.act[0].n == 2);
  CHECK(root.act[0].v == doctest::Approx(3.0));  // mean of {2, 4}
}

TEST_CASE("toy chain planning") {
  ToyChain toy;
  int best = -1;
  expectimax(toy, toy.model.initial_state(), 0, 10, 0.95, &best);
  REQUIRE(best == 0);  // advancing now beats waiting

  PsrSimulator sim;
  sim.model = &toy.model;
  sim.map = &toy.map;
  sim.root = toy.model.initial_state();
  PlannerConfig cfg;
  cfg.max_depth = 10;
  cfg.gamma = 0.95;
  cfg.c = 1.0;

  SUBCASE("n_sims = 1 returns the single tried action") {
    cfg.n_sims = 1;
    Mcts<PsrSimulator> mcts(sim, cfg, 7);
    int a = mcts.act_search();
    const SearchTree::Node& root = mcts.tree().node(mcts.tree().root());
    CHECK(root.act[static_cast<size_t>(a)].n == 1);
    CHECK(root.n == 1);
  }

  SUBCASE("optimal action for modest simulation budgets") {
    cfg.n_sims = 50;
    for (uint64_t seed = 0; seed < 20; ++seed) {
      Mcts<PsrSimulator> mcts(sim, cfg, seed);
      CHECK(mcts.act_search() == best);
    }
  }

  SUBCASE("optimal action across 50 seeds at 500 and 1000 simulations") {
    for (int sims : {500, 1000}) {
      cfg.n_sims = sims;
      for (uint64_t seed = 100; seed < 150; ++seed) {
        Mcts<PsrSimulator> mcts(sim, cfg, seed);
        CHECK(mcts.act_search() == best);
      }
    }
  }

  SUBCASE("deterministic under a fixed seed") {
    cfg.n_sims = 200;
    Mcts<PsrSimulator> a(sim, cfg, 5), b(sim, cfg, 5);
    CHECK(a.act_search() == b.act_search());
    CHECK(a.tree().size() == b.tree().size());
  }

  SUBCASE("argmax is stable under a constant shift of the root values") {
    cfg.n_sims = 200;
    Mcts<PsrSimulator> mcts(sim, cfg, 9);
    mcts.act_search();
    SearchTree::Node root = mcts.tree().node(mcts.tree().root());
    Rng g1(11), g2(11);
    int before = greedy_action(root, g1);
    for (auto& st : root.act) st.v += 1000.0;
    CHECK(greedy_action(root, g2) == before);
  }
}

TEST_CASE("rollout") {
  ToyChain toy;

  SUBCASE("zero depth budget returns zero") {
    PsrSimulator sim;
    sim.model = &toy.model;
    sim.map = &toy.map;
    sim.root = toy.model.initial_state();
    PlannerConfig cfg;
    cfg.max_depth = 0;
    Mcts<PsrSimulator> mcts(sim, cfg, 1);
    PredictiveState s = toy.model.initial_state();
    CHECK(mcts.rollout(s, 0, false) == 0.0);
  }

  SUBCASE("all-zero rewards give a zero rollout") {
    RewardObservationMap zero_map = toy.map;
    zero_map.promoted.clear();
    zero_map.terminal_obs = {0, 0};
    PsrSimulator sim;
    sim.model = &toy.model;
    sim.map = &zero_map;
    sim.root = toy.model.initial_state();
    PlannerConfig cfg;
    cfg.max_depth = 12;
    Mcts<PsrSimulator> mcts(sim, cfg, 2);
    for (int i = 0; i < 50; ++i) {
      PredictiveState s = toy.model.initial_state();
      CHECK(mcts.rollout(s, 0, false) == 0.0);
    }
  }

  SUBCASE("random tiger rollouts lose on average") {
    Environment env = tiger();
    PsrModel model = exact_tiger_model(env);
    PsrSimulator sim;
    sim.model = &model;
    sim.map = &env.map;
    sim.root = model.initial_state();
    PlannerConfig cfg;
    cfg.max_depth = 20;
    cfg.gamma = 0.95;
    Mcts<PsrSimulator> mcts(sim, cfg, 3);
    double total = 0;
    const int n = 2000;
    for (int i = 0; i < n; ++i) {
      PredictiveState s = model.initial_state();
      total += mcts.rollout(s, 0, false);
    }
    // per-step expected reward is (2(-45) - 1)/3, discounted over 20 steps
    double analytic = (-91.0 / 3.0) * (1 - std::pow(0.95, 20)) / (1 - 0.95);
    CHECK(total / n < -200);
    CHECK(std::abs(total / n - analytic) < 40);
  }
}

TEST_CASE("search tree statistics on tiger") {
  Environment env = tiger();
  PsrModel model = exact_tiger_model(env);
  PsrSimulator sim;
  sim.model = &model;
  sim.map = &env.map;
  sim.root = model.initial_state();
  PlannerConfig cfg;
  cfg.n_sims = 500;
  cfg.max_depth = 20;
  cfg.gamma = 0.95;
  cfg.c = 110;
  Mcts<PsrSimulator> mcts(sim, cfg, 13);
  mcts.act_search();
  CHECK(mcts.tree().node(mcts.tree().root()).n == 500);
  // V within [R_min/(1-gamma), R_max/(1-gamma)]
  check_tree_consistency(mcts.tree(), mcts.tree().root(), -100 / 0.05, 10 / 0.05);
}

TEST_CASE("psr episodes") {
  Environment env = tiger();
  PsrModel model = exact_tiger_model(env);
  PlannerConfig cfg;
  cfg.n_sims = 200;
  cfg.max_depth = 20;
  cfg.gamma = 0.95;
  cfg.c = 110;

  SUBCASE("length cap and determinism") {
    EpisodeRecord a = plan_psr_episode(model, *env.spec, env.map, cfg, 20, 71);
    CHECK(a.actions.size() <= 20);
    CHECK(a.actions.size() == a.rewards.size());
    EpisodeRecord b = plan_psr_episode(model, *env.spec, env.map, cfg, 20, 71);
    CHECK(a.actions == b.actions);
    CHECK(a.observations == b.observations);
    CHECK(a.rewards == b.rewards);
    CHECK(a.undiscounted == b.undiscounted);
    EpisodeRecord c = plan_psr_episode(model, *env.spec, env.map, cfg, 20, 72);
    CHECK(a.actions != c.actions);  // different seed, different episode
  }

  SUBCASE("rocksample episodes stop at the exit") {
    ExperimentConfig rs = preset("rocksample32-desk");
    rs.estimate.repeats = 30;
    LearnedArtifacts la = learn_from_config(rs, nullptr);
    PlannerConfig pc = rs.planner;
    pc.n_sims = 300;
    pc.gamma = la.env.spec->discount;
    int early = 0;
    for (uint64_t seed = 0; seed < 10; ++seed) {
      EpisodeRecord rec =
          plan_psr_episode(la.model_ro, *la.env.spec, la.env.map, pc, 30, seed);
      CHECK(rec.actions.size() <= 30);
      if (rec.actions.size() < 30) {
        ++early;
        CHECK(la.env.map.is_terminal(rec.observations.back()));
      }
    }
    CHECK(early > 0);
  }
}

TEST_CASE("pomcp baseline") {
  Environment env = tiger();
  PlannerConfig cfg;
  cfg.n_sims = 300;
  cfg.max_depth = 20;
  cfg.gamma = 0.95;
  cfg.c = 110;

  SUBCASE("deterministic under a fixed seed") {
    EpisodeRecord a = pomcp_episode(*env.spec, env.map, cfg, 20, 5);
    EpisodeRecord b = pomcp_episode(*env.spec, env.map, cfg, 20, 5);
    CHECK(a.actions == b.actions);
    CHECK(a.rewards == b.rewards);
  }

  SUBCASE("clearly better than random on tiger") {
    double pomcp_total = 0, random_total = 0;
    const int n = 60;
    for (uint64_t seed = 0; seed < n; ++seed) {
      pomcp_total += pomcp_episode(*env.spec, env.map, cfg, 20, seed).undiscounted;
      random_total += random_episode(*env.spec, env.map, 0.95, 20, seed).undiscounted;
    }
    CHECK(pomcp_total / n > random_total / n + 100);
  }

  SUBCASE("particle filtering on rocksample runs clean") {
    EnvConfig rs_cfg;
    rs_cfg.domain = "rocksample";
    rs_cfg.grid = 5;
    rs_cfg.rocks = 5;
    Environment rs = make_environment(rs_cfg);
    PlannerConfig pc;
    pc.n_sims = 100;
    pc.max_depth = 30;
    pc.gamma = 0.95;
    pc.c = 20;
    pc.particles = 2000;
    for (uint64_t seed = 0; seed < 3; ++seed) {
      EpisodeRecord rec = pomcp_episode(*rs.spec, rs.map, pc, 30, seed);
      CHECK(rec.actions.size() <= 30);
      CHECK(std::isfinite(rec.undiscounted));
    }
  }
}

TEST_CASE("random baseline") {
  Environment env = tiger();

  SUBCASE("tiger random play has strongly negative mean") {
    double total = 0;
    const int n = 500;
    for (uint64_t seed = 0; seed < n; ++seed)
      total += random_episode(*env.spec, env.map, 0.95, 20, seed).undiscounted;
    // analytic per-step mean is (2(-45) - 1)/3 = -30.33; 20 steps
    CHECK(total / n < -400);
  }

  SUBCASE("deterministic under seed") {
    EpisodeRecord a = random_episode(*env.spec, env.map, 0.95, 20, 9);
    EpisodeRecord b = random_episode(*env.spec, env.map, 0.95, 20, 9);
    CHECK(a.actions == b.actions);
    CHECK(a.rewards == b.rewards);
  }

  SUBCASE("posyadmin random play is no better than doing nothing") {
    EnvConfig pcfg;
    pcfg.domain = "posyadmin";
    pcfg.computers = 3;
    Environment posy = make_environment(pcfg);
    const int n = 1000;
    double random_total = 0, idle_total = 0;
    for (uint64_t seed = 0; seed < n; ++seed) {
      random_total += random_episode(*posy.spec, posy.map, 0.95, 20, seed).undiscounted;
      Rng rng(mix_seed(seed, 53));
      int s = reset(*posy.spec, rng);
      for (int t = 0; t < 20; ++t) {
        StepResult res = env_step(*posy.spec, s, 6, rng);  // noop
        idle_total += res.reward;
        s = res.state;
      }
    }
    CHECK(random_total / n <= idle_total / n);
  }
}
