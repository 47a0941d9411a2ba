#include "psrplan/planner.hpp"

#include <chrono>
#include <cmath>

#include "psrplan/envs.hpp"

namespace psrplan {

int ucb_select(const SearchTree::Node& node, double c, Rng& rng) {
  int n_actions = static_cast<int>(node.act.size());
  // Untried actions first, uniformly.
  int untried = 0, pick = -1;
  for (int a = 0; a < n_actions; ++a) {
    if (node.act[static_cast<size_t>(a)].n == 0) {
      ++untried;
      if (rng.uniform_int(untried) == 0) pick = a;
    }
  }
  if (untried > 0) return pick;
  double logn = std::log(static_cast<double>(node.n));
  double best = -std::numeric_limits<double>::infinity();
  int ties = 0;
  for (int a = 0; a < n_actions; ++a) {
    const auto& st = node.act[static_cast<size_t>(a)];
    double v = st.v + c * std::sqrt(logn / st.n);
    if (v > best) {
      best = v;
      ties = 1;
      pick = a;
    } else if (v == best && rng.uniform_int(++ties) == 0) {
      pick = a;
    }
  }
  return pick;
}

int greedy_action(const SearchTree::Node& node, Rng& rng) {
  double best = -std::numeric_limits<double>::infinity();
  int ties = 0, pick = -1;
  for (int a = 0; a < static_cast<int>(node.act.size()); ++a) {
    const auto& st = node.act[static_cast<size_t>(a)];
    if (st.n == 0) continue;
    if (st.v > best) {
      best = st.v;
      ties = 1;
      pick = a;
    } else if (st.v == best && rng.uniform_int(++ties) == 0) {
      pick = a;
    }
  }
  if (pick < 0) pick = rng.uniform_int(static_cast<int>(node.act.size()));
  return pick;
}

SimOutcome PsrSimulator::sim_step(State& s, int action, Rng& rng, PlannerDiag& diag) {
  int obs = sample_obs(*model, s, action, rng, scratch_);
  if (obs < 0 || scratch_.fallback) {
    ++diag.fallbacks;
    return {obs, 0.0, false, true};
  }
  int pair = model->alphabet.pair_id(action, obs);
  tmp_.noalias() = model->b_ao[static_cast<size_t>(pair)] * s.b;
  double z = model->b_inf.dot(tmp_);
  if (!(std::abs(z) >= norm_eps)) {
    ++diag.fallbacks;
    return {obs, 0.0, false, true};
  }
  tmp_ /= z;
  s.b.swap(tmp_);
  return {obs, map->reward_of(action, obs), map->is_terminal(obs), false};
}

TrueSimulator::State TrueSimulator::draw_root(Rng& rng) const {
  if (belief) {
    double u = rng.uniform();
    double acc = 0.0;
    int last = 0;
    for (int s = 0; s < belief->probs.size(); ++s) {
      if (belief->probs[s] <= 0.0) continue;
      acc += belief->probs[s];
      last = s;
      if (u < acc) return s;
    }
    return last;
  }
  return (*particles)[static_cast<size_t>(rng.uniform_int(static_cast<int>(particles->size())))];
}

SimOutcome TrueSimulator::sim_step(State& s, int action, Rng& rng, PlannerDiag&) {
  if (spec->is_terminal(s)) return {-1, 0.0, true, false};
  StepResult res = spec->step(s, action, rng);
  int sym = map->augment(action, res.base_obs, res.reward);
  s = res.state;
  return {sym, res.reward, res.terminal, false};
}

namespace {

struct EpisodeClock {
  double total = 0;
  int steps = 0;
  template <class F>
  auto time(F&& f) {
    auto t0 = std::chrono::steady_clock::now();
    auto result = f();
    auto t1 = std::chrono::steady_clock::now();
    total += std::chrono::duration<double>(t1 - t0).count();
    ++steps;
    return result;
  }
  double mean() const { return steps > 0 ? std::max(total / steps, 1e-12) : 0.0; }
};

void record_step(EpisodeRecord& rec, int action, int obs, double reward, double gamma, int step) {
  rec.actions.push_back(action);
  rec.observations.push_back(obs);
  rec.rewards.push_back(reward);
  rec.undiscounted += reward;
  rec.discounted += reward * std::pow(gamma, step);
}

}  // namespace

EpisodeRecord plan_psr_episode(const PsrModel& model, const PomdpSpec& spec,
                               const RewardObservationMap& map, const PlannerConfig& cfg,
                               int max_steps, uint64_t seed) {
  Rng env_rng(mix_seed(seed, 11));
  PsrSimulator sim;
  sim.model = &model;
  sim.map = &map;
  sim.norm_eps = cfg.norm_eps;
  sim.root = model.initial_state();
  Mcts<PsrSimulator> mcts(sim, cfg, mix_seed(seed, 13));

  EpisodeRecord rec;
  EpisodeClock clock;
  PredictiveState b = model.initial_state();
  int state = reset(spec, env_rng);
  for (int step = 0; step < max_steps; ++step) {
    mcts.sim().root = b;
    int a = clock.time([&] { return mcts.act_search(); });
    StepResult res = env_step(spec, state, a, env_rng);
    state = res.state;
    int sym = map.augment(a, res.base_obs, res.reward);
    int sym_model = model.restricted ? map_unseen_observation(model, a, sym, env_rng) : sym;
    record_step(rec, a, sym, res.reward, cfg.gamma, step);

    auto next = try_update_state(model, b, a, sym_model, cfg.norm_eps);
    if (next) {
      b = std::move(*next);
    } else {
      b = model.initial_state();  // bounded-damage recovery
      ++rec.reset_count;
    }
    mcts.advance(a, sym_model);
    if (res.terminal) break;
  }
  rec.mean_action_seconds = clock.mean();
  rec.fallback_count = mcts.diag().fallbacks;
  rec.reset_count += mcts.diag().resets;
  return rec;
}

EpisodeRecord pomcp_episode(const PomdpSpec& spec, const RewardObservationMap& map,
                            const PlannerConfig& cfg, int max_steps, uint64_t seed) {
  Rng env_rng(mix_seed(seed, 17));
  Alphabet alphabet = make_alphabet(spec, map);

  bool exact = spec.n_states <= 64;
  for (int s = 0; s < spec.n_states && exact; ++s)
    if (spec.is_terminal(s)) exact = false;

  Belief belief = initial_belief(spec);
  std::optional<AugmentedOracle> oracle;
  if (exact) oracle.emplace(spec, map, alphabet);

  std::vector<int> particles;
  if (!exact) {
    particles.resize(static_cast<size_t>(cfg.particles));
    Rng prng(mix_seed(seed, 19));
    for (int& p : particles) p = spec.sample_initial(prng);
  }

  TrueSimulator sim;
  sim.spec = &spec;
  sim.map = &map;
  sim.belief = exact ? &belief : nullptr;
  sim.particles = exact ? nullptr : &particles;
  Mcts<TrueSimulator> mcts(sim, cfg, mix_seed(seed, 23));

  EpisodeRecord rec;
  EpisodeClock clock;
  int state = reset(spec, env_rng);
  Rng filter_rng(mix_seed(seed, 29));
  for (int step = 0; step < max_steps; ++step) {
    int a = clock.time([&] { return mcts.act_search(); });
    StepResult res = env_step(spec, state, a, env_rng);
    state = res.state;
    int sym = map.augment(a, res.base_obs, res.reward);
    record_step(rec, a, sym, res.reward, cfg.gamma, step);

    if (exact) {
      try {
        belief = oracle->update(belief, a, sym);
      } catch (const ImpossibleEvidence&) {
        belief = initial_belief(spec);
        ++rec.reset_count;
      }
    } else if (!res.terminal) {
      // Particle filter rebuild by rejection on the augmented observation.
      std::vector<int> fresh;
      fresh.reserve(particles.size());
      long attempts = 0;
      long cap = static_cast<long>(particles.size()) * 100;
      while (static_cast<int>(fresh.size()) < cfg.particles && attempts < cap) {
        ++attempts;
        int p = particles[static_cast<size_t>(filter_rng.uniform_int(
            static_cast<int>(particles.size())))];
        if (spec.is_terminal(p)) continue;
        StepResult sim_res = spec.step(p, a, filter_rng);
        if (map.augment(a, sim_res.base_obs, sim_res.reward) == sym)
          fresh.push_back(sim_res.state);
      }
      if (fresh.empty()) {
        // Depletion: refill with transition-consistent samples.
        ++rec.reset_count;
        while (static_cast<int>(fresh.size()) < cfg.particles) {
          int p = particles[static_cast<size_t>(filter_rng.uniform_int(
              static_cast<int>(particles.size())))];
          if (spec.is_terminal(p)) {
            fresh.push_back(p);
            continue;
          }
          fresh.push_back(spec.step(p, a, filter_rng).state);
        }
      } else {
        Rng fill_rng(mix_seed(seed, 31 + static_cast<uint64_t>(step)));
        while (static_cast<int>(fresh.size()) < cfg.particles)
          fresh.push_back(fresh[static_cast<size_t>(fill_rng.uniform_int(
              static_cast<int>(fresh.size())))]);
      }
      particles.swap(fresh);
    }
    mcts.advance(a, sym);
    if (res.terminal) break;
  }
  rec.mean_action_seconds = clock.mean();
  rec.fallback_count = mcts.diag().fallbacks;
  rec.reset_count += mcts.diag().resets;
  return rec;
}

EpisodeRecord random_episode(const PomdpSpec& spec, const RewardObservationMap& map,
                             double gamma, int max_steps, uint64_t seed) {
  Rng rng(mix_seed(seed, 37));
  EpisodeRecord rec;
  EpisodeClock clock;
  int state = reset(spec, rng);
  for (int step = 0; step < max_steps; ++step) {
    int a = clock.time([&] { return rng.uniform_int(spec.n_actions); });
    StepResult res = env_step(spec, state, a, rng);
    state = res.state;
    int sym = map.augment(a, res.base_obs, res.reward);
    record_step(rec, a, sym, res.reward, gamma, step);
    if (res.terminal) break;
  }
  rec.mean_action_seconds = clock.mean();
  return rec;
}

}  // namespace psrplan
