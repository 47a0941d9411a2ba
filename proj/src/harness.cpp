#include "psrplan/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "psrplan/oracle.hpp"
#include "psrplan/parallel.hpp"

namespace psrplan {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += items[i];
  }
  return out;
}

std::string join_ints(const std::vector<int>& items) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(items[i]);
  }
  return out;
}

}  // namespace

KeyValueConfig ExperimentConfig::to_key_values() const {
  KeyValueConfig kv;
  kv.set("env.domain", env.domain);
  kv.set("env.gamma", fmt_double(env.gamma));
  kv.set("env.listen_accuracy", fmt_double(env.listen_accuracy));
  kv.set("env.computers", std::to_string(env.computers));
  kv.set("env.fail_prob", fmt_double(env.fail_prob));
  kv.set("env.grid", std::to_string(env.grid));
  kv.set("env.rocks", std::to_string(env.rocks));
  kv.set("env.sensor_half_dist", fmt_double(env.sensor_half_dist));
  kv.set("data.trajectories", std::to_string(data.count));
  kv.set("data.length", std::to_string(data.length));
  kv.set("data.test_length", std::to_string(sets.test_length));
  kv.set("data.history_cap", std::to_string(sets.history_cap));
  kv.set("data.restrict_tests", sets.restrict_tests ? "true" : "false");
  kv.set("data.repeats", std::to_string(estimate.repeats));
  kv.set("data.budget_factor", std::to_string(estimate.budget_factor));
  kv.set("psr.rank", std::to_string(rank));
  kv.set("psr.rank_threshold", fmt_double(rank_threshold));
  kv.set("psr.pinv_cutoff", fmt_double(pinv_cutoff));
  kv.set("planner.c", fmt_double(planner.c));
  kv.set("planner.max_depth", std::to_string(planner.max_depth));
  kv.set("planner.norm_eps", fmt_double(planner.norm_eps));
  kv.set("planner.particles", std::to_string(planner.particles));
  kv.set("experiment.n_sims", join_ints(n_sims_list));
  kv.set("experiment.episodes", std::to_string(episodes));
  kv.set("experiment.max_steps", std::to_string(max_steps));
  kv.set("experiment.methods", join(methods));
  kv.set("experiment.seed", std::to_string(seed));
  kv.set("experiment.threads", std::to_string(threads));
  return kv;
}

ExperimentConfig ExperimentConfig::from_key_values(const KeyValueConfig& kv) {
  ExperimentConfig cfg;
  cfg.env.domain = kv.get_or("env.domain", cfg.env.domain);
  cfg.env.gamma = kv.get_double("env.gamma", cfg.env.gamma);
  cfg.env.listen_accuracy = kv.get_double("env.listen_accuracy", cfg.env.listen_accuracy);
  cfg.env.computers = static_cast<int>(kv.get_int("env.computers", cfg.env.computers));
  cfg.env.fail_prob = kv.get_double("env.fail_prob", cfg.env.fail_prob);
  cfg.env.grid = static_cast<int>(kv.get_int("env.grid", cfg.env.grid));
  cfg.env.rocks = static_cast<int>(kv.get_int("env.rocks", cfg.env.rocks));
  cfg.env.sensor_half_dist = kv.get_double("env.sensor_half_dist", cfg.env.sensor_half_dist);
  cfg.data.count = static_cast<int>(kv.get_int("data.trajectories", cfg.data.count));
  cfg.data.length = static_cast<int>(kv.get_int("data.length", cfg.data.length));
  cfg.sets.test_length = static_cast<int>(kv.get_int("data.test_length", cfg.sets.test_length));
  cfg.sets.history_cap = static_cast<int>(kv.get_int("data.history_cap", cfg.sets.history_cap));
  cfg.sets.restrict_tests = kv.get_bool("data.restrict_tests", cfg.sets.restrict_tests);
  cfg.estimate.repeats = static_cast<int>(kv.get_int("data.repeats", cfg.estimate.repeats));
  cfg.estimate.budget_factor =
      static_cast<int>(kv.get_int("data.budget_factor", cfg.estimate.budget_factor));
  cfg.rank = static_cast<int>(kv.get_int("psr.rank", cfg.rank));
  cfg.rank_threshold = kv.get_double("psr.rank_threshold", cfg.rank_threshold);
  cfg.pinv_cutoff = kv.get_double("psr.pinv_cutoff", cfg.pinv_cutoff);
  cfg.planner.c = kv.get_double("planner.c", cfg.planner.c);
  cfg.planner.max_depth = static_cast<int>(kv.get_int("planner.max_depth", cfg.planner.max_depth));
  cfg.planner.norm_eps = kv.get_double("planner.norm_eps", cfg.planner.norm_eps);
  cfg.planner.particles = static_cast<int>(kv.get_int("planner.particles", cfg.planner.particles));
  cfg.planner.gamma = cfg.env.gamma;
  cfg.n_sims_list.clear();
  for (long v : kv.get_int_list("experiment.n_sims")) cfg.n_sims_list.push_back(static_cast<int>(v));
  if (cfg.n_sims_list.empty()) cfg.n_sims_list = {1000};
  cfg.episodes = static_cast<int>(kv.get_int("experiment.episodes", cfg.episodes));
  cfg.max_steps = static_cast<int>(kv.get_int("experiment.max_steps", cfg.max_steps));
  if (kv.has("experiment.methods")) cfg.methods = kv.get_list("experiment.methods");
  cfg.seed = static_cast<uint64_t>(kv.get_int("experiment.seed", static_cast<long>(cfg.seed)));
  cfg.threads = static_cast<int>(kv.get_int("experiment.threads", cfg.threads));

  if (cfg.episodes < 1) throw std::invalid_argument("experiment.episodes must be >= 1");
  static const std::vector<std::string> supported{"psr-mcts", "psr-mcts-ro", "pomcp-true",
                                                  "random"};
  for (const std::string& m : cfg.methods)
    if (std::find(supported.begin(), supported.end(), m) == supported.end())
      throw std::invalid_argument("unsupported method: " + m);
  return cfg;
}

std::vector<std::string> ExperimentConfig::known_keys() {
  ExperimentConfig cfg;
  return cfg.to_key_values().keys();
}

// ---------------------------------------------------------------------------
// Presets.

namespace {

ExperimentConfig tiger_base() {
  ExperimentConfig cfg;
  cfg.env.domain = "tiger";
  cfg.data = {200, 6};
  cfg.sets = {2, 2000, false};
  cfg.estimate.repeats = 50;
  cfg.rank = 0;  // numerical rank of the estimated Hankel
  cfg.planner.c = 110;
  cfg.planner.max_depth = 20;
  cfg.planner.gamma = cfg.env.gamma;
  cfg.max_steps = 20;
  return cfg;
}

ExperimentConfig posyadmin_base(int n) {
  ExperimentConfig cfg;
  cfg.env.domain = "posyadmin";
  cfg.env.computers = n;
  cfg.rank = 50;
  cfg.planner.c = 20.0 + 10.0 * n;  // reward range
  cfg.planner.max_depth = 20;
  cfg.planner.gamma = cfg.env.gamma;
  cfg.max_steps = 20;
  return cfg;
}

ExperimentConfig rocksample_base(int n, int k) {
  ExperimentConfig cfg;
  cfg.env.domain = "rocksample";
  cfg.env.grid = n;
  cfg.env.rocks = k;
  cfg.sets = {2, 2000, true};
  cfg.planner.c = 20;
  cfg.planner.max_depth = 30;
  cfg.planner.gamma = cfg.env.gamma;
  cfg.max_steps = 30;
  return cfg;
}

}  // namespace

ExperimentConfig preset(const std::string& name) {
  if (name == "tiger-paper") {
    ExperimentConfig cfg = tiger_base();
    cfg.n_sims_list = {1000, 10000};
    cfg.episodes = 10000;
    cfg.methods = {"psr-mcts", "pomcp-true", "random"};
    return cfg;
  }
  if (name == "tiger-desk") {
    ExperimentConfig cfg = tiger_base();
    cfg.n_sims_list = {1000};
    cfg.episodes = 1000;
    cfg.methods = {"psr-mcts", "pomcp-true", "random"};
    return cfg;
  }
  if (name == "tiger-smoke") {
    ExperimentConfig cfg = tiger_base();
    cfg.data = {50, 6};
    cfg.n_sims_list = {50};
    cfg.episodes = 20;
    cfg.methods = {"psr-mcts", "psr-mcts-ro", "pomcp-true", "random"};
    return cfg;
  }
  if (name == "posyadmin3-paper" || name == "posyadmin3-desk") {
    ExperimentConfig cfg = posyadmin_base(3);
    cfg.data = {300, 8};
    cfg.sets = {2, 2000, false};
    cfg.n_sims_list = {100};
    cfg.episodes = name == "posyadmin3-paper" ? 1000 : 500;
    cfg.methods = {"psr-mcts", "psr-mcts-ro", "pomcp-true", "random"};
    return cfg;
  }
  if (name == "posyadmin6-paper") {
    ExperimentConfig cfg = posyadmin_base(6);
    cfg.data = {1000, 14};
    cfg.sets = {1, 2000, true};
    cfg.n_sims_list = {100, 300, 500, 700, 1000};
    cfg.episodes = 100;
    cfg.methods = {"psr-mcts-ro", "pomcp-true", "random"};
    return cfg;
  }
  if (name == "rocksample55-paper" || name == "rocksample55-desk") {
    ExperimentConfig cfg = rocksample_base(5, 5);
    cfg.data = {600, 20};
    cfg.rank = 70;
    cfg.n_sims_list = {1000};
    cfg.episodes = name == "rocksample55-paper" ? 1000 : 50;
    cfg.methods = name == "rocksample55-paper"
                      ? std::vector<std::string>{"psr-mcts-ro", "pomcp-true", "random"}
                      : std::vector<std::string>{"psr-mcts-ro", "random"};
    return cfg;
  }
  if (name == "rocksample57-paper") {
    ExperimentConfig cfg = rocksample_base(5, 7);
    cfg.data = {7000, 23};
    cfg.rank = 75;
    cfg.n_sims_list = {1000};
    cfg.episodes = 1000;
    cfg.methods = {"psr-mcts-ro", "pomcp-true", "random"};
    return cfg;
  }
  if (name == "rocksample57-smoke") {
    ExperimentConfig cfg = rocksample_base(5, 7);
    cfg.data = {150, 23};
    cfg.rank = 40;
    cfg.n_sims_list = {200};
    cfg.episodes = 5;
    cfg.methods = {"psr-mcts-ro", "random"};
    return cfg;
  }
  if (name == "rocksample32-desk") {
    ExperimentConfig cfg = rocksample_base(3, 2);
    cfg.data = {300, 15};
    cfg.rank = 20;
    cfg.n_sims_list = {1000};
    cfg.episodes = 300;
    cfg.methods = {"psr-mcts-ro", "random"};
    return cfg;
  }
  throw std::invalid_argument("unknown preset: " + name);
}

std::vector<std::string> preset_names() {
  return {"tiger-paper",      "tiger-desk",        "tiger-smoke",
          "posyadmin3-paper", "posyadmin3-desk",   "posyadmin6-paper",
          "rocksample55-paper", "rocksample55-desk", "rocksample57-paper",
          "rocksample57-smoke", "rocksample32-desk"};
}

bool is_preset(const std::string& name) {
  auto names = preset_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

// ---------------------------------------------------------------------------
// Metrics.

std::vector<SummaryRow> summarize(const std::vector<MetricsRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("summarize: empty metrics table");
  std::vector<SummaryRow> out;
  auto find_cell = [&](const MetricsRow& r) -> SummaryRow* {
    for (SummaryRow& s : out)
      if (s.method == r.method && s.domain == r.domain && s.n_sims == r.n_sims) return &s;
    return nullptr;
  };
  // two passes: accumulate mean, then spread
  for (const MetricsRow& r : rows) {
    SummaryRow* cell = find_cell(r);
    if (!cell) {
      out.push_back({r.method, r.domain, r.n_sims, 0, 0.0, std::nullopt, 0.0});
      cell = &out.back();
    }
    cell->episodes += 1;
    cell->mean_return += r.return_undiscounted;
    cell->mean_action_seconds += r.mean_action_seconds;
  }
  for (SummaryRow& s : out) {
    s.mean_return /= s.episodes;
    s.mean_action_seconds /= s.episodes;
  }
  for (SummaryRow& s : out) {
    if (s.episodes < 2) continue;
    double ss = 0;
    for (const MetricsRow& r : rows)
      if (r.method == s.method && r.domain == s.domain && r.n_sims == s.n_sims)
        ss += (r.return_undiscounted - s.mean_return) * (r.return_undiscounted - s.mean_return);
    s.stderr_return = std::sqrt(ss / (s.episodes - 1)) / std::sqrt(static_cast<double>(s.episodes));
  }
  return out;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << "method,domain,n_sims,seed,episode,return_undiscounted,return_discounted,"
         "mean_action_seconds,fallback_count,reset_count\n";
  for (const MetricsRow& r : rows) {
    out << r.method << ',' << r.domain << ',' << r.n_sims << ',' << r.seed << ',' << r.episode
        << ',' << fmt_double(r.return_undiscounted) << ',' << fmt_double(r.return_discounted)
        << ',' << fmt_double(r.mean_action_seconds) << ',' << r.fallback_count << ','
        << r.reset_count << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "method,domain,n_sims,episodes,mean_return,stderr_return,mean_action_seconds\n";
  for (const SummaryRow& r : rows) {
    out << r.method << ',' << r.domain << ',' << r.n_sims << ',' << r.episodes << ','
        << fmt_double(r.mean_return) << ','
        << (r.stderr_return ? fmt_double(*r.stderr_return) : std::string("na")) << ','
        << fmt_double(r.mean_action_seconds) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Pipeline.

LearnedArtifacts learn_from_config(const ExperimentConfig& cfg, std::ostream* log) {
  LearnedArtifacts la;
  la.env = make_environment(cfg.env);
  const PomdpSpec& spec = *la.env.spec;
  if (log) *log << "[learn] domain=" << spec.id << " generating " << cfg.data.count
                << " trajectories of length " << cfg.data.length << "\n";
  la.corpus = generate_trajectories(spec, la.env.map, cfg.data, mix_seed(cfg.seed, 101));
  la.sets = build_test_history_sets(la.corpus, la.env.alphabet, cfg.sets);
  if (log) *log << "[learn] |H|=" << la.sets.histories.size() << " |T|=" << la.sets.tests.size()
                << "\n";
  EstimateConfig est_cfg = cfg.estimate;
  est_cfg.threads = cfg.threads;
  la.estimates = estimate_hankel(spec, la.env.map, la.sets, est_cfg, mix_seed(cfg.seed, 202));
  int k = cfg.rank;
  if (k <= 0) k = numerical_rank(la.estimates.p_th, cfg.rank_threshold);
  int kmax = static_cast<int>(std::min(la.estimates.p_th.rows(), la.estimates.p_th.cols()));
  k = std::max(1, std::min(k, kmax));
  la.chosen_rank = k;
  if (log) *log << "[learn] rank k=" << k << "\n";
  LearnOptions lo;
  lo.pinv_cutoff = cfg.pinv_cutoff;
  la.model = learn(la.estimates, k, lo);
  la.model_ro = restrict_to_seen(la.model, seen_pairs(la.corpus, la.env.alphabet));
  return la;
}

RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                         std::ostream* log) {
  bool needs_psr = false;
  for (const std::string& m : cfg.methods)
    if (m == "psr-mcts" || m == "psr-mcts-ro") needs_psr = true;

  std::optional<LearnedArtifacts> la;
  Environment env;
  if (needs_psr) {
    la = learn_from_config(cfg, log);
    env = la->env;
  } else {
    env = make_environment(cfg.env);
  }
  const PomdpSpec& spec = *env.spec;

  RunResult rr;
  for (size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    const std::string& method = cfg.methods[mi];
    for (size_t si = 0; si < cfg.n_sims_list.size(); ++si) {
      int n_sims = cfg.n_sims_list[si];
      if (log) *log << "[run] method=" << method << " n_sims=" << n_sims << " episodes="
                    << cfg.episodes << "\n";
      PlannerConfig pc = cfg.planner;
      pc.n_sims = n_sims;
      pc.gamma = spec.discount;
      uint64_t cell_seed = mix_seed(cfg.seed, 7000 + mi * 131 + si);
      std::vector<MetricsRow> cell(static_cast<size_t>(cfg.episodes));
      parallel_for(cfg.episodes, cfg.threads, [&](int ep) {
        uint64_t ep_seed = mix_seed(cell_seed, static_cast<uint64_t>(ep));
        EpisodeRecord rec;
        if (method == "psr-mcts")
          rec = plan_psr_episode(la->model, spec, env.map, pc, cfg.max_steps, ep_seed);
        else if (method == "psr-mcts-ro")
          rec = plan_psr_episode(la->model_ro, spec, env.map, pc, cfg.max_steps, ep_seed);
        else if (method == "pomcp-true")
          rec = pomcp_episode(spec, env.map, pc, cfg.max_steps, ep_seed);
        else
          rec = random_episode(spec, env.map, pc.gamma, cfg.max_steps, ep_seed);
        cell[static_cast<size_t>(ep)] = {method,
                                         spec.id,
                                         n_sims,
                                         ep_seed,
                                         ep,
                                         rec.undiscounted,
                                         rec.discounted,
                                         rec.mean_action_seconds,
                                         rec.fallback_count,
                                         rec.reset_count};
      });
      rr.rows.insert(rr.rows.end(), cell.begin(), cell.end());
    }
  }
  rr.summary = summarize(rr.rows);

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream ep_out(out_dir + "/episodes.csv");
    write_metrics_csv(ep_out, rr.rows);
    std::ofstream sum_out(out_dir + "/summary.csv");
    write_summary_csv(sum_out, rr.summary);
    if (log) *log << "[run] wrote " << out_dir << "/episodes.csv and summary.csv\n";
  }
  return rr;
}

// ---------------------------------------------------------------------------
// Diagnostics.

DiagnosticsReport model_diagnostics(const PsrModel& model, const PomdpSpec& spec,
                                    const RewardObservationMap& map, const Alphabet& alphabet,
                                    int max_history_len, int probe_rollouts, int probe_depth,
                                    uint64_t seed) {
  DiagnosticsReport rep;
  rep.rank = model.rank;
  AugmentedOracle oracle(spec, map, alphabet);

  double sum_l1 = 0;
  long cells = 0;

  auto compare = [&](const Belief& bel, const PredictiveState& ps) {
    for (int a = 0; a < alphabet.n_actions; ++a) {
      Eigen::VectorXd truth = oracle.obs_prob(bel, a);
      ObsDistribution dist;
      obs_distribution(model, ps, a, dist);
      Eigen::VectorXd got = Eigen::VectorXd::Zero(alphabet.n_obs);
      for (size_t i = 0; i < dist.symbols->size(); ++i)
        got[(*dist.symbols)[i]] = dist.probs[i];
      double l1 = (truth - got).cwiseAbs().sum();
      rep.max_one_step_l1 = std::max(rep.max_one_step_l1, l1);
      sum_l1 += l1;
      ++cells;
    }
  };

  // Depth-first over oracle-reachable augmented histories.
  auto rec = [&](auto&& self, const Belief& bel, const PredictiveState& ps, int depth) -> void {
    ++rep.histories_probed;
    compare(bel, ps);
    if (depth == max_history_len) return;
    for (int a = 0; a < alphabet.n_actions; ++a) {
      Eigen::VectorXd truth = oracle.obs_prob(bel, a);
      for (int o = 0; o < alphabet.n_obs; ++o) {
        if (truth[o] <= 1e-12 || map.is_terminal(o)) continue;
        auto next = try_update_state(model, ps, a, o);
        if (!next) {
          // The model cannot track a positive-probability history; count the
          // worst one-step error for this branch and stop here.
          rep.max_one_step_l1 = std::max(rep.max_one_step_l1, 2.0);
          sum_l1 += 2.0;
          ++cells;
          continue;
        }
        self(self, oracle.update(bel, a, o), *next, depth + 1);
      }
    }
  };
  bool terminal_free = true;
  for (int s = 0; s < spec.n_states; ++s)
    if (spec.is_terminal(s)) terminal_free = false;
  if (spec.n_states <= 64 && terminal_free) {
    rec(rec, initial_belief(spec), model.initial_state(), 0);
    rep.mean_one_step_l1 = cells > 0 ? sum_l1 / static_cast<double>(cells) : 0.0;
  }

  // Fallback rate over uniform-policy rollouts of the model alone.
  Rng rng(mix_seed(seed, 404));
  PlannerDiag diag;
  PsrSimulator sim;
  sim.model = &model;
  sim.map = &map;
  long steps = 0;
  for (int i = 0; i < probe_rollouts; ++i) {
    PredictiveState s = model.initial_state();
    for (int d = 0; d < probe_depth; ++d) {
      int a = rng.uniform_int(alphabet.n_actions);
      SimOutcome out = sim.sim_step(s, a, rng, diag);
      ++steps;
      if (out.aborted || out.terminal) break;
    }
  }
  rep.probe_steps = steps;
  rep.fallback_rate = steps > 0 ? static_cast<double>(diag.fallbacks) / steps : 0.0;
  return rep;
}

std::ostream& operator<<(std::ostream& out, const DiagnosticsReport& r) {
  out << "rank: " << r.rank << "\n";
  if (r.histories_probed > 0)
    out << "histories probed (len<=3): " << r.histories_probed << "\n"
        << "one-step L1 vs oracle: max " << r.max_one_step_l1 << ", mean " << r.mean_one_step_l1
        << "\n";
  else
    out << "one-step L1 vs oracle: skipped (domain too large for the exact oracle)\n";
  out << "fallback rate on probe rollouts: " << r.fallback_rate << " over " << r.probe_steps
      << " steps\n";
  return out;
}

}  // namespace psrplan
