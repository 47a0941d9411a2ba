#include "psrplan/envs.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace psrplan {

namespace {

std::string reward_symbol_name(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "r%+g", value);
  return buf;
}

// ---------------------------------------------------------------------------
// Tiger

class TigerSpec : public PomdpSpec {
 public:
  explicit TigerSpec(double listen_accuracy, double gamma) : acc_(listen_accuracy) {
    id = "tiger";
    n_states = 2;
    n_actions = 3;
    n_base_obs = 2;
    discount = gamma;
    reward_min = -100;
    reward_max = 10;
    initial_belief = Eigen::VectorXd::Constant(2, 0.5);
    terminal_state.assign(2, 0);
    action_names = {"listen", "open-left", "open-right"};
    base_obs_names = {"hear-left", "hear-right"};
  }

  void transition_row(int s, int a, Eigen::Ref<Eigen::VectorXd> out) const override {
    out.setZero();
    if (a == 0)
      out[s] = 1.0;  // listening leaves the tiger in place
    else
      out.setConstant(0.5);  // opening a door resets the tiger
  }

  void observation_row(int a, int s2, Eigen::Ref<Eigen::VectorXd> out) const override {
    if (a == 0) {
      out[0] = s2 == 0 ? acc_ : 1.0 - acc_;
      out[1] = 1.0 - out[0];
    } else {
      out.setConstant(0.5);  // uninformative after opening
    }
  }

  double reward(int s, int a, int) const override {
    if (a == 0) return -1.0;
    int door = a - 1;  // 0: left, 1: right
    return s == door ? -100.0 : 10.0;
  }

  StepResult step(int s, int a, Rng& rng) const override {
    if (a == 0) {
      bool correct = rng.bernoulli(acc_);
      int o = correct ? s : 1 - s;
      return {s, o, -1.0, false};
    }
    double r = reward(s, a, 0);
    int s2 = rng.uniform_int(2);
    int o = rng.uniform_int(2);
    return {s2, o, r, false};
  }

 private:
  double acc_;
};

RewardObservationMap tiger_map() {
  RewardObservationMap map;
  map.n_base = 2;
  map.n_aug = 4;
  map.promoted = {{10.0, 2, false}, {-100.0, 3, false}};
  map.residual.assign(static_cast<size_t>(3 * map.n_aug), 0.0);
  map.residual[0 * 4 + 0] = -1.0;  // listen cost rides on the hear symbols
  map.residual[0 * 4 + 1] = -1.0;
  map.terminal_obs.assign(static_cast<size_t>(map.n_aug), 0);
  return map;
}

// ---------------------------------------------------------------------------
// POSyadmin: n computers, ping/reboot/do-nothing, independent failures.

class PosyadminSpec : public PomdpSpec {
 public:
  PosyadminSpec(int n, double fail_prob, double gamma) : n_(n), f_(fail_prob) {
    id = "posyadmin-" + std::to_string(n);
    n_states = 1 << n;
    n_actions = 2 * n + 1;
    n_base_obs = 3;
    discount = gamma;
    reward_min = -20.0 - 10.0 * n;
    reward_max = 0.0;
    initial_belief = Eigen::VectorXd::Zero(n_states);
    initial_belief[0] = 1.0;  // all machines working
    terminal_state.assign(static_cast<size_t>(n_states), 0);
    for (int i = 0; i < n; ++i) action_names.push_back("ping-" + std::to_string(i));
    for (int i = 0; i < n; ++i) action_names.push_back("reboot-" + std::to_string(i));
    action_names.push_back("noop");
    base_obs_names = {"null", "failing", "working"};
  }

  int computers() const { return n_; }

  double action_cost(int a) const {
    if (a < n_) return 1.0;
    if (a < 2 * n_) return 20.0;
    return 0.0;
  }

  // State bits mark failing machines. The action applies first, then every
  // working machine fails independently with probability f.
  int mid_state(int s, int a) const {
    if (a >= n_ && a < 2 * n_) return s & ~(1 << (a - n_));
    return s;
  }

  void transition_row(int s, int a, Eigen::Ref<Eigen::VectorXd> out) const override {
    out.setZero();
    int mid = mid_state(s, a);
    for (int s2 = 0; s2 < n_states; ++s2) {
      if ((mid & ~s2) != 0) continue;  // failing machines stay failing
      int fresh = std::popcount(static_cast<unsigned>(s2 & ~mid));
      int kept = n_ - std::popcount(static_cast<unsigned>(mid)) - fresh;
      out[s2] = std::pow(f_, fresh) * std::pow(1.0 - f_, kept);
    }
  }

  void observation_row(int a, int s2, Eigen::Ref<Eigen::VectorXd> out) const override {
    out.setZero();
    if (a < n_)
      out[((s2 >> a) & 1) ? 1 : 2] = 1.0;  // ping reads the machine exactly
    else
      out[0] = 1.0;
  }

  double reward(int s, int a, int s2) const override {
    (void)s;
    return -action_cost(a) - 10.0 * std::popcount(static_cast<unsigned>(s2));
  }

  StepResult step(int s, int a, Rng& rng) const override {
    int mid = mid_state(s, a);
    int s2 = mid;
    for (int i = 0; i < n_; ++i)
      if (!((mid >> i) & 1) && rng.bernoulli(f_)) s2 |= 1 << i;
    int o = 0;
    if (a < n_) o = ((s2 >> a) & 1) ? 1 : 2;
    return {s2, o, reward(s, a, s2), false};
  }

 private:
  int n_;
  double f_;
};

RewardObservationMap posyadmin_map(const PosyadminSpec& spec) {
  RewardObservationMap map;
  int groups = spec.computers() + 1;
  map.n_base = 3;
  map.reward_groups = groups;
  map.group_unit = 10.0;
  map.n_aug = 3 * groups;
  for (int a = 0; a < spec.n_actions; ++a) map.action_cost.push_back(spec.action_cost(a));
  map.residual.assign(static_cast<size_t>(spec.n_actions * map.n_aug), 0.0);
  for (int a = 0; a < spec.n_actions; ++a)
    for (int b = 0; b < 3; ++b)
      for (int g = 0; g < groups; ++g)
        map.residual[static_cast<size_t>(a * map.n_aug + b * groups + g)] =
            -spec.action_cost(a) - 10.0 * g;
  map.terminal_obs.assign(static_cast<size_t>(map.n_aug), 0);
  return map;
}

// ---------------------------------------------------------------------------
// RockSample(n, k): deterministic motion, noisy checks, exit east.

struct RockLayout {
  int start_x = 0;
  int start_y = 0;
  std::vector<std::pair<int, int>> rocks;
};

RockLayout rock_layout(int n, int k) {
  if (n == 3 && k == 2) return {0, 1, {{1, 0}, {1, 2}}};
  if (n == 5 && k == 5) return {0, 2, {{2, 0}, {0, 1}, {3, 2}, {1, 3}, {4, 4}}};
  if (n == 5 && k == 7)
    return {0, 2, {{2, 0}, {0, 1}, {3, 2}, {1, 3}, {4, 4}, {1, 1}, {3, 4}}};
  // Deterministic fallback placement for other sizes.
  RockLayout lay{0, n / 2, {}};
  uint64_t h = 0x9e3779b97f4a7c15ull ^ (static_cast<uint64_t>(n) << 32) ^ static_cast<uint64_t>(k);
  std::vector<char> used(static_cast<size_t>(n * n), 0);
  used[static_cast<size_t>(lay.start_y * n + lay.start_x)] = 1;
  while (static_cast<int>(lay.rocks.size()) < k) {
    h = splitmix64(h);
    int cell = static_cast<int>(h % static_cast<uint64_t>(n * n));
    if (used[static_cast<size_t>(cell)]) continue;
    used[static_cast<size_t>(cell)] = 1;
    lay.rocks.emplace_back(cell % n, cell / n);
  }
  return lay;
}

class RockSampleSpec : public PomdpSpec {
 public:
  RockSampleSpec(int n, int k, double half_dist, double gamma)
      : n_(n), k_(k), half_dist_(half_dist), layout_(rock_layout(n, k)) {
    id = "rocksample-" + std::to_string(n) + "-" + std::to_string(k);
    n_states = n * n * (1 << k) + 1;
    n_actions = k + 5;
    n_base_obs = 3;
    discount = gamma;
    reward_min = -10;
    reward_max = 10;
    terminal_ = n_states - 1;
    terminal_state.assign(static_cast<size_t>(n_states), 0);
    terminal_state[static_cast<size_t>(terminal_)] = 1;
    initial_belief = Eigen::VectorXd::Zero(n_states);
    int start_cell = layout_.start_y * n + layout_.start_x;
    double w = 1.0 / static_cast<double>(1 << k);
    for (int m = 0; m < (1 << k); ++m) initial_belief[start_cell * (1 << k) + m] = w;
    action_names = {"north", "south", "east", "west", "sample"};
    for (int i = 0; i < k; ++i) action_names.push_back("check-" + std::to_string(i));
    base_obs_names = {"none", "good", "bad"};
    rock_at_.assign(static_cast<size_t>(n * n), -1);
    for (int i = 0; i < k; ++i)
      rock_at_[static_cast<size_t>(layout_.rocks[static_cast<size_t>(i)].second * n +
                                   layout_.rocks[static_cast<size_t>(i)].first)] = i;
  }

  int terminal_index() const { return terminal_; }

  int cell_of(int s) const { return s >> k_; }
  int mask_of(int s) const { return s & ((1 << k_) - 1); }
  int pack(int cell, int mask) const { return (cell << k_) | mask; }

  // Deterministic successor; observation is the only stochastic element.
  int next_state(int s, int a) const {
    if (s == terminal_) return terminal_;
    int cell = cell_of(s), mask = mask_of(s);
    int x = cell % n_, y = cell / n_;
    switch (a) {
      case 0: if (y + 1 < n_) ++y; break;
      case 1: if (y > 0) --y; break;
      case 2:
        if (x + 1 < n_) ++x;
        else return terminal_;  // exit east
        break;
      case 3: if (x > 0) --x; break;
      case 4: {
        int rock = rock_at_[static_cast<size_t>(cell)];
        if (rock >= 0) mask &= ~(1 << rock);  // a sampled rock turns bad
        return pack(cell, mask);
      }
      default: return s;  // check
    }
    return pack(y * n_ + x, mask);
  }

  double check_accuracy(int cell, int rock) const {
    int x = cell % n_, y = cell / n_;
    double dx = x - layout_.rocks[static_cast<size_t>(rock)].first;
    double dy = y - layout_.rocks[static_cast<size_t>(rock)].second;
    double dist = std::sqrt(dx * dx + dy * dy);
    return 0.5 * (1.0 + std::pow(2.0, -dist / half_dist_));
  }

  void transition_row(int s, int a, Eigen::Ref<Eigen::VectorXd> out) const override {
    out.setZero();
    out[next_state(s, a)] = 1.0;
  }

  void observation_row(int a, int s2, Eigen::Ref<Eigen::VectorXd> out) const override {
    out.setZero();
    if (a >= 5 && s2 != terminal_) {
      int rock = a - 5;
      double acc = check_accuracy(cell_of(s2), rock);
      bool good = (mask_of(s2) >> rock) & 1;
      out[1] = good ? acc : 1.0 - acc;
      out[2] = 1.0 - out[1];
    } else {
      out[0] = 1.0;
    }
  }

  double reward(int s, int a, int s2) const override {
    if (a == 2 && s2 == terminal_ && s != terminal_) return 10.0;
    if (a == 4) {
      int rock = rock_at_[static_cast<size_t>(cell_of(s))];
      if (rock < 0) return 0.0;
      return ((mask_of(s) >> rock) & 1) ? 10.0 : -10.0;
    }
    return 0.0;
  }

  StepResult step(int s, int a, Rng& rng) const override {
    int s2 = next_state(s, a);
    double r = reward(s, a, s2);
    int o = 0;
    if (a >= 5) {
      double acc = check_accuracy(cell_of(s2), a - 5);
      bool good = (mask_of(s2) >> (a - 5)) & 1;
      bool correct = rng.bernoulli(acc);
      o = (good == correct) ? 1 : 2;
    }
    return {s2, o, r, s2 == terminal_};
  }

  int sample_initial(Rng& rng) const override {
    int start_cell = layout_.start_y * n_ + layout_.start_x;
    return pack(start_cell, rng.uniform_int(1 << k_));
  }

 private:
  int n_, k_;
  double half_dist_;
  RockLayout layout_;
  int terminal_;
  std::vector<int> rock_at_;
};

RewardObservationMap rocksample_map(int n_actions) {
  RewardObservationMap map;
  map.n_base = 3;
  map.n_aug = 5;
  map.promoted = {{10.0, 3, true}, {-10.0, 4, false}};
  map.residual.assign(static_cast<size_t>(n_actions * map.n_aug), 0.0);
  map.terminal_obs.assign(static_cast<size_t>(map.n_aug), 0);
  map.terminal_obs[3] = 1;
  return map;
}

}  // namespace

Alphabet make_alphabet(const PomdpSpec& spec, const RewardObservationMap& map) {
  Alphabet al;
  al.n_actions = spec.n_actions;
  al.n_obs = map.n_aug;
  al.action_names = spec.action_names;
  if (map.reward_groups > 0) {
    for (int b = 0; b < map.n_base; ++b)
      for (int g = 0; g < map.reward_groups; ++g)
        al.obs_names.push_back(spec.base_obs_names[static_cast<size_t>(b)] + "/" + std::to_string(g));
  } else {
    al.obs_names = spec.base_obs_names;
    al.obs_names.resize(static_cast<size_t>(map.n_aug));
    for (const auto& p : map.promoted)
      al.obs_names[static_cast<size_t>(p.symbol)] = reward_symbol_name(p.value);
  }
  return al;
}

Environment make_environment(const EnvConfig& cfg) {
  Environment env;
  if (cfg.domain == "tiger") {
    env.spec = std::make_shared<TigerSpec>(cfg.listen_accuracy, cfg.gamma);
    env.map = tiger_map();
  } else if (cfg.domain == "posyadmin") {
    if (cfg.computers < 1 || cfg.computers > 16)
      throw std::invalid_argument("posyadmin: computers out of range");
    auto spec = std::make_shared<PosyadminSpec>(cfg.computers, cfg.fail_prob, cfg.gamma);
    env.map = posyadmin_map(*spec);
    env.spec = spec;
  } else if (cfg.domain == "rocksample") {
    if (cfg.grid < 2 || cfg.rocks < 1 || cfg.rocks > 20)
      throw std::invalid_argument("rocksample: bad grid/rocks");
    auto spec = std::make_shared<RockSampleSpec>(cfg.grid, cfg.rocks, cfg.sensor_half_dist, cfg.gamma);
    env.map = rocksample_map(spec->n_actions);
    env.spec = spec;
  } else {
    throw std::invalid_argument("unknown domain: " + cfg.domain);
  }
  env.alphabet = make_alphabet(*env.spec, env.map);
  return env;
}

}  // namespace psrplan
