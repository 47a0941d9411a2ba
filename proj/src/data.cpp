#include "psrplan/data.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "psrplan/parallel.hpp"

namespace psrplan {

namespace {

// Packs a short (a,o) sequence (length <= 3) into a hash key. Pair ids are
// below 1024 for every supported alphabet.
uint64_t pack_pairs(const Sequence& seq, const Alphabet& al, size_t take) {
  uint64_t key = 0;
  for (size_t i = 0; i < take; ++i)
    key |= static_cast<uint64_t>(al.pair_id(seq[i].action, seq[i].obs) + 1) << (10 * i);
  return key;
}

uint64_t pack_actions(const int* acts, size_t len) {
  uint64_t key = 0;
  for (size_t i = 0; i < len; ++i)
    key |= static_cast<uint64_t>(acts[i] + 1) << (6 * i);
  return key;
}

std::string seq_key(const Sequence& seq) {
  std::string s;
  s.reserve(seq.size() * 2);
  for (const AoPair& p : seq) {
    s.push_back(static_cast<char>(p.action));
    s.push_back(static_cast<char>(p.obs));
  }
  return s;
}

}  // namespace

int TestHistorySets::history_index(const Sequence& h) const {
  for (size_t i = 0; i < histories.size(); ++i)
    if (histories[i] == h) return static_cast<int>(i);
  return -1;
}

int TestHistorySets::test_index(const Sequence& t) const {
  for (size_t i = 0; i < tests.size(); ++i)
    if (tests[i] == t) return static_cast<int>(i);
  return -1;
}

std::vector<Trajectory> generate_trajectories(const PomdpSpec& spec,
                                              const RewardObservationMap& map,
                                              const TrajectoryConfig& cfg, uint64_t seed) {
  if (cfg.count < 0 || cfg.length <= 0)
    throw std::invalid_argument("generate_trajectories: bad count/length");
  std::vector<Trajectory> corpus(static_cast<size_t>(cfg.count));
  for (int i = 0; i < cfg.count; ++i) {
    Rng rng(mix_seed(seed, static_cast<uint64_t>(i)));
    Trajectory& traj = corpus[static_cast<size_t>(i)];
    int s = reset(spec, rng);
    for (int t = 0; t < cfg.length; ++t) {
      int a = rng.uniform_int(spec.n_actions);
      StepResult res = env_step(spec, s, a, rng);
      int sym = map.augment(a, res.base_obs, res.reward);
      traj.steps.push_back({a, sym, res.reward});
      s = res.state;
      if (res.terminal || map.is_terminal(sym)) break;
    }
  }
  return corpus;
}

std::vector<Sequence> enumerate_sequences(const Alphabet& al, int max_len) {
  std::vector<Sequence> out;
  Sequence cur;
  auto rec = [&](auto&& self, int depth) -> void {
    if (depth > 0) out.push_back(cur);
    if (depth == max_len) return;
    for (int a = 0; a < al.n_actions; ++a)
      for (int o = 0; o < al.n_obs; ++o) {
        cur.push_back({a, o});
        self(self, depth + 1);
        cur.pop_back();
      }
  };
  rec(rec, 0);
  std::stable_sort(out.begin(), out.end(),
                   [](const Sequence& a, const Sequence& b) { return a.size() < b.size(); });
  return out;
}

std::vector<int> seen_pairs(const std::vector<Trajectory>& corpus, const Alphabet& al) {
  std::vector<char> seen(static_cast<size_t>(al.n_pairs()), 0);
  for (const Trajectory& t : corpus)
    for (const StepRecord& s : t.steps) seen[static_cast<size_t>(al.pair_id(s.action, s.obs))] = 1;
  std::vector<int> out;
  for (int p = 0; p < al.n_pairs(); ++p)
    if (seen[static_cast<size_t>(p)]) out.push_back(p);
  return out;
}

TestHistorySets build_test_history_sets(const std::vector<Trajectory>& corpus,
                                        const Alphabet& al, const SetsConfig& cfg) {
  if (corpus.empty()) throw std::invalid_argument("build_test_history_sets: empty corpus");
  if (cfg.test_length < 1 || cfg.test_length > 2)
    throw std::invalid_argument("build_test_history_sets: test_length must be 1 or 2");

  TestHistorySets sets;
  sets.alphabet = al;

  struct PrefixInfo {
    Sequence seq;
    long count = 0;
    long first_seen = 0;
  };
  std::map<std::string, PrefixInfo> prefixes;
  long order = 0;
  for (const Trajectory& traj : corpus) {
    Sequence cur;
    auto touch = [&]() {
      auto [it, fresh] = prefixes.try_emplace(seq_key(cur));
      if (fresh) {
        it->second.seq = cur;
        it->second.first_seen = order++;
      }
      it->second.count += 1;
    };
    touch();  // the empty history
    for (const StepRecord& s : traj.steps) {
      cur.push_back({s.action, s.obs});
      touch();
    }
  }
  std::vector<PrefixInfo> infos;
  infos.reserve(prefixes.size());
  for (auto& [key, info] : prefixes) infos.push_back(std::move(info));
  std::sort(infos.begin(), infos.end(), [](const PrefixInfo& a, const PrefixInfo& b) {
    if (a.seq.empty() != b.seq.empty()) return a.seq.empty();  // empty history first
    if (a.count != b.count) return a.count > b.count;
    return a.first_seen < b.first_seen;
  });
  int cap = std::max(cfg.history_cap, 1);
  for (const PrefixInfo& info : infos) {
    if (static_cast<int>(sets.histories.size()) >= cap) break;
    sets.histories.push_back(info.seq);
  }

  if (!cfg.restrict_tests) {
    sets.tests = enumerate_sequences(al, cfg.test_length);
  } else {
    std::set<Sequence> singles, pairs;
    for (const Trajectory& traj : corpus)
      for (size_t i = 0; i < traj.steps.size(); ++i) {
        AoPair p{traj.steps[i].action, traj.steps[i].obs};
        singles.insert({p});
        if (cfg.test_length == 2 && i + 1 < traj.steps.size())
          pairs.insert({p, {traj.steps[i + 1].action, traj.steps[i + 1].obs}});
      }
    sets.tests.assign(singles.begin(), singles.end());
    sets.tests.insert(sets.tests.end(), pairs.begin(), pairs.end());
  }
  return sets;
}

// ---------------------------------------------------------------------------
// Resampling estimator.

namespace {

struct EntryTargets {
  int th_test = -1;
  int ao_pair = -1;
  int ao_test = -1;
};

struct RolloutPlan {
  std::vector<std::vector<int>> seqs;                // action sequences to execute
  std::unordered_map<uint64_t, int> multiplicity;    // action-prefix -> rolls per snapshot
  std::unordered_map<uint64_t, EntryTargets> needed; // realized (a,o) prefix -> entries
  std::vector<int> mult_th;                          // per test
  std::vector<int> mult_ao;                          // [action * n_tests + test]
};

RolloutPlan build_plan(const TestHistorySets& sets) {
  const Alphabet& al = sets.alphabet;
  RolloutPlan plan;
  std::set<std::vector<int>> seqs;
  for (const Sequence& t : sets.tests) {
    std::vector<int> acts;
    for (const AoPair& p : t) acts.push_back(p.action);
    seqs.insert(acts);
    for (int a = 0; a < al.n_actions; ++a) {
      std::vector<int> ext{a};
      ext.insert(ext.end(), acts.begin(), acts.end());
      seqs.insert(ext);
    }
  }
  plan.seqs.assign(seqs.begin(), seqs.end());
  for (const auto& s : plan.seqs)
    for (size_t len = 1; len <= s.size(); ++len)
      plan.multiplicity[pack_actions(s.data(), len)] += 1;

  int nt = static_cast<int>(sets.tests.size());
  for (int ti = 0; ti < nt; ++ti)
    plan.needed[pack_pairs(sets.tests[static_cast<size_t>(ti)], al,
                           sets.tests[static_cast<size_t>(ti)].size())]
        .th_test = ti;
  for (int a = 0; a < al.n_actions; ++a)
    for (int o = 0; o < al.n_obs; ++o)
      for (int ti = 0; ti < nt; ++ti) {
        Sequence ext{{a, o}};
        const Sequence& t = sets.tests[static_cast<size_t>(ti)];
        ext.insert(ext.end(), t.begin(), t.end());
        EntryTargets& tgt = plan.needed[pack_pairs(ext, al, ext.size())];
        tgt.ao_pair = al.pair_id(a, o);
        tgt.ao_test = ti;
      }

  plan.mult_th.assign(static_cast<size_t>(nt), 0);
  plan.mult_ao.assign(static_cast<size_t>(al.n_actions * nt), 0);
  for (int ti = 0; ti < nt; ++ti) {
    const Sequence& t = sets.tests[static_cast<size_t>(ti)];
    std::vector<int> acts;
    for (const AoPair& p : t) acts.push_back(p.action);
    auto it = plan.multiplicity.find(pack_actions(acts.data(), acts.size()));
    plan.mult_th[static_cast<size_t>(ti)] = it == plan.multiplicity.end() ? 0 : it->second;
    for (int a = 0; a < al.n_actions; ++a) {
      std::vector<int> ext{a};
      ext.insert(ext.end(), acts.begin(), acts.end());
      auto jt = plan.multiplicity.find(pack_actions(ext.data(), ext.size()));
      plan.mult_ao[static_cast<size_t>(a * nt + ti)] =
          jt == plan.multiplicity.end() ? 0 : jt->second;
    }
  }
  return plan;
}

struct HistoryResult {
  double p_h = 0;
  int snapshots = 0;
  int attempts = 0;
  std::vector<std::pair<int, double>> th_entries;               // (test, value)
  std::vector<std::pair<int64_t, double>> ao_entries;           // (pair * nt + test, value)
};

}  // namespace

HankelEstimates estimate_hankel(const PomdpSpec& spec, const RewardObservationMap& map,
                                const TestHistorySets& sets, const EstimateConfig& cfg,
                                uint64_t seed) {
  if (cfg.repeats < 1) throw std::invalid_argument("estimate_hankel: repeats must be >= 1");
  const Alphabet& al = sets.alphabet;
  const int nh = static_cast<int>(sets.histories.size());
  const int nt = static_cast<int>(sets.tests.size());
  const int repeats = cfg.repeats;
  const long budget = static_cast<long>(cfg.budget_factor) * repeats;
  RolloutPlan plan = build_plan(sets);

  std::vector<HistoryResult> results(static_cast<size_t>(nh));

  parallel_for(nh, cfg.threads, [&](int hi) {
    const Sequence& h = sets.histories[static_cast<size_t>(hi)];
    Rng rng(mix_seed(seed, 0x48cb7ull + static_cast<uint64_t>(hi)));
    HistoryResult& res = results[static_cast<size_t>(hi)];

    // A finished episode keeps emitting its final symbol: the process is
    // padded with an absorbing loop so that continuations of terminal
    // symbols have well-defined probabilities and their operators are
    // learnable.
    struct Snapshot {
      int state;
      int pad_sym;  // -1 while the episode is live
    };
    std::vector<Snapshot> snaps;
    snaps.reserve(static_cast<size_t>(repeats));
    int matches_first = 0;
    long attempts = 0;
    while (attempts < budget &&
           (static_cast<int>(snaps.size()) < repeats || attempts < repeats)) {
      ++attempts;
      int s = reset(spec, rng);
      int pad = -1;
      bool ok = true;
      for (const AoPair& p : h) {
        int sym;
        if (pad >= 0) {
          sym = pad;
        } else {
          StepResult step = env_step(spec, s, p.action, rng);
          sym = map.augment(p.action, step.base_obs, step.reward);
          s = step.state;
          if (step.terminal || map.is_terminal(sym)) pad = sym;
        }
        if (sym != p.obs) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      if (attempts <= repeats) ++matches_first;
      if (static_cast<int>(snaps.size()) < repeats) snaps.push_back({s, pad});
    }
    res.p_h = static_cast<double>(matches_first) / repeats;
    res.snapshots = static_cast<int>(snaps.size());
    res.attempts = static_cast<int>(attempts);
    if (snaps.empty() || res.p_h <= 0.0) return;

    std::vector<int> succ_th(static_cast<size_t>(nt), 0);
    std::vector<int> succ_ao(static_cast<size_t>(al.n_pairs()) * static_cast<size_t>(nt), 0);
    std::vector<int> touched_th, touched_ao;

    for (const Snapshot& snap : snaps) {
      for (const std::vector<int>& acts : plan.seqs) {
        int s = snap.state;
        int pad = snap.pad_sym;
        uint64_t key = 0;
        for (size_t d = 0; d < acts.size(); ++d) {
          int sym;
          if (pad >= 0) {
            sym = pad;
          } else {
            StepResult step = env_step(spec, s, acts[d], rng);
            sym = map.augment(acts[d], step.base_obs, step.reward);
            s = step.state;
            if (step.terminal || map.is_terminal(sym)) pad = sym;
          }
          key |= static_cast<uint64_t>(al.pair_id(acts[d], sym) + 1) << (10 * d);
          auto it = plan.needed.find(key);
          if (it == plan.needed.end()) continue;
          const EntryTargets& tgt = it->second;
          if (tgt.th_test >= 0) {
            if (succ_th[static_cast<size_t>(tgt.th_test)]++ == 0)
              touched_th.push_back(tgt.th_test);
          }
          if (tgt.ao_pair >= 0) {
            size_t idx = static_cast<size_t>(tgt.ao_pair) * static_cast<size_t>(nt) +
                         static_cast<size_t>(tgt.ao_test);
            if (succ_ao[idx]++ == 0) touched_ao.push_back(static_cast<int>(idx));
          }
        }
      }
    }

    std::sort(touched_th.begin(), touched_th.end());
    std::sort(touched_ao.begin(), touched_ao.end());
    for (int ti : touched_th) {
      double denom = static_cast<double>(res.snapshots) * plan.mult_th[static_cast<size_t>(ti)];
      if (denom <= 0) continue;
      res.th_entries.emplace_back(ti, res.p_h * succ_th[static_cast<size_t>(ti)] / denom);
    }
    for (int idx : touched_ao) {
      int pair = idx / nt;
      int ti = idx % nt;
      int action = al.pair_of(pair).action;
      double denom = static_cast<double>(res.snapshots) *
                     plan.mult_ao[static_cast<size_t>(action * nt + ti)];
      if (denom <= 0) continue;
      res.ao_entries.emplace_back(idx, res.p_h * succ_ao[static_cast<size_t>(idx)] / denom);
    }
  });

  HankelEstimates est;
  est.sets = sets;
  est.repeats = repeats;
  est.p_h.resize(nh);
  est.p_th = Eigen::MatrixXd::Zero(nt, nh);
  est.h_snapshots.resize(nh);
  est.h_attempts.resize(nh);
  std::vector<std::vector<Eigen::Triplet<double>>> trips(static_cast<size_t>(al.n_pairs()));
  for (int hi = 0; hi < nh; ++hi) {
    const HistoryResult& res = results[static_cast<size_t>(hi)];
    est.p_h[hi] = res.p_h;
    est.h_snapshots[hi] = res.snapshots;
    est.h_attempts[hi] = res.attempts;
    for (const auto& [ti, v] : res.th_entries) est.p_th(ti, hi) = v;
    for (const auto& [idx, v] : res.ao_entries)
      trips[static_cast<size_t>(idx / nt)].emplace_back(static_cast<int>(idx % nt), hi, v);
  }
  est.p_t_ao_h.assign(static_cast<size_t>(al.n_pairs()), Eigen::SparseMatrix<double>(nt, nh));
  for (int pair = 0; pair < al.n_pairs(); ++pair)
    est.p_t_ao_h[static_cast<size_t>(pair)].setFromTriplets(
        trips[static_cast<size_t>(pair)].begin(), trips[static_cast<size_t>(pair)].end());
  return est;
}

// ---------------------------------------------------------------------------
// Corpus prefix-count estimator.

HankelEstimates estimate_hankel_from_corpus(const std::vector<Trajectory>& corpus,
                                            const TestHistorySets& sets) {
  if (corpus.empty()) throw std::invalid_argument("estimate_hankel_from_corpus: empty corpus");
  const Alphabet& al = sets.alphabet;
  const int nh = static_cast<int>(sets.histories.size());
  const int nt = static_cast<int>(sets.tests.size());

  std::map<std::string, long> obs_count;   // (a,o) prefix occurrences
  std::map<std::string, long> act_count;   // action-only prefix occurrences
  for (const Trajectory& traj : corpus) {
    std::string okey, akey;
    okey.reserve(traj.steps.size() * 2);
    akey.reserve(traj.steps.size());
    obs_count[okey] += 1;
    act_count[akey] += 1;
    for (const StepRecord& s : traj.steps) {
      okey.push_back(static_cast<char>(s.action));
      okey.push_back(static_cast<char>(s.obs));
      akey.push_back(static_cast<char>(s.action));
      obs_count[okey] += 1;
      act_count[akey] += 1;
    }
  }

  std::map<std::string, int> h_index, t_index;
  for (int i = 0; i < nh; ++i) h_index[seq_key(sets.histories[static_cast<size_t>(i)])] = i;
  for (int i = 0; i < nt; ++i) t_index[seq_key(sets.tests[static_cast<size_t>(i)])] = i;

  HankelEstimates est;
  est.sets = sets;
  est.repeats = 0;
  est.p_h = Eigen::VectorXd::Zero(nh);
  est.p_th = Eigen::MatrixXd::Zero(nt, nh);
  est.h_snapshots = Eigen::VectorXi::Zero(nh);
  est.h_attempts = Eigen::VectorXi::Zero(nh);
  std::vector<std::vector<Eigen::Triplet<double>>> trips(static_cast<size_t>(al.n_pairs()));

  auto conditional = [&](const std::string& okey) -> double {
    std::string akey;
    for (size_t i = 0; i < okey.size(); i += 2) akey.push_back(okey[i]);
    auto denom = act_count.find(akey);
    if (denom == act_count.end() || denom->second == 0) return 0.0;
    auto num = obs_count.find(okey);
    return num == obs_count.end()
               ? 0.0
               : static_cast<double>(num->second) / static_cast<double>(denom->second);
  };

  // Single pass over counted prefixes: each split sigma = h + tail feeds the
  // matrices when h is a tracked history and the tail is (a,o)+?test.
  for (const auto& [okey, count] : obs_count) {
    (void)count;
    double p = conditional(okey);
    if (p <= 0.0) continue;
    size_t steps = okey.size() / 2;
    for (size_t hl = 0; hl <= steps; ++hl) {
      auto hit = h_index.find(okey.substr(0, hl * 2));
      if (hit == h_index.end()) continue;
      int hi = hit->second;
      size_t tail = steps - hl;
      if (tail == 0) {
        est.p_h[hi] = p;
        continue;
      }
      std::string tkey = okey.substr(hl * 2);
      if (tail <= 2) {
        auto tit = t_index.find(tkey);
        if (tit != t_index.end()) est.p_th(tit->second, hi) = p;
      }
      if (tail >= 2 && tail <= 3) {
        int pair = al.pair_id(tkey[0], tkey[1]);
        auto tit = t_index.find(tkey.substr(2));
        if (tit != t_index.end())
          trips[static_cast<size_t>(pair)].emplace_back(tit->second, hi, p);
      }
    }
  }
  est.p_t_ao_h.assign(static_cast<size_t>(al.n_pairs()), Eigen::SparseMatrix<double>(nt, nh));
  for (int pair = 0; pair < al.n_pairs(); ++pair)
    est.p_t_ao_h[static_cast<size_t>(pair)].setFromTriplets(
        trips[static_cast<size_t>(pair)].begin(), trips[static_cast<size_t>(pair)].end());
  return est;
}

// ---------------------------------------------------------------------------
// Serialization.

void save_corpus(std::ostream& out, const std::vector<Trajectory>& corpus) {
  out.precision(17);
  for (const Trajectory& traj : corpus) {
    for (size_t i = 0; i < traj.steps.size(); ++i) {
      const StepRecord& s = traj.steps[i];
      if (i) out << ';';
      out << s.action << ':' << s.obs << ':' << s.reward;
    }
    out << '\n';
  }
}

std::vector<Trajectory> load_corpus(std::istream& in) {
  std::vector<Trajectory> corpus;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Trajectory traj;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ';')) {
      StepRecord rec;
      if (std::sscanf(item.c_str(), "%d:%d:%lf", &rec.action, &rec.obs, &rec.reward) != 3)
        throw std::runtime_error("load_corpus: malformed step '" + item + "'");
      traj.steps.push_back(rec);
    }
    corpus.push_back(std::move(traj));
  }
  return corpus;
}

namespace {

void write_sequence(std::ostream& out, const Sequence& s) {
  out << s.size();
  for (const AoPair& p : s) out << ' ' << p.action << ' ' << p.obs;
  out << '\n';
}

Sequence read_sequence(std::istream& in) {
  size_t len = 0;
  in >> len;
  Sequence s(len);
  for (AoPair& p : s) in >> p.action >> p.obs;
  return s;
}

}  // namespace

void save_hankel(std::ostream& out, const HankelEstimates& est) {
  out.precision(17);
  const Alphabet& al = est.sets.alphabet;
  out << "psrplan-hankel 1\n";
  out << "actions " << al.n_actions;
  for (const auto& n : al.action_names) out << ' ' << n;
  out << "\nobservations " << al.n_obs;
  for (const auto& n : al.obs_names) out << ' ' << n;
  out << "\nrepeats " << est.repeats << "\nexact " << (est.exact ? 1 : 0) << '\n';
  out << "histories " << est.sets.histories.size() << '\n';
  for (const Sequence& h : est.sets.histories) write_sequence(out, h);
  out << "tests " << est.sets.tests.size() << '\n';
  for (const Sequence& t : est.sets.tests) write_sequence(out, t);
  out << "p_h\n";
  for (int i = 0; i < est.p_h.size(); ++i) out << est.p_h[i] << (i + 1 == est.p_h.size() ? '\n' : ' ');
  out << "p_th\n";
  for (int t = 0; t < est.p_th.rows(); ++t) {
    for (int h = 0; h < est.p_th.cols(); ++h)
      out << est.p_th(t, h) << (h + 1 == est.p_th.cols() ? '\n' : ' ');
  }
  out << "p_t_ao_h " << est.p_t_ao_h.size() << '\n';
  for (size_t pair = 0; pair < est.p_t_ao_h.size(); ++pair) {
    const auto& m = est.p_t_ao_h[pair];
    out << "pair " << pair << ' ' << m.nonZeros() << '\n';
    for (int k = 0; k < m.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
        out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
  }
  out << "snapshots\n";
  for (int i = 0; i < est.h_snapshots.size(); ++i)
    out << est.h_snapshots[i] << (i + 1 == est.h_snapshots.size() ? '\n' : ' ');
  out << "attempts\n";
  for (int i = 0; i < est.h_attempts.size(); ++i)
    out << est.h_attempts[i] << (i + 1 == est.h_attempts.size() ? '\n' : ' ');
  out << "end\n";
}

HankelEstimates load_hankel(std::istream& in) {
  HankelEstimates est;
  std::string tag;
  int version;
  in >> tag >> version;
  if (tag != "psrplan-hankel" || version != 1)
    throw std::runtime_error("load_hankel: bad header");
  Alphabet& al = est.sets.alphabet;
  in >> tag >> al.n_actions;
  al.action_names.resize(static_cast<size_t>(al.n_actions));
  for (auto& n : al.action_names) in >> n;
  in >> tag >> al.n_obs;
  al.obs_names.resize(static_cast<size_t>(al.n_obs));
  for (auto& n : al.obs_names) in >> n;
  int exact = 0;
  in >> tag >> est.repeats >> tag >> exact;
  est.exact = exact != 0;
  size_t nh = 0, nt = 0;
  in >> tag >> nh;
  est.sets.histories.resize(nh);
  for (auto& h : est.sets.histories) h = read_sequence(in);
  in >> tag >> nt;
  est.sets.tests.resize(nt);
  for (auto& t : est.sets.tests) t = read_sequence(in);
  in >> tag;
  est.p_h.resize(static_cast<int>(nh));
  for (int i = 0; i < est.p_h.size(); ++i) in >> est.p_h[i];
  in >> tag;
  est.p_th.resize(static_cast<int>(nt), static_cast<int>(nh));
  for (int t = 0; t < est.p_th.rows(); ++t)
    for (int h = 0; h < est.p_th.cols(); ++h) in >> est.p_th(t, h);
  size_t n_pairs = 0;
  in >> tag >> n_pairs;
  est.p_t_ao_h.assign(n_pairs, Eigen::SparseMatrix<double>(static_cast<int>(nt), static_cast<int>(nh)));
  for (size_t p = 0; p < n_pairs; ++p) {
    size_t pair_id = 0;
    long nnz = 0;
    in >> tag >> pair_id >> nnz;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(nnz));
    for (long i = 0; i < nnz; ++i) {
      int r, c;
      double v;
      in >> r >> c >> v;
      trips.emplace_back(r, c, v);
    }
    est.p_t_ao_h[pair_id].setFromTriplets(trips.begin(), trips.end());
  }
  in >> tag;
  est.h_snapshots.resize(static_cast<int>(nh));
  for (int i = 0; i < est.h_snapshots.size(); ++i) in >> est.h_snapshots[i];
  in >> tag;
  est.h_attempts.resize(static_cast<int>(nh));
  for (int i = 0; i < est.h_attempts.size(); ++i) in >> est.h_attempts[i];
  in >> tag;
  if (tag != "end") throw std::runtime_error("load_hankel: truncated file");
  return est;
}

}  // namespace psrplan
