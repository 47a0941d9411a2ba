#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <iosfwd>
#include <vector>

#include "psrplan/pomdp.hpp"
#include "psrplan/types.hpp"

namespace psrplan {

// Row/column index sets of the Hankel matrices. histories[0] is always the
// empty history; tests are non-empty.
struct TestHistorySets {
  Alphabet alphabet;
  std::vector<Sequence> histories;
  std::vector<Sequence> tests;

  int history_index(const Sequence& h) const;  // -1 if absent
  int test_index(const Sequence& t) const;
};

// Estimated (or exact) Hankel matrices over the augmented alphabet. Entries
// are action-conditional sequence probabilities: p(h) is the probability of
// h's observations given that h's actions are executed, and p_th(t,h) =
// p(h) * p(t|h).
struct HankelEstimates {
  TestHistorySets sets;
  Eigen::VectorXd p_h;                                 // |H|
  Eigen::MatrixXd p_th;                                // |T| x |H|
  std::vector<Eigen::SparseMatrix<double>> p_t_ao_h;   // [pair_id], each |T| x |H|
  Eigen::VectorXi h_snapshots;  // per history: successful drives used for p(t|h)
  Eigen::VectorXi h_attempts;   // per history: reset attempts consumed
  int repeats = 0;
  bool exact = false;
};

struct TrajectoryConfig {
  int count = 200;
  int length = 6;
};

// Uniform-random-action corpus from reset; rewards promoted through the map.
// A trajectory ends early only on a terminal step. Deterministic given seed.
std::vector<Trajectory> generate_trajectories(const PomdpSpec& spec,
                                              const RewardObservationMap& map,
                                              const TrajectoryConfig& cfg,
                                              uint64_t seed);

struct SetsConfig {
  int test_length = 2;            // 1 or 2
  int history_cap = 2000;         // most frequent prefixes kept
  bool restrict_tests = false;    // limit tests to pairs seen in the corpus
};

// H = distinct prefixes of the corpus (empty history first, then by
// decreasing frequency); T = all length-1 and, when test_length == 2, all
// length-2 (a,o) sequences, either the full cross-product or the
// corpus-observed subset.
TestHistorySets build_test_history_sets(const std::vector<Trajectory>& corpus,
                                        const Alphabet& alphabet,
                                        const SetsConfig& cfg);

struct EstimateConfig {
  int repeats = 50;
  int budget_factor = 200;  // reset budget per history = budget_factor * repeats
  int threads = 0;          // 0: decide from PSRPLAN_THREADS / hardware
};

// The resampling estimator: p(h) is the match frequency of h's observations
// over `repeats` executions of h's actions from reset; p(t|h) and p(aot|h)
// are match frequencies over independently re-reached snapshots of h.
// Histories whose reset budget runs out keep zero entries, with the shortfall
// recorded in h_snapshots/h_attempts.
HankelEstimates estimate_hankel(const PomdpSpec& spec,
                                const RewardObservationMap& map,
                                const TestHistorySets& sets,
                                const EstimateConfig& cfg,
                                uint64_t seed);

// Prefix-count estimator over an existing corpus: p(ht) = (# trajectories
// beginning with ht) / (# trajectories whose actions begin with ht's
// actions), i.e. the uniform behavior policy's action factors cancel.
HankelEstimates estimate_hankel_from_corpus(const std::vector<Trajectory>& corpus,
                                            const TestHistorySets& sets);

// Corpus text format: one trajectory per line, "a:o:r" triples separated by
// semicolons.
void save_corpus(std::ostream& out, const std::vector<Trajectory>& corpus);
std::vector<Trajectory> load_corpus(std::istream& in);

// Portable text serialization of the estimates (dimensions header plus
// row-major decimal entries).
void save_hankel(std::ostream& out, const HankelEstimates& est);
HankelEstimates load_hankel(std::istream& in);

// All (a,o) sequences over the alphabet of length 1..max_len, in
// lexicographic order; used for exact-oracle index sets.
std::vector<Sequence> enumerate_sequences(const Alphabet& alphabet, int max_len);

// Distinct (a,o) pairs occurring in the corpus, as pair ids.
std::vector<int> seen_pairs(const std::vector<Trajectory>& corpus, const Alphabet& alphabet);

}  // namespace psrplan
