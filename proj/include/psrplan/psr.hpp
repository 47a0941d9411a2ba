#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "psrplan/data.hpp"
#include "psrplan/rng.hpp"
#include "psrplan/types.hpp"

namespace psrplan {

struct PredictiveState {
  Eigen::VectorXd b;
};

// Spectral PSR parameters. Immutable after learning and safe to share across
// workers; per-simulation state lives in PredictiveState copies.
struct PsrModel {
  int rank = 0;
  Alphabet alphabet;
  Eigen::VectorXd b_star;
  Eigen::VectorXd b_inf;
  std::vector<Eigen::MatrixXd> b_ao;        // [pair_id]; 0x0 when not computed
  std::vector<Eigen::RowVectorXd> w_ao;     // precomputed b_inf^T B_ao rows
  bool restricted = false;
  std::vector<char> seen;                   // [pair_id], meaningful when restricted
  std::vector<std::vector<int>> candidates; // per action: observation symbols sampled from

  bool has_operator(int pair) const {
    return b_ao[static_cast<size_t>(pair)].size() > 0;
  }
  PredictiveState initial_state() const { return {b_star}; }
};

// Top-k left singular vectors of p_th; columns orthonormal.
Eigen::MatrixXd truncated_svd(const Eigen::MatrixXd& p_th, int k);

// Count of singular values above rel_threshold * sigma_max.
int numerical_rank(const Eigen::MatrixXd& m, double rel_threshold);

// Moore-Penrose pseudo-inverse via SVD, dropping singular values below
// rel_cutoff * sigma_max.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, double rel_cutoff = 1e-10);

struct LearnOptions {
  double pinv_cutoff = 1e-10;
  // Pairs to compute operators for; empty means every pair in the alphabet.
  std::vector<int> pairs;
};

// Spectral learning from Hankel estimates:
//   b* from the empty-history column of U^T P_TH,
//   b_inf = (P_TH^T U)^+ P_H,
//   B_ao = U^T P_T,ao,H (U^T P_TH)^+.
PsrModel learn(const HankelEstimates& est, int k, const LearnOptions& opts = {});

constexpr double kDefaultNormEps = 1e-12;

// One-step state update b' = B_ao b / (b_inf^T B_ao b). Returns nullopt when
// the normalizer magnitude is below eps (impossible transition); the caller
// decides recovery.
std::optional<PredictiveState> try_update_state(const PsrModel& m, const PredictiveState& s,
                                                int action, int obs,
                                                double eps = kDefaultNormEps);

// Throwing variant of try_update_state.
PredictiveState update_state(const PsrModel& m, const PredictiveState& s, int action, int obs);

struct ObsDistribution {
  const std::vector<int>* symbols = nullptr;  // candidate symbols, model-owned
  std::vector<double> probs;                  // aligned with *symbols, sums to 1
  std::vector<double> raw;                    // unclamped b_inf^T B_ao b values
  bool fallback = false;                      // all raw values were <= 0
};

// Pr[o | b, a] over the candidate symbols of `action`: raw values clamped at
// zero and renormalized; uniform fallback when nothing is positive.
void obs_distribution(const PsrModel& m, const PredictiveState& s, int action,
                      ObsDistribution& out);

int sample_obs(const PsrModel& m, const PredictiveState& s, int action, Rng& rng,
               ObsDistribution& scratch);

// Eq.-3 chain b_inf^T B_{a_n o_n} ... B_{a_1 o_1} b*; the empty sequence
// gives b_inf^T b* = 1.
double predict_sequence(const PsrModel& m, const Sequence& seq);

// Copy of the model restricted to the given (a,o) pairs: operators outside
// the set are dropped and sampling is limited to the seen symbols.
PsrModel restrict_to_seen(const PsrModel& m, const std::vector<int>& pairs);

// Identity for seen pairs; otherwise a uniformly random seen observation for
// the action. Throws when the action has no seen observation at all.
int map_unseen_observation(const PsrModel& m, int action, int obs, Rng& rng);

// Text serialization, lossless to 17 significant digits.
void save_model(std::ostream& out, const PsrModel& m);
PsrModel load_model(std::istream& in);

}  // namespace psrplan
