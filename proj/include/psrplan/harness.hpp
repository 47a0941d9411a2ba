#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "psrplan/config.hpp"
#include "psrplan/data.hpp"
#include "psrplan/envs.hpp"
#include "psrplan/parallel.hpp"
#include "psrplan/planner.hpp"
#include "psrplan/psr.hpp"

namespace psrplan {

// Everything one evaluation run needs, mirroring the config file sections.
struct ExperimentConfig {
  EnvConfig env;
  TrajectoryConfig data;
  SetsConfig sets;
  EstimateConfig estimate;
  int rank = 0;                 // 0: numerical rank of the estimated Hankel
  double rank_threshold = 0.1;  // relative cutoff for the automatic rank; the
                                // sampling noise floor of a 50-repeat estimate
                                // sits well below it, the signal well above
  double pinv_cutoff = 1e-10;
  PlannerConfig planner;
  std::vector<int> n_sims_list{1000};
  int episodes = 100;
  int max_steps = 20;
  std::vector<std::string> methods{"psr-mcts", "random"};
  uint64_t seed = 1;
  int threads = 0;  // 0: PSRPLAN_THREADS or hardware concurrency

  KeyValueConfig to_key_values() const;
  static ExperimentConfig from_key_values(const KeyValueConfig& kv);
  static std::vector<std::string> known_keys();
};

// Paper-scale and desk-scale presets. Unknown names throw.
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();
bool is_preset(const std::string& name);

struct MetricsRow {
  std::string method;
  std::string domain;
  int n_sims = 0;
  uint64_t seed = 0;
  int episode = 0;
  double return_undiscounted = 0;
  double return_discounted = 0;
  double mean_action_seconds = 0;
  long fallback_count = 0;
  long reset_count = 0;
};

struct SummaryRow {
  std::string method;
  std::string domain;
  int n_sims = 0;
  int episodes = 0;
  double mean_return = 0;          // undiscounted
  std::optional<double> stderr_return;  // absent for a single episode
  double mean_action_seconds = 0;
};

// Grouped by (method, domain, n_sims); standard error is sample stddev over
// sqrt(n).
std::vector<SummaryRow> summarize(const std::vector<MetricsRow>& rows);

// CSV schemas are fixed:
//   method,domain,n_sims,seed,episode,return_undiscounted,return_discounted,
//   mean_action_seconds,fallback_count,reset_count
//   method,domain,n_sims,episodes,mean_return,stderr_return,mean_action_seconds
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

// Artifacts of the learning stage, exposed for inspection and reuse.
struct LearnedArtifacts {
  Environment env;
  std::vector<Trajectory> corpus;
  TestHistorySets sets;
  HankelEstimates estimates;
  PsrModel model;           // full-alphabet model
  PsrModel model_ro;        // restricted to corpus-seen pairs
  int chosen_rank = 0;
};

// Data generation, Hankel estimation, and spectral learning per the config.
LearnedArtifacts learn_from_config(const ExperimentConfig& cfg, std::ostream* log = nullptr);

struct RunResult {
  std::vector<MetricsRow> rows;
  std::vector<SummaryRow> summary;
};

// Full pipeline: learn once (when a PSR method is requested), then run every
// (method, n_sims, episode) cell. Deterministic given cfg.seed apart from
// the wall-time column. When out_dir is non-empty, writes episodes.csv and
// summary.csv there.
RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                         std::ostream* log = nullptr);

struct DiagnosticsReport {
  int rank = 0;
  int histories_probed = 0;
  double max_one_step_l1 = 0;   // vs the exact oracle, over histories of length <= 3
  double mean_one_step_l1 = 0;
  double fallback_rate = 0;     // per simulated step on probe rollouts
  long probe_steps = 0;
};

// Test-time comparison of the model's one-step predictions against the exact
// oracle, plus fallback rates measured on uniform-policy probe rollouts.
DiagnosticsReport model_diagnostics(const PsrModel& model, const PomdpSpec& spec,
                                    const RewardObservationMap& map, const Alphabet& alphabet,
                                    int max_history_len = 3, int probe_rollouts = 1000,
                                    int probe_depth = 6, uint64_t seed = 9);

std::ostream& operator<<(std::ostream& out, const DiagnosticsReport& r);

}  // namespace psrplan
