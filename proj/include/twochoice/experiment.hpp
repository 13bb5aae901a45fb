#pragma once

#include "twochoice/engine.hpp"
#include "twochoice/ops.hpp"
#include "twochoice/policy.hpp"
#include "twochoice/stats.hpp"
#include "twochoice/strategies.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace twochoice {

class Rng;

/// Strategy name plus knobs. Names: single, greedy, modulated, generalized,
/// one_plus_beta. graph, when set, switches hashing to the graphical model.
struct StrategySpec {
  std::string name = "greedy";
  double c = 4.0;
  double epsilon = 0.25;
  std::int64_t M = 0;  // 0: the sweep point's m
  double beta = 0.5;
  double log_base = 0.0;
  bool integral_slack = false;
  std::string graph;  // edge-list file

  static StrategySpec from_json(const nlohmann::json& j);
  [[nodiscard]] nlohmann::json to_json() const;
};

/// Script generator name plus its parameters, passed through unchanged.
/// Generators: insert_only, random_deletion_warmup, sawtooth, mixed_random,
/// tightness_epochs, greedy_attack, file.
struct AdversarySpec {
  std::string generator = "insert_only";
  nlohmann::json params = nlohmann::json::object();
};

struct ExperimentConfig {
  std::string name = "experiment";
  StrategySpec strategy;
  AdversarySpec adversary;
  std::vector<std::size_t> n{4};
  std::vector<std::int64_t> m{1024};
  HashModel hash_model = HashModel::IndependentPair;
  InsertionModel mode = InsertionModel::InsertionDeletion;
  std::uint64_t trials = 1;
  std::uint64_t seed = 1;
  TraceMode trace_mode = TraceMode::Final;
  std::size_t parallelism = 1;
  std::string output_dir;  // empty: nothing written

  /// Throws ConfigError on unknown keys or invalid values.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
  [[nodiscard]] nlohmann::json to_json() const;
  void validate() const;
};

/// One cell of the n x m cross product (n outer, m inner).
struct SweepPoint {
  std::size_t index = 0;
  std::size_t n = 0;
  std::int64_t m = 0;
};

std::vector<SweepPoint> sweep_points(const ExperimentConfig& config);

/// Global trial index used to derive every per-trial stream.
std::uint64_t trial_stream_index(const ExperimentConfig& config, const SweepPoint& point, std::uint64_t trial);

std::unique_ptr<PlacementPolicy> make_policy(const StrategySpec& spec, std::size_t n, std::int64_t m);
SystemConfig make_system_config(const ExperimentConfig& config, const SweepPoint& point);
AdversaryScript make_script(const AdversarySpec& spec, std::size_t n, std::int64_t m, Rng& script_rng);

struct TrialRecord {
  std::size_t point = 0;
  std::size_t n = 0;
  std::int64_t m = 0;
  std::uint64_t trial = 0;
  std::uint64_t stream_index = 0;
  std::uint64_t ops = 0;
  double max_overload = 0.0;
  double max_overload_vs_cap = 0.0;
  double final_overload = 0.0;
  std::int64_t max_load = 0;
  std::int64_t final_spread = 0;
  bool halted = false;
  std::uint64_t halt_op = 0;
  std::uint64_t corruptions = 0;
  double p_min = 1.0;
  double p_max = 0.0;
  /// max_load - m_cap / n in the state at each named script checkpoint.
  std::map<std::string, double> checkpoint_overload;
};

struct PointSummary {
  SweepPoint point;
  std::uint64_t trials = 0;
  double p50 = 0.0;
  double p90 = 0.0;
  double p99 = 0.0;
  double mean = 0.0;
  std::uint64_t halts = 0;
  std::uint64_t corruptions = 0;
  std::map<std::string, double> checkpoint_p50;
};

struct SummaryStats {
  std::vector<TrialRecord> trials;
  std::vector<PointSummary> points;
  /// Median max overload against m, one fit per n with at least three m values.
  std::vector<std::pair<std::size_t, std::optional<stats::PowerFit>>> fits;
};

/// Runs one trial: builds the script, system and policy from the trial
/// streams and replays.
TrialRecord run_trial(const ExperimentConfig& config, const SweepPoint& point, std::uint64_t trial,
                      Trace* trace_out = nullptr);

/// All trials in parallel up to config.parallelism. When output_dir is set
/// writes trials.csv, summary.json and config.json there (plus per-trial
/// traces when trace_mode is not Final).
SummaryStats run_experiment(const ExperimentConfig& config);

SummaryStats summarize(const ExperimentConfig& config, std::vector<TrialRecord> trials);
nlohmann::json summary_to_json(const SummaryStats& summary);
void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& trials);

/// op_index,op_kind,bin,color,corrupted,max_load,overload
void write_trace_csv(std::ostream& out, const Trace& trace);
nlohmann::json trace_summary_json(const TraceSummary& summary);

/// Runs fn(i) for i in [0, count) on up to `workers` threads. The first
/// exception thrown is rethrown after every worker has stopped.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

struct DistCheckReport {
  std::uint64_t samples = 0;
  std::uint64_t mismatches = 0;    // closed form != enumeration
  std::uint64_t bad_sums = 0;      // distribution does not sum to 1
  std::optional<std::vector<std::int64_t>> first_mismatch;
};

/// Loads l_i = b + o_i with b in [0, m/n - slack] and o_i in [0, slack], so
/// the sum is at most m and max - min <= slack <= T.
std::vector<std::int64_t> random_feasible_loads(std::size_t n, std::int64_t m, const ModulatedParams& params,
                                                Rng& rng);

/// Compares the modulated rule's closed-form selection law with brute-force
/// enumeration on `samples` random feasible load vectors, n drawn from `ns`
/// and m = n * U{1..512}.
DistCheckReport dist_check(std::uint64_t samples, const std::vector<std::size_t>& ns, std::uint64_t seed,
                           const ModulatedParams& params = {});

std::string hash_model_name(HashModel model);
HashModel parse_hash_model(const std::string& name);
std::string trace_mode_name(TraceMode mode);
TraceMode parse_trace_mode(const std::string& name);

}  // namespace twochoice
