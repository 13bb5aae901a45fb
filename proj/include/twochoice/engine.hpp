#pragma once

#include "twochoice/graph.hpp"
#include "twochoice/ops.hpp"
#include "twochoice/policy.hpp"
#include "twochoice/recency_list.hpp"
#include "twochoice/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <boost/icl/interval_set.hpp>

namespace twochoice {

enum class HashModel { IndependentPair, DistinctOrdered, Graphical };
enum class InsertionModel { InsertionDeletion, ReinsertionDeletion };

struct SystemConfig {
  std::size_t n = 4;
  std::int64_t m_cap = 16;
  HashModel hash_model = HashModel::IndependentPair;
  InsertionModel mode = InsertionModel::InsertionDeletion;
  std::shared_ptr<const GraphModel> graph;  // required iff hash_model == Graphical
};

struct BallRecord {
  BallLabel label = 0;
  Bin bin = 0;
  Bin color = 0;
  bool corrupted = false;
};

struct StepRecord {
  std::uint64_t op_index = 0;
  Operation op;
  Bin bin = 0;
  Bin color = 0;
  bool corrupted = false;
  bool halted = false;
  double p_used = 1.0;
  bool two_choice = false;  // insert offered two distinct bins
  std::int64_t max_load = 0;
  double overload = 0.0;  // max_load - m_seen / n
};

/// Balls-and-bins state machine: bin loads, color loads, present balls in
/// insertion order, and (in reinsertion mode) the per-label hash memo.
class System {
 public:
  explicit System(SystemConfig config);

  static System create(std::size_t n, std::int64_t m_cap,
                       HashModel hash_model = HashModel::IndependentPair,
                       InsertionModel mode = InsertionModel::InsertionDeletion);

  /// In reinsertion mode returns the memoized pair when the label has been
  /// seen before; otherwise draws a fresh pair per the hash model.
  HashPair draw_hash(BallLabel label, Rng& hash_rng);

  /// Reinsertion mode only: fix the pair a label will use on every insertion.
  void preassign_hash(BallLabel label, HashPair pair);

  /// Applies one operation. A policy halt leaves the state untouched and is
  /// reported through StepRecord::halted.
  StepRecord apply(const Operation& op, PlacementPolicy& policy, RunStreams& streams);

  /// Inserts with a decision made outside the engine for the given pair. The
  /// bin must belong to the pair. Used by drivers that realize the strategy's
  /// distribution themselves (the stone-game coupling).
  StepRecord insert_decided(BallLabel label, const HashPair& pair, const StrategyDecision& decision);

  /// Places a ball directly, bypassing hashing and policy. For constructing
  /// start states.
  void seed_ball(BallLabel label, Bin bin, std::optional<Bin> color = std::nullopt);

  /// 1 + number of present balls inserted after label.
  [[nodiscard]] std::size_t rank_of(BallLabel label) const;
  [[nodiscard]] BallLabel label_at_rank(std::size_t rank) const;

  [[nodiscard]] bool contains(BallLabel label) const { return index_.contains(label); }
  [[nodiscard]] const BallRecord& ball(BallLabel label) const;
  [[nodiscard]] std::vector<BallRecord> present_oldest_first() const;

  [[nodiscard]] LoadView view() const;

  [[nodiscard]] const SystemConfig& config() const noexcept { return config_; }
  [[nodiscard]] std::size_t n() const noexcept { return config_.n; }
  [[nodiscard]] std::int64_t m_cap() const noexcept { return config_.m_cap; }
  [[nodiscard]] std::span<const std::int64_t> loads() const noexcept { return loads_; }
  [[nodiscard]] std::span<const std::int64_t> color_loads() const noexcept { return color_loads_; }
  [[nodiscard]] std::int64_t present() const noexcept { return static_cast<std::int64_t>(present_.size()); }
  [[nodiscard]] std::int64_t m_seen() const noexcept { return m_seen_; }
  [[nodiscard]] std::uint64_t op_count() const noexcept { return op_count_; }
  [[nodiscard]] std::int64_t max_load() const noexcept { return max_load_; }
  [[nodiscard]] std::int64_t min_load() const;
  [[nodiscard]] std::int64_t corrupted_present() const noexcept { return corrupted_present_; }
  [[nodiscard]] std::optional<HashPair> memoized_hash(BallLabel label) const;

  /// n * (max load) - m_seen: the overload scaled by n, exact.
  [[nodiscard]] std::int64_t scaled_overload() const noexcept {
    return static_cast<std::int64_t>(config_.n) * max_load_ - m_seen_;
  }
  [[nodiscard]] double overload() const noexcept {
    return static_cast<double>(scaled_overload()) / static_cast<double>(config_.n);
  }
  [[nodiscard]] double overload_vs_cap() const noexcept {
    return static_cast<double>(static_cast<std::int64_t>(config_.n) * max_load_ - config_.m_cap) /
           static_cast<double>(config_.n);
  }

 private:
  void check_fresh(BallLabel label) const;
  void add_ball(BallLabel label, Bin bin, Bin color, bool corrupted);
  BallRecord remove_ball(BallLabel label);
  StepRecord place_decided(BallLabel label, const HashPair& pair, const StrategyDecision& d, std::string_view who);

  SystemConfig config_;
  std::vector<std::int64_t> loads_;
  std::vector<std::int64_t> color_loads_;
  RecencyList<BallRecord> present_;
  std::unordered_map<BallLabel, RecencyList<BallRecord>::Handle> index_;
  std::unordered_map<BallLabel, HashPair> hash_memo_;
  boost::icl::interval_set<BallLabel> used_labels_;
  BallLabel next_unused_ = 0;  // every label >= this is unused
  std::int64_t m_seen_ = 0;
  std::uint64_t op_count_ = 0;
  std::int64_t max_load_ = 0;
  std::int64_t corrupted_present_ = 0;
};

enum class TraceMode { Full, OverloadOnly, Final };

struct TraceSummary {
  std::vector<std::int64_t> final_loads;
  std::vector<std::int64_t> final_color_loads;
  double max_overload = 0.0;         // against m_seen / n
  double max_overload_vs_cap = 0.0;  // against m_cap / n
  std::int64_t max_load = 0;
  bool halted = false;
  std::uint64_t halt_op = 0;
  std::uint64_t corruptions = 0;
  std::uint64_t inserts = 0;
  std::uint64_t deletes = 0;
  double p_min = 1.0;  // over two-choice decisions
  double p_max = 0.0;
  std::uint64_t seed = 0;
};

struct Trace {
  TraceMode mode = TraceMode::Final;
  std::vector<StepRecord> steps;
  TraceSummary summary;
};

using StepObserver = std::function<void(const System&, const StepRecord&, std::size_t position)>;

/// Replays a script. Deterministic given (script, policy config, streams).
/// Stops early when the policy halts. Operation errors surface as ScriptError.
Trace run(System& system, const AdversaryScript& script, PlacementPolicy& policy, RunStreams& streams,
          TraceMode mode = TraceMode::Final, const StepObserver& observer = {});

}  // namespace twochoice
