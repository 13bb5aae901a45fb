#pragma once

#include "twochoice/ops.hpp"
#include "twochoice/recency_list.hpp"
#include "twochoice/stats.hpp"
#include "twochoice/strategies.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace twochoice {

class Rng;

struct Stone {
  Bin color = 0;
  std::uint32_t batch = 0;

  friend bool operator==(const Stone&, const Stone&) = default;
  friend auto operator<=>(const Stone&, const Stone&) = default;
};

enum class StoneVariant { Fixed, Generalized };

/// Two bags of colored stones. Activation moves a uniformly random inactive
/// stone to the active list; deactivation returns the r-th most recently
/// activated stone. The generalized variant adds a batch of one stone per
/// color whenever an activation leaves fewer than delta * n inactive.
class StoneGame {
 public:
  static StoneGame fixed(std::size_t n, std::int64_t Q);
  /// Starts with delta batches, the state coupled to an empty balls game.
  static StoneGame generalized(std::size_t n, std::int64_t delta);

  /// Direct construction for tests. `inactive` is taken in the given order,
  /// which fixes how flat indices map to stones.
  static StoneGame from_bags(std::size_t n, StoneVariant variant, std::int64_t batches, std::int64_t delta,
                             std::vector<Stone> inactive, std::vector<Stone> active_oldest_first);

  Stone activate(Rng& rng);
  /// Activates the stone at position `index` of the inactive bag.
  Stone activate_index(std::size_t index);
  Stone deactivate(std::size_t rank);

  [[nodiscard]] std::size_t n() const noexcept { return n_; }
  [[nodiscard]] StoneVariant variant() const noexcept { return variant_; }
  [[nodiscard]] std::int64_t batches() const noexcept { return batches_; }
  [[nodiscard]] std::int64_t delta() const noexcept { return delta_; }
  [[nodiscard]] std::int64_t total_stones() const noexcept { return batches_ * static_cast<std::int64_t>(n_); }
  [[nodiscard]] std::size_t inactive_size() const noexcept { return inactive_.size(); }
  [[nodiscard]] std::size_t active_size() const noexcept { return active_.size(); }
  [[nodiscard]] const std::vector<std::int64_t>& inactive_color_counts() const noexcept { return inactive_counts_; }
  [[nodiscard]] const std::vector<std::int64_t>& active_color_counts() const noexcept { return active_counts_; }
  [[nodiscard]] const std::vector<Stone>& inactive() const noexcept { return inactive_; }
  [[nodiscard]] std::vector<Stone> active_oldest_first() const;

  /// Same game with every stone's color replaced by perm[color].
  [[nodiscard]] StoneGame relabeled(const std::vector<Bin>& perm) const;

 private:
  StoneGame(std::size_t n, StoneVariant variant, std::int64_t batches, std::int64_t delta);
  void add_batch();

  std::size_t n_;
  StoneVariant variant_;
  std::int64_t batches_;
  std::int64_t delta_;
  std::vector<Stone> inactive_;
  RecencyList<Stone> active_;
  std::vector<std::int64_t> inactive_counts_;
  std::vector<std::int64_t> active_counts_;
};

/// Per-color inactive counts s_k.
inline const std::vector<std::int64_t>& inactive_color_counts(const StoneGame& game) {
  return game.inactive_color_counts();
}

// ---------------------------------------------------------------------------
// Coupling
// ---------------------------------------------------------------------------

struct CouplingConfig {
  std::size_t n = 8;
  /// Fixed: capacity m (n must divide it). Generalized: the bound M.
  std::int64_t m = 4096;
  StoneVariant variant = StoneVariant::Fixed;
  ModulatedParams modulated{4.0, 0.0, true};
  GeneralizedParams generalized{};  // M is overwritten with m
  /// Brute-force n^2 enumeration cross-check period; the closed form is
  /// compared with the stone proportions on every insertion regardless.
  std::size_t enumeration_every = 1000;
  bool record_trace = false;
};

struct CoupledStep {
  std::uint64_t step = 0;
  Operation::Kind op = Operation::Kind::Insert;
  Bin color = 0;
  std::vector<std::int64_t> balls_per_color;
  std::vector<std::int64_t> stones_per_color;
  bool violation = false;
};

struct CouplingReport {
  std::uint64_t steps = 0;
  std::uint64_t violations = 0;
  std::optional<std::uint64_t> first_violation;
  std::string first_violation_message;
  bool halted = false;
  std::uint64_t halt_step = 0;
  std::uint64_t distribution_checks = 0;
  std::uint64_t enumeration_checks = 0;
  std::uint64_t corruptions = 0;
  std::uint64_t batch_additions = 0;
  std::int64_t final_batches = 0;
  std::vector<CoupledStep> trace;

  [[nodiscard]] bool ok() const noexcept { return violations == 0; }
};

/// Runs the balls game and a stone game from one random source, stone first:
/// each insertion activates a uniform inactive stone and the ball takes that
/// color (and a bin consistent with the strategy given that color). Deletions
/// deactivate the stone at the deleted ball's recency rank.
CouplingReport coupled_run(const AdversaryScript& script, const CouplingConfig& config, std::uint64_t seed);

/// CSV: step,op,color,balls_0..,stones_0..,violation
void write_coupled_csv(std::ostream& out, const CouplingReport& report, std::size_t n);

// ---------------------------------------------------------------------------
// Uniform active-set check
// ---------------------------------------------------------------------------

struct SubsetReport {
  std::size_t stones = 0;
  std::size_t inactive_size = 0;
  std::uint64_t trials = 0;
  /// Tally per inactive subset, keyed by bitmask over stones (color * Q + batch).
  std::vector<std::pair<std::uint32_t, std::uint64_t>> tallies;
  stats::ChiSquare chi;
  bool degenerate = false;  // only one subset possible
};

/// Runs the fixed game `trials` times under the script (Insert activates,
/// Delete / DeleteRank deactivate) and compares the realized inactive set
/// against the uniform distribution over subsets of its size.
SubsetReport uniform_subset_test(const AdversaryScript& script, std::size_t n, std::int64_t Q, std::uint64_t trials,
                                 Rng& rng);

}  // namespace twochoice
