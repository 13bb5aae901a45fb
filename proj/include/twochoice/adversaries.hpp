#pragma once

#include "twochoice/ops.hpp"
#include "twochoice/script.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace twochoice {

class Rng;

// ---------------------------------------------------------------------------
// Generic script families
// ---------------------------------------------------------------------------

/// Insert m balls, then delete each independently with the given probability.
/// The deleted subset is drawn from the script stream.
AdversaryScript random_deletion_warmup(std::int64_t m, double deletion_prob, Rng& script_rng);

enum class DeletionOrder { Newest, Oldest, Random };

/// Fill to m, delete down to low_fraction * m, refill, ... until `ops`
/// operations have been emitted.
AdversaryScript sawtooth(std::int64_t m, std::uint64_t ops, double low_fraction, DeletionOrder order,
                         Rng& script_rng);

/// Random walk on the ball count: insert with probability insert_prob (forced
/// when empty, suppressed at capacity), otherwise delete a uniformly random
/// recency rank.
AdversaryScript mixed_random(std::int64_t m, std::uint64_t ops, double insert_prob, Rng& script_rng);

/// Fill to m, delete everything, repeat. Overload tails are read per epoch.
AdversaryScript tightness_epochs(std::int64_t m, std::uint64_t epochs);

// ---------------------------------------------------------------------------
// Greedy lower-bound constructions (4 bins)
// ---------------------------------------------------------------------------

/// Inserts k x's (checkpoint X1), fills to m with y's (X2), deletes the x's
/// and inserts k z's (X3). Label sets "x", "y", "z".
void append_gap_to_overload(ScriptBuilder& builder, std::int64_t k);

/// Standalone finisher for a start state holding `census` balls with labels
/// [0, census). Requires census + k <= m.
AdversaryScript gap_to_overload_script(std::int64_t k, std::int64_t m, std::int64_t census);

/// Insert `size` fresh balls, then delete all but the last. Net +1 ball;
/// returns the survivor.
BallLabel append_uniform_placement(ScriptBuilder& builder, std::int64_t size);

/// Twice: insert `size` fresh balls, then delete every other present ball.
void append_load_reduction(ScriptBuilder& builder, std::int64_t size);

enum class GreedyAttackMode { WarmupQuarter, FullHalf, GeneralN };

struct GreedyAttackParams {
  std::int64_t m = 4096;
  std::size_t n = 4;
  double eps1 = 0.125;
  double eps2 = 0.0;  // 0: derived as (2 eps3)^(1/3)
  double eps3 = 0.0;  // 0: largest value with eps2 <= eps1 / 4
  GreedyAttackMode mode = GreedyAttackMode::WarmupQuarter;
  double deletion_prob = 0.5;
  /// FullHalf: number of phases (0: ceil(eps3 * m)) and uniform placements
  /// per phase (0: (1 - 2 eps1) m, the most that fits under the capacity).
  std::int64_t phases = 0;
  std::int64_t placements_per_phase = 0;
  /// Finisher size k (0: mode default: sqrt(m) for WarmupQuarter and
  /// GeneralN, 2 * sqrt(placements) for FullHalf).
  std::int64_t finisher_k = 0;

  /// Fills derived constants and checks the orderings.
  void resolve();
  [[nodiscard]] std::int64_t gadget_size() const;
  [[nodiscard]] std::int64_t resolved_phases() const;
  [[nodiscard]] std::int64_t resolved_placements() const;
  [[nodiscard]] std::int64_t resolved_finisher_k() const;
};

std::string mode_name(GreedyAttackMode mode);
GreedyAttackMode parse_mode(const std::string& name);

AdversaryScript greedy_attack_full(GreedyAttackParams params, Rng& script_rng);

/// Closed-form operation count of the FullHalf phase section (excluding the
/// finisher).
std::uint64_t full_half_phase_ops(const GreedyAttackParams& params);

struct GapTrial {
  double x2_overload = 0.0;  // max_load - m/4 at X2
  double x3_overload = 0.0;  // and at X3
  std::int64_t start_gap = 0;
  [[nodiscard]] double best() const { return x2_overload > x3_overload ? x2_overload : x3_overload; }
};

/// Greedy from an engineered start holding about fill * m balls: bins 1..3
/// hold L each and bin 0 holds L - k - 1, then the gap-to-overload finisher.
GapTrial gap_to_overload_trial(std::int64_t k, std::int64_t m, std::uint64_t seed, double fill = 0.5);

// ---------------------------------------------------------------------------
// Equalization probe
// ---------------------------------------------------------------------------

struct EqualizationReport {
  std::vector<std::int64_t> start_loads;
  std::vector<std::int64_t> final_loads;
  std::int64_t final_spread = 0;
  bool equal_instant = false;
  std::int64_t first_equal_step = -1;  // insertions done when loads first matched
};

/// Greedy on 4 bins from loads (0, k, k, k); c * k insertions.
EqualizationReport equalization_probe(std::int64_t k, std::int64_t c, std::uint64_t seed);

}  // namespace twochoice
