#pragma once

#include "twochoice/marble.hpp"
#include "twochoice/ops.hpp"
#include "twochoice/policy.hpp"
#include "twochoice/script.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace twochoice {

class Rng;

/// Ordered pairs are 0-based bins: the pair the construction calls (1, 2) is
/// {0, 1} here and (3, 4) is {2, 3}. v(S) counts balls of S in bins 0 and 1.
struct ReinsertionAttackParams {
  std::int64_t k = 64;
  double c_t = 3.0;          // t = c_t * sqrt(k)
  double e_tolerance = 2.0;  // event windows are +- e_tolerance * sqrt(k)
  std::int64_t m = 0;        // 0: 2^17
  std::uint64_t max_rejection_tries = 1'000'000;
  std::int64_t alice_c = 1;
  std::int64_t R = 0;                  // 0: round(sqrt(k))
  std::int64_t blocks_per_marble = 0;  // 0: ceil(sqrt(k) ln(k) / 2)

  [[nodiscard]] double t() const;
  [[nodiscard]] std::int64_t resolved_m() const { return m > 0 ? m : (std::int64_t{1} << 17); }
  [[nodiscard]] std::int64_t resolved_R() const;
  [[nodiscard]] std::int64_t resolved_blocks() const;
  [[nodiscard]] std::int64_t marble_size() const { return resolved_blocks() * k; }
};

/// Integer windows for the counts of A hashed to (0,1) and to (2,3).
struct EventWindow {
  std::int64_t a12_lo = 0;
  std::int64_t a12_hi = 0;
  std::int64_t a34_lo = 0;
  std::int64_t a34_hi = 0;

  [[nodiscard]] bool contains(std::int64_t a12, std::int64_t a34) const {
    return a12 >= a12_lo && a12 <= a12_hi && a34 >= a34_lo && a34 <= a34_hi;
  }
};

/// Throws ConfigError when a window is empty after clipping to [0, k].
EventWindow event_window(const ReinsertionAttackParams& params);

/// Exact probability that k uniform DistinctOrdered hashes land in the window.
double event_probability(const ReinsertionAttackParams& params);

struct HashAssignment {
  std::vector<HashPair> a;
  std::vector<HashPair> b;
  std::int64_t a12 = 0;
  std::int64_t a34 = 0;
  std::uint64_t tries = 1;
};

std::pair<std::int64_t, std::int64_t> count_event_pairs(const std::vector<HashPair>& hashes);

/// Draws A's hashes exactly from the uniform law conditioned on the event
/// window, B's unconditioned. Checks the window on the result.
HashAssignment sample_AB_conditioned(const ReinsertionAttackParams& params, Rng& rng);

/// The same law by rejection; throws OperationError after max_rejection_tries.
HashAssignment sample_AB_rejection(const ReinsertionAttackParams& params, Rng& rng);

/// One four-step block: delete x_odd and x_even, insert A and B in a random
/// order (checkpoint `tag`+":step2"), swap A for k fresh Y, swap B for k fresh
/// Z. Returns (Y, Z).
std::pair<std::vector<BallLabel>, std::vector<BallLabel>> append_splitting_block(
    ScriptBuilder& builder, const std::vector<BallLabel>& A, const std::vector<BallLabel>& B,
    const std::vector<BallLabel>& x_odd, const std::vector<BallLabel>& x_even, Rng& order_rng,
    const std::string& tag);

struct SplitRecord {
  MarbleId x = 0;
  MarbleId y = 0;
  MarbleId high = 0;
  MarbleId low = 0;
  std::uint32_t phase = 0;
  std::uint32_t bag = 0;
  std::size_t begin = 0;  // script positions [begin, end)
  std::size_t end = 0;
  std::vector<std::size_t> step2_positions;  // state after step 2 of each block
};

struct ReinsertionAttack {
  ReinsertionAttackParams params;
  AdversaryScript script;
  std::vector<BallLabel> A;
  std::vector<BallLabel> B;
  std::map<MarbleId, std::vector<BallLabel>> marble_labels;
  std::vector<MarbleOp> schedule;
  std::vector<SplitRecord> splits;
  std::size_t fill_end = 0;
  struct PhaseEnd {
    std::uint32_t phase = 0;
    std::size_t after = 0;  // script position
    std::vector<MarbleId> live;
  };
  std::vector<PhaseEnd> phase_ends;
};

/// Initial fill to m (holding every marble's balls), then Alice's schedule
/// with each split compiled to blocks_per_marble splitting blocks.
ReinsertionAttack build_reinsertion_attack(const ReinsertionAttackParams& params, Rng& script_rng);

/// m + splits * blocks_per_marble * 8k.
std::uint64_t reinsertion_predicted_length(const ReinsertionAttackParams& params);

struct ReinsertionRunReport {
  HashAssignment hashes;
  std::uint64_t ops = 0;
  std::uint64_t reinsertions = 0;
  std::uint64_t hash_mismatches = 0;
  bool value_bounds_ok = true;  // 0 <= v(S) <= |S| for every tracked set
  double max_overload = 0.0;
  std::vector<double> phase_max_overload;
  std::vector<double> phase_value_spread;  // max - min v_X / |X| over live marbles at phase end
  std::vector<double> block_step2_gap;     // v(A) - v(B) after step 2 of each block
  std::map<MarbleId, double> marble_value;  // v_X / |X| when X stops being live
};

/// Replays the attack against `policy` with A's hashes conditioned on the
/// event. Throws ScriptError if the script is illegal for the system.
ReinsertionRunReport run_reinsertion_attack(const ReinsertionAttack& attack, PlacementPolicy& policy,
                                            std::uint64_t seed);

struct BlockTrial {
  std::int64_t vA = 0;
  std::int64_t vB = 0;
  std::int64_t vY = 0;
  std::int64_t vZ = 0;
  std::int64_t a12 = 0;
  std::int64_t a34 = 0;
  double max_overload = 0.0;
};

/// Fill to m, then one splitting block on the first 2k balls.
BlockTrial single_block_trial(const ReinsertionAttackParams& params, std::int64_t m, PlacementPolicy& policy,
                              std::uint64_t seed);

}  // namespace twochoice
