#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

namespace twochoice {

using MarbleId = std::uint64_t;

struct Marble {
  MarbleId id = 0;
  double value = 0.0;
  std::uint32_t bag = 0;
};

struct SplitValues {
  double high = 0.0;  // v_{x'}, goes up a bag
  double low = 0.0;   // v_{y'}, goes down a bag
};

/// Bob assigns values. Every split must satisfy high - low >= 2/R and
/// |(high + low) - (v_x + v_y)| <= eta.
class BobPolicy {
 public:
  BobPolicy(double R, double eta) : R_(R), eta_(eta) {}
  virtual ~BobPolicy() = default;
  virtual double insert_value(std::uint64_t insert_index) = 0;
  virtual SplitValues split(double vx, double vy, std::uint32_t bag) = 0;

  [[nodiscard]] double R() const noexcept { return R_; }
  [[nodiscard]] double eta() const noexcept { return eta_; }

 private:
  double R_;
  double eta_;
};

/// high / low = average +- 1/R, no sum error.
class MinimalSlackBob final : public BobPolicy {
 public:
  explicit MinimalSlackBob(double R, double initial_value = 0.0) : BobPolicy(R, 0.0), initial_(initial_value) {}
  double insert_value(std::uint64_t) override { return initial_; }
  SplitValues split(double vx, double vy, std::uint32_t) override;

 private:
  double initial_;
};

/// Caller-supplied rules. The board still enforces the constraints.
class AdversarialBob final : public BobPolicy {
 public:
  using InsertRule = std::function<double(std::uint64_t)>;
  using SplitRule = std::function<SplitValues(double, double, std::uint32_t)>;

  AdversarialBob(double R, double eta, InsertRule insert, SplitRule split)
      : BobPolicy(R, eta), insert_(std::move(insert)), split_(std::move(split)) {}
  double insert_value(std::uint64_t i) override { return insert_(i); }
  SplitValues split(double vx, double vy, std::uint32_t bag) override { return split_(vx, vy, bag); }

 private:
  InsertRule insert_;
  SplitRule split_;
};

/// Default sum slack R^-3.
inline double default_eta(double R) { return 1.0 / (R * R * R); }

/// Bags of valued marbles. Inserts land in bag 1; a split of two marbles in
/// bag i >= 1 puts the high one in bag i + 1 and the low one in bag i - 1.
class MarbleBoard {
 public:
  /// With enforce_rule false, split values are recorded but not checked
  /// (used when values are only observed later, as in the reinsertion attack).
  MarbleBoard(double R, double eta, bool enforce_rule = true);

  MarbleId insert(double value);
  std::pair<MarbleId, MarbleId> split(MarbleId x, MarbleId y, SplitValues values);
  std::pair<MarbleId, MarbleId> split(MarbleId x, MarbleId y, BobPolicy& bob);

  [[nodiscard]] const Marble& marble(MarbleId id) const;
  [[nodiscard]] std::vector<MarbleId> bag(std::uint32_t index) const;
  /// Marbles per bag for bags 0 .. highest non-empty bag.
  [[nodiscard]] std::vector<std::size_t> census() const;
  [[nodiscard]] std::size_t size() const noexcept { return marbles_.size(); }
  [[nodiscard]] double potential() const;
  [[nodiscard]] double max_value() const;
  [[nodiscard]] std::uint32_t highest_bag() const;
  [[nodiscard]] double R() const noexcept { return R_; }
  [[nodiscard]] double eta() const noexcept { return eta_; }

 private:
  double R_;
  double eta_;
  bool enforce_;
  MarbleId next_id_ = 0;
  std::map<MarbleId, Marble> marbles_;
  std::map<std::uint32_t, std::vector<MarbleId>> bags_;
};

struct MarbleOp {
  enum class Kind : std::uint8_t { Insert, Split };
  Kind kind = Kind::Insert;
  std::uint32_t bag = 1;  // bag to split; inserts always use bag 1
  std::uint32_t phase = 0;
  std::uint32_t subphase = 0;

  friend bool operator==(const MarbleOp&, const MarbleOp&) = default;
};

/// Alice's value-blind schedule: one insert, then cR phases; phase i has
/// subphases 1..i (insert, then split bags 1..i-j+1) and subphase i+1 (insert).
std::vector<MarbleOp> alice_strategy(std::int64_t R, std::int64_t c);

std::uint64_t alice_insert_count(std::int64_t R, std::int64_t c);  // 1 + cR(cR+1)/2 + cR
std::uint64_t alice_split_count(std::int64_t R, std::int64_t c);   // cR(cR+1)(cR+2)/6

struct MarbleReplayRow {
  std::uint64_t step = 0;
  MarbleOp op;
  std::uint64_t census_hash = 0;
  double potential = 0.0;
  double max_value = 0.0;
};

struct MarbleReplayReport {
  std::uint64_t inserts = 0;
  std::uint64_t splits = 0;
  double max_value = -std::numeric_limits<double>::infinity();
  std::optional<std::uint64_t> first_exceed_step;  // first step leaving a marble above 1
  double final_potential = 0.0;
  double ledger_potential = 0.0;  // sum of per-op deltas
  double min_split_delta = std::numeric_limits<double>::infinity();
  double insert_delta_min = std::numeric_limits<double>::infinity();
  std::uint32_t max_bag = 0;
  std::vector<std::size_t> final_census;
  std::vector<MarbleReplayRow> rows;
};

/// Builds the census Alice's schedule promises at phase / subphase starts and
/// throws InvariantViolation when the board disagrees.
void check_phase_start(const MarbleBoard& board, std::uint32_t phase);
void check_subphase_start(const MarbleBoard& board, std::uint32_t phase, std::uint32_t subphase);

/// Replays a schedule against a Bob, asserting the structural census at every
/// phase and subphase start and the end-state bound of one marble per bag > 0.
MarbleReplayReport replay_alice(std::int64_t R, std::int64_t c, BobPolicy& bob, bool record_rows = false);

std::uint64_t census_hash(const std::vector<std::size_t>& census);

/// CSV: step,op,bag,census_hash,potential,max_value
void write_marble_csv(std::ostream& out, const MarbleReplayReport& report);

}  // namespace twochoice
