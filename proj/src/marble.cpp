#include "twochoice/marble.hpp"

#include "twochoice/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace twochoice {

SplitValues MinimalSlackBob::split(double vx, double vy, std::uint32_t) {
  const double avg = (vx + vy) / 2.0;
  return {avg + 1.0 / R(), avg - 1.0 / R()};
}

MarbleBoard::MarbleBoard(double R, double eta, bool enforce_rule) : R_(R), eta_(eta), enforce_(enforce_rule) {
  require(R > 0.0, "R must be positive");
  require(eta >= 0.0, "eta must be non-negative");
}

MarbleId MarbleBoard::insert(double value) {
  if (!(value >= -1.0 && value <= 1.0))
    throw OperationError("inserted marble value " + std::to_string(value) + " outside [-1, 1]");
  const MarbleId id = next_id_++;
  marbles_.emplace(id, Marble{id, value, 1});
  bags_[1].push_back(id);
  return id;
}

std::pair<MarbleId, MarbleId> MarbleBoard::split(MarbleId x, MarbleId y, SplitValues values) {
  if (x == y) throw OperationError("split needs two distinct marbles");
  const Marble mx = marble(x);
  const Marble my = marble(y);
  if (mx.bag != my.bag) throw OperationError("split marbles are in different bags");
  if (mx.bag == 0) throw OperationError("cannot split in bag 0");
  if (enforce_) {
    // A relative slack absorbs the rounding of the caller's arithmetic.
    const double tol = 1e-12;
    if (values.high - values.low < 2.0 / R_ - tol) throw OperationError("split values closer than 2/R");
    if (std::abs((values.high + values.low) - (mx.value + my.value)) > eta_ + tol)
      throw OperationError("split changes the value sum by more than eta");
  }
  auto& b = bags_[mx.bag];
  std::erase(b, x);
  std::erase(b, y);
  if (b.empty()) bags_.erase(mx.bag);
  marbles_.erase(x);
  marbles_.erase(y);
  const MarbleId hi = next_id_++;
  const MarbleId lo = next_id_++;
  marbles_.emplace(hi, Marble{hi, values.high, mx.bag + 1});
  marbles_.emplace(lo, Marble{lo, values.low, mx.bag - 1});
  bags_[mx.bag + 1].push_back(hi);
  bags_[mx.bag - 1].push_back(lo);
  return {hi, lo};
}

std::pair<MarbleId, MarbleId> MarbleBoard::split(MarbleId x, MarbleId y, BobPolicy& bob) {
  const Marble& mx = marble(x);
  const Marble& my = marble(y);
  return split(x, y, bob.split(mx.value, my.value, mx.bag));
}

const Marble& MarbleBoard::marble(MarbleId id) const {
  auto it = marbles_.find(id);
  if (it == marbles_.end()) throw OperationError("unknown marble " + std::to_string(id));
  return it->second;
}

std::vector<MarbleId> MarbleBoard::bag(std::uint32_t index) const {
  auto it = bags_.find(index);
  return it == bags_.end() ? std::vector<MarbleId>{} : it->second;
}

std::uint32_t MarbleBoard::highest_bag() const { return bags_.empty() ? 0 : bags_.rbegin()->first; }

std::vector<std::size_t> MarbleBoard::census() const {
  std::vector<std::size_t> out(bags_.empty() ? 0 : highest_bag() + 1, 0);
  for (const auto& [i, ids] : bags_) out[i] = ids.size();
  return out;
}

double MarbleBoard::potential() const {
  double phi = 0.0;
  for (const auto& [id, m] : marbles_) phi += static_cast<double>(m.bag) * m.value;
  return phi;
}

double MarbleBoard::max_value() const {
  double v = -std::numeric_limits<double>::infinity();
  for (const auto& [id, m] : marbles_) v = std::max(v, m.value);
  return v;
}

std::vector<MarbleOp> alice_strategy(std::int64_t R, std::int64_t c) {
  require(R >= 2, "R must be at least 2");
  require(c >= 1, "c must be at least 1");
  const auto phases = static_cast<std::uint32_t>(c * R);
  std::vector<MarbleOp> ops;
  ops.reserve(alice_insert_count(R, c) + alice_split_count(R, c));
  ops.push_back({MarbleOp::Kind::Insert, 1, 0, 0});
  for (std::uint32_t i = 1; i <= phases; ++i) {
    for (std::uint32_t j = 1; j <= i; ++j) {
      ops.push_back({MarbleOp::Kind::Insert, 1, i, j});
      for (std::uint32_t t = 1; t <= i - j + 1; ++t) ops.push_back({MarbleOp::Kind::Split, t, i, j});
    }
    ops.push_back({MarbleOp::Kind::Insert, 1, i, i + 1});
  }
  return ops;
}

std::uint64_t alice_insert_count(std::int64_t R, std::int64_t c) {
  const auto p = static_cast<std::uint64_t>(c * R);
  return 1 + p * (p + 1) / 2 + p;
}

std::uint64_t alice_split_count(std::int64_t R, std::int64_t c) {
  const auto p = static_cast<std::uint64_t>(c * R);
  return p * (p + 1) * (p + 2) / 6;
}

namespace {

std::size_t count_in(const std::vector<std::size_t>& census, std::uint32_t bag) {
  return bag < census.size() ? census[bag] : 0;
}

}  // namespace

void check_phase_start(const MarbleBoard& board, std::uint32_t phase) {
  const auto census = board.census();
  for (std::uint32_t b = 1; b < std::max<std::size_t>(census.size(), phase + 1); ++b) {
    const std::size_t want = b <= phase ? 1 : 0;
    if (count_in(census, b) != want)
      throw InvariantViolation("phase " + std::to_string(phase) + " start: bag " + std::to_string(b) + " holds " +
                               std::to_string(count_in(census, b)) + " marbles");
  }
}

void check_subphase_start(const MarbleBoard& board, std::uint32_t phase, std::uint32_t subphase) {
  const auto census = board.census();
  const std::uint32_t empty = phase - subphase + 2;
  for (std::uint32_t b = 1; b < std::max<std::size_t>(census.size(), phase + 2); ++b) {
    const std::size_t want = (b <= phase + 1 && b != empty) ? 1 : 0;
    if (count_in(census, b) != want)
      throw InvariantViolation("phase " + std::to_string(phase) + " subphase " + std::to_string(subphase) +
                               " start: bag " + std::to_string(b) + " holds " +
                               std::to_string(count_in(census, b)) + " marbles");
  }
}

std::uint64_t census_hash(const std::vector<std::size_t>& census) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (std::size_t v : census) {
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (static_cast<std::uint64_t>(v) >> (8 * byte)) & 0xff;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

MarbleReplayReport replay_alice(std::int64_t R, std::int64_t c, BobPolicy& bob, bool record_rows) {
  const auto ops = alice_strategy(R, c);
  const auto max_bag = static_cast<std::uint32_t>(c * R + 1);
  MarbleBoard board(static_cast<double>(R), bob.eta());
  MarbleReplayReport rep;
  std::uint32_t current_phase = 0;
  std::uint32_t current_sub = 0;
  for (std::uint64_t step = 0; step < ops.size(); ++step) {
    const MarbleOp& op = ops[step];
    if (op.phase != current_phase || op.subphase != current_sub) {
      if (op.phase != current_phase) check_phase_start(board, op.phase);
      check_subphase_start(board, op.phase, op.subphase);
      current_phase = op.phase;
      current_sub = op.subphase;
    }
    if (op.kind == MarbleOp::Kind::Insert) {
      const double v = bob.insert_value(rep.inserts);
      board.insert(v);
      ++rep.inserts;
      rep.ledger_potential += v;
      rep.insert_delta_min = std::min(rep.insert_delta_min, v);
    } else {
      const auto ids = board.bag(op.bag);
      if (ids.size() != 2)
        throw InvariantViolation("split of bag " + std::to_string(op.bag) + " holding " +
                                 std::to_string(ids.size()) + " marbles");
      const double vx = board.marble(ids[0]).value;
      const double vy = board.marble(ids[1]).value;
      const SplitValues sv = bob.split(vx, vy, op.bag);
      board.split(ids[0], ids[1], sv);
      ++rep.splits;
      const double i = op.bag;
      const double delta = (i + 1.0) * sv.high + (i - 1.0) * sv.low - i * (vx + vy);
      rep.ledger_potential += delta;
      rep.min_split_delta = std::min(rep.min_split_delta, delta);
    }
    rep.max_bag = std::max(rep.max_bag, board.highest_bag());
    if (rep.max_bag > max_bag) throw InvariantViolation("marble placed beyond bag cR + 1");
    const double mv = board.max_value();
    rep.max_value = std::max(rep.max_value, mv);
    if (!rep.first_exceed_step && mv > 1.0) rep.first_exceed_step = step;
    if (record_rows) rep.rows.push_back({step, op, census_hash(board.census()), board.potential(), mv});
  }
  rep.final_census = board.census();
  for (std::size_t b = 1; b < rep.final_census.size(); ++b)
    if (rep.final_census[b] > 1) throw InvariantViolation("end state has two marbles in bag " + std::to_string(b));
  rep.final_potential = board.potential();
  return rep;
}

void write_marble_csv(std::ostream& out, const MarbleReplayReport& report) {
  out << "step,op,bag,census_hash,potential,max_value\n";
  out.precision(17);
  for (const auto& r : report.rows)
    out << r.step << ',' << (r.op.kind == MarbleOp::Kind::Insert ? "insert" : "split") << ',' << r.op.bag << ','
        << r.census_hash << ',' << r.potential << ',' << r.max_value << '\n';
}

}  // namespace twochoice
