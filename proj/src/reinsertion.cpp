#include "twochoice/reinsertion.hpp"

#include "twochoice/engine.hpp"
#include "twochoice/errors.hpp"
#include "twochoice/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace twochoice {

namespace {

constexpr std::size_t kBins = 4;
constexpr std::uint64_t kOrderedPairs = kBins * (kBins - 1);
constexpr HashPair kPair12{0, 1};
constexpr HashPair kPair34{2, 3};

// Same flat encoding as the engine's DistinctOrdered draw.
HashPair pair_from_flat(std::uint64_t flat) {
  HashPair p;
  p.first = static_cast<Bin>(flat / (kBins - 1));
  const auto other = static_cast<Bin>(flat % (kBins - 1));
  p.second = other >= p.first ? other + 1 : other;
  return p;
}

std::vector<HashPair> uniform_pairs(std::int64_t count, Rng& rng) {
  std::vector<HashPair> out(static_cast<std::size_t>(count));
  for (auto& p : out) p = pair_from_flat(rng.below(kOrderedPairs));
  return out;
}

std::vector<HashPair> other_pairs() {
  std::vector<HashPair> out;
  for (std::uint64_t f = 0; f < kOrderedPairs; ++f) {
    const HashPair p = pair_from_flat(f);
    if (p != kPair12 && p != kPair34) out.push_back(p);
  }
  return out;
}

void shuffle(std::vector<BallLabel>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

// log of k!/(a! b! (k-a-b)!) p^(a+b) (1-2p)^(k-a-b) with p = 1/12.
double log_cell(std::int64_t k, std::int64_t a, std::int64_t b) {
  const double p = 1.0 / static_cast<double>(kOrderedPairs);
  const auto r = k - a - b;
  return std::lgamma(k + 1.0) - std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(r + 1.0) +
         static_cast<double>(a + b) * std::log(p) + static_cast<double>(r) * std::log(1.0 - 2.0 * p);
}

struct Cell {
  std::int64_t a12;
  std::int64_t a34;
  double log_w;
};

std::vector<Cell> window_cells(const ReinsertionAttackParams& params) {
  const EventWindow w = event_window(params);
  std::vector<Cell> cells;
  for (std::int64_t a = w.a12_lo; a <= w.a12_hi; ++a)
    for (std::int64_t b = w.a34_lo; b <= w.a34_hi && a + b <= params.k; ++b)
      cells.push_back({a, b, log_cell(params.k, a, b)});
  if (cells.empty()) throw ConfigError("event windows admit no hash assignment");
  return cells;
}

std::vector<BallLabel> slice(const std::vector<BallLabel>& v, std::int64_t block, std::int64_t k) {
  const auto first = v.begin() + block * k;
  return {first, first + k};
}

std::vector<MarbleId> live_marbles(const MarbleBoard& board) {
  std::vector<MarbleId> out;
  for (std::uint32_t b = 0; b <= board.highest_bag(); ++b)
    for (MarbleId id : board.bag(b)) out.push_back(id);
  return out;
}

}  // namespace

double ReinsertionAttackParams::t() const { return c_t * std::sqrt(static_cast<double>(k)); }

std::int64_t ReinsertionAttackParams::resolved_R() const {
  return R > 0 ? R : std::max<std::int64_t>(2, std::llround(std::sqrt(static_cast<double>(k))));
}

std::int64_t ReinsertionAttackParams::resolved_blocks() const {
  if (blocks_per_marble > 0) return blocks_per_marble;
  const double kd = static_cast<double>(k);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(std::sqrt(kd) * std::log(kd) / 2.0)));
}

EventWindow event_window(const ReinsertionAttackParams& params) {
  require(params.k >= 2, "k must be at least 2");
  require(params.e_tolerance > 0.0, "event tolerance must be positive");
  const double kd = static_cast<double>(params.k);
  const double mean = kd / static_cast<double>(kOrderedPairs);
  const double half = params.e_tolerance * std::sqrt(kd);
  auto lo = [&](double x) { return std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(x))); };
  auto hi = [&](double x) { return std::min<std::int64_t>(params.k, static_cast<std::int64_t>(std::floor(x))); };
  EventWindow w;
  w.a12_lo = lo(mean + params.t() - half);
  w.a12_hi = hi(mean + params.t() + half);
  w.a34_lo = lo(mean - params.t() - half);
  w.a34_hi = hi(mean - params.t() + half);
  if (w.a12_lo > w.a12_hi || w.a34_lo > w.a34_hi)
    throw ConfigError("event window empty for k = " + std::to_string(params.k) +
                      ", c_t = " + std::to_string(params.c_t) + ", tolerance = " + std::to_string(params.e_tolerance));
  return w;
}

double event_probability(const ReinsertionAttackParams& params) {
  double total = 0.0;
  for (const Cell& c : window_cells(params)) total += std::exp(c.log_w);
  return total;
}

std::pair<std::int64_t, std::int64_t> count_event_pairs(const std::vector<HashPair>& hashes) {
  std::int64_t a12 = 0;
  std::int64_t a34 = 0;
  for (const HashPair& h : hashes) {
    if (h == kPair12) ++a12;
    if (h == kPair34) ++a34;
  }
  return {a12, a34};
}

HashAssignment sample_AB_conditioned(const ReinsertionAttackParams& params, Rng& rng) {
  const auto cells = window_cells(params);
  const double top = std::max_element(cells.begin(), cells.end(), [](const Cell& x, const Cell& y) {
                       return x.log_w < y.log_w;
                     })->log_w;
  std::vector<double> w(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) w[i] = std::exp(cells[i].log_w - top);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  const Cell& cell = cells[pick(rng.engine())];

  // Given the counts, which positions get (0,1) and (2,3) is a uniform
  // arrangement and every other position is uniform over the other ten pairs.
  const auto k = static_cast<std::size_t>(params.k);
  std::vector<BallLabel> order(k);
  std::iota(order.begin(), order.end(), BallLabel{0});
  shuffle(order, rng);
  const auto rest = other_pairs();
  HashAssignment out;
  out.a.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto idx = static_cast<std::int64_t>(i);
    HashPair& h = out.a[order[i]];
    if (idx < cell.a12)
      h = kPair12;
    else if (idx < cell.a12 + cell.a34)
      h = kPair34;
    else
      h = rest[rng.below(rest.size())];
  }
  out.b = uniform_pairs(params.k, rng);
  std::tie(out.a12, out.a34) = count_event_pairs(out.a);
  ensure(out.a12 == cell.a12 && out.a34 == cell.a34, "conditioned sampler miscounted");
  ensure(event_window(params).contains(out.a12, out.a34), "conditioned sample outside the event");
  return out;
}

HashAssignment sample_AB_rejection(const ReinsertionAttackParams& params, Rng& rng) {
  const EventWindow w = event_window(params);
  for (std::uint64_t tries = 1; tries <= params.max_rejection_tries; ++tries) {
    auto a = uniform_pairs(params.k, rng);
    const auto [a12, a34] = count_event_pairs(a);
    if (!w.contains(a12, a34)) continue;
    HashAssignment out;
    out.a = std::move(a);
    out.b = uniform_pairs(params.k, rng);
    out.a12 = a12;
    out.a34 = a34;
    out.tries = tries;
    return out;
  }
  throw OperationError("rejection sampler gave up after " + std::to_string(params.max_rejection_tries) + " tries");
}

std::pair<std::vector<BallLabel>, std::vector<BallLabel>> append_splitting_block(
    ScriptBuilder& b, const std::vector<BallLabel>& A, const std::vector<BallLabel>& B,
    const std::vector<BallLabel>& x_odd, const std::vector<BallLabel>& x_even, Rng& order_rng,
    const std::string& tag) {
  require(A.size() == B.size() && x_odd.size() == A.size() && x_even.size() == A.size(),
          "splitting block sets must all have k balls");
  b.erase_all(x_odd);
  b.erase_all(x_even);
  std::vector<BallLabel> ab(A);
  ab.insert(ab.end(), B.begin(), B.end());
  shuffle(ab, order_rng);
  b.insert_all(ab);
  if (!tag.empty()) b.checkpoint(tag + ":step2");
  b.erase_all(A);
  auto Y = b.insert_fresh(A.size());
  b.erase_all(B);
  auto Z = b.insert_fresh(B.size());
  return {std::move(Y), std::move(Z)};
}

std::uint64_t reinsertion_predicted_length(const ReinsertionAttackParams& p) {
  const auto splits = alice_split_count(p.resolved_R(), p.alice_c);
  return static_cast<std::uint64_t>(p.resolved_m()) +
         splits * static_cast<std::uint64_t>(p.resolved_blocks()) * 8 * static_cast<std::uint64_t>(p.k);
}

ReinsertionAttack build_reinsertion_attack(const ReinsertionAttackParams& params, Rng& script_rng) {
  ReinsertionAttack at;
  at.params = params;
  const std::int64_t k = params.k;
  const std::int64_t m = params.resolved_m();
  const std::int64_t R = params.resolved_R();
  const std::int64_t blocks = params.resolved_blocks();
  const auto marbles = static_cast<std::int64_t>(alice_insert_count(R, params.alice_c));
  require(k >= 2, "k must be at least 2");
  if (marbles * blocks * k > m)
    throw ConfigError("m = " + std::to_string(m) + " cannot hold " + std::to_string(marbles) + " marbles of " +
                      std::to_string(blocks * k) + " balls");
  event_window(params);  // reject infeasible windows before compiling

  ScriptBuilder b(m, "reinsertion_attack",
                  {{"k", k}, {"m", m}, {"R", R}, {"alice_c", params.alice_c}, {"blocks_per_marble", blocks},
                   {"c_t", params.c_t}, {"e_tolerance", params.e_tolerance}},
                  0, true);
  b.reserve(reinsertion_predicted_length(params));
  for (std::int64_t i = 0; i < k; ++i) at.A.push_back(b.fresh());
  for (std::int64_t i = 0; i < k; ++i) at.B.push_back(b.fresh());
  std::vector<std::vector<BallLabel>> pending;
  pending.reserve(static_cast<std::size_t>(marbles));
  for (std::int64_t i = 0; i < marbles; ++i) pending.push_back(b.insert_fresh(static_cast<std::size_t>(blocks * k)));
  b.insert_fresh(static_cast<std::size_t>(m - b.present()));
  at.fill_end = b.size();
  b.checkpoint("fill");

  MarbleBoard board(static_cast<double>(R), default_eta(static_cast<double>(R)), false);
  at.schedule = alice_strategy(R, params.alice_c);
  std::size_t next_marble = 0;
  std::uint32_t phase = 0;
  std::uint32_t sub = 0;
  for (const MarbleOp& op : at.schedule) {
    if (op.phase != phase || op.subphase != sub) {
      if (op.phase != phase) {
        at.phase_ends.push_back({phase, b.size(), live_marbles(board)});
        check_phase_start(board, op.phase);
      }
      check_subphase_start(board, op.phase, op.subphase);
      phase = op.phase;
      sub = op.subphase;
    }
    if (op.kind == MarbleOp::Kind::Insert) {
      const MarbleId id = board.insert(0.0);
      at.marble_labels[id] = std::move(pending.at(next_marble++));
      continue;
    }
    const auto ids = board.bag(op.bag);
    if (ids.size() != 2)
      throw InvariantViolation("split of bag " + std::to_string(op.bag) + " holding " + std::to_string(ids.size()) +
                               " marbles");
    SplitRecord rec;
    rec.x = ids[0];
    rec.y = ids[1];
    rec.phase = op.phase;
    rec.bag = op.bag;
    rec.begin = b.size();
    const auto& xs = at.marble_labels.at(rec.x);
    const auto& ys = at.marble_labels.at(rec.y);
    std::vector<BallLabel> high;
    std::vector<BallLabel> low;
    for (std::int64_t i = 0; i < blocks; ++i) {
      rec.step2_positions.push_back(b.size() + static_cast<std::size_t>(4 * k));
      auto [Y, Z] = append_splitting_block(b, at.A, at.B, slice(xs, i, k), slice(ys, i, k), script_rng, "");
      high.insert(high.end(), Y.begin(), Y.end());
      low.insert(low.end(), Z.begin(), Z.end());
    }
    rec.end = b.size();
    std::tie(rec.high, rec.low) = board.split(rec.x, rec.y, SplitValues{0.0, 0.0});
    at.marble_labels[rec.high] = std::move(high);
    at.marble_labels[rec.low] = std::move(low);
    at.splits.push_back(std::move(rec));
  }
  at.phase_ends.push_back({phase, b.size(), live_marbles(board)});
  const auto census = board.census();
  if (board.highest_bag() > static_cast<std::uint32_t>(params.alice_c * R + 1))
    throw InvariantViolation("compiled schedule placed a marble beyond bag cR + 1");
  for (std::size_t i = 1; i < census.size(); ++i)
    if (census[i] > 1) throw InvariantViolation("compiled schedule ends with two marbles in bag " + std::to_string(i));
  b.label_set("A", at.A);
  b.label_set("B", at.B);
  at.script = b.finish();
  ensure(at.script.size() == reinsertion_predicted_length(params), "compiled length differs from the closed form");
  return at;
}

namespace {

struct Event {
  enum class Kind { SplitBegin, Step2, PhaseEnd } kind;
  std::size_t after;  // state after this many ops
  std::size_t index;  // split or phase_end index
};

}  // namespace

ReinsertionRunReport run_reinsertion_attack(const ReinsertionAttack& at, PlacementPolicy& policy,
                                            std::uint64_t seed) {
  const auto& p = at.params;
  const std::int64_t k = p.k;
  System sys(SystemConfig{kBins, p.resolved_m(), HashModel::DistinctOrdered, InsertionModel::ReinsertionDeletion, {}});
  ReinsertionRunReport rep;
  Rng hash_rng = Rng::derive(seed, StreamRole::Hash, 1);
  rep.hashes = sample_AB_conditioned(p, hash_rng);
  for (std::int64_t i = 0; i < k; ++i) {
    sys.preassign_hash(at.A[static_cast<std::size_t>(i)], rep.hashes.a[static_cast<std::size_t>(i)]);
    sys.preassign_hash(at.B[static_cast<std::size_t>(i)], rep.hashes.b[static_cast<std::size_t>(i)]);
  }
  std::unordered_map<BallLabel, HashPair> assigned;
  std::unordered_map<BallLabel, int> ab_side;  // +1 for A, -1 for B
  for (std::int64_t i = 0; i < k; ++i) {
    assigned[at.A[static_cast<std::size_t>(i)]] = rep.hashes.a[static_cast<std::size_t>(i)];
    assigned[at.B[static_cast<std::size_t>(i)]] = rep.hashes.b[static_cast<std::size_t>(i)];
    ab_side[at.A[static_cast<std::size_t>(i)]] = 1;
    ab_side[at.B[static_cast<std::size_t>(i)]] = -1;
  }
  std::unordered_map<BallLabel, MarbleId> owner;
  std::unordered_map<MarbleId, std::int64_t> v;
  for (const auto& [id, labels] : at.marble_labels) {
    v[id] = 0;
    for (BallLabel l : labels) owner[l] = id;
  }

  std::vector<Event> events;
  for (std::size_t s = 0; s < at.splits.size(); ++s) {
    events.push_back({Event::Kind::SplitBegin, at.splits[s].begin, s});
    for (std::size_t pos : at.splits[s].step2_positions) events.push_back({Event::Kind::Step2, pos, s});
  }
  for (std::size_t i = 0; i < at.phase_ends.size(); ++i)
    events.push_back({Event::Kind::PhaseEnd, at.phase_ends[i].after, i});
  std::stable_sort(events.begin(), events.end(), [](const Event& x, const Event& y) { return x.after < y.after; });

  std::uint32_t max_phase = 0;
  for (const auto& pe : at.phase_ends) max_phase = std::max(max_phase, pe.phase);
  rep.phase_max_overload.assign(max_phase + 1, 0.0);
  rep.phase_value_spread.assign(max_phase + 1, 0.0);

  std::int64_t vA = 0;
  std::int64_t vB = 0;
  std::unordered_map<BallLabel, bool> ab_seen;
  std::size_t next_event = 0;
  std::size_t split_cursor = 0;
  auto value_of = [&](MarbleId id) {
    return static_cast<double>(v.at(id)) / static_cast<double>(at.marble_labels.at(id).size());
  };
  auto observer = [&](const System& s, const StepRecord& rec, std::size_t pos) {
    const BallLabel label = rec.op.value;
    const int delta = rec.op.is_insert() ? 1 : -1;
    const bool left = rec.bin < 2;
    if (auto it = owner.find(label); it != owner.end()) {
      if (left) v[it->second] += delta;
      const auto val = v[it->second];
      if (val < 0 || val > static_cast<std::int64_t>(at.marble_labels.at(it->second).size()))
        rep.value_bounds_ok = false;
    }
    if (auto it = ab_side.find(label); it != ab_side.end()) {
      if (left) (it->second > 0 ? vA : vB) += delta;
      if (vA < 0 || vA > k || vB < 0 || vB > k) rep.value_bounds_ok = false;
      if (rec.op.is_insert()) {
        const HashPair& want = assigned.at(label);
        const auto memo = s.memoized_hash(label);
        if (!memo || *memo != want || (rec.bin != want.first && rec.bin != want.second)) ++rep.hash_mismatches;
        if (ab_seen[label]) ++rep.reinsertions;
        ab_seen[label] = true;
      }
    }
    while (split_cursor + 1 < at.splits.size() && at.splits[split_cursor + 1].begin <= pos) ++split_cursor;
    const std::uint32_t phase =
        at.splits.empty() || pos < at.splits.front().begin ? 0 : at.splits[split_cursor].phase;
    rep.phase_max_overload[phase] = std::max(rep.phase_max_overload[phase], rec.overload);
    rep.max_overload = std::max(rep.max_overload, rec.overload);
    while (next_event < events.size() && events[next_event].after == pos + 1) {
      const Event& e = events[next_event++];
      switch (e.kind) {
        case Event::Kind::SplitBegin:
          rep.marble_value[at.splits[e.index].x] = value_of(at.splits[e.index].x);
          rep.marble_value[at.splits[e.index].y] = value_of(at.splits[e.index].y);
          break;
        case Event::Kind::Step2:
          rep.block_step2_gap.push_back(static_cast<double>(vA - vB));
          break;
        case Event::Kind::PhaseEnd: {
          const auto& pe = at.phase_ends[e.index];
          double lo = 1.0;
          double hi = 0.0;
          for (MarbleId id : pe.live) {
            lo = std::min(lo, value_of(id));
            hi = std::max(hi, value_of(id));
          }
          rep.phase_value_spread[pe.phase] = pe.live.empty() ? 0.0 : hi - lo;
          break;
        }
      }
    }
  };
  RunStreams streams = RunStreams::derive(seed, 0);
  const Trace trace = run(sys, at.script, policy, streams, TraceMode::Final, observer);
  rep.ops = sys.op_count();
  rep.max_overload = std::max(rep.max_overload, trace.summary.max_overload);
  for (MarbleId id : at.phase_ends.back().live) rep.marble_value[id] = value_of(id);
  return rep;
}

BlockTrial single_block_trial(const ReinsertionAttackParams& params, std::int64_t m, PlacementPolicy& policy,
                              std::uint64_t seed) {
  const std::int64_t k = params.k;
  require(m >= 2 * k, "m must hold the two source sets");
  ScriptBuilder b(m, "reinsertion_block", {{"k", k}, {"m", m}}, seed, true);
  std::vector<BallLabel> A;
  std::vector<BallLabel> B;
  for (std::int64_t i = 0; i < k; ++i) A.push_back(b.fresh());
  for (std::int64_t i = 0; i < k; ++i) B.push_back(b.fresh());
  const auto fill = b.insert_fresh(static_cast<std::size_t>(m));
  const std::vector<BallLabel> x_odd(fill.begin(), fill.begin() + k);
  const std::vector<BallLabel> x_even(fill.begin() + k, fill.begin() + 2 * k);
  Rng order_rng = Rng::derive(seed, StreamRole::Script);
  const std::size_t block_begin = b.size();
  auto [Y, Z] = append_splitting_block(b, A, B, x_odd, x_even, order_rng, "block");
  const AdversaryScript script = b.finish();
  const std::size_t step2 = block_begin + static_cast<std::size_t>(4 * k);
  ensure(script.checkpoints.at("block:step2") == step2, "block checkpoint drifted");

  System sys(SystemConfig{kBins, m, HashModel::DistinctOrdered, InsertionModel::ReinsertionDeletion, {}});
  Rng hash_rng = Rng::derive(seed, StreamRole::Hash, 1);
  const HashAssignment h = sample_AB_conditioned(params, hash_rng);
  for (std::int64_t i = 0; i < k; ++i) {
    sys.preassign_hash(A[static_cast<std::size_t>(i)], h.a[static_cast<std::size_t>(i)]);
    sys.preassign_hash(B[static_cast<std::size_t>(i)], h.b[static_cast<std::size_t>(i)]);
  }
  BlockTrial out;
  out.a12 = h.a12;
  out.a34 = h.a34;
  auto count_left = [&](const System& s, const std::vector<BallLabel>& labels) {
    std::int64_t c = 0;
    for (BallLabel l : labels) c += s.ball(l).bin < 2 ? 1 : 0;
    return c;
  };
  auto observer = [&](const System& s, const StepRecord&, std::size_t pos) {
    if (pos + 1 == step2) {
      out.vA = count_left(s, A);
      out.vB = count_left(s, B);
    }
  };
  RunStreams streams = RunStreams::derive(seed, 0);
  const Trace trace = run(sys, script, policy, streams, TraceMode::Final, observer);
  if (trace.summary.halted) throw OperationError("policy halted during the splitting block");
  out.vY = count_left(sys, Y);
  out.vZ = count_left(sys, Z);
  out.max_overload = trace.summary.max_overload;
  return out;
}

}  // namespace twochoice
