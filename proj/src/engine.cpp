#include "twochoice/engine.hpp"

#include "twochoice/errors.hpp"

#include <algorithm>
#include <string>

namespace twochoice {

const char* kind_name(Operation::Kind kind) {
  switch (kind) {
    case Operation::Kind::Insert: return "insert";
    case Operation::Kind::Delete: return "delete";
    case Operation::Kind::DeleteRank: return "delete_rank";
  }
  return "?";
}

System::System(SystemConfig config) : config_(std::move(config)) {
  if (config_.n < 2) throw ConfigError("need at least 2 bins");
  if (config_.m_cap < static_cast<std::int64_t>(config_.n)) throw ConfigError("m_cap must be at least n");
  if (config_.hash_model == HashModel::Graphical) {
    if (!config_.graph) throw ConfigError("graphical hash model needs a graph");
    if (config_.graph->vertices() != config_.n) throw ConfigError("graph vertex count must equal n");
  }
  loads_.assign(config_.n, 0);
  color_loads_.assign(config_.n, 0);
}

System System::create(std::size_t n, std::int64_t m_cap, HashModel hash_model, InsertionModel mode) {
  return System(SystemConfig{n, m_cap, hash_model, mode, nullptr});
}

HashPair System::draw_hash(BallLabel label, Rng& hash_rng) {
  const bool memoize = config_.mode == InsertionModel::ReinsertionDeletion;
  if (memoize) {
    if (auto it = hash_memo_.find(label); it != hash_memo_.end()) return it->second;
  }
  HashPair pair;
  const auto n = static_cast<std::uint64_t>(config_.n);
  switch (config_.hash_model) {
    case HashModel::IndependentPair:
      pair.first = static_cast<Bin>(hash_rng.below(n));
      pair.second = static_cast<Bin>(hash_rng.below(n));
      break;
    case HashModel::DistinctOrdered: {
      const auto flat = hash_rng.below(n * (n - 1));
      pair.first = static_cast<Bin>(flat / (n - 1));
      const auto other = static_cast<Bin>(flat % (n - 1));
      pair.second = other >= pair.first ? other + 1 : other;
      break;
    }
    case HashModel::Graphical:
      pair = graphical_pair(*config_.graph, hash_rng);
      break;
  }
  if (memoize) hash_memo_.emplace(label, pair);
  return pair;
}

void System::preassign_hash(BallLabel label, HashPair pair) {
  if (config_.mode != InsertionModel::ReinsertionDeletion)
    throw ConfigError("hash preassignment needs reinsertion mode");
  if (pair.first >= config_.n || pair.second >= config_.n) throw ConfigError("bin out of range");
  auto [it, inserted] = hash_memo_.emplace(label, pair);
  if (!inserted && !(it->second == pair)) throw OperationError("label already has a different hash");
}

std::optional<HashPair> System::memoized_hash(BallLabel label) const {
  if (auto it = hash_memo_.find(label); it != hash_memo_.end()) return it->second;
  return std::nullopt;
}

void System::check_fresh(BallLabel label) const {
  if (index_.contains(label)) throw OperationError("label " + std::to_string(label) + " already present");
  if (config_.mode == InsertionModel::InsertionDeletion && label < next_unused_ &&
      boost::icl::contains(used_labels_, label))
    throw OperationError("label " + std::to_string(label) + " was used before");
}

void System::add_ball(BallLabel label, Bin bin, Bin color, bool corrupted) {
  if (present() >= config_.m_cap) throw OperationError("capacity exceeded");
  if (config_.mode == InsertionModel::InsertionDeletion) {
    used_labels_.add(label);
    next_unused_ = std::max(next_unused_, label + 1);
  }
  index_.emplace(label, present_.push_back(BallRecord{label, bin, color, corrupted}));
  ++loads_[bin];
  ++color_loads_[color];
  if (corrupted) ++corrupted_present_;
  max_load_ = std::max(max_load_, loads_[bin]);
  m_seen_ = std::max(m_seen_, present());
}

BallRecord System::remove_ball(BallLabel label) {
  auto it = index_.find(label);
  if (it == index_.end()) throw OperationError("label " + std::to_string(label) + " not present");
  BallRecord rec = present_.erase(it->second);
  index_.erase(it);
  const bool was_max = loads_[rec.bin] == max_load_;
  --loads_[rec.bin];
  --color_loads_[rec.color];
  if (rec.corrupted) --corrupted_present_;
  if (was_max) max_load_ = *std::max_element(loads_.begin(), loads_.end());
  return rec;
}

void System::seed_ball(BallLabel label, Bin bin, std::optional<Bin> color) {
  if (bin >= config_.n || (color && *color >= config_.n)) throw OperationError("bin out of range");
  check_fresh(label);
  const Bin c = color.value_or(bin);
  add_ball(label, bin, c, c != bin);
}

LoadView System::view() const { return LoadView{color_loads_, present(), config_.m_cap, m_seen_}; }

StepRecord System::place_decided(BallLabel label, const HashPair& pair, const StrategyDecision& d,
                                 std::string_view who) {
  if (d.bin >= config_.n || d.color >= config_.n || (d.bin != pair.first && d.bin != pair.second))
    throw InvariantViolation(std::string(who) + " chose a bin outside the offered pair");
  StepRecord rec;
  rec.op_index = op_count_;
  rec.op = Operation::insert(label);
  add_ball(label, d.bin, d.color, d.corrupted);
  rec.bin = d.bin;
  rec.color = d.color;
  rec.corrupted = d.corrupted;
  rec.p_used = d.p_used;
  rec.two_choice = pair.first != pair.second;
  return rec;
}

StepRecord System::insert_decided(BallLabel label, const HashPair& pair, const StrategyDecision& decision) {
  check_fresh(label);
  if (present() >= config_.m_cap) throw OperationError("capacity exceeded");
  StepRecord rec = place_decided(label, pair, decision, "external decision");
  ++op_count_;
  rec.max_load = max_load_;
  rec.overload = overload();
  return rec;
}

StepRecord System::apply(const Operation& op, PlacementPolicy& policy, RunStreams& streams) {
  StepRecord rec;
  rec.op_index = op_count_;
  rec.op = op;
  switch (op.kind) {
    case Operation::Kind::Insert: {
      check_fresh(op.value);
      if (present() >= config_.m_cap) throw OperationError("capacity exceeded");
      const HashPair pair = draw_hash(op.value, streams.hash);
      const Placement placement = policy.place(pair, view(), streams.strategy);
      if (std::holds_alternative<Halt>(placement)) {
        rec.halted = true;
        rec.max_load = max_load_;
        rec.overload = overload();
        return rec;
      }
      rec = place_decided(op.value, pair, std::get<StrategyDecision>(placement), policy.name());
      rec.op = op;
      break;
    }
    case Operation::Kind::Delete: {
      const BallRecord ball = remove_ball(op.value);
      rec.bin = ball.bin;
      rec.color = ball.color;
      rec.corrupted = ball.corrupted;
      break;
    }
    case Operation::Kind::DeleteRank: {
      const BallRecord ball = remove_ball(label_at_rank(op.value));
      rec.bin = ball.bin;
      rec.color = ball.color;
      rec.corrupted = ball.corrupted;
      break;
    }
  }
  ++op_count_;
  rec.max_load = max_load_;
  rec.overload = overload();
  return rec;
}

std::size_t System::rank_of(BallLabel label) const {
  auto it = index_.find(label);
  if (it == index_.end()) throw OperationError("label " + std::to_string(label) + " not present");
  return present_.rank_of(it->second);
}

BallLabel System::label_at_rank(std::size_t rank) const {
  if (rank < 1 || rank > present_.size())
    throw OperationError("rank " + std::to_string(rank) + " out of range");
  return present_.get(present_.handle_at_rank(rank)).label;
}

const BallRecord& System::ball(BallLabel label) const {
  auto it = index_.find(label);
  if (it == index_.end()) throw OperationError("label " + std::to_string(label) + " not present");
  return present_.get(it->second);
}

std::vector<BallRecord> System::present_oldest_first() const {
  std::vector<BallRecord> out;
  out.reserve(present_.size());
  present_.for_each([&](auto, const BallRecord& r) { out.push_back(r); });
  return out;
}

std::int64_t System::min_load() const { return *std::min_element(loads_.begin(), loads_.end()); }

Trace run(System& system, const AdversaryScript& script, PlacementPolicy& policy, RunStreams& streams,
          TraceMode mode, const StepObserver& observer) {
  Trace trace;
  trace.mode = mode;
  TraceSummary& s = trace.summary;
  s.max_overload = system.overload();
  s.max_overload_vs_cap = system.overload_vs_cap();
  s.max_load = system.max_load();
  for (std::size_t pos = 0; pos < script.ops.size(); ++pos) {
    StepRecord rec;
    try {
      rec = system.apply(script.ops[pos], policy, streams);
    } catch (const OperationError& e) {
      throw ScriptError(pos, e.what());
    }
    if (rec.halted) {
      s.halted = true;
      s.halt_op = pos;
      if (mode != TraceMode::Final) trace.steps.push_back(rec);
      break;
    }
    if (rec.op.is_insert()) {
      ++s.inserts;
      if (rec.corrupted) ++s.corruptions;
      if (rec.two_choice && !rec.corrupted) {
        s.p_min = std::min(s.p_min, rec.p_used);
        s.p_max = std::max(s.p_max, rec.p_used);
      }
    } else {
      ++s.deletes;
    }
    const bool new_high = rec.overload > s.max_overload;
    s.max_overload = std::max(s.max_overload, rec.overload);
    s.max_overload_vs_cap = std::max(s.max_overload_vs_cap, system.overload_vs_cap());
    s.max_load = std::max(s.max_load, rec.max_load);
    if (mode == TraceMode::Full || (mode == TraceMode::OverloadOnly && new_high)) trace.steps.push_back(rec);
    if (observer) observer(system, rec, pos);
  }
  s.final_loads.assign(system.loads().begin(), system.loads().end());
  s.final_color_loads.assign(system.color_loads().begin(), system.color_loads().end());
  return trace;
}

}  // namespace twochoice
