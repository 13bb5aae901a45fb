#include "twochoice/script.hpp"

#include "twochoice/errors.hpp"

#include <istream>
#include <ostream>

namespace twochoice {

BallLabel PresenceTracker::apply(const Operation& op) {
  switch (op.kind) {
    case Operation::Kind::Insert: {
      const BallLabel label = op.value;
      if (index_.contains(label)) throw OperationError("label " + std::to_string(label) + " already present");
      if (present() >= m_cap_) throw OperationError("capacity exceeded");
      if (!reinsertion_) {
        if (boost::icl::contains(used_, label))
          throw OperationError("label " + std::to_string(label) + " was used before");
        used_.add(label);
      }
      index_.emplace(label, order_.push_back(label));
      peak_ = std::max(peak_, present());
      return label;
    }
    case Operation::Kind::Delete: {
      auto it = index_.find(op.value);
      if (it == index_.end()) throw OperationError("label " + std::to_string(op.value) + " not present");
      order_.erase(it->second);
      index_.erase(it);
      return op.value;
    }
    case Operation::Kind::DeleteRank: {
      if (op.value < 1 || op.value > order_.size())
        throw OperationError("rank " + std::to_string(op.value) + " out of range");
      const auto h = order_.handle_at_rank(op.value);
      const BallLabel label = order_.erase(h);
      index_.erase(label);
      return label;
    }
  }
  throw InvariantViolation("unknown operation kind");
}

std::vector<BallLabel> PresenceTracker::present_oldest_first() const {
  std::vector<BallLabel> out;
  out.reserve(order_.size());
  order_.for_each([&](auto, BallLabel l) { out.push_back(l); });
  return out;
}

ScriptBuilder::ScriptBuilder(std::int64_t m_cap, std::string generator, nlohmann::json params,
                             std::uint64_t script_seed, bool allow_reinsertion)
    : tracker_(m_cap, allow_reinsertion) {
  script_.generator = std::move(generator);
  script_.params = std::move(params);
  script_.script_seed = script_seed;
}

void ScriptBuilder::push(const Operation& op) {
  try {
    tracker_.apply(op);
  } catch (const OperationError& e) {
    throw ScriptError(script_.ops.size(), e.what());
  }
  script_.ops.push_back(op);
}

BallLabel ScriptBuilder::insert() {
  const BallLabel label = fresh();
  push(Operation::insert(label));
  return label;
}

void ScriptBuilder::insert(BallLabel label) {
  if (label >= next_label_) next_label_ = label + 1;
  push(Operation::insert(label));
}

std::vector<BallLabel> ScriptBuilder::insert_fresh(std::size_t count) {
  std::vector<BallLabel> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(insert());
  return out;
}

void ScriptBuilder::insert_all(std::span<const BallLabel> labels) {
  for (BallLabel l : labels) insert(l);
}

void ScriptBuilder::erase(BallLabel label) { push(Operation::erase(label)); }

void ScriptBuilder::erase_rank(std::size_t rank) { push(Operation::erase_rank(rank)); }

void ScriptBuilder::erase_all(std::span<const BallLabel> labels) {
  for (BallLabel l : labels) erase(l);
}

void ScriptBuilder::checkpoint(const std::string& name) { script_.checkpoints[name] = script_.ops.size(); }

void ScriptBuilder::label_set(const std::string& name, std::vector<BallLabel> labels) {
  script_.label_sets[name] = std::move(labels);
}

ScriptCheck validate_script(const AdversaryScript& script, std::int64_t m_cap, bool allow_reinsertion) {
  PresenceTracker tracker(m_cap, allow_reinsertion);
  ScriptCheck check;
  for (std::size_t pos = 0; pos < script.ops.size(); ++pos) {
    try {
      tracker.apply(script.ops[pos]);
    } catch (const OperationError& e) {
      throw ScriptError(pos, e.what());
    }
    if (script.ops[pos].is_insert())
      ++check.inserts;
    else
      ++check.deletes;
  }
  for (const auto& [name, p] : script.checkpoints)
    if (p > script.ops.size()) throw ScriptError(p, "checkpoint " + name + " past the end");
  check.peak_present = tracker.peak();
  check.final_present = tracker.present();
  return check;
}

nlohmann::json script_to_json(const AdversaryScript& script) {
  nlohmann::json ops = nlohmann::json::array();
  for (const Operation& op : script.ops) {
    if (op.kind == Operation::Kind::DeleteRank)
      ops.push_back({{"op", kind_name(op.kind)}, {"rank", op.value}});
    else
      ops.push_back({{"op", kind_name(op.kind)}, {"label", op.value}});
  }
  return {{"generator", script.generator},     {"params", script.params},
          {"script_seed", script.script_seed}, {"checkpoints", script.checkpoints},
          {"label_sets", script.label_sets},   {"ops", std::move(ops)}};
}

AdversaryScript script_from_json(const nlohmann::json& j) {
  AdversaryScript s;
  try {
    s.generator = j.value("generator", std::string{});
    s.params = j.value("params", nlohmann::json::object());
    s.script_seed = j.value("script_seed", std::uint64_t{0});
    if (j.contains("checkpoints")) s.checkpoints = j.at("checkpoints").get<std::map<std::string, std::size_t>>();
    if (j.contains("label_sets"))
      s.label_sets = j.at("label_sets").get<std::map<std::string, std::vector<BallLabel>>>();
    for (const auto& o : j.at("ops")) {
      const auto kind = o.at("op").get<std::string>();
      if (kind == "insert")
        s.ops.push_back(Operation::insert(o.at("label").get<BallLabel>()));
      else if (kind == "delete")
        s.ops.push_back(Operation::erase(o.at("label").get<BallLabel>()));
      else if (kind == "delete_rank")
        s.ops.push_back(Operation::erase_rank(o.at("rank").get<std::uint64_t>()));
      else
        throw ConfigError("unknown op '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed script: ") + e.what());
  }
  return s;
}

void write_script(std::ostream& out, const AdversaryScript& script) { out << script_to_json(script).dump() << '\n'; }

AdversaryScript read_script(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("script is not JSON: ") + e.what());
  }
  return script_from_json(j);
}

}  // namespace twochoice
