#pragma once

#include "twochoice/ops.hpp"
#include "twochoice/recency_list.hpp"

#include <boost/icl/interval_set.hpp>
#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace twochoice {

/// Counting stub: which labels are present, in insertion order, and which
/// were ever used. No bins, no randomness.
class PresenceTracker {
 public:
  PresenceTracker(std::int64_t m_cap, bool allow_reinsertion) : m_cap_(m_cap), reinsertion_(allow_reinsertion) {}

  /// Throws OperationError on an illegal operation; returns the label touched.
  BallLabel apply(const Operation& op);

  [[nodiscard]] std::int64_t present() const noexcept { return static_cast<std::int64_t>(order_.size()); }
  [[nodiscard]] std::int64_t peak() const noexcept { return peak_; }
  [[nodiscard]] std::int64_t m_cap() const noexcept { return m_cap_; }
  [[nodiscard]] bool contains(BallLabel label) const { return index_.contains(label); }
  [[nodiscard]] std::vector<BallLabel> present_oldest_first() const;

 private:
  std::int64_t m_cap_;
  bool reinsertion_;
  RecencyList<BallLabel> order_;
  std::unordered_map<BallLabel, RecencyList<BallLabel>::Handle> index_;
  boost::icl::interval_set<BallLabel> used_;
  std::int64_t peak_ = 0;
};

/// Appends operations to a script while replaying them against a counting
/// stub, so a generator can never emit an operation that is illegal or that
/// exceeds capacity.
class ScriptBuilder {
 public:
  ScriptBuilder(std::int64_t m_cap, std::string generator, nlohmann::json params = nlohmann::json::object(),
                std::uint64_t script_seed = 0, bool allow_reinsertion = false);

  /// A label never handed out before; not inserted.
  BallLabel fresh() { return next_label_++; }

  BallLabel insert();
  void insert(BallLabel label);
  std::vector<BallLabel> insert_fresh(std::size_t count);
  void insert_all(std::span<const BallLabel> labels);
  void erase(BallLabel label);
  void erase_rank(std::size_t rank);
  void erase_all(std::span<const BallLabel> labels);

  void checkpoint(const std::string& name);
  void label_set(const std::string& name, std::vector<BallLabel> labels);
  void reserve(std::size_t ops) { script_.ops.reserve(ops); }

  [[nodiscard]] std::int64_t present() const noexcept { return tracker_.present(); }
  [[nodiscard]] std::int64_t m_cap() const noexcept { return tracker_.m_cap(); }
  [[nodiscard]] bool contains(BallLabel label) const { return tracker_.contains(label); }
  [[nodiscard]] std::vector<BallLabel> present_oldest_first() const { return tracker_.present_oldest_first(); }
  [[nodiscard]] std::size_t size() const noexcept { return script_.ops.size(); }
  [[nodiscard]] nlohmann::json& params() noexcept { return script_.params; }

  AdversaryScript finish() { return std::move(script_); }

 private:
  void push(const Operation& op);

  PresenceTracker tracker_;
  AdversaryScript script_;
  BallLabel next_label_ = 0;
};

struct ScriptCheck {
  std::int64_t peak_present = 0;
  std::int64_t final_present = 0;
  std::uint64_t inserts = 0;
  std::uint64_t deletes = 0;
};

/// Replays against the counting stub. Throws ScriptError at the first bad op.
ScriptCheck validate_script(const AdversaryScript& script, std::int64_t m_cap, bool allow_reinsertion);

nlohmann::json script_to_json(const AdversaryScript& script);
AdversaryScript script_from_json(const nlohmann::json& j);
void write_script(std::ostream& out, const AdversaryScript& script);
AdversaryScript read_script(std::istream& in);

}  // namespace twochoice
