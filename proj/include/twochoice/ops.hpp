#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace twochoice {

using Bin = std::uint32_t;
using BallLabel = std::uint64_t;

struct Operation {
  enum class Kind : std::uint8_t { Insert, Delete, DeleteRank };

  Kind kind = Kind::Insert;
  std::uint64_t value = 0;  // label for Insert/Delete, rank for DeleteRank

  static constexpr Operation insert(BallLabel label) { return {Kind::Insert, label}; }
  static constexpr Operation erase(BallLabel label) { return {Kind::Delete, label}; }
  static constexpr Operation erase_rank(std::uint64_t rank) { return {Kind::DeleteRank, rank}; }

  [[nodiscard]] bool is_insert() const noexcept { return kind == Kind::Insert; }

  friend bool operator==(const Operation&, const Operation&) = default;
};

const char* kind_name(Operation::Kind kind);

/// A fully materialized oblivious operation sequence. It is plain data: there
/// is no way for a script to observe the system it is applied to.
struct AdversaryScript {
  std::vector<Operation> ops;
  std::string generator;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t script_seed = 0;
  /// Named positions: checkpoint p refers to the state after the first p ops.
  std::map<std::string, std::size_t> checkpoints;
  /// Named label sets (e.g. the balls playing one marble) for instrumentation.
  std::map<std::string, std::vector<BallLabel>> label_sets;

  [[nodiscard]] std::size_t size() const noexcept { return ops.size(); }
  [[nodiscard]] bool empty() const noexcept { return ops.empty(); }
};

}  // namespace twochoice
