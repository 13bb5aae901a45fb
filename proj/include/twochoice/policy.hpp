#pragma once

#include "twochoice/ops.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>

namespace twochoice {

class Rng;

struct HashPair {
  Bin first = 0;
  Bin second = 0;

  friend bool operator==(const HashPair&, const HashPair&) = default;
};

/// What a placement policy may look at. There is deliberately no ball label
/// and no history here: every policy built on this view is ID-oblivious.
struct LoadView {
  std::span<const std::int64_t> color_loads;  // balls per color
  std::int64_t present = 0;                   // sum of color_loads
  std::int64_t m_cap = 0;                     // configured capacity (basis of the modulated rule)
  std::int64_t m_seen = 0;                    // high-water mark of present balls (basis of the generalized rule)

  [[nodiscard]] std::size_t n() const noexcept { return color_loads.size(); }
};

struct StrategyDecision {
  Bin bin = 0;
  Bin color = 0;
  bool corrupted = false;
  /// Probability this bin was chosen given the offered pair. The exact
  /// rational is available from the strategies' exact layer.
  double p_used = 1.0;
};

struct Halt {};

using Placement = std::variant<StrategyDecision, Halt>;

class PlacementPolicy {
 public:
  virtual ~PlacementPolicy() = default;
  virtual Placement place(const HashPair& pair, const LoadView& view, Rng& rng) = 0;
  [[nodiscard]] virtual std::string_view name() const = 0;
};

}  // namespace twochoice
