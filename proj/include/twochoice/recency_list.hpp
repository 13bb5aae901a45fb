#pragma once

#include "twochoice/errors.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace twochoice {

/// Insertion-ordered collection with O(log n) access by recency rank.
///
/// Rank 1 is the most recently inserted live element. Elements are addressed
/// by a handle, the element's global insertion sequence number, which never
/// changes. Storage is a slot array in insertion order plus a Fenwick tree of
/// liveness flags; dead slots are compacted away once they outnumber the live
/// ones, so memory stays proportional to size().
template <class T>
class RecencyList {
 public:
  using Handle = std::uint64_t;

  [[nodiscard]] std::size_t size() const noexcept { return live_; }
  [[nodiscard]] bool empty() const noexcept { return live_ == 0; }
  [[nodiscard]] Handle next_handle() const noexcept { return next_handle_; }

  Handle push_back(T value) {
    const Handle h = next_handle_++;
    slots_.push_back(Slot{h, std::move(value), true});
    fenwick_append(1);
    ++live_;
    return h;
  }

  [[nodiscard]] bool contains(Handle h) const { return find_slot(h) != npos; }

  [[nodiscard]] const T& get(Handle h) const { return slots_[checked_slot(h)].value; }

  /// Handle of the r-th most recent live element, 1 <= r <= size().
  [[nodiscard]] Handle handle_at_rank(std::size_t r) const {
    if (r < 1 || r > live_) throw OperationError("rank out of range");
    return slots_[slot_with_prefix(live_ - r + 1)].handle;
  }

  /// 1 + number of live elements inserted after h.
  [[nodiscard]] std::size_t rank_of(Handle h) const {
    const std::size_t slot = checked_slot(h);
    return live_ - prefix(slot + 1) + 1;
  }

  T erase(Handle h) {
    const std::size_t slot = checked_slot(h);
    T value = std::move(slots_[slot].value);
    slots_[slot].live = false;
    fenwick_add(slot + 1, -1);
    --live_;
    if (slots_.size() >= 64 && slots_.size() >= 2 * live_ + 64) compact();
    return value;
  }

  /// Live elements, oldest first.
  template <class F>
  void for_each(F&& f) const {
    for (const Slot& s : slots_)
      if (s.live) f(s.handle, s.value);
  }

 private:
  struct Slot {
    Handle handle;
    T value;
    bool live;
  };

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::size_t find_slot(Handle h) const {
    auto it = std::lower_bound(slots_.begin(), slots_.end(), h,
                               [](const Slot& s, Handle key) { return s.handle < key; });
    if (it == slots_.end() || it->handle != h || !it->live) return npos;
    return static_cast<std::size_t>(it - slots_.begin());
  }

  std::size_t checked_slot(Handle h) const {
    const std::size_t slot = find_slot(h);
    if (slot == npos) throw OperationError("handle not present");
    return slot;
  }

  // Fenwick tree over slots, 1-based.
  std::int64_t prefix(std::size_t pos) const {
    std::int64_t s = 0;
    for (; pos > 0; pos &= pos - 1) s += tree_[pos - 1];
    return s;
  }

  void fenwick_add(std::size_t pos, std::int64_t delta) {
    for (; pos <= tree_.size(); pos += pos & (~pos + 1)) tree_[pos - 1] += delta;
  }

  void fenwick_append(std::int64_t value) {
    const std::size_t pos = tree_.size() + 1;
    const std::size_t low = pos & (~pos + 1);
    tree_.push_back(value + prefix(pos - 1) - prefix(pos - low));
  }

  // Smallest slot whose inclusive prefix count equals target (target >= 1).
  std::size_t slot_with_prefix(std::size_t target) const {
    std::size_t pos = 0;
    std::size_t step = 1;
    while (step * 2 <= tree_.size()) step *= 2;
    auto remaining = static_cast<std::int64_t>(target);
    for (; step > 0; step /= 2) {
      if (pos + step <= tree_.size() && tree_[pos + step - 1] < remaining) {
        pos += step;
        remaining -= tree_[pos - 1];
      }
    }
    return pos;
  }

  void compact() {
    std::vector<Slot> kept;
    kept.reserve(live_ * 2 + 16);
    for (Slot& s : slots_)
      if (s.live) kept.push_back(std::move(s));
    slots_ = std::move(kept);
    tree_.assign(slots_.size(), 1);
    for (std::size_t pos = 1; pos <= tree_.size(); ++pos) {
      const std::size_t parent = pos + (pos & (~pos + 1));
      if (parent <= tree_.size()) tree_[parent - 1] += tree_[pos - 1];
    }
  }

  std::vector<Slot> slots_;
  std::vector<std::int64_t> tree_;
  std::size_t live_ = 0;
  Handle next_handle_ = 0;
};

}  // namespace twochoice
