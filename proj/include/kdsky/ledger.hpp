#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "errors.hpp"

namespace kdsky {

/// Per-window-item skyline probability state.
///
/// The product of (1 - P(u')) over current k-dominators is kept split in two
/// parts: a count of dominators with P(u') = 1 (each contributes an exact zero
/// factor) and the sum of ln(1 - P(u')) over the rest. Removing a dominator is
/// then a decrement or a subtraction, never a division by zero.
class SkylineLedgerEntry {
 public:
  SkylineLedgerEntry() = default;
  explicit SkylineLedgerEntry(UncertainItem item) : item_(std::move(item)) {}

  const UncertainItem& item() const noexcept { return item_; }
  ItemId id() const noexcept { return item_.id; }
  std::size_t zero_factor_count() const noexcept { return zero_factor_count_; }
  double nonzero_log_product() const noexcept { return nonzero_log_product_; }

  /// P_k-sky(u), always in [0, P(u)].
  double probability() const noexcept {
    if (zero_factor_count_ > 0) return 0.0;
    return item_.prob * std::exp(std::min(nonzero_log_product_, 0.0));
  }

  void add_dominator(double dominator_prob) {
    check_prob(dominator_prob);
    if (dominator_prob == 1.0) {
      ++zero_factor_count_;
    } else {
      nonzero_log_product_ += std::log1p(-dominator_prob);
    }
  }

  void remove_dominator(double dominator_prob) {
    check_prob(dominator_prob);
    if (dominator_prob == 1.0) {
      if (zero_factor_count_ == 0) {
        throw InternalFault("zero-factor underflow on item " + std::to_string(item_.id));
      }
      --zero_factor_count_;
    } else {
      nonzero_log_product_ -= std::log1p(-dominator_prob);
      // Exact cancellation may leave a positive ulp.
      nonzero_log_product_ = std::min(nonzero_log_product_, 0.0);
    }
  }

  /// Forget every dominator.
  void reset() noexcept {
    zero_factor_count_ = 0;
    nonzero_log_product_ = 0.0;
  }

 private:
  static void check_prob(double p) {
    if (!(p > 0.0 && p <= 1.0)) throw InputError("dominator probability outside (0, 1]");
  }

  UncertainItem item_;
  std::size_t zero_factor_count_ = 0;
  double nonzero_log_product_ = 0.0;
};

inline SkylineLedgerEntry ledger_add_dominator(SkylineLedgerEntry entry, double dominator_prob) {
  entry.add_dominator(dominator_prob);
  return entry;
}

inline SkylineLedgerEntry ledger_remove_dominator(SkylineLedgerEntry entry, double dominator_prob) {
  entry.remove_dominator(dominator_prob);
  return entry;
}

struct SnapshotEntry {
  UncertainItem item;
  double probability = 0.0;
};

/// Immutable view of the window after an event, ordered by ascending id.
class WindowSnapshot {
 public:
  WindowSnapshot() = default;
  explicit WindowSnapshot(std::vector<SnapshotEntry> entries) : entries_(std::move(entries)) {}

  const std::vector<SnapshotEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  std::optional<double> probability_of(ItemId id) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                               [](const SnapshotEntry& e, ItemId v) { return e.item.id < v; });
    if (it == entries_.end() || it->item.id != id) return std::nullopt;
    return it->probability;
  }

  std::vector<ItemId> ids() const {
    std::vector<ItemId> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.item.id);
    return out;
  }

 private:
  std::vector<SnapshotEntry> entries_;
};

class SlidingWindow;

/// Engine callbacks driven by SlidingWindow::push.
///   on_evict(u_old, window)      u_old already removed from the window
///   on_insert(u_new, window)     u_new not yet appended
template <typename H>
concept WindowHooks = requires(H& h, const UncertainItem& old_item, SkylineLedgerEntry& fresh, SlidingWindow& w) {
  h.on_evict(old_item, w);
  h.on_insert(fresh, w);
};

/// Count-based FIFO window holding at most `capacity` ledger entries.
class SlidingWindow {
 public:
  using container = std::deque<SkylineLedgerEntry>;

  explicit SlidingWindow(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw InputError("window capacity must be at least 1");
  }

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  bool full() const noexcept { return entries_.size() == capacity_; }

  container::iterator begin() noexcept { return entries_.begin(); }
  container::iterator end() noexcept { return entries_.end(); }
  container::const_iterator begin() const noexcept { return entries_.begin(); }
  container::const_iterator end() const noexcept { return entries_.end(); }
  const container& entries() const noexcept { return entries_; }
  SkylineLedgerEntry& back() { return entries_.back(); }
  const SkylineLedgerEntry& back() const { return entries_.back(); }

  /// Entry with the given id, or nullptr. O(1) when ids are consecutive,
  /// binary search otherwise.
  SkylineLedgerEntry* find(ItemId id) noexcept {
    if (entries_.empty() || id < entries_.front().id()) return nullptr;
    const auto guess = id - entries_.front().id();
    if (guess < entries_.size() && entries_[guess].id() == id) return &entries_[guess];
    auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                               [](const SkylineLedgerEntry& e, ItemId v) { return e.id() < v; });
    return (it != entries_.end() && it->id() == id) ? &*it : nullptr;
  }

  const SkylineLedgerEntry* find(ItemId id) const noexcept { return const_cast<SlidingWindow*>(this)->find(id); }

  /// Admit `fresh`, evicting the oldest entry first when full. Returns the
  /// evicted item, if any.
  template <WindowHooks Hooks>
  std::optional<UncertainItem> push(SkylineLedgerEntry fresh, Hooks& hooks) {
    if (!entries_.empty() && fresh.id() <= entries_.back().id()) {
      throw InputError("non-monotone item id " + std::to_string(fresh.id()) + " after " +
                       std::to_string(entries_.back().id()));
    }
    std::optional<UncertainItem> evicted;
    if (full()) {
      evicted = entries_.front().item();
      entries_.pop_front();
      hooks.on_evict(*evicted, *this);
    }
    hooks.on_insert(fresh, *this);
    entries_.push_back(std::move(fresh));
    return evicted;
  }

  WindowSnapshot snapshot() const {
    std::vector<SnapshotEntry> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back({e.item(), e.probability()});
    return WindowSnapshot(std::move(out));
  }

 private:
  std::size_t capacity_;
  container entries_;
};

/// Rebuild every entry's ledger from scratch with a full pairwise scan.
/// Returns the largest absolute change in exposed probability.
inline double recompute_ledger(SlidingWindow& window, std::size_t k) {
  double drift = 0.0;
  for (auto& target : window) {
    const double before = target.probability();
    target.reset();
    for (const auto& other : window) {
      if (&other != &target && k_dominates(other.item(), target.item(), k)) {
        target.add_dominator(other.item().prob);
      }
    }
    drift = std::max(drift, std::abs(before - target.probability()));
  }
  return drift;
}

}  // namespace kdsky
