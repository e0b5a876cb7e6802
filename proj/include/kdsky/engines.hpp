#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>

#include "core.hpp"
#include "errors.hpp"
#include "ledger.hpp"
#include "mi_index.hpp"

#ifndef KDSKY_PARANOID_DEFAULT
#ifdef NDEBUG
#define KDSKY_PARANOID_DEFAULT false
#else
#define KDSKY_PARANOID_DEFAULT true
#endif
#endif

namespace kdsky {

enum class EngineKind { naive, mi };

inline std::string to_string(EngineKind kind) { return kind == EngineKind::mi ? "mi" : "naive"; }

struct EngineConfig {
  std::size_t d = 12;
  std::size_t k = 11;
  std::size_t capacity = 300;
  std::optional<std::size_t> pivot;  // unset: default_pivot(k)
  NormalizationBounds bounds = NormalizationBounds::uniform(12, 0.0, 1.0);
  std::size_t recompute_interval = 0;  // full ledger rebuild every N events, 0 = never
  // Cross-check table/window membership and every pruned pair after each event.
  bool paranoid_checks = KDSKY_PARANOID_DEFAULT;
  // Test-only fault injection: the MI engine skips the eviction update pass.
  bool fault_skip_eviction_update = false;

  std::size_t resolved_pivot() const noexcept { return pivot.value_or(default_pivot(k)); }

  void validate() const {
    if (d < 1) throw InputError("dimensionality must be at least 1");
    if (k < 1 || k > d) throw InputError("k = " + std::to_string(k) + " outside [1, " + std::to_string(d) + "]");
    if (resolved_pivot() > k - 1) {
      throw InputError("pivot " + std::to_string(resolved_pivot()) + " outside [0, " + std::to_string(k - 1) + "]");
    }
    if (capacity < 1) throw InputError("window capacity must be at least 1");
    if (bounds.dim() != d) {
      throw InputError("bounds cover " + std::to_string(bounds.dim()) + " dimensions, expected " + std::to_string(d));
    }
  }
};

struct EngineCounters {
  std::uint64_t events = 0;
  std::uint64_t dominance_tests = 0;
  std::uint64_t pruned = 0;  // table entries skipped by an early break
  std::uint64_t recomputes = 0;
  double max_recompute_drift = 0.0;
};

inline void check_within_bounds(const UncertainItem& item, const NormalizationBounds& bounds) {
  for (std::size_t j = 0; j < item.dim(); ++j) {
    if (!(item.attrs[j] >= bounds.min(j) && item.attrs[j] <= bounds.max(j))) {
      throw InputError("item " + std::to_string(item.id) + ": value outside bounds in dimension " +
                       std::to_string(j));
    }
  }
}

namespace detail {

inline void maybe_recompute(SlidingWindow& window, const EngineConfig& config, EngineCounters& counters) {
  if (config.recompute_interval == 0 || counters.events % config.recompute_interval != 0) return;
  counters.max_recompute_drift = std::max(counters.max_recompute_drift, recompute_ledger(window, config.k));
  ++counters.recomputes;
}

}  // namespace detail

/// Baseline and oracle: every update is a full window scan.
class NaiveEngine {
 public:
  static constexpr EngineKind kind = EngineKind::naive;

  explicit NaiveEngine(EngineConfig config) : config_(std::move(config)), window_(config_.capacity) {
    config_.validate();
  }

  std::optional<UncertainItem> push(UncertainItem item) {
    validate_item(item, config_.d);
    check_within_bounds(item, config_.bounds);
    Hooks hooks{*this};
    auto evicted = window_.push(SkylineLedgerEntry(std::move(item)), hooks);
    ++counters_.events;
    detail::maybe_recompute(window_, config_, counters_);
    return evicted;
  }

  WindowSnapshot snapshot() const { return window_.snapshot(); }
  const SlidingWindow& window() const noexcept { return window_; }
  const EngineCounters& counters() const noexcept { return counters_; }
  const EngineConfig& config() const noexcept { return config_; }

 private:
  struct Hooks {
    NaiveEngine& self;

    void on_evict(const UncertainItem& old_item, SlidingWindow& window) {
      for (auto& e : window) {
        ++self.counters_.dominance_tests;
        if (k_dominates(old_item, e.item(), self.config_.k)) e.remove_dominator(old_item.prob);
      }
    }

    void on_insert(SkylineLedgerEntry& fresh, SlidingWindow& window) {
      const auto& item = fresh.item();
      for (auto& e : window) {
        ++self.counters_.dominance_tests;
        if (k_dominates(item, e.item(), self.config_.k)) e.add_dominator(item.prob);
      }
      for (const auto& e : window) {
        ++self.counters_.dominance_tests;
        if (k_dominates(e.item(), item, self.config_.k)) fresh.add_dominator(e.item().prob);
      }
    }
  };

  EngineConfig config_;
  SlidingWindow window_;
  EngineCounters counters_;
};

struct PassStats {
  std::uint64_t dominance_tests = 0;
  std::uint64_t pruned = 0;
};

struct MiOptions {
  std::size_t k = 0;
  bool paranoid_checks = false;
};

namespace detail {

// Window entry behind a table key: the stored reference when the tables carry
// one, otherwise a lookup by id.
template <typename Ref>
SkylineLedgerEntry* resolve(const TableKey<Ref>& key, SlidingWindow& window) {
  SkylineLedgerEntry* e = nullptr;
  if constexpr (std::is_same_v<Ref, SkylineLedgerEntry*>) {
    e = key.ref;
  } else {
    e = window.find(key.id);
  }
  if (e == nullptr) throw InternalFault("index table id " + std::to_string(key.id) + " missing from window");
  return e;
}

// Walk by_max (mi_max descending) and apply `on_dominated` to every window
// entry that `dominator` k-dominates. Once mi_min(dominator) > mi_max(e), the
// same holds for all later entries, so none of them can be k-dominated.
template <typename Ref, typename OnDominated>
void dominator_pass(const BasicIndexTables<Ref>& tables, SlidingWindow& window, const UncertainItem& dominator,
                    double dominator_mi_min, const MiOptions& opt, PassStats& stats, OnDominated on_dominated) {
  const auto& table = tables.by_max();
  std::size_t visited = 0;
  auto it = table.begin();
  for (; it != table.end(); ++it) {
    if (dominator_mi_min > it->threshold) break;
    ++visited;
    SkylineLedgerEntry* e = resolve(*it, window);
    ++stats.dominance_tests;
    if (k_dominates(dominator, e->item(), opt.k)) on_dominated(*e);
  }
  stats.pruned += tables.size() - visited;
  if (opt.paranoid_checks) {
    for (; it != table.end(); ++it) {
      const SkylineLedgerEntry* e = window.find(it->id);
      if (e == nullptr || !(dominator_mi_min > it->threshold) || k_dominates(dominator, e->item(), opt.k)) {
        throw InternalFault("pruned entry " + std::to_string(it->id) + " violates the prune premise");
      }
    }
  }
}

}  // namespace detail

/// Eviction pass: undo u_old's factor on every remaining entry it k-dominated.
/// u_old must already be gone from both the window and the tables.
template <typename Ref>
PassStats mi_update_evicted(const BasicIndexTables<Ref>& tables, SlidingWindow& window, const UncertainItem& old_item,
                                   const Thresholds& old_thresholds, const MiOptions& opt) {
  PassStats stats;
  detail::dominator_pass(tables, window, old_item, old_thresholds.mi_min, opt, stats,
                         [&](SkylineLedgerEntry& e) { e.remove_dominator(old_item.prob); });
  return stats;
}

/// Insertion pass: apply u_new's factor to every entry it k-dominates.
template <typename Ref>
PassStats mi_update_inserted(const BasicIndexTables<Ref>& tables, SlidingWindow& window, const UncertainItem& new_item,
                                    const Thresholds& new_thresholds, const MiOptions& opt) {
  PassStats stats;
  detail::dominator_pass(tables, window, new_item, new_thresholds.mi_min, opt, stats,
                         [&](SkylineLedgerEntry& e) { e.add_dominator(new_item.prob); });
  return stats;
}

struct EvictedItem {
  const UncertainItem& item;
  Thresholds thresholds;
};

/// Both passes of the window update, eviction first.
template <typename Ref>
PassStats mi_update(const BasicIndexTables<Ref>& tables, SlidingWindow& window, const UncertainItem& new_item,
                           const Thresholds& new_thresholds, const std::optional<EvictedItem>& old_item,
                           const MiOptions& opt) {
  PassStats total;
  if (old_item) {
    const auto s = mi_update_evicted(tables, window, old_item->item, old_item->thresholds, opt);
    total.dominance_tests += s.dominance_tests;
    total.pruned += s.pruned;
  }
  const auto s = mi_update_inserted(tables, window, new_item, new_thresholds, opt);
  total.dominance_tests += s.dominance_tests;
  total.pruned += s.pruned;
  return total;
}

/// Skyline probability of a new item: walk by_min (mi_min ascending) until
/// mi_max(u_new) < mi_min(e), folding in (1 - P(e)) for each k-dominator.
/// The factors are recorded on `fresh` so they can be removed later.
template <typename Ref>
double mi_calculate(const BasicIndexTables<Ref>& tables, SlidingWindow& window, SkylineLedgerEntry& fresh,
                           const Thresholds& new_thresholds, const MiOptions& opt, PassStats& stats) {
  const auto& table = tables.by_min();
  std::size_t visited = 0;
  auto it = table.begin();
  for (; it != table.end(); ++it) {
    if (new_thresholds.mi_max < it->threshold) break;
    ++visited;
    const SkylineLedgerEntry* e = detail::resolve(*it, window);
    ++stats.dominance_tests;
    if (k_dominates(e->item(), fresh.item(), opt.k)) fresh.add_dominator(e->item().prob);
  }
  stats.pruned += tables.size() - visited;
  if (opt.paranoid_checks) {
    for (; it != table.end(); ++it) {
      const SkylineLedgerEntry* e = window.find(it->id);
      if (e == nullptr || !(new_thresholds.mi_max < it->threshold) || k_dominates(e->item(), fresh.item(), opt.k)) {
        throw InternalFault("pruned entry " + std::to_string(it->id) + " violates the prune premise");
      }
    }
  }
  return fresh.probability();
}

template <typename Ref>
BasicIndexTables<Ref>& mi_sort(BasicIndexTables<Ref>& tables, ItemId id, const SortedProfile& profile,
                               Ref ref = Ref{}) {
  return tables_insert(tables, id, profile, ref);
}

/// Stream engine pruning dominance tests with the middle indexing tables.
class MiEngine {
 public:
  static constexpr EngineKind kind = EngineKind::mi;

  explicit MiEngine(EngineConfig config) : config_(std::move(config)), window_(config_.capacity) {
    config_.validate();
    options_ = {config_.k, config_.paranoid_checks};
  }

  std::optional<UncertainItem> push(UncertainItem item) {
    validate_item(item, config_.d);
    SortedProfile profile = build_profile(normalize(item.attrs, config_.bounds), config_.k, config_.resolved_pivot());
    Hooks hooks{*this, profile};
    auto evicted = window_.push(SkylineLedgerEntry(std::move(item)), hooks);
    // Deque references survive push_back/pop_front, so the tables can point
    // straight at the entry.
    mi_sort(tables_, window_.back().id(), profile, &window_.back());
    ++counters_.events;
    detail::maybe_recompute(window_, config_, counters_);
    if (config_.paranoid_checks) check_membership();
    return evicted;
  }

  WindowSnapshot snapshot() const { return window_.snapshot(); }
  const SlidingWindow& window() const noexcept { return window_; }
  using Tables = BasicIndexTables<SkylineLedgerEntry*>;

  const Tables& tables() const noexcept { return tables_; }
  const EngineCounters& counters() const noexcept { return counters_; }
  const EngineConfig& config() const noexcept { return config_; }

 private:
  struct Hooks {
    MiEngine& self;
    const SortedProfile& profile;

    void on_evict(const UncertainItem& old_item, SlidingWindow& window) {
      // u_old leaves the tables first so it never meets itself.
      const Thresholds old_thresholds = self.tables_.remove(old_item.id);
      if (self.config_.fault_skip_eviction_update) return;
      self.account(mi_update_evicted(self.tables_, window, old_item, old_thresholds, self.options_));
    }

    void on_insert(SkylineLedgerEntry& fresh, SlidingWindow& window) {
      const Thresholds t{profile.mi_min, profile.mi_max};
      self.account(mi_update_inserted(self.tables_, window, fresh.item(), t, self.options_));
      PassStats calc;
      mi_calculate(self.tables_, window, fresh, t, self.options_, calc);
      self.account(calc);
    }
  };

  void account(const PassStats& s) noexcept {
    counters_.dominance_tests += s.dominance_tests;
    counters_.pruned += s.pruned;
  }

  void check_membership() const {
    if (tables_.size() != window_.size()) throw InternalFault("index tables and window differ in size");
    for (const auto& e : window_) {
      if (!tables_.contains(e.id())) throw InternalFault("window id " + std::to_string(e.id()) + " not indexed");
    }
    for (const auto& key : tables_.by_max()) {
      if (key.ref != window_.find(key.id)) throw InternalFault("stale entry reference for id " + std::to_string(key.id));
    }
  }

  EngineConfig config_;
  MiOptions options_;
  SlidingWindow window_;
  Tables tables_;
  EngineCounters counters_;
};

template <typename E>
concept StreamEngine = requires(E& e, UncertainItem item) {
  { e.push(std::move(item)) } -> std::same_as<std::optional<UncertainItem>>;
  { e.snapshot() } -> std::same_as<WindowSnapshot>;
  { e.counters() } -> std::convertible_to<const EngineCounters&>;
};

inline WindowSnapshot naive_push(NaiveEngine& engine, UncertainItem item) {
  engine.push(std::move(item));
  return engine.snapshot();
}

inline WindowSnapshot mi_push(MiEngine& engine, UncertainItem item) {
  engine.push(std::move(item));
  return engine.snapshot();
}

}  // namespace kdsky
