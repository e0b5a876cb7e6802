#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "core.hpp"
#include "errors.hpp"

namespace kdsky {

/// Declared per-dimension value range. Fixed for the lifetime of a stream so
/// that stored profiles and table keys never need to be recomputed.
class NormalizationBounds {
 public:
  NormalizationBounds() = default;

  explicit NormalizationBounds(std::vector<std::pair<double, double>> ranges) : ranges_(std::move(ranges)) {
    for (std::size_t j = 0; j < ranges_.size(); ++j) {
      const auto [lo, hi] = ranges_[j];
      if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
        throw InputError("invalid bounds for dimension " + std::to_string(j) + ": min must be < max");
      }
    }
  }

  static NormalizationBounds uniform(std::size_t d, double lo, double hi) {
    return NormalizationBounds(std::vector<std::pair<double, double>>(d, {lo, hi}));
  }

  std::size_t dim() const noexcept { return ranges_.size(); }
  double min(std::size_t j) const { return ranges_.at(j).first; }
  double max(std::size_t j) const { return ranges_.at(j).second; }
  const std::vector<std::pair<double, double>>& ranges() const noexcept { return ranges_; }

  bool operator==(const NormalizationBounds&) const = default;

 private:
  std::vector<std::pair<double, double>> ranges_;
};

/// Maps each dimension onto [0, 1]. Values outside the declared bounds are
/// rejected, naming the offending dimension.
inline std::vector<double> normalize(std::span<const double> attrs, const NormalizationBounds& bounds) {
  if (attrs.size() != bounds.dim()) {
    throw InputError("normalize: " + std::to_string(attrs.size()) + " values for " + std::to_string(bounds.dim()) +
                     " bounded dimensions");
  }
  std::vector<double> out(attrs.size());
  for (std::size_t j = 0; j < attrs.size(); ++j) {
    const double lo = bounds.min(j);
    const double hi = bounds.max(j);
    if (!(attrs[j] >= lo && attrs[j] <= hi)) {
      throw InputError("value " + std::to_string(attrs[j]) + " outside bounds in dimension " + std::to_string(j));
    }
    out[j] = std::clamp((attrs[j] - lo) / (hi - lo), 0.0, 1.0);
  }
  return out;
}

inline std::size_t default_pivot(std::size_t k) noexcept { return k == 0 ? 0 : (k - 1) / 2; }

/// An item's normalized values in ascending order plus the two thresholds
/// read at the shared pivot and at pivot + (d - k).
struct SortedProfile {
  std::vector<double> values;
  double mi_min = 0.0;
  double mi_max = 0.0;
  std::size_t k = 0;
  std::size_t pivot = 0;

  std::size_t dim() const noexcept { return values.size(); }
};

inline SortedProfile build_profile(std::vector<double> normalized, std::size_t k, std::size_t pivot) {
  const std::size_t d = normalized.size();
  if (k < 1 || k > d) throw InputError("k = " + std::to_string(k) + " outside [1, " + std::to_string(d) + "]");
  if (pivot > k - 1) {
    throw InputError("pivot " + std::to_string(pivot) + " outside [0, " + std::to_string(k - 1) + "]");
  }
  SortedProfile p;
  p.values = std::move(normalized);
  std::stable_sort(p.values.begin(), p.values.end());
  p.k = k;
  p.pivot = pivot;
  p.mi_min = p.values[pivot];
  p.mi_max = p.values[pivot + d - k];
  return p;
}

/// True guarantees that q cannot k-dominate p. q needs <= in k dimensions but
/// only its values below mi_min(q) (at most `pivot` of them) or p's values
/// above mi_max(p) (at most k - 1 - pivot) can give one; together k - 1.
inline bool can_prune(const SortedProfile& p, const SortedProfile& q) {
  if (p.k != q.k || p.pivot != q.pivot || p.dim() != q.dim()) {
    throw InternalFault("can_prune on profiles built with different (d, k, pivot)");
  }
  return p.mi_max < q.mi_min;
}

struct Thresholds {
  double mi_min = 0.0;
  double mi_max = 0.0;

  bool operator==(const Thresholds&) const = default;
};

/// Placeholder payload for tables that only track ids.
struct NoRef {
  bool operator==(const NoRef&) const = default;
};

/// (threshold, id) sort key. `ref` is an optional payload the owner may use
/// to reach the item without a lookup; it takes no part in ordering.
template <typename Ref = NoRef>
struct TableKey {
  double threshold = 0.0;
  ItemId id = 0;
  [[no_unique_address]] Ref ref{};

  bool operator==(const TableKey& o) const noexcept { return threshold == o.threshold && id == o.id; }
};

struct DescendingThreshold {
  template <typename Ref>
  bool operator()(const TableKey<Ref>& a, const TableKey<Ref>& b) const noexcept {
    return a.threshold > b.threshold || (a.threshold == b.threshold && a.id < b.id);
  }
};

struct AscendingThreshold {
  template <typename Ref>
  bool operator()(const TableKey<Ref>& a, const TableKey<Ref>& b) const noexcept {
    return a.threshold < b.threshold || (a.threshold == b.threshold && a.id < b.id);
  }
};

/// Sorted contiguous run of keys with logarithmic lookup. Insert and erase
/// shift the tail, which for window-sized tables is a short memmove and keeps
/// iteration cache-friendly.
template <typename Ref, typename Compare>
class SortedKeys {
 public:
  using key_type = TableKey<Ref>;
  using const_iterator = typename std::vector<key_type>::const_iterator;

  const_iterator begin() const noexcept { return keys_.begin(); }
  const_iterator end() const noexcept { return keys_.end(); }
  std::size_t size() const noexcept { return keys_.size(); }
  bool empty() const noexcept { return keys_.empty(); }
  const key_type& operator[](std::size_t i) const noexcept { return keys_[i]; }

  void insert(const key_type& key) { keys_.insert(std::upper_bound(keys_.begin(), keys_.end(), key, Compare{}), key); }

  bool erase(const key_type& key) {
    auto it = std::lower_bound(keys_.begin(), keys_.end(), key, Compare{});
    if (it == keys_.end() || !(*it == key)) return false;
    keys_.erase(it);
    return true;
  }

  bool operator==(const SortedKeys&) const = default;

 private:
  std::vector<key_type> keys_;
};

/// The two middle indexing tables: by_max iterates mi_max descending, by_min
/// iterates mi_min ascending; equal thresholds come out by ascending id.
template <typename Ref = NoRef>
class BasicIndexTables {
 public:
  using ref_type = Ref;
  using MaxTable = SortedKeys<Ref, DescendingThreshold>;
  using MinTable = SortedKeys<Ref, AscendingThreshold>;

  const MaxTable& by_max() const noexcept { return by_max_; }
  const MinTable& by_min() const noexcept { return by_min_; }
  std::size_t size() const noexcept { return thresholds_.size(); }
  bool empty() const noexcept { return thresholds_.empty(); }
  bool contains(ItemId id) const { return thresholds_.contains(id); }

  const Thresholds& thresholds(ItemId id) const {
    auto it = thresholds_.find(id);
    if (it == thresholds_.end()) throw InternalFault("id " + std::to_string(id) + " not in index tables");
    return it->second;
  }

  void insert(ItemId id, const SortedProfile& profile, Ref ref = Ref{}) {
    if (!thresholds_.try_emplace(id, Thresholds{profile.mi_min, profile.mi_max}).second) {
      throw InternalFault("duplicate id " + std::to_string(id) + " in index tables");
    }
    by_max_.insert({profile.mi_max, id, ref});
    by_min_.insert({profile.mi_min, id, ref});
  }

  Thresholds remove(ItemId id) {
    auto it = thresholds_.find(id);
    if (it == thresholds_.end()) throw InternalFault("id " + std::to_string(id) + " not in index tables");
    const Thresholds t = it->second;
    thresholds_.erase(it);
    if (!by_max_.erase({t.mi_max, id, Ref{}}) || !by_min_.erase({t.mi_min, id, Ref{}})) {
      throw InternalFault("index tables out of sync for id " + std::to_string(id));
    }
    return t;
  }

  bool operator==(const BasicIndexTables&) const = default;

 private:
  MaxTable by_max_;
  MinTable by_min_;
  std::unordered_map<ItemId, Thresholds> thresholds_;
};

using IndexTables = BasicIndexTables<>;

template <typename Ref>
BasicIndexTables<Ref>& tables_insert(BasicIndexTables<Ref>& tables, ItemId id, const SortedProfile& profile,
                                     Ref ref = Ref{}) {
  tables.insert(id, profile, ref);
  return tables;
}

template <typename Ref>
BasicIndexTables<Ref>& tables_remove(BasicIndexTables<Ref>& tables, ItemId id) {
  tables.remove(id);
  return tables;
}

}  // namespace kdsky
