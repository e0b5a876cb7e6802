#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace kdsky {

/// Arrival sequence number; strictly increasing along a stream.
using ItemId = std::uint64_t;

/// One stream tuple: d attribute values (smaller is better) and an
/// occurrence probability in (0, 1].
struct UncertainItem {
  ItemId id = 0;
  std::vector<double> attrs;
  double prob = 1.0;

  std::size_t dim() const noexcept { return attrs.size(); }

  bool operator==(const UncertainItem&) const = default;
};

/// Rejects items that cannot enter a stream of dimensionality d.
inline void validate_item(const UncertainItem& item, std::size_t d) {
  if (item.attrs.size() != d) {
    throw InputError("item " + std::to_string(item.id) + " has " + std::to_string(item.attrs.size()) +
                     " attributes, expected " + std::to_string(d));
  }
  if (!(item.prob > 0.0 && item.prob <= 1.0)) {
    throw InputError("item " + std::to_string(item.id) + " has probability outside (0, 1]");
  }
  for (std::size_t j = 0; j < d; ++j) {
    if (!std::isfinite(item.attrs[j])) {
      throw InputError("item " + std::to_string(item.id) + " has a non-finite value in dimension " +
                       std::to_string(j));
    }
  }
}

struct DominanceCount {
  std::size_t le_count = 0;  // dimensions where a <= b
  std::size_t lt_count = 0;  // dimensions where a < b

  bool operator==(const DominanceCount&) const = default;
};

inline DominanceCount dominance_counts(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InputError("dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  DominanceCount c;
  for (std::size_t j = 0; j < a.size(); ++j) {
    c.le_count += static_cast<std::size_t>(a[j] <= b[j]);
    c.lt_count += static_cast<std::size_t>(a[j] < b[j]);
  }
  return c;
}

inline DominanceCount dominance_counts(const UncertainItem& a, const UncertainItem& b) {
  return dominance_counts(a.attrs, b.attrs);
}

/// Full (d-)dominance: a <= b everywhere and a < b somewhere.
inline bool dominates(const UncertainItem& a, const UncertainItem& b) {
  const auto c = dominance_counts(a, b);
  return c.le_count == a.dim() && c.lt_count >= 1;
}

/// a k-dominates b when a <= b in at least k dimensions and a < b in at
/// least one. A strict dimension is also a <= dimension, so a size-k subset
/// containing it can always be picked; counting is enough.
inline bool k_dominates(const UncertainItem& a, const UncertainItem& b, std::size_t k) {
  if (k < 1 || k > a.dim()) {
    throw InputError("k = " + std::to_string(k) + " outside [1, " + std::to_string(a.dim()) + "]");
  }
  const auto c = dominance_counts(a, b);
  return c.le_count >= k && c.lt_count >= 1;
}

/// Brute-force O(n^2 d) k-dominant skyline: ids of items that no other item
/// k-dominates, in input order. Meant for checking, not for the stream path.
inline std::vector<ItemId> k_dominant_skyline(std::span<const UncertainItem> items, std::size_t k) {
  std::vector<ItemId> sky;
  if (!items.empty() && (k < 1 || k > items.front().dim())) {
    throw InputError("k = " + std::to_string(k) + " outside [1, " + std::to_string(items.front().dim()) + "]");
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < items.size() && !dominated; ++j) {
      dominated = j != i && k_dominates(items[j], items[i], k);
    }
    if (!dominated) sky.push_back(items[i].id);
  }
  return sky;
}

}  // namespace kdsky
