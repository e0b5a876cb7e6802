#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "kdsky/engines.hpp"
#include "test_support.hpp"

using namespace kdsky;
using kdsky::testing::five_items;

namespace {

EngineConfig five_items_config(std::size_t k, std::size_t capacity) {
  EngineConfig c;
  c.d = 4;
  c.k = k;
  c.capacity = capacity;
  c.bounds = NormalizationBounds::uniform(4, 0.0, 10.0);
  c.paranoid_checks = true;
  return c;
}

EngineConfig random_config(std::size_t d, std::size_t k, std::size_t capacity, int levels) {
  EngineConfig c;
  c.d = d;
  c.k = k;
  c.capacity = capacity;
  c.bounds = NormalizationBounds::uniform(d, 0.0, levels - 1.0);
  c.paranoid_checks = true;
  return c;
}

// Brute-force reference for the five-item fixture window: product formula with the
// subset form of k-dominance.
double oracle(const std::vector<UncertainItem>& window, ItemId id, std::size_t k) {
  for (const auto& item : window) {
    if (item.id == id) return kdsky::testing::direct_probability(window, item, k, kdsky::testing::subset_k_dominates);
  }
  return -1.0;
}

template <typename Engine>
void check_five_items(Engine& engine) {
  const auto items = five_items();
  const auto first = engine.push(items[0]);
  EXPECT_FALSE(first);
  EXPECT_DOUBLE_EQ(*engine.snapshot().probability_of(1), 0.2);
  for (std::size_t i = 1; i < items.size(); ++i) engine.push(items[i]);
  const auto snap = engine.snapshot();

  // u2 is 3-dominated by u1, u3, u4 and u5.
  const double u2 = 0.4 * (1 - 0.2) * (1 - 0.5) * (1 - 0.1) * (1 - 0.8);
  EXPECT_NEAR(oracle(items, 2, 3), u2, 1e-15);
  EXPECT_NEAR(*snap.probability_of(2), 0.0288, 1e-12);
  EXPECT_NEAR(*snap.probability_of(3), 0.5, 1e-12);
  for (const auto& item : items) EXPECT_NEAR(*snap.probability_of(item.id), oracle(items, item.id, 3), 1e-12);
}

}  // namespace

TEST(NaiveEngine, FiveItemsStream) {
  NaiveEngine engine(five_items_config(3, 5));
  check_five_items(engine);
}

TEST(MiEngine, FiveItemsStream) {
  MiEngine engine(five_items_config(3, 5));
  check_five_items(engine);
}

TEST(EngineConfig, Validation) {
  auto c = five_items_config(3, 5);
  c.k = 0;
  EXPECT_THROW(NaiveEngine{c}, InputError);
  c.k = 5;
  EXPECT_THROW(MiEngine{c}, InputError);
  c.k = 3;
  c.pivot = 3;
  EXPECT_THROW(MiEngine{c}, InputError);
  c.pivot = 2;
  EXPECT_NO_THROW(MiEngine{c});
  c.capacity = 0;
  EXPECT_THROW(MiEngine{c}, InputError);
  c.capacity = 5;
  c.bounds = NormalizationBounds::uniform(3, 0, 1);
  EXPECT_THROW(NaiveEngine{c}, InputError);
  EXPECT_EQ(five_items_config(11, 5).resolved_pivot(), 5u);
  EXPECT_EQ(five_items_config(4, 5).resolved_pivot(), 1u);
}

TEST(Engines, MalformedItemsRejectedWithoutMutation) {
  MiEngine mi(five_items_config(3, 5));
  NaiveEngine naive(five_items_config(3, 5));
  mi.push(five_items()[0]);
  naive.push(five_items()[0]);
  const std::vector<UncertainItem> bad{
      {2, {1, 2, 3}, 0.5},      // wrong dimensionality
      {2, {1, 2, 3, 11}, 0.5},  // outside bounds
      {2, {1, 2, 3, 4}, 0.0},   // zero probability
      {1, {1, 2, 3, 4}, 0.5},   // non-monotone id
  };
  for (const auto& item : bad) {
    EXPECT_THROW(mi.push(item), InputError);
    EXPECT_THROW(naive.push(item), InputError);
    EXPECT_EQ(mi.window().size(), 1u);
    EXPECT_EQ(mi.tables().size(), 1u);
    EXPECT_EQ(naive.window().size(), 1u);
  }
}

TEST(Engines, PushReturnsSnapshot) {
  MiEngine mi(five_items_config(3, 3));
  NaiveEngine naive(five_items_config(3, 3));
  for (const auto& item : five_items()) {
    const auto a = mi_push(mi, item);
    const auto b = naive_push(naive, item);
    EXPECT_EQ(a.ids(), b.ids());
  }
  EXPECT_EQ(mi.snapshot().ids(), (std::vector<ItemId>{3, 4, 5}));
}

// Lockstep equivalence, per-event counter dominance and membership, over a
// spread of random configurations including certain (P = 1) items.
TEST(EnginesProperty, MiMatchesNaiveEveryEvent) {
  std::mt19937_64 rng(31337);
  for (int trial = 0; trial < 80; ++trial) {
    const std::size_t d = 2 + trial % 8;
    const std::size_t k = 1 + rng() % d;
    const std::size_t capacity = 1 + rng() % 40;
    const int levels = trial % 3 == 0 ? 3 : 20;
    auto config = random_config(d, k, capacity, levels);
    config.pivot = rng() % k;
    MiEngine mi(config);
    NaiveEngine naive(config);
    for (ItemId id = 1; id <= 200; ++id) {
      const auto item = kdsky::testing::random_item(rng, id, d, levels);
      const auto mi_tests = mi.counters().dominance_tests;
      const auto naive_tests = naive.counters().dominance_tests;
      const auto ea = mi.push(item);
      const auto eb = naive.push(item);
      ASSERT_EQ(ea.has_value(), eb.has_value());
      ASSERT_LE(mi.counters().dominance_tests - mi_tests, naive.counters().dominance_tests - naive_tests);
      ASSERT_EQ(mi.tables().size(), mi.window().size());
      const auto& a = mi.window().entries();
      const auto& b = naive.window().entries();
      ASSERT_EQ(a.size(), b.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        ASSERT_EQ(a[i].id(), b[i].id());
        ASSERT_NEAR(a[i].probability(), b[i].probability(), 1e-9)
            << "trial " << trial << " event " << id << " d=" << d << " k=" << k;
      }
    }
    EXPECT_EQ(mi.counters().events, 200u);
  }
}

TEST(EnginesProperty, PivotDoesNotChangeResults) {
  std::mt19937_64 rng(4242);
  const std::size_t d = 8;
  const std::size_t k = 6;
  std::vector<UncertainItem> stream;
  for (ItemId id = 1; id <= 400; ++id) stream.push_back(kdsky::testing::random_item(rng, id, d, 10));
  std::vector<WindowSnapshot> finals;
  for (std::size_t pivot = 0; pivot < k; ++pivot) {
    auto config = random_config(d, k, 50, 10);
    config.pivot = pivot;
    MiEngine mi(config);
    for (const auto& item : stream) mi.push(item);
    finals.push_back(mi.snapshot());
  }
  for (const auto& snap : finals) {
    ASSERT_EQ(snap.ids(), finals.front().ids());
    for (const auto& e : snap.entries()) {
      EXPECT_NEAR(e.probability, *finals.front().probability_of(e.item.id), 1e-9);
    }
  }
}

TEST(Engines, RecomputeIntervalKeepsResults) {
  std::mt19937_64 rng(8);
  auto config = random_config(5, 3, 30, 6);
  auto rebuilt = config;
  rebuilt.recompute_interval = 7;
  MiEngine mi(rebuilt);
  NaiveEngine naive(config);
  for (ItemId id = 1; id <= 300; ++id) {
    const auto item = kdsky::testing::random_item(rng, id, 5, 6);
    mi.push(item);
    naive.push(item);
  }
  EXPECT_EQ(mi.counters().recomputes, 300u / 7);
  EXPECT_LT(mi.counters().max_recompute_drift, 1e-12);
  for (const auto& e : naive.window()) EXPECT_NEAR(mi.window().find(e.id())->probability(), e.probability(), 1e-12);
}

TEST(MiEngine, WorseningStreamNeverTouchesStoredProbabilities) {
  // Each new item is uniformly worse than everything before it, so its
  // mi_min exceeds every stored mi_max.
  EngineConfig config;
  config.d = 3;
  config.k = 2;
  config.capacity = 50;
  config.bounds = NormalizationBounds::uniform(3, 0.0, 100.0);
  config.paranoid_checks = true;
  MiEngine mi(config);
  for (ItemId id = 1; id <= 20; ++id) {
    const double base = 4.0 * static_cast<double>(id);
    const auto before = mi.snapshot();
    const auto tests_before = mi.counters().dominance_tests;
    mi.push(UncertainItem{id, {base, base + 1, base + 2}, 0.5});
    for (const auto& e : before.entries()) EXPECT_EQ(*mi.snapshot().probability_of(e.item.id), e.probability);
    // Insertion pass breaks at once; only the calculate pass runs tests.
    EXPECT_EQ(mi.counters().dominance_tests - tests_before, id - 1);
  }
}

TEST(MiEngine, FaultInjectionSkippingEvictionDiverges) {
  std::mt19937_64 rng(77);
  auto config = random_config(4, 3, 10, 5);
  auto faulty = config;
  faulty.fault_skip_eviction_update = true;
  MiEngine bad(faulty);
  NaiveEngine good(config);
  std::optional<ItemId> first_bad;
  for (ItemId id = 1; id <= 200 && !first_bad; ++id) {
    const auto item = kdsky::testing::random_item(rng, id, 4, 5);
    bad.push(item);
    good.push(item);
    for (const auto& e : good.window()) {
      if (std::abs(bad.window().find(e.id())->probability() - e.probability()) > 1e-9) first_bad = id;
    }
  }
  ASSERT_TRUE(first_bad);
  EXPECT_GT(*first_bad, config.capacity);
}

// Direct calls into the three sub-operations.

namespace {

struct Fixture {
  EngineConfig config;
  SlidingWindow window;
  IndexTables tables;
  MiOptions opt;

  explicit Fixture(std::size_t d = 3, std::size_t k = 2, std::size_t pivot = 0)
      : window(10), opt{k, true} {
    config.d = d;
    config.k = k;
    config.pivot = pivot;
    config.bounds = NormalizationBounds::uniform(d, 0.0, 1.0);
  }

  SortedProfile profile(const UncertainItem& item) const {
    return build_profile(normalize(item.attrs, config.bounds), config.k, config.resolved_pivot());
  }

  Thresholds thresholds(const UncertainItem& item) const {
    const auto p = profile(item);
    return {p.mi_min, p.mi_max};
  }

  // Adds an item with a fully computed ledger, bypassing the engine.
  void seed(const UncertainItem& item) {
    SkylineLedgerEntry fresh(item);
    struct Hooks {
      Fixture& f;
      void on_evict(const UncertainItem&, SlidingWindow&) {}
      void on_insert(SkylineLedgerEntry& e, SlidingWindow& w) {
        for (auto& other : w) {
          if (k_dominates(e.item(), other.item(), f.config.k)) other.add_dominator(e.item().prob);
          if (k_dominates(other.item(), e.item(), f.config.k)) e.add_dominator(other.item().prob);
        }
        mi_sort(f.tables, e.id(), f.profile(e.item()));
      }
    } hooks{*this};
    window.push(std::move(fresh), hooks);
  }
};

}  // namespace

TEST(MiUpdate, BreaksImmediatelyWhenNewItemTooLarge) {
  Fixture f;
  f.seed({1, {0.1, 0.2, 0.3}, 0.5});
  f.seed({2, {0.2, 0.3, 0.1}, 0.5});
  const UncertainItem fresh{3, {0.8, 0.9, 0.95}, 0.5};
  const auto stats = mi_update(f.tables, f.window, fresh, f.thresholds(fresh), std::nullopt, f.opt);
  EXPECT_EQ(stats.dominance_tests, 0u);
  EXPECT_EQ(stats.pruned, 2u);
}

TEST(MiUpdate, AllZeroItemHitsEveryEntryWithAPositiveCoordinate) {
  Fixture f;
  f.seed({1, {0.1, 0.2, 0.3}, 0.5});
  f.seed({2, {0.0, 0.0, 0.0}, 0.6});
  f.seed({3, {0.0, 0.7, 0.0}, 0.3});
  const auto before = f.window.snapshot();
  const UncertainItem zero{4, {0.0, 0.0, 0.0}, 0.25};
  mi_update(f.tables, f.window, zero, f.thresholds(zero), std::nullopt, f.opt);
  EXPECT_NEAR(f.window.find(1)->probability(), *before.probability_of(1) * 0.75, 1e-15);
  EXPECT_EQ(f.window.find(2)->probability(), *before.probability_of(2));
  EXPECT_NEAR(f.window.find(3)->probability(), *before.probability_of(3) * 0.75, 1e-15);
}

TEST(MiUpdate, NoDominanceLeavesProbabilitiesUnchanged) {
  Fixture f(3, 3, 1);
  f.seed({1, {0.2, 0.5, 0.8}, 0.5});
  f.seed({2, {0.8, 0.5, 0.2}, 0.4});
  const auto before = f.window.snapshot();
  const UncertainItem fresh{3, {0.5, 0.5, 0.5}, 0.9};  // not pruned, dominates nobody
  const auto stats = mi_update(f.tables, f.window, fresh, f.thresholds(fresh), std::nullopt, f.opt);
  EXPECT_EQ(stats.dominance_tests, 2u);
  for (const auto& e : before.entries()) EXPECT_EQ(*f.window.snapshot().probability_of(e.item.id), e.probability);
}

TEST(MiUpdate, EvictionPassRemovesOldFactor) {
  Fixture f;
  const UncertainItem old_item{1, {0.1, 0.1, 0.1}, 0.5};
  f.seed(old_item);
  f.seed({2, {0.5, 0.6, 0.7}, 0.4});
  ASSERT_NEAR(f.window.find(2)->probability(), 0.2, 1e-15);
  // Evict by hand: out of the window and tables, then the pass.
  const auto old_thresholds = f.tables.remove(1);
  struct NoHooks {
    void on_evict(const UncertainItem&, SlidingWindow&) {}
    void on_insert(SkylineLedgerEntry&, SlidingWindow&) {}
  };
  SlidingWindow rest(10);
  NoHooks none;
  for (const auto& e : f.window) {
    if (e.id() != 1) rest.push(e, none);
  }
  const UncertainItem fresh{3, {0.05, 0.05, 0.05}, 0.25};
  mi_update(f.tables, rest, fresh, f.thresholds(fresh), EvictedItem{old_item, old_thresholds}, f.opt);
  EXPECT_NEAR(rest.find(2)->probability(), 0.4 * 0.75, 1e-15);
}

TEST(MiCalculate, EmptyWindowReturnsOwnProbability) {
  Fixture f;
  SkylineLedgerEntry fresh(UncertainItem{1, {0.3, 0.3, 0.3}, 0.4});
  PassStats stats;
  EXPECT_EQ(mi_calculate(f.tables, f.window, fresh, f.thresholds(fresh.item()), f.opt, stats), 0.4);
  EXPECT_EQ(stats.dominance_tests, 0u);
}

TEST(MiCalculate, SingleDominator) {
  Fixture f;
  f.seed({1, {0.1, 0.1, 0.1}, 0.5});
  SkylineLedgerEntry fresh(UncertainItem{2, {0.3, 0.3, 0.3}, 0.4});
  PassStats stats;
  EXPECT_NEAR(mi_calculate(f.tables, f.window, fresh, f.thresholds(fresh.item()), f.opt, stats), 0.2, 1e-15);
  EXPECT_EQ(stats.dominance_tests, 1u);
}

TEST(MiCalculate, BreaksImmediatelyWhenNewItemTooSmall) {
  Fixture f;
  f.seed({1, {0.6, 0.7, 0.8}, 0.5});
  f.seed({2, {0.9, 0.7, 0.6}, 0.5});
  SkylineLedgerEntry fresh(UncertainItem{3, {0.1, 0.2, 0.3}, 0.4});
  PassStats stats;
  EXPECT_EQ(mi_calculate(f.tables, f.window, fresh, f.thresholds(fresh.item()), f.opt, stats), 0.4);
  EXPECT_EQ(stats.dominance_tests, 0u);
  EXPECT_EQ(stats.pruned, 2u);
}

TEST(MiSort, DelegatesToTableInsert) {
  Fixture f;
  const UncertainItem a{1, {0.1, 0.4, 0.9}, 0.5};
  mi_sort(f.tables, a.id, f.profile(a));
  EXPECT_EQ(f.tables.size(), 1u);
  const UncertainItem b{2, {0.5, 0.6, 0.7}, 0.5};
  mi_sort(f.tables, b.id, f.profile(b));
  EXPECT_EQ(f.tables.by_max().begin()->id, 2u);
  EXPECT_EQ(f.tables.by_min().begin()->id, 1u);
  EXPECT_THROW(mi_sort(f.tables, b.id, f.profile(b)), InternalFault);
}

TEST(MiUpdate, DesynchronizedTablesAreFault) {
  Fixture f;
  f.seed({1, {0.1, 0.2, 0.3}, 0.5});
  f.tables.insert(99, f.profile({99, {0.2, 0.2, 0.2}, 0.5}));
  const UncertainItem fresh{2, {0.0, 0.0, 0.0}, 0.5};
  EXPECT_THROW(mi_update(f.tables, f.window, fresh, f.thresholds(fresh), std::nullopt, f.opt), InternalFault);
}
