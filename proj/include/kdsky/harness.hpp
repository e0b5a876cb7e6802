#pragma once

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "engines.hpp"
#include "streamgen.hpp"

namespace kdsky {

/// Items read once from a file; every repeat replays the same stream.
struct FileSource {
  std::string path;
  std::vector<UncertainItem> items;
};

/// Either a generator (repeat r uses seed + r) or a preloaded file.
using StreamSource = std::variant<GeneratorSpec, FileSource>;

inline std::vector<UncertainItem> materialize(const StreamSource& source, std::size_t run_index) {
  if (const auto* spec = std::get_if<GeneratorSpec>(&source)) {
    GeneratorSpec s = *spec;
    s.seed += run_index;
    return generate(s);
  }
  return std::get<FileSource>(source).items;
}

struct BenchSetup {
  EngineKind engine = EngineKind::mi;
  EngineConfig config;
  StreamSource source = GeneratorSpec{};
  std::size_t repeat = 10;
};

struct RunReport {
  std::string kind = "run";  // "run" or "average"
  std::size_t run_index = 0;
  std::size_t runs = 1;

  EngineKind engine = EngineKind::mi;
  std::size_t d = 0;
  std::size_t k = 0;
  std::size_t window = 0;
  std::size_t pivot = 0;
  std::uint64_t seed = 0;
  std::string distribution;
  std::string prob_model;
  std::string source;
  std::size_t items = 0;

  double total_seconds = 0.0;
  double mean_event_us = 0.0;
  double median_event_us = 0.0;
  std::uint64_t dominance_tests = 0;
  std::uint64_t pruned = 0;
  std::optional<std::string> snapshot_digest;
};

inline nlohmann::json to_json(const RunReport& r) {
  nlohmann::json j{
      {"kind", r.kind},
      {"run", r.run_index},
      {"runs", r.runs},
      {"engine", to_string(r.engine)},
      {"d", r.d},
      {"k", r.k},
      {"window", r.window},
      {"pivot", r.pivot},
      {"seed", r.seed},
      {"distribution", r.distribution},
      {"prob", r.prob_model},
      {"source", r.source},
      {"items", r.items},
      {"total_seconds", r.total_seconds},
      {"mean_event_us", r.mean_event_us},
      {"median_event_us", r.median_event_us},
      {"dominance_tests", r.dominance_tests},
      {"pruned", r.pruned},
  };
  j["snapshot_digest"] = r.snapshot_digest ? nlohmann::json(*r.snapshot_digest) : nlohmann::json(nullptr);
  return j;
}

/// FNV-1a over (id, probability bits) of every snapshot entry.
inline std::string snapshot_digest(const SlidingWindow& window) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& e : window) {
    mix(e.id());
    mix(std::bit_cast<std::uint64_t>(e.probability()));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {

inline RunReport echo(const BenchSetup& setup) {
  RunReport r;
  r.engine = setup.engine;
  r.d = setup.config.d;
  r.k = setup.config.k;
  r.window = setup.config.capacity;
  r.pivot = setup.config.resolved_pivot();
  if (const auto* spec = std::get_if<GeneratorSpec>(&setup.source)) {
    r.seed = spec->seed;
    r.distribution = to_string(spec->distribution);
    r.prob_model = spec->prob_model.to_string();
    r.source = "generator";
    r.items = spec->count;
  } else {
    const auto& file = std::get<FileSource>(setup.source);
    r.distribution = "file";
    r.prob_model = "file";
    r.source = file.path;
    r.items = file.items.size();
  }
  return r;
}

template <StreamEngine Engine>
void drive(Engine& engine, std::vector<UncertainItem>& items, std::vector<double>& event_us) {
  using clock = std::chrono::steady_clock;
  event_us.clear();
  event_us.reserve(items.size());
  for (auto& item : items) {
    const auto t0 = clock::now();
    engine.push(std::move(item));
    const auto t1 = clock::now();
    event_us.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
  }
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

template <StreamEngine Engine>
RunReport single_run(const BenchSetup& setup, std::size_t run_index) {
  std::vector<UncertainItem> items = materialize(setup.source, run_index);
  Engine engine(setup.config);
  std::vector<double> event_us;
  drive(engine, items, event_us);

  RunReport r = echo(setup);
  r.run_index = run_index;
  if (std::holds_alternative<GeneratorSpec>(setup.source)) r.seed += run_index;
  r.items = event_us.size();
  r.total_seconds = std::accumulate(event_us.begin(), event_us.end(), 0.0) * 1e-6;
  r.mean_event_us = event_us.empty() ? 0.0 : r.total_seconds * 1e6 / static_cast<double>(event_us.size());
  r.median_event_us = median(std::move(event_us));
  r.dominance_tests = engine.counters().dominance_tests;
  r.pruned = engine.counters().pruned;
  r.snapshot_digest = snapshot_digest(engine.window());
  return r;
}

}  // namespace detail

struct BenchResult {
  std::vector<RunReport> runs;
  RunReport average;
};

/// Runs the selected engine `repeat` times; only event processing is timed.
inline BenchResult run_bench(const BenchSetup& setup) {
  setup.config.validate();
  if (setup.repeat < 1) throw InputError("repeat must be at least 1");

  BenchResult out;
  for (std::size_t r = 0; r < setup.repeat; ++r) {
    out.runs.push_back(setup.engine == EngineKind::mi ? detail::single_run<MiEngine>(setup, r)
                                                      : detail::single_run<NaiveEngine>(setup, r));
  }

  RunReport& avg = out.average;
  avg = detail::echo(setup);
  avg.kind = "average";
  avg.runs = out.runs.size();
  const double n = static_cast<double>(out.runs.size());
  double tests = 0.0;
  double pruned = 0.0;
  for (const auto& r : out.runs) {
    avg.total_seconds += r.total_seconds / n;
    avg.mean_event_us += r.mean_event_us / n;
    avg.median_event_us += r.median_event_us / n;
    tests += static_cast<double>(r.dominance_tests) / n;
    pruned += static_cast<double>(r.pruned) / n;
  }
  avg.dominance_tests = static_cast<std::uint64_t>(std::llround(tests));
  avg.pruned = static_cast<std::uint64_t>(std::llround(pruned));
  if (out.runs.size() == 1) avg.snapshot_digest = out.runs.front().snapshot_digest;
  return out;
}

struct Divergence {
  std::size_t event = 0;  // 1-based event index
  ItemId item_id = 0;     // window item whose values differ (0: membership differs)
  double mi_value = 0.0;
  double naive_value = 0.0;
};

struct VerifyResult {
  bool passed = true;
  std::size_t events = 0;
  double max_abs_diff = 0.0;
  std::optional<Divergence> first_divergence;
};

inline nlohmann::json to_json(const VerifyResult& v) {
  nlohmann::json j{{"kind", "verify"},
                   {"passed", v.passed},
                   {"events", v.events},
                   {"max_abs_diff", v.max_abs_diff}};
  if (v.first_divergence) {
    const auto& d = *v.first_divergence;
    j["first_divergence"] = {
        {"event", d.event}, {"item_id", d.item_id}, {"mi", d.mi_value}, {"naive", d.naive_value}};
  } else {
    j["first_divergence"] = nullptr;
  }
  return j;
}

inline constexpr double kVerifyTolerance = 1e-9;

/// Runs both engines in lockstep and compares every window after every event.
inline VerifyResult run_verify(const EngineConfig& config, const std::vector<UncertainItem>& items,
                               double tolerance = kVerifyTolerance) {
  NaiveEngine naive(config);
  MiEngine mi(config);
  VerifyResult result;
  for (const auto& item : items) {
    naive.push(item);
    mi.push(item);
    ++result.events;

    const auto& a = mi.window().entries();
    const auto& b = naive.window().entries();
    std::optional<Divergence> bad;
    if (a.size() != b.size()) {
      bad = Divergence{result.events, 0, static_cast<double>(a.size()), static_cast<double>(b.size())};
    }
    for (std::size_t i = 0; i < a.size() && !bad; ++i) {
      if (a[i].id() != b[i].id()) {
        bad = Divergence{result.events, 0, static_cast<double>(a[i].id()), static_cast<double>(b[i].id())};
        break;
      }
      const double pa = a[i].probability();
      const double pb = b[i].probability();
      const double diff = std::abs(pa - pb);
      result.max_abs_diff = std::max(result.max_abs_diff, diff);
      if (!(diff <= tolerance)) bad = Divergence{result.events, a[i].id(), pa, pb};
    }
    if (bad) {
      result.passed = false;
      result.first_divergence = bad;
      return result;
    }
  }
  return result;
}

}  // namespace kdsky
