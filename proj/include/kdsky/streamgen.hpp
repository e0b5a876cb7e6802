#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "core.hpp"
#include "errors.hpp"
#include "mi_index.hpp"

namespace kdsky {

enum class Distribution { independent, correlated, anticorrelated };

inline std::string to_string(Distribution d) {
  switch (d) {
    case Distribution::correlated: return "correlated";
    case Distribution::anticorrelated: return "anticorrelated";
    default: return "independent";
  }
}

inline Distribution parse_distribution(std::string_view s) {
  if (s == "independent") return Distribution::independent;
  if (s == "correlated") return Distribution::correlated;
  if (s == "anticorrelated" || s == "anti-correlated") return Distribution::anticorrelated;
  throw InputError("unknown distribution '" + std::string(s) + "'");
}

/// Occurrence probability model: uniform on (0, 1], or a fixed p.
struct ProbModel {
  std::optional<double> fixed;

  static ProbModel uniform() { return {}; }
  static ProbModel fixed_at(double p) { return {p}; }

  std::string to_string() const {
    if (!fixed) return "uniform";
    std::ostringstream os;
    os << "fixed:" << *fixed;
    return os.str();
  }
};

inline ProbModel parse_prob_model(std::string_view s) {
  if (s == "uniform") return ProbModel::uniform();
  constexpr std::string_view prefix = "fixed:";
  if (s.starts_with(prefix)) {
    const auto body = s.substr(prefix.size());
    double p = 0.0;
    auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), p);
    if (ec == std::errc() && ptr == body.data() + body.size() && p > 0.0 && p <= 1.0) return ProbModel::fixed_at(p);
  }
  throw InputError("probability model must be 'uniform' or 'fixed:<p>' with p in (0, 1], got '" + std::string(s) + "'");
}

struct GeneratorSpec {
  Distribution distribution = Distribution::independent;
  std::size_t d = 12;
  std::size_t count = 10'000;
  std::uint64_t seed = 1;
  std::pair<double, double> value_range{0.0, 1.0};
  ProbModel prob_model;

  void validate() const {
    if (d < 1) throw InputError("generator dimensionality must be at least 1");
    if (count < 1) throw InputError("generator count must be at least 1");
    if (!std::isfinite(value_range.first) || !std::isfinite(value_range.second) ||
        !(value_range.first < value_range.second)) {
      throw InputError("generator value range must satisfy min < max");
    }
    if (prob_model.fixed && !(*prob_model.fixed > 0.0 && *prob_model.fixed <= 1.0)) {
      throw InputError("fixed probability must be in (0, 1]");
    }
  }

  NormalizationBounds bounds() const { return NormalizationBounds::uniform(d, value_range.first, value_range.second); }
};

namespace detail {

// Unit-cube point for the usual skyline benchmark families. Correlated points
// hug the main diagonal; anti-correlated points lie near the plane
// sum(x) = d/2, so a good value in one dimension costs in the others.
inline std::vector<double> unit_point(Distribution dist, std::size_t d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> x(d);
  if (dist == Distribution::independent) {
    for (auto& v : x) v = unit(rng);
    return x;
  }
  std::normal_distribution<double> centre(0.5, dist == Distribution::correlated ? 0.25 : 0.05);
  std::normal_distribution<double> spread(0.0, dist == Distribution::correlated ? 0.05 : 0.25);
  for (;;) {
    const double c = centre(rng);
    if (c < 0.0 || c > 1.0) continue;
    double mean = 0.0;
    for (auto& v : x) {
      v = spread(rng);
      mean += v;
    }
    mean /= static_cast<double>(d);
    bool inside = true;
    for (auto& v : x) {
      // Removing the sample mean pins the anti-correlated sum to d * c.
      v = dist == Distribution::anticorrelated ? c + (v - mean) : c + v;
      inside = inside && v >= 0.0 && v <= 1.0;
    }
    if (inside) return x;
  }
}

}  // namespace detail

/// Deterministic synthetic stream; ids run 1..count.
inline std::vector<UncertainItem> generate(const GeneratorSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto [lo, hi] = spec.value_range;
  std::vector<UncertainItem> items;
  items.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    UncertainItem item;
    item.id = i + 1;
    item.attrs = detail::unit_point(spec.distribution, spec.d, rng);
    for (auto& v : item.attrs) v = std::clamp(lo + v * (hi - lo), lo, hi);
    // 1 - U[0,1) lies in (0, 1].
    item.prob = spec.prob_model.fixed ? *spec.prob_model.fixed : 1.0 - unit(rng);
    items.push_back(std::move(item));
  }
  return items;
}

struct LoadedStream {
  std::vector<std::string> attribute_names;
  std::vector<UncertainItem> items;
  NormalizationBounds bounds;  // declared, or observed min/max when none were declared
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/// Reads a comma-separated stream: a header naming the attribute columns and
/// one probability column, then one item per line. Items get ids 1..n in file
/// order. Without declared bounds, the observed per-dimension min/max is used
/// (a constant column gets [v, v + 1]).
inline LoadedStream load_stream(const std::string& path, const std::optional<NormalizationBounds>& declared,
                                const std::string& prob_column = "prob") {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open '" + path + "'");

  std::string line;
  std::size_t row = 0;
  if (!std::getline(in, line)) throw IngestionError("'" + path + "' has no header row", 1);
  ++row;
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  const auto header = detail::split_csv(line);

  LoadedStream out;
  std::optional<std::size_t> prob_index;
  std::vector<std::size_t> attr_index;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == prob_column) {
      if (prob_index) throw IngestionError("probability column '" + prob_column + "' appears twice", row);
      prob_index = c;
    } else {
      attr_index.push_back(c);
      out.attribute_names.emplace_back(header[c]);
    }
  }
  if (!prob_index) throw IngestionError("missing probability column '" + prob_column + "'", row);
  if (attr_index.empty()) throw IngestionError("no attribute columns", row);
  const std::size_t d = attr_index.size();
  if (declared && declared->dim() != d) {
    throw IngestionError("declared bounds cover " + std::to_string(declared->dim()) + " dimensions, file has " +
                         std::to_string(d));
  }

  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != header.size()) {
      throw IngestionError("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(cells.size()),
                           row);
    }
    UncertainItem item;
    item.id = out.items.size() + 1;
    item.attrs.reserve(d);
    for (std::size_t j = 0; j < d; ++j) {
      const auto v = detail::parse_double(cells[attr_index[j]]);
      if (!v) throw IngestionError("bad number in column '" + out.attribute_names[j] + "'", row);
      if (declared && !(*v >= declared->min(j) && *v <= declared->max(j))) {
        throw IngestionError("value in column '" + out.attribute_names[j] + "' outside declared bounds", row);
      }
      item.attrs.push_back(*v);
    }
    const auto p = detail::parse_double(cells[*prob_index]);
    if (!p) throw IngestionError("bad probability", row);
    if (!(*p > 0.0 && *p <= 1.0)) throw IngestionError("probability outside (0, 1]", row);
    item.prob = *p;
    out.items.push_back(std::move(item));
  }

  if (declared) {
    out.bounds = *declared;
  } else {
    std::vector<std::pair<double, double>> ranges(d, {0.0, 1.0});
    for (std::size_t j = 0; j < d && !out.items.empty(); ++j) {
      auto [lo, hi] = std::minmax_element(out.items.begin(), out.items.end(),
                                          [j](const auto& a, const auto& b) { return a.attrs[j] < b.attrs[j]; });
      ranges[j] = {lo->attrs[j], hi->attrs[j]};
      if (!(ranges[j].first < ranges[j].second)) ranges[j].second = ranges[j].first + 1.0;
    }
    out.bounds = NormalizationBounds(std::move(ranges));
  }
  return out;
}

}  // namespace kdsky
