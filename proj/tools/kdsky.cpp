// Command-line harness: benchmark and verify the k-dominant skyline engines.
//
// Exit codes: 0 success, 1 verification mismatch, 2 usage/config error,
// 3 ingestion error.

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kdsky/kdsky.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitMismatch = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIngestion = 3;

struct Options {
  std::string engine = "mi";
  std::size_t dim = 12;
  std::optional<std::size_t> k;
  std::size_t window = 300;
  std::size_t items = 10'000;
  std::optional<std::size_t> pivot;
  std::uint64_t seed = 1;
  std::string dist = "independent";
  std::string prob = "uniform";
  std::string input;
  std::string prob_column = "prob";
  std::string bounds;
  std::size_t repeat = 10;
  std::size_t recompute_interval = 0;
  bool verify = false;
  std::string report;
  std::vector<std::size_t> sweep_k;
  std::vector<std::size_t> sweep_window;
};

// "min,max" for every dimension, or "min1,max1,min2,max2,..." per dimension.
std::vector<std::pair<double, double>> parse_bounds(const std::string& text) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    const std::string cell = text.substr(start, comma - start);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
      throw kdsky::InputError("--bounds: bad number '" + cell + "'");
    }
    values.push_back(v);
    start = comma + 1;
  }
  if (values.empty() || values.size() % 2 != 0) throw kdsky::InputError("--bounds needs min,max pairs");
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < values.size(); i += 2) out.emplace_back(values[i], values[i + 1]);
  return out;
}

class Emitter {
 public:
  explicit Emitter(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw kdsky::InputError("cannot write report file '" + path + "'");
    }
  }

  void emit(const nlohmann::json& j) {
    const std::string line = j.dump();
    std::cout << line << '\n';
    if (file_.is_open()) file_ << line << '\n';
  }

 private:
  std::ofstream file_;
};

int run(const Options& opt) {
  const auto engine = opt.engine == "naive" ? kdsky::EngineKind::naive : kdsky::EngineKind::mi;
  std::optional<std::vector<std::pair<double, double>>> bounds_arg;
  if (!opt.bounds.empty()) bounds_arg = parse_bounds(opt.bounds);

  kdsky::StreamSource source;
  kdsky::NormalizationBounds bounds;
  std::size_t d = opt.dim;
  if (!opt.input.empty()) {
    std::optional<kdsky::NormalizationBounds> declared;
    if (bounds_arg) {
      // A single pair applies to every column; the column count is only known after the header.
      std::ifstream probe(opt.input);
      std::string header;
      std::getline(probe, header);
      const auto columns = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
      const std::size_t file_dim = columns > 1 ? columns - 1 : 1;
      declared = bounds_arg->size() == 1 ? kdsky::NormalizationBounds::uniform(file_dim, bounds_arg->front().first,
                                                                               bounds_arg->front().second)
                                         : kdsky::NormalizationBounds(*bounds_arg);
    }
    auto loaded = kdsky::load_stream(opt.input, declared, opt.prob_column);
    d = loaded.attribute_names.size();
    bounds = loaded.bounds;
    source = kdsky::FileSource{opt.input, std::move(loaded.items)};
  } else {
    kdsky::GeneratorSpec spec;
    spec.distribution = kdsky::parse_distribution(opt.dist);
    spec.d = opt.dim;
    spec.count = opt.items;
    spec.seed = opt.seed;
    spec.prob_model = kdsky::parse_prob_model(opt.prob);
    if (bounds_arg) {
      if (bounds_arg->size() != 1) throw kdsky::InputError("generated streams take a single global --bounds min,max");
      spec.value_range = bounds_arg->front();
    }
    spec.validate();
    bounds = spec.bounds();
    source = spec;
  }

  const std::vector<std::size_t> ks = opt.sweep_k.empty() ? std::vector<std::size_t>{opt.k.value_or(d > 1 ? std::min<std::size_t>(11, d - 1) : 1)}
                                                          : opt.sweep_k;
  const std::vector<std::size_t> windows = opt.sweep_window.empty() ? std::vector<std::size_t>{opt.window}
                                                                    : opt.sweep_window;

  std::vector<kdsky::EngineConfig> grid;
  for (auto k : ks) {
    for (auto w : windows) {
      kdsky::EngineConfig c;
      c.d = d;
      c.k = k;
      c.capacity = w;
      c.pivot = opt.pivot;
      c.bounds = bounds;
      c.recompute_interval = opt.recompute_interval;
      c.validate();
      grid.push_back(std::move(c));
    }
  }

  Emitter out(opt.report);
  if (opt.verify) {
    bool all_passed = true;
    for (const auto& config : grid) {
      const auto items = kdsky::materialize(source, 0);
      const auto result = kdsky::run_verify(config, items);
      auto j = kdsky::to_json(result);
      j["d"] = config.d;
      j["k"] = config.k;
      j["window"] = config.capacity;
      j["pivot"] = config.resolved_pivot();
      if (const auto* spec = std::get_if<kdsky::GeneratorSpec>(&source)) {
        j["seed"] = spec->seed;
        j["distribution"] = kdsky::to_string(spec->distribution);
      } else {
        j["source"] = opt.input;
      }
      out.emit(j);
      all_passed = all_passed && result.passed;
    }
    return all_passed ? kExitOk : kExitMismatch;
  }

  for (const auto& config : grid) {
    kdsky::BenchSetup setup{engine, config, source, opt.repeat};
    const auto result = kdsky::run_bench(setup);
    for (const auto& r : result.runs) out.emit(kdsky::to_json(r));
    out.emit(kdsky::to_json(result.average));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"k-dominant skyline maintenance over uncertain streams: benchmark and verify"};
  Options opt;
  app.add_option("--engine", opt.engine, "Engine to benchmark")->check(CLI::IsMember({"mi", "naive"}));
  app.add_option("--dim", opt.dim, "Dimensionality of generated items")->check(CLI::PositiveNumber);
  app.add_option("--k", opt.k, "Dominance parameter k (default 11, or d-1 when d <= 11)");
  app.add_option("--window", opt.window, "Sliding window capacity")->check(CLI::PositiveNumber);
  app.add_option("--items", opt.items, "Number of generated items")->check(CLI::PositiveNumber);
  app.add_option("--pivot", opt.pivot, "Shared pivot position in [0, k-1] (default floor((k-1)/2))");
  app.add_option("--seed", opt.seed, "Generator seed; repeat r uses seed + r");
  app.add_option("--dist", opt.dist, "independent | correlated | anticorrelated");
  app.add_option("--prob", opt.prob, "uniform | fixed:<p>");
  app.add_option("--input", opt.input, "CSV stream file (header row, one probability column)");
  app.add_option("--prob-column", opt.prob_column, "Name of the probability column in --input");
  app.add_option("--bounds", opt.bounds, "min,max for every dimension, or min,max pairs per dimension");
  app.add_option("--repeat", opt.repeat, "Benchmark repetitions to average")->check(CLI::PositiveNumber);
  app.add_option("--recompute-interval", opt.recompute_interval, "Rebuild ledgers every N events (0 = never)");
  app.add_flag("--verify", opt.verify, "Run MI and naive engines in lockstep and compare every event");
  app.add_option("--report", opt.report, "Also write JSON-lines report to this path");
  app.add_option("--sweep-k", opt.sweep_k, "List of k values to sweep")->delimiter(',');
  app.add_option("--sweep-window", opt.sweep_window, "List of window sizes to sweep")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    return run(opt);
  } catch (const kdsky::IngestionError& e) {
    std::cerr << "ingestion error: " << e.what() << '\n';
    return kExitIngestion;
  } catch (const kdsky::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const kdsky::InternalFault& e) {
    std::cerr << "internal fault: " << e.what() << '\n';
    return kExitMismatch;
  }
}
