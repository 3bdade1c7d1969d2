#include <chrono>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "cli_internal.hpp"
#include "json.hpp"
#include "streamreg/cli.hpp"
#include "streamreg/errors.hpp"
#include "streamreg/linear.hpp"

namespace streamreg::cli {

namespace {

using nlohmann::json;

struct Moments {
  double mean = 0.0, sd = 0.0, min = 0.0, max = 0.0;
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  m.min = xs.front();
  m.max = xs.front();
  for (double x : xs) {
    m.mean += x;
    m.min = std::min(m.min, x);
    m.max = std::max(m.max, x);
  }
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return m;
}

}  // namespace

int cmd_bench(const BenchArgs& args, std::string& out) {
  if (args.repetitions < 1) throw UsageError("--repetitions must be >= 1");
  if (args.block_sizes.empty()) throw UsageError("--block-sizes must not be empty");
  for (auto b : args.block_sizes)
    if (b < 1) throw UsageError("--block-sizes entries must be >= 1");
  const int threads = resolve_threads(args.threads);

  Schema schema;
  schema.dependent = args.y;
  schema.covariates = args.x;
  schema.add_intercept = !args.no_intercept;

  std::ofstream csv;
  if (!args.out_csv.empty()) {
    csv.open(args.out_csv);
    if (!csv) throw IoError("cannot write " + args.out_csv);
    csv << "block_size,repetition,seconds,state_bytes\n";
  }

  json runs = json::array();
  Vec reference_beta;
  double max_delta = 0.0;
  std::int64_t n = 0;

  for (const std::int64_t block_size : args.block_sizes) {
    BlockStreamConfig config;
    config.path = args.data;
    config.block_size = block_size;
    config.delimiter = resolve_delimiter(args.delimiter);
    StreamFactory factory{config, schema};

    std::vector<double> seconds;
    std::int64_t state_bytes = 0;
    for (int rep = 0; rep < args.repetitions; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      AccumulationOutcome acc = accumulate_stream(factory, threads);
      FitResult fit = ols_fit(acc.ga.global);
      const auto t1 = std::chrono::steady_clock::now();
      seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
      state_bytes = acc.ga.global.state_bytes();
      n = fit.n;
      if (reference_beta.empty()) {
        reference_beta = fit.coefficients;
      } else {
        for (std::size_t j = 0; j < reference_beta.size(); ++j)
          max_delta = std::max(max_delta, std::abs(fit.coefficients[j] - reference_beta[j]));
      }
      if (csv.is_open())
        csv << block_size << ',' << rep << ',' << seconds.back() << ',' << state_bytes << '\n';
    }

    const Moments m = moments(seconds);
    json r;
    r["block-size"] = block_size;
    r["repetitions"] = args.repetitions;
    r["mean-seconds"] = m.mean;
    r["sd-seconds"] = m.sd;
    r["min-seconds"] = m.min;
    r["max-seconds"] = m.max;
    r["state-bytes"] = state_bytes;
    r["passes"] = 1;
    runs.push_back(std::move(r));
  }

  json root;
  root["schema"] = 1;
  root["command"] = "bench";
  root["data"] = args.data;
  root["n"] = n;
  root["k"] = schema.k();
  root["threads"] = threads;
  root["environment"] = std::string("gcc ") + __VERSION__;
  root["runs"] = std::move(runs);
  root["max-coefficient-delta"] = max_delta;
  root["coefficients-stable"] = max_delta <= 1e-8;
  if (!args.out_csv.empty()) root["csv"] = args.out_csv;

  out = root.dump(2) + "\n";
  return 0;
}

}  // namespace streamreg::cli
