#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "streamreg/accumulate.hpp"
#include "streamreg/ingest.hpp"

namespace streamreg::cli {

// Exit codes: 0 success, 2 usage/validation, 3 data, 4 numeric.
struct RunResult {
  int exit_code = 0;
  std::string out;
  std::string err;
};

// Runs the command line (without argv[0]); never throws.
RunResult run(const std::vector<std::string>& args);

int main_entry(int argc, char** argv);

// One full accumulation pass, optionally on worker threads.  Blocks are
// dealt round-robin to per-worker accumulators which are merged in worker
// order, so the result is deterministic for a fixed thread count.
struct AccumulationOutcome {
  GroupedAccumulator ga;  // groups empty when no group key is configured
  bool grouped = false;
  std::int64_t skipped = 0;
};
AccumulationOutcome accumulate_stream(const StreamFactory& factory, int threads,
                                      std::int64_t group_cap = 1000000);

// Synthetic benchmark dataset: y = X beta + u with a constant, k - 1
// uniform covariates, noise variance 3, and published coefficients.
struct SynthConfig {
  std::int64_t n = 0;
  int k = 2;
  std::uint64_t seed = 0;
  std::string out;
};
// Writes the CSV and a "<out>.meta.json" sidecar; returns the coefficients.
std::vector<double> write_synth(const SynthConfig& config);

}  // namespace streamreg::cli
