#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "streamreg/cli.hpp"
#include "streamreg/errors.hpp"
#include "streamreg/rng.hpp"

namespace streamreg::cli {

std::vector<double> write_synth(const SynthConfig& config) {
  if (config.n < 1) throw UsageError("synth: n must be >= 1");
  if (config.k < 2) throw UsageError("synth: k must be >= 2 (constant plus one covariate)");
  if (config.out.empty()) throw UsageError("synth: output path required");

  // Independent substreams so the coefficient draw does not shift the noise
  // sequence when k changes.
  SplitMix64 beta_rng = SplitMix64::substream(config.seed, 0);
  SplitMix64 noise_rng = SplitMix64::substream(config.seed, 1);
  SplitMix64 x_rng = SplitMix64::substream(config.seed, 2);

  std::vector<double> beta(config.k);
  for (int j = 0; j < config.k; ++j) beta[j] = -2.0 + 4.0 * beta_rng.next_unit();

  std::ofstream out(config.out, std::ios::binary);
  if (!out) throw IoError("synth: cannot write '" + config.out + "'");
  out << "y";
  for (int j = 1; j < config.k; ++j) out << ",x" << j;
  out << "\n";

  const double noise_sd = std::sqrt(3.0);
  char buf[32];
  std::vector<double> x(config.k - 1);
  for (std::int64_t i = 0; i < config.n; ++i) {
    double y = beta[0] + noise_sd * noise_rng.next_normal();
    for (int j = 0; j < config.k - 1; ++j) {
      x[j] = x_rng.next_unit();
      y += beta[j + 1] * x[j];
    }
    std::snprintf(buf, sizeof buf, "%.17g", y);
    out << buf;
    for (int j = 0; j < config.k - 1; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", x[j]);
      out << ',' << buf;
    }
    out << '\n';
  }
  out.close();
  if (!out) throw IoError("synth: write to '" + config.out + "' failed");

  nlohmann::json meta;
  meta["schema"] = 1;
  meta["type"] = "synth-meta";
  meta["n"] = config.n;
  meta["k"] = config.k;
  meta["seed"] = config.seed;
  meta["beta"] = beta;
  meta["noise-variance"] = 3.0;
  std::vector<std::string> columns{"y"};
  for (int j = 1; j < config.k; ++j) columns.push_back("x" + std::to_string(j));
  meta["columns"] = columns;
  std::ofstream side(config.out + ".meta.json", std::ios::binary);
  if (!side) throw IoError("synth: cannot write '" + config.out + ".meta.json'");
  side << meta.dump(2) << '\n';
  return beta;
}

}  // namespace streamreg::cli
