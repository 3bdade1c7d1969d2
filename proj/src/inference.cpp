#include "streamreg/inference.hpp"

#include <cmath>
#include <functional>

#include "streamreg/errors.hpp"

namespace streamreg {

namespace {

SymMatrix sandwich(const SymMatrix& sigma, const SymMatrix& omega, double factor) {
  const SymMatrix bread = sym_inverse(sigma).inverse;
  const int k = sigma.dim();
  // bread * omega * bread, symmetrized by construction.
  Mat tmp(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      double s = 0.0;
      for (int m = 0; m < k; ++m) s += bread(i, m) * omega(m, j);
      tmp(i, j) = s;
    }
  SymMatrix out(k);
  for (int i = 0; i < k; ++i)
    for (int j = i; j < k; ++j) {
      double s = 0.0;
      for (int m = 0; m < k; ++m) s += tmp(i, m) * bread(m, j);
      out.set(i, j, factor * s);
    }
  return out;
}

void check_same_stream(std::int64_t expected_n, std::int64_t got_n) {
  if (expected_n != got_n)
    throw StreamChanged("second pass saw " + std::to_string(got_n) + " rows, first pass saw " +
                        std::to_string(expected_n));
}

}  // namespace

SymMatrix hc1_vcv(const StreamFactory& factory, const Vec& beta, const CrossProducts& first_pass) {
  const int k = first_pass.k;
  if (static_cast<int>(beta.size()) != k) throw DimensionMismatch("hc1: beta width mismatch");
  if (first_pass.n <= k) throw InsufficientObservations("hc1: n <= k");

  SymMatrix omega(k);
  std::int64_t n = 0;
  BlockStream stream = factory.open();
  while (auto block = stream.next_block()) {
    const bool weighted = !block->w.empty();
    for (int i = 0; i < block->n; ++i) {
      const auto x = block->row(i);
      const double u = block->y[i] - dot(x, beta);
      const double s = (weighted ? block->w[i] : 1.0) * u;
      omega.add_outer(x, s * s);
    }
    n += block->n;
  }
  check_same_stream(first_pass.n, n);

  const double factor = static_cast<double>(n) / static_cast<double>(n - k);
  return sandwich(first_pass.sigma, omega, factor);
}

SymMatrix crve_vcv(const StreamFactory& factory, const Vec& beta, const CrossProducts& first_pass) {
  const int k = first_pass.k;
  if (static_cast<int>(beta.size()) != k) throw DimensionMismatch("crve: beta width mismatch");
  if (!factory.schema.group) throw UsageError("crve: schema has no cluster column");
  if (first_pass.n <= k) throw InsufficientObservations("crve: n <= k");

  RobustMeat meat;
  meat.omega = SymMatrix(k);
  std::int64_t n = 0;
  BlockStream stream = factory.open();
  while (auto block = stream.next_block()) {
    const bool weighted = !block->w.empty();
    for (int i = 0; i < block->n; ++i) {
      const int gid = block->g[i];
      if (gid >= static_cast<int>(meat.group_scores.size()))
        meat.group_scores.resize(gid + 1, Vec(k, 0.0));
      const auto x = block->row(i);
      const double u = block->y[i] - dot(x, beta);
      const double s = (weighted ? block->w[i] : 1.0) * u;
      Vec& score = meat.group_scores[gid];
      for (int j = 0; j < k; ++j) score[j] += s * x[j];
    }
    n += block->n;
  }
  check_same_stream(first_pass.n, n);

  const std::int64_t n_g = static_cast<std::int64_t>(meat.group_scores.size());
  if (n_g < 2) throw TooFewGroups("crve: " + std::to_string(n_g) + " cluster(s); need at least 2");
  for (const Vec& s : meat.group_scores) meat.omega.add_outer(s, 1.0);

  const double factor = (static_cast<double>(n - 1) / static_cast<double>(n - k)) *
                        (static_cast<double>(n_g) / static_cast<double>(n_g - 1));
  return sandwich(first_pass.sigma, meat.omega, factor);
}

namespace {

BootstrapResult bootstrap_core(const GroupedAccumulator& ga,
                               const std::function<void(std::int64_t, std::vector<int>&)>& draw,
                               std::int64_t replications) {
  const std::int64_t n_g = static_cast<std::int64_t>(ga.groups.size());
  if (n_g < 2) throw TooFewGroups("bootstrap: " + std::to_string(n_g) + " group(s); need at least 2");
  if (replications < 1) throw UsageError("bootstrap: replications must be >= 1");
  const int k = ga.k;

  BootstrapResult result;
  result.replicate_betas.reserve(replications);
  std::vector<int> ids;
  for (std::int64_t b = 0; b < replications; ++b) {
    draw(b, ids);
    SymMatrix sigma_star(k);
    Vec upsilon_star(k, 0.0);
    for (int id : ids) {
      const CrossProducts& g = ga.groups[id];
      sigma_star.add_scaled(g.sigma, 1.0);
      for (int j = 0; j < k; ++j) upsilon_star[j] += g.upsilon[j];
    }
    try {
      result.replicate_betas.push_back(spd_solve(sigma_star, upsilon_star).solution);
    } catch (const RankDeficient&) {
      ++result.dropped;
    }
  }

  if (result.dropped * 10 > replications)
    throw AllReplicatesSingular("bootstrap: " + std::to_string(result.dropped) + " of " +
                                std::to_string(replications) + " replicates were singular");

  const std::int64_t kept = static_cast<std::int64_t>(result.replicate_betas.size());
  Vec mean(k, 0.0);
  for (const Vec& beta : result.replicate_betas)
    for (int j = 0; j < k; ++j) mean[j] += beta[j];
  for (int j = 0; j < k; ++j) mean[j] /= static_cast<double>(kept);

  result.vcv = SymMatrix(k);
  Vec centered(k);
  for (const Vec& beta : result.replicate_betas) {
    for (int j = 0; j < k; ++j) centered[j] = beta[j] - mean[j];
    result.vcv.add_outer(centered, 1.0);
  }
  result.vcv.scale(1.0 / static_cast<double>(kept));
  return result;
}

}  // namespace

BootstrapResult cluster_bootstrap_vcv(const GroupedAccumulator& ga,
                                      const BootstrapConfig& config) {
  const std::uint64_t n_g = ga.groups.size();
  return bootstrap_core(
      ga,
      [&](std::int64_t b, std::vector<int>& ids) {
        // Replicate b draws from its own substream, so results do not depend
        // on evaluation order and are reproducible for any B.
        SplitMix64 rng = SplitMix64::substream(config.seed, static_cast<std::uint64_t>(b));
        ids.clear();
        for (std::uint64_t i = 0; i < n_g; ++i)
          ids.push_back(static_cast<int>(rng.next_below(n_g)));
      },
      config.replications);
}

BootstrapResult cluster_bootstrap_vcv_with_draws(const GroupedAccumulator& ga,
                                                 const std::vector<std::vector<int>>& draws) {
  for (const auto& d : draws)
    for (int id : d)
      if (id < 0 || id >= static_cast<int>(ga.groups.size()))
        throw UnknownGroup("bootstrap: group id " + std::to_string(id) + " does not exist");
  return bootstrap_core(
      ga, [&](std::int64_t b, std::vector<int>& ids) { ids = draws[b]; },
      static_cast<std::int64_t>(draws.size()));
}

}  // namespace streamreg
