#pragma once

#include <cstdint>
#include <vector>

#include "streamreg/accumulate.hpp"
#include "streamreg/ingest.hpp"
#include "streamreg/linalg.hpp"
#include "streamreg/rng.hpp"

namespace streamreg {

// Residual-based meat matrices from a dedicated second pass.  beta and the
// first-pass aggregates pin the expected stream; a row-count (or cluster
// count) mismatch on the second pass throws StreamChanged.
struct RobustMeat {
  SymMatrix omega;                  // sum of per-row score outer products
  std::vector<Vec> group_scores;    // per-cluster X_g' u_g (CRVE only)
  std::int64_t n = 0;
};

// HC1: (n / (n - k)) Sigma^-1 [sum u_i^2 x_i' x_i] Sigma^-1.
SymMatrix hc1_vcv(const StreamFactory& factory, const Vec& beta, const CrossProducts& first_pass);

// Clustered (CRVE): [(n-1)/(n-k)] [G/(G-1)] Sigma^-1 [sum_g s_g s_g'] Sigma^-1
// with s_g = X_g' u_g accumulated across blocks (clusters may straddle them).
SymMatrix crve_vcv(const StreamFactory& factory, const Vec& beta, const CrossProducts& first_pass);

struct BootstrapConfig {
  std::int64_t replications = 0;
  std::uint64_t seed = 0;
  // resample unit is always the group in v1
};

struct BootstrapResult {
  SymMatrix vcv;
  std::vector<Vec> replicate_betas;
  std::int64_t dropped = 0;  // singular resamples, dropped and counted
};

// Cluster bootstrap over group aggregates: each replicate draws G groups
// with replacement, merges their (Sigma, Upsilon) and re-solves OLS.  The
// vcv is the empirical covariance of the replicate coefficient vectors
// centered at their own mean (so B = 1 yields a zero matrix).  Throws
// AllReplicatesSingular when more than 10% of replicates fail to solve.
BootstrapResult cluster_bootstrap_vcv(const GroupedAccumulator& ga, const BootstrapConfig& config);

// Deterministic variant used by tests: draws[b] lists the group ids
// resampled in replicate b.
BootstrapResult cluster_bootstrap_vcv_with_draws(const GroupedAccumulator& ga,
                                                 const std::vector<std::vector<int>>& draws);

}  // namespace streamreg
