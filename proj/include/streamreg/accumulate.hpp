#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "streamreg/ingest.hpp"
#include "streamreg/linalg.hpp"

namespace streamreg {

// The sufficient statistics of one pass over (a subset of) the data:
//   Sigma = X'WX, Upsilon = X'Wy, Psi = y'Wy, plus instrument cross products
//   and first-moment sums.  Everything downstream is computed from these.
struct CrossProducts {
  int k = 0;
  int l = 0;
  SymMatrix sigma;     // K x K
  Vec upsilon;         // K
  double psi = 0.0;
  Mat xz;              // K x L, only when l > 0
  SymMatrix zz;        // L x L
  Vec zy;              // L
  std::int64_t n = 0;
  double sum_y = 0.0;  // weighted
  Vec sum_x;           // weighted, K
  double sum_w = 0.0;
  bool intercept = false;  // first covariate is the constant column

  static CrossProducts zero(int k, int l = 0, bool intercept = false);

  void add_block(const Block& block);
  void merge_from(const CrossProducts& other);

  // Entries of tracked state (matrix + vector elements), and their bytes.
  std::int64_t state_entries() const;
  std::int64_t state_bytes() const { return state_entries() * static_cast<std::int64_t>(sizeof(double)); }
};

// Pure forms used where value semantics read better than in-place folds.
CrossProducts accumulate_block(CrossProducts state, const Block& block);
CrossProducts merge(CrossProducts a, const CrossProducts& b);

struct GroupSummary {
  int group_id = 0;
  std::int64_t n_g = 0;
  Vec xbar;
  double ybar = 0.0;
};

GroupSummary group_summary(const CrossProducts& cp, int group_id);

// Per-group statistics for fixed effects, clustering and fold-based CV.
// Group ids are the dense interned ids produced by ingest.
struct GroupedAccumulator {
  int k = 0;
  int l = 0;
  std::vector<CrossProducts> groups;
  std::vector<CrossProducts> second_groups;  // only for two-way fixed effects
  CrossProducts global;
  // (group, second group) -> row count; needed to verify balancedness.
  std::map<std::pair<int, int>, std::int64_t> cell_counts;
  std::vector<std::string> group_labels;
  std::vector<std::string> second_group_labels;
  std::int64_t group_cap = 1000000;

  static GroupedAccumulator zero(int k, int l = 0, bool intercept = false);

  void add_block(const Block& block);
  void merge_from(const GroupedAccumulator& other);
  std::int64_t state_entries() const;
  std::int64_t state_bytes() const { return state_entries() * static_cast<std::int64_t>(sizeof(double)); }
};

GroupedAccumulator accumulate_grouped(GroupedAccumulator state, const Block& block);

}  // namespace streamreg
