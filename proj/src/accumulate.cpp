#include "streamreg/accumulate.hpp"

#include <cmath>

#include "streamreg/errors.hpp"

namespace streamreg {

CrossProducts CrossProducts::zero(int k, int l, bool intercept) {
  CrossProducts cp;
  cp.k = k;
  cp.l = l;
  cp.sigma = SymMatrix(k);
  cp.upsilon.assign(k, 0.0);
  cp.sum_x.assign(k, 0.0);
  cp.intercept = intercept;
  if (l > 0) {
    cp.xz = Mat(k, l);
    cp.zz = SymMatrix(l);
    cp.zy.assign(l, 0.0);
  }
  return cp;
}

void CrossProducts::add_block(const Block& block) {
  if (block.k != k)
    throw DimensionMismatch("accumulate: block has k=" + std::to_string(block.k) +
                            ", state has k=" + std::to_string(k));
  if (block.l != l)
    throw DimensionMismatch("accumulate: block has l=" + std::to_string(block.l) +
                            ", state has l=" + std::to_string(l));
  const bool weighted = !block.w.empty();
  for (int i = 0; i < block.n; ++i) {
    const double w = weighted ? block.w[i] : 1.0;
    if (w < 0.0) throw NegativeWeight("row weight " + std::to_string(w) + " is negative");
    const auto x = block.row(i);
    const double y = block.y[i];
    sigma.add_outer(x, w);
    const double wy = w * y;
    for (int j = 0; j < k; ++j) {
      upsilon[j] += wy * x[j];
      sum_x[j] += w * x[j];
    }
    psi += wy * y;
    sum_y += wy;
    sum_w += w;
    if (l > 0) {
      const auto z = block.zrow(i);
      for (int a = 0; a < k; ++a) {
        const double wx = w * x[a];
        for (int b = 0; b < l; ++b) xz(a, b) += wx * z[b];
      }
      zz.add_outer(z, w);
      for (int b = 0; b < l; ++b) zy[b] += wy * z[b];
    }
  }
  n += block.n;
}

void CrossProducts::merge_from(const CrossProducts& other) {
  if (other.k != k || other.l != l)
    throw DimensionMismatch("merge: accumulator shapes differ (k " + std::to_string(k) + " vs " +
                            std::to_string(other.k) + ", l " + std::to_string(l) + " vs " +
                            std::to_string(other.l) + ")");
  sigma.add_scaled(other.sigma, 1.0);
  for (int j = 0; j < k; ++j) {
    upsilon[j] += other.upsilon[j];
    sum_x[j] += other.sum_x[j];
  }
  psi += other.psi;
  n += other.n;
  sum_y += other.sum_y;
  sum_w += other.sum_w;
  if (l > 0) {
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < l; ++b) xz(a, b) += other.xz(a, b);
    zz.add_scaled(other.zz, 1.0);
    for (int b = 0; b < l; ++b) zy[b] += other.zy[b];
  }
}

std::int64_t CrossProducts::state_entries() const {
  std::int64_t entries = static_cast<std::int64_t>(SymMatrix::packed_size(k)) + 2 * k + 4;
  if (l > 0)
    entries += static_cast<std::int64_t>(k) * l +
               static_cast<std::int64_t>(SymMatrix::packed_size(l)) + l;
  return entries;
}

CrossProducts accumulate_block(CrossProducts state, const Block& block) {
  state.add_block(block);
  return state;
}

CrossProducts merge(CrossProducts a, const CrossProducts& b) {
  a.merge_from(b);
  return a;
}

GroupSummary group_summary(const CrossProducts& cp, int group_id) {
  GroupSummary s;
  s.group_id = group_id;
  s.n_g = cp.n;
  s.ybar = cp.sum_w > 0 ? cp.sum_y / cp.sum_w : 0.0;
  s.xbar.assign(cp.k, 0.0);
  if (cp.sum_w > 0)
    for (int j = 0; j < cp.k; ++j) s.xbar[j] = cp.sum_x[j] / cp.sum_w;
  return s;
}

GroupedAccumulator GroupedAccumulator::zero(int k, int l, bool intercept) {
  GroupedAccumulator ga;
  ga.k = k;
  ga.l = l;
  ga.global = CrossProducts::zero(k, l, intercept);
  return ga;
}

void GroupedAccumulator::add_block(const Block& block) {
  if (block.g.empty()) throw UsageError("grouped accumulation requires a group key on every row");
  global.add_block(block);

  const bool has_second = !block.t.empty();
  // Route rows group by group.  Single-row views into the block keep the
  // inner accumulation identical to the ungrouped path.
  Block view;
  view.k = block.k;
  view.l = block.l;
  view.n = 1;
  const bool weighted = !block.w.empty();
  for (int i = 0; i < block.n; ++i) {
    const int gid = block.g[i];
    if (gid >= static_cast<int>(groups.size())) {
      if (static_cast<std::int64_t>(groups.size()) >= group_cap)
        throw TooManyGroups("group count exceeds cap of " + std::to_string(group_cap));
      while (static_cast<int>(groups.size()) <= gid)
        groups.push_back(CrossProducts::zero(k, l, global.intercept));
    }
    const auto x = block.row(i);
    view.y.assign(1, block.y[i]);
    view.x.assign(x.begin(), x.end());
    if (weighted) view.w.assign(1, block.w[i]);
    if (block.l > 0) {
      const auto z = block.zrow(i);
      view.z.assign(z.begin(), z.end());
    }
    groups[gid].add_block(view);

    if (has_second) {
      const int tid = block.t[i];
      if (tid >= static_cast<int>(second_groups.size())) {
        if (static_cast<std::int64_t>(second_groups.size()) >= group_cap)
          throw TooManyGroups("second group count exceeds cap of " + std::to_string(group_cap));
        while (static_cast<int>(second_groups.size()) <= tid)
          second_groups.push_back(CrossProducts::zero(k, l, global.intercept));
      }
      second_groups[tid].add_block(view);
      ++cell_counts[{gid, tid}];
    }
  }
}

void GroupedAccumulator::merge_from(const GroupedAccumulator& other) {
  if (other.k != k || other.l != l)
    throw DimensionMismatch("merge: grouped accumulator shapes differ");
  global.merge_from(other.global);
  while (groups.size() < other.groups.size())
    groups.push_back(CrossProducts::zero(k, l, global.intercept));
  for (std::size_t g = 0; g < other.groups.size(); ++g) groups[g].merge_from(other.groups[g]);
  while (second_groups.size() < other.second_groups.size())
    second_groups.push_back(CrossProducts::zero(k, l, global.intercept));
  for (std::size_t t = 0; t < other.second_groups.size(); ++t)
    second_groups[t].merge_from(other.second_groups[t]);
  for (const auto& [key, count] : other.cell_counts) cell_counts[key] += count;
}

std::int64_t GroupedAccumulator::state_entries() const {
  std::int64_t entries = global.state_entries();
  for (const auto& g : groups) entries += g.state_entries();
  for (const auto& t : second_groups) entries += t.state_entries();
  entries += static_cast<std::int64_t>(cell_counts.size());
  return entries;
}

GroupedAccumulator accumulate_grouped(GroupedAccumulator state, const Block& block) {
  state.add_block(block);
  return state;
}

}  // namespace streamreg
