#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "streamreg/accumulate.hpp"
#include "streamreg/fit.hpp"

namespace streamreg {

struct FeResult {
  FitResult fit;  // slopes on the K covariates
  std::int64_t absorbed_groups = 0;
  std::int64_t absorbed_second_groups = 0;
  std::optional<Vec> effects;     // recovered group effects (fe_recover_effects)
  std::optional<Vec> effect_se;
};

// Within (one-way fixed effects) estimator, computed purely from per-group
// aggregates: demeaned cross products are Sigma_g - sum_x_g sum_x_g'/n_g
// summed over groups.  The covariates must not contain a constant column.
FeResult fe_within_fit(const GroupedAccumulator& ga);

// Two-way fixed effects for balanced panels; throws UnbalancedPanel when any
// (group, second-group) cell count differs (exact demeaning from one-way
// aggregates needs the balanced cancellation).
FeResult fe_twoway_fit(const GroupedAccumulator& ga);

// Solves the bordered (K + N_G) normal equations to return every group
// effect alongside the slopes.
FeResult fe_recover_effects(const GroupedAccumulator& ga, std::int64_t max_groups = 10000);

// Merges the kept groups' aggregates and hands them to any
// aggregate-consuming estimator (default: OLS).
FitResult subsample_fit(const GroupedAccumulator& ga, std::span<const int> keep_groups,
                        const std::function<FitResult(const CrossProducts&)>& estimator);
FitResult subsample_fit(const GroupedAccumulator& ga, std::span<const int> keep_groups);

}  // namespace streamreg
