#include "streamreg/regularized.hpp"

#include <cmath>

#include "streamreg/errors.hpp"
#include "streamreg/linear.hpp"

namespace streamreg {

namespace {

double soft_threshold(double rho, double tau) {
  const double mag = std::max(std::abs(rho) - tau, 0.0);
  return rho >= 0 ? mag : -mag;
}

std::pair<FitResult, CdTrace> descend(const CrossProducts& cp,
                                      const CoordinateDescentConfig& config, Method method) {
  if (config.lambda1 < 0.0 || config.lambda2 < 0.0)
    throw NegativeLambda("coordinate descent: penalties must be >= 0");
  if (cp.k < 1) throw DimensionMismatch("coordinate descent: empty covariate set");
  if (cp.n <= cp.k)
    throw InsufficientObservations("coordinate descent: n = " + std::to_string(cp.n) +
                                   " rows for k = " + std::to_string(cp.k) + " coefficients");

  const int k = cp.k;
  Vec beta(k, 0.0);
  // z = Upsilon - Sigma beta, maintained incrementally as coordinates move.
  Vec z(cp.upsilon);
  CdTrace trace;
  for (int it = 0; it < config.max_iterations; ++it) {
    double max_delta = 0.0;
    for (int j = 0; j < k; ++j) {
      const double sjj = cp.sigma(j, j);
      if (sjj <= 0.0) continue;  // structurally empty column stays at zero
      const double rho = z[j] + sjj * beta[j];
      const bool penalized = config.penalize_intercept || !(cp.intercept && j == 0);
      const double next = penalized
                              ? soft_threshold(rho, config.lambda1) / (sjj + config.lambda2)
                              : rho / sjj;
      const double delta = next - beta[j];
      if (delta != 0.0) {
        for (int i = 0; i < k; ++i) z[i] -= cp.sigma(i, j) * delta;
        beta[j] = next;
        const double mag = std::abs(delta);
        if (mag > max_delta) max_delta = mag;
      }
    }
    trace.iterations_used = it + 1;
    trace.final_max_delta = max_delta;
    if (max_delta < config.tolerance) {
      trace.converged = true;
      break;
    }
  }

  FitResult fit;
  fit.method = method;
  fit.coefficients = std::move(beta);
  fit.vcv_kind = VcvKind::none;
  fit.n = cp.n;
  fit.dof_residual = cp.n - cp.k;
  const double rss_raw = rss_from_aggregates(cp, fit.coefficients);
  fit.sigma2_raw = rss_raw / static_cast<double>(fit.dof_residual);
  const double rss = std::max(rss_raw, 0.0);
  fit.sigma2 = rss / static_cast<double>(fit.dof_residual);
  const double tss = tss_from_aggregates(cp);
  if (tss_degenerate(cp, tss)) {
    fit.degenerate_tss = true;
  } else {
    fit.r2 = 1.0 - rss / tss;
    fit.adj_r2 =
        1.0 - (1.0 - fit.r2) * static_cast<double>(cp.n - 1) / static_cast<double>(fit.dof_residual);
  }
  fit.converged = trace.converged;
  fit.iterations = trace.iterations_used;
  return {std::move(fit), trace};
}

}  // namespace

std::pair<FitResult, CdTrace> lasso_fit(const CrossProducts& cp, CoordinateDescentConfig config) {
  if (config.lambda2 != 0.0)
    throw UsageError("lasso: lambda2 must be zero (use elastic net for a mixed penalty)");
  return descend(cp, config, Method::lasso);
}

std::pair<FitResult, CdTrace> elastic_net_fit(const CrossProducts& cp,
                                              CoordinateDescentConfig config) {
  return descend(cp, config, Method::elastic_net);
}

double penalized_objective(const CrossProducts& cp, const Vec& beta, double lambda1,
                           double lambda2, bool penalize_intercept) {
  double obj = 0.5 * rss_from_aggregates(cp, beta);
  for (int j = 0; j < cp.k; ++j) {
    if (!penalize_intercept && cp.intercept && j == 0) continue;
    obj += lambda1 * std::abs(beta[j]) + 0.5 * lambda2 * beta[j] * beta[j];
  }
  return obj;
}

CvResult cv_select_lambda(const GroupedAccumulator& ga, std::span<const CvPoint> grid,
                          CvModel model) {
  const std::size_t folds = ga.groups.size();
  if (folds < 2) throw TooFewFolds("cross validation requires at least 2 folds");
  if (grid.empty()) throw UsageError("cross validation: empty penalty grid");

  CvResult result;
  result.total_mse.assign(grid.size(), 0.0);
  result.fold_mse.assign(grid.size(), std::vector<double>(folds, 0.0));

  // Training aggregates per fold: merge of every other fold.
  std::vector<CrossProducts> train;
  train.reserve(folds);
  for (std::size_t g = 0; g < folds; ++g) {
    CrossProducts t = CrossProducts::zero(ga.k, ga.l, ga.global.intercept);
    for (std::size_t h = 0; h < folds; ++h)
      if (h != g) t.merge_from(ga.groups[h]);
    if (t.n <= t.k)
      throw InsufficientObservations("cross validation: training folds leave n <= k");
    if (ga.groups[g].n < 1)
      throw InsufficientObservations("cross validation: empty fold " + std::to_string(g));
    train.push_back(std::move(t));
  }

  for (std::size_t p = 0; p < grid.size(); ++p) {
    const CvPoint& point = grid[p];
    for (std::size_t g = 0; g < folds; ++g) {
      Vec beta;
      switch (model) {
        case CvModel::ridge:
          beta = ridge_fit(train[g], point.lambda2).coefficients;
          break;
        case CvModel::lasso: {
          CoordinateDescentConfig cfg;
          cfg.lambda1 = point.lambda1;
          beta = lasso_fit(train[g], cfg).first.coefficients;
          break;
        }
        case CvModel::elastic_net: {
          CoordinateDescentConfig cfg;
          cfg.lambda1 = point.lambda1;
          cfg.lambda2 = point.lambda2;
          beta = elastic_net_fit(train[g], cfg).first.coefficients;
          break;
        }
      }
      const CrossProducts& fold = ga.groups[g];
      const double mse = rss_from_aggregates(fold, beta) / static_cast<double>(fold.n);
      result.fold_mse[p][g] = mse;
      result.total_mse[p] += mse;
    }
  }

  std::size_t best = 0;
  for (std::size_t p = 1; p < grid.size(); ++p) {
    const bool better = result.total_mse[p] < result.total_mse[best];
    const bool tie = result.total_mse[p] == result.total_mse[best];
    const bool larger = grid[p].lambda1 > grid[best].lambda1 ||
                        (grid[p].lambda1 == grid[best].lambda1 &&
                         grid[p].lambda2 > grid[best].lambda2);
    if (better || (tie && larger)) best = p;
  }
  result.best_index = best;
  result.best = grid[best];
  return result;
}

}  // namespace streamreg
