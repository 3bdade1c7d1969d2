#pragma once

#include "streamreg/accumulate.hpp"
#include "streamreg/fit.hpp"

namespace streamreg {

// Closed-form estimators on accumulated cross products.  All of them read
// only the aggregates; none of them ever sees a row of data.
FitResult ols_fit(const CrossProducts& cp);

// Ridge: (Sigma + lambda D) beta = Upsilon with D = I except D[0,0] = 0 when
// the intercept is unpenalized.  No inference in v1 (vcv-kind = none).
FitResult ridge_fit(const CrossProducts& cp, double lambda, bool penalize_intercept = false);

// Exactly identified IV (L == K): beta = (Z'X)^-1 Z'y.
FitResult iv_fit(const CrossProducts& cp);

// Two-stage least squares (L >= K).
FitResult tsls_fit(const CrossProducts& cp);

// One step of the block-updating estimator:
//   Omega = I - Sigma1^-1 Sigma2 (I + Sigma1^-1 Sigma2)^-1
//   beta  = Omega (beta1 + Sigma1^-1 Upsilon2)
// Returns the updated coefficients together with Sigma1 + Sigma2 so steps
// can be chained.  Requires a full-rank Sigma1.
struct WoodburyUpdate {
  Vec beta;
  SymMatrix sigma;
};
WoodburyUpdate woodbury_update_fit(const Vec& beta1, const SymMatrix& sigma1,
                                   const CrossProducts& next);

// Residual sum of squares of an arbitrary coefficient vector, from
// aggregates alone: Psi - 2 beta'Upsilon + beta'Sigma beta.
double rss_from_aggregates(const CrossProducts& cp, const Vec& beta);

// Centered total sum of squares and its degeneracy threshold.
double tss_from_aggregates(const CrossProducts& cp);
bool tss_degenerate(const CrossProducts& cp, double tss);

}  // namespace streamreg
