#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "streamreg/fit.hpp"
#include "streamreg/linalg.hpp"

// Brute-force reference estimators used to validate the streaming engine.
// Everything here works on a fully materialized dataset with its own naive
// dense routines (explicit inverses, residuals computed row by row).  The
// only thing shared with the streaming code is the container types.
namespace streamreg::reference {

struct DenseDataset {
  std::vector<double> y;
  std::vector<double> x;  // row-major n x k
  std::vector<double> w;  // empty = unweighted
  std::vector<double> z;  // row-major n x l
  std::vector<int> g;     // group ids
  std::vector<int> t;     // second group ids
  int n = 0;
  int k = 0;
  int l = 0;
  bool intercept = false;  // column 0 is the constant

  double xat(int i, int j) const { return x[static_cast<std::size_t>(i) * k + j]; }
  double zat(int i, int j) const { return z[static_cast<std::size_t>(i) * l + j]; }
  double wat(int i) const { return w.empty() ? 1.0 : w[i]; }
};

struct OracleFit {
  Vec beta;
  SymMatrix vcv;
  double sigma2 = 0.0;
  double r2 = 0.0;
  double adj_r2 = 0.0;
  std::optional<double> f_stat;
  std::int64_t dof_residual = 0;
};

OracleFit ols(const DenseDataset& d);
OracleFit iv(const DenseDataset& d);
OracleFit tsls(const DenseDataset& d);
Vec ridge(const DenseDataset& d, double lambda, bool penalize_intercept = false);

// Residual-updating coordinate descent on raw rows.
Vec coordinate_descent(const DenseDataset& d, double lambda1, double lambda2,
                       bool penalize_intercept, int max_iterations, double tolerance);
double penalized_objective(const DenseDataset& d, const Vec& beta, double lambda1, double lambda2,
                           bool penalize_intercept);

SymMatrix hc1(const DenseDataset& d, const Vec& beta);
SymMatrix crve(const DenseDataset& d, const Vec& beta);

// Newton-Raphson MLE on the full dataset; probit uses the observed
// information, logit's observed and expected information coincide.
Vec glm_newton(const DenseDataset& d, bool probit, int max_iterations = 200,
               double tolerance = 1e-12);
double glm_loglik(const DenseDataset& d, const Vec& beta, bool probit);

// Least squares with one dummy per group appended to the covariates
// (no global intercept).  Returns slopes, group effects and both SE sets.
struct FeFit {
  Vec slopes;
  Vec slope_se;
  Vec effects;
  Vec effect_se;
  double sigma2 = 0.0;
};
FeFit fe_dummy(const DenseDataset& d);

// Slopes from regression on covariates + group dummies + (T-1) second
// dummies (last category dropped to avoid collinearity).
Vec fe_twoway_dummy(const DenseDataset& d);

double mean_squared_error(const DenseDataset& d, const Vec& beta);

}  // namespace streamreg::reference
