#pragma once

#include <span>
#include <utility>
#include <vector>

#include "streamreg/accumulate.hpp"
#include "streamreg/fit.hpp"

namespace streamreg {

// Cyclic coordinate descent on the accumulated normal equations, minimizing
//   (1/2)||y - X b||^2 + lambda1 ||b||_1 + (lambda2/2) ||b||_2^2
// with the intercept coordinate unpenalized unless asked otherwise.
// Penalties are in absolute units; nothing is standardized internally.
struct CoordinateDescentConfig {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  int max_iterations = 10000;
  double tolerance = 1e-8;
  bool penalize_intercept = false;
};

struct CdTrace {
  int iterations_used = 0;
  bool converged = false;
  double final_max_delta = 0.0;
};

std::pair<FitResult, CdTrace> lasso_fit(const CrossProducts& cp, CoordinateDescentConfig config);
std::pair<FitResult, CdTrace> elastic_net_fit(const CrossProducts& cp,
                                              CoordinateDescentConfig config);

// The objective above, evaluated from aggregates (up to the constant y'y/2
// ... fully, since Psi is tracked).  Used by the descent property tests.
double penalized_objective(const CrossProducts& cp, const Vec& beta, double lambda1,
                           double lambda2, bool penalize_intercept);

// ---- k-fold cross validation on fold-keyed aggregates ---------------------

enum class CvModel { ridge, lasso, elastic_net };

struct CvPoint {
  double lambda1 = 0.0;  // L1 strength (0 for ridge)
  double lambda2 = 0.0;  // L2 strength
};

struct CvResult {
  CvPoint best;
  std::size_t best_index = 0;
  std::vector<double> total_mse;              // per grid point
  std::vector<std::vector<double>> fold_mse;  // [grid point][fold]
};

// Fits on the merge of all folds but g, scores on fold g via
//   MSE_g = (Psi_g - 2 b'Upsilon_g + b'Sigma_g b) / n_g,
// and picks the grid point minimizing the summed MSE (ties -> larger
// penalty).  The folds are ga.groups.
CvResult cv_select_lambda(const GroupedAccumulator& ga, std::span<const CvPoint> grid,
                          CvModel model);

}  // namespace streamreg
