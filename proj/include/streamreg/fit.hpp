#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "streamreg/linalg.hpp"

namespace streamreg {

enum class Method { ols, wls, iv, tsls, ridge, lasso, elastic_net, logit, probit };
enum class VcvKind { iid, hc1, cluster, cluster_bootstrap, none };

const char* method_name(Method m);
const char* vcv_kind_name(VcvKind v);

struct FitResult {
  Vec coefficients;
  SymMatrix vcv;  // dim 0 when vcv_kind == none
  double sigma2 = 0.0;
  double sigma2_raw = 0.0;  // before clamping at zero
  double r2 = 0.0;
  double adj_r2 = 0.0;
  std::optional<double> f_stat;
  std::int64_t dof_residual = 0;
  std::int64_t n = 0;
  Method method = Method::ols;
  VcvKind vcv_kind = VcvKind::iid;
  std::int64_t skipped_rows = 0;
  bool degenerate_tss = false;  // TSS numerically zero; r2 reported as 0

  // Iterative details (GLM / coordinate descent); 0 for closed forms.
  bool converged = true;
  int iterations = 0;
  std::optional<double> loglik;

  double se(int j) const;
};

}  // namespace streamreg
