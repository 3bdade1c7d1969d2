#include "streamreg/linear.hpp"

#include <cmath>

#include "streamreg/errors.hpp"

namespace streamreg {

const char* method_name(Method m) {
  switch (m) {
    case Method::ols: return "ols";
    case Method::wls: return "wls";
    case Method::iv: return "iv";
    case Method::tsls: return "2sls";
    case Method::ridge: return "ridge";
    case Method::lasso: return "lasso";
    case Method::elastic_net: return "elastic-net";
    case Method::logit: return "logit";
    case Method::probit: return "probit";
  }
  return "?";
}

const char* vcv_kind_name(VcvKind v) {
  switch (v) {
    case VcvKind::iid: return "iid";
    case VcvKind::hc1: return "hc1";
    case VcvKind::cluster: return "cluster";
    case VcvKind::cluster_bootstrap: return "cluster-bootstrap";
    case VcvKind::none: return "none";
  }
  return "?";
}

double FitResult::se(int j) const {
  if (vcv.empty()) return std::nan("");
  const double v = vcv(j, j);
  return v > 0 ? std::sqrt(v) : 0.0;
}

double rss_from_aggregates(const CrossProducts& cp, const Vec& beta) {
  return cp.psi - 2.0 * dot(cp.upsilon, beta) + cp.sigma.quad_form(beta);
}

double tss_from_aggregates(const CrossProducts& cp) {
  if (!cp.intercept) return cp.psi;
  if (cp.sum_w <= 0.0) return 0.0;
  return cp.psi - cp.sum_y * cp.sum_y / cp.sum_w;
}

bool tss_degenerate(const CrossProducts& cp, double tss) {
  return tss <= 1e-12 * static_cast<double>(cp.n);
}

namespace {

void require_estimable(const CrossProducts& cp) {
  if (cp.k < 1) throw DimensionMismatch("fit: empty covariate set");
  if (cp.n <= cp.k)
    throw InsufficientObservations("fit: n = " + std::to_string(cp.n) +
                                   " rows for k = " + std::to_string(cp.k) + " coefficients");
}

// Fills the goodness-of-fit block shared by the closed-form estimators.
// rss_raw may be slightly negative from cancellation; statistics use the
// clamped value while sigma2_raw keeps the raw one.
void fill_fit_stats(FitResult& fit, const CrossProducts& cp, double rss_raw, bool want_f) {
  const double dof = static_cast<double>(cp.n - cp.k);
  fit.n = cp.n;
  fit.dof_residual = cp.n - cp.k;
  fit.sigma2_raw = rss_raw / dof;
  const double rss = std::max(rss_raw, 0.0);
  fit.sigma2 = rss / dof;

  const double tss = tss_from_aggregates(cp);
  if (tss_degenerate(cp, tss)) {
    fit.degenerate_tss = true;
    fit.r2 = 0.0;
    fit.adj_r2 = 0.0;
    return;
  }
  fit.r2 = 1.0 - rss / tss;
  fit.adj_r2 = 1.0 - (1.0 - fit.r2) * static_cast<double>(cp.n - 1) / dof;
  if (want_f && cp.intercept && cp.k > 1 && rss > 0.0)
    fit.f_stat = ((tss - rss) / static_cast<double>(cp.k - 1)) / (rss / dof);
}

Mat sym_to_mat(const SymMatrix& s) {
  Mat m(s.dim(), s.dim());
  for (int i = 0; i < s.dim(); ++i)
    for (int j = 0; j < s.dim(); ++j) m(i, j) = s(i, j);
  return m;
}

SymMatrix symmetrized(const Mat& m) {
  SymMatrix s(m.rows());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = i; j < m.cols(); ++j) s.set(i, j, 0.5 * (m(i, j) + m(j, i)));
  return s;
}

Mat matmul(const Mat& a, const Mat& b) {
  Mat c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

}  // namespace

FitResult ols_fit(const CrossProducts& cp) {
  require_estimable(cp);
  FitResult fit;
  fit.method = Method::ols;
  fit.coefficients = spd_solve(cp.sigma, cp.upsilon).solution;
  // At the least-squares solution u'u = Psi - Upsilon' beta (the general
  // quadratic collapses because Sigma beta = Upsilon).
  const double rss_raw = cp.psi - dot(cp.upsilon, fit.coefficients);
  fill_fit_stats(fit, cp, rss_raw, /*want_f=*/true);
  fit.vcv = sym_inverse(cp.sigma).inverse;
  fit.vcv.scale(fit.sigma2);
  fit.vcv_kind = VcvKind::iid;
  return fit;
}

FitResult ridge_fit(const CrossProducts& cp, double lambda, bool penalize_intercept) {
  if (lambda < 0.0) throw NegativeLambda("ridge: lambda must be >= 0");
  require_estimable(cp);
  SymMatrix penalized = cp.sigma;
  for (int j = 0; j < cp.k; ++j) {
    if (j == 0 && cp.intercept && !penalize_intercept) continue;
    penalized.add(j, j, lambda);
  }
  FitResult fit;
  fit.method = Method::ridge;
  fit.coefficients = spd_solve(penalized, cp.upsilon).solution;
  fill_fit_stats(fit, cp, rss_from_aggregates(cp, fit.coefficients), /*want_f=*/false);
  fit.vcv_kind = VcvKind::none;
  return fit;
}

FitResult iv_fit(const CrossProducts& cp) {
  if (cp.l == 0) throw UsageError("iv: no instruments were accumulated");
  if (cp.l != cp.k)
    throw ArityMismatch("iv: requires L == K (got L = " + std::to_string(cp.l) +
                        ", K = " + std::to_string(cp.k) + "); use 2SLS when over-identified");
  require_estimable(cp);

  FitResult fit;
  fit.method = Method::iv;
  // The moment condition Z'(y - X beta) = 0 pins beta = (Z'X)^-1 Z'y; Z'X is
  // square but not symmetric, hence the general solver.
  const Mat zx_inv = gen_inverse(cp.xz.transposed());
  fit.coefficients = zx_inv.matvec(cp.zy);
  fill_fit_stats(fit, cp, rss_from_aggregates(cp, fit.coefficients), /*want_f=*/false);
  // V = sigma2 (Z'X)^-1 Z'Z (X'Z)^-1
  const Mat v = matmul(matmul(zx_inv, sym_to_mat(cp.zz)), zx_inv.transposed());
  fit.vcv = symmetrized(v);
  fit.vcv.scale(fit.sigma2);
  fit.vcv_kind = VcvKind::iid;
  return fit;
}

FitResult tsls_fit(const CrossProducts& cp) {
  if (cp.l == 0) throw UsageError("2sls: no instruments were accumulated");
  if (cp.l < cp.k)
    throw UnderIdentified("2sls: L = " + std::to_string(cp.l) +
                          " instruments for K = " + std::to_string(cp.k) + " covariates");
  require_estimable(cp);

  // A = X'Z (Z'Z)^-1 Z'X and c = X'Z (Z'Z)^-1 Z'y.
  const SymMatrix zz_inv = sym_inverse(cp.zz).inverse;
  const Mat p = matmul(cp.xz, sym_to_mat(zz_inv));  // K x L
  const SymMatrix a = symmetrized(matmul(p, cp.xz.transposed()));
  const Vec c = p.matvec(cp.zy);

  FitResult fit;
  fit.method = Method::tsls;
  fit.coefficients = spd_solve(a, c).solution;
  fill_fit_stats(fit, cp, rss_from_aggregates(cp, fit.coefficients), /*want_f=*/false);
  fit.vcv = sym_inverse(a).inverse;
  fit.vcv.scale(fit.sigma2);
  fit.vcv_kind = VcvKind::iid;
  return fit;
}

WoodburyUpdate woodbury_update_fit(const Vec& beta1, const SymMatrix& sigma1,
                                   const CrossProducts& next) {
  const int k = sigma1.dim();
  if (static_cast<int>(beta1.size()) != k || next.k != k)
    throw DimensionMismatch("woodbury update: dimension mismatch");

  const SymMatrix s1_inv = sym_inverse(sigma1).inverse;  // throws RankDeficient if singular
  const Mat a = matmul(sym_to_mat(s1_inv), sym_to_mat(next.sigma));
  Mat i_plus_a = a;
  for (int j = 0; j < k; ++j) i_plus_a(j, j) += 1.0;
  const Mat inner_inv = gen_inverse(i_plus_a);
  // Omega = I - A (I + A)^-1
  Mat omega = matmul(a, inner_inv);
  for (auto& v : omega.data_mutable()) v = -v;
  for (int j = 0; j < k; ++j) omega(j, j) += 1.0;

  Vec v = s1_inv.matvec(next.upsilon);
  for (int j = 0; j < k; ++j) v[j] += beta1[j];

  WoodburyUpdate out;
  out.beta = omega.matvec(v);
  out.sigma = sigma1;
  out.sigma.add_scaled(next.sigma, 1.0);
  return out;
}

}  // namespace streamreg
