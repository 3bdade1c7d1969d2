#include "streamreg/panel.hpp"

#include <cmath>

#include "streamreg/errors.hpp"
#include "streamreg/linear.hpp"

namespace streamreg {

namespace {

void require_no_constant(const GroupedAccumulator& ga, const char* who) {
  if (ga.global.intercept)
    throw UsageError(std::string(who) + ": the constant column is collinear with the group "
                                        "effects; fit without an intercept");
}

// Subtracts sum_x sum_x'/sum_w style mean terms for one group of aggregates.
void subtract_mean_terms(const CrossProducts& g, SymMatrix& sigma, Vec& upsilon, double& psi,
                         double sign) {
  if (g.sum_w <= 0.0) return;
  const double inv = sign / g.sum_w;
  sigma.add_outer(g.sum_x, -inv);
  for (std::size_t j = 0; j < upsilon.size(); ++j) upsilon[j] -= inv * g.sum_x[j] * g.sum_y;
  psi -= inv * g.sum_y * g.sum_y;
}

FitResult fit_demeaned(const CrossProducts& global, const SymMatrix& sigma_w, const Vec& upsilon_w,
                       double psi_w, std::int64_t absorbed) {
  const std::int64_t dof = global.n - global.k - absorbed;
  if (dof <= 0)
    throw InsufficientObservations("fixed effects: residual dof = " + std::to_string(dof));

  FitResult fit;
  fit.method = Method::ols;
  fit.coefficients = spd_solve(sigma_w, upsilon_w).solution;
  fit.n = global.n;
  fit.dof_residual = dof;
  const double rss_raw = psi_w - dot(upsilon_w, fit.coefficients);
  fit.sigma2_raw = rss_raw / static_cast<double>(dof);
  const double rss = std::max(rss_raw, 0.0);
  fit.sigma2 = rss / static_cast<double>(dof);
  fit.vcv = sym_inverse(sigma_w).inverse;
  fit.vcv.scale(fit.sigma2);
  fit.vcv_kind = VcvKind::iid;
  // R-squared is in the demeaned (within) space; psi_w is its TSS.
  if (psi_w <= 1e-12 * static_cast<double>(global.n)) {
    fit.degenerate_tss = true;
  } else {
    fit.r2 = 1.0 - rss / psi_w;
    fit.adj_r2 = 1.0 - (1.0 - fit.r2) * static_cast<double>(global.n - 1) / static_cast<double>(dof);
  }
  return fit;
}

}  // namespace

FeResult fe_within_fit(const GroupedAccumulator& ga) {
  if (ga.groups.empty()) throw UsageError("fe_within_fit: no group aggregates");
  require_no_constant(ga, "fe_within_fit");

  SymMatrix sigma_w(ga.k);
  Vec upsilon_w(ga.k, 0.0);
  double psi_w = 0.0;
  for (const auto& g : ga.groups) {
    sigma_w.add_scaled(g.sigma, 1.0);
    for (int j = 0; j < ga.k; ++j) upsilon_w[j] += g.upsilon[j];
    psi_w += g.psi;
    subtract_mean_terms(g, sigma_w, upsilon_w, psi_w, 1.0);
  }

  FeResult out;
  out.absorbed_groups = static_cast<std::int64_t>(ga.groups.size());
  out.fit = fit_demeaned(ga.global, sigma_w, upsilon_w, psi_w, out.absorbed_groups);
  return out;
}

FeResult fe_twoway_fit(const GroupedAccumulator& ga) {
  if (ga.groups.empty() || ga.second_groups.empty())
    throw UsageError("fe_twoway_fit: needs both group keys");
  require_no_constant(ga, "fe_twoway_fit");
  if (ga.global.sum_w != static_cast<double>(ga.global.n))
    throw UsageError("fe_twoway_fit: weighted two-way fixed effects are not supported");

  const std::int64_t n_g = static_cast<std::int64_t>(ga.groups.size());
  const std::int64_t n_t = static_cast<std::int64_t>(ga.second_groups.size());
  if (static_cast<std::int64_t>(ga.cell_counts.size()) != n_g * n_t)
    throw UnbalancedPanel("fe_twoway_fit: " + std::to_string(ga.cell_counts.size()) +
                          " populated cells for " + std::to_string(n_g) + " x " +
                          std::to_string(n_t) + " groups");
  std::int64_t cell = -1;
  for (const auto& [key, count] : ga.cell_counts) {
    if (cell < 0) cell = count;
    if (count != cell)
      throw UnbalancedPanel("fe_twoway_fit: cell (" + std::to_string(key.first) + ", " +
                            std::to_string(key.second) + ") has " + std::to_string(count) +
                            " rows, expected " + std::to_string(cell));
  }

  // Double demeaning: Sigma - sum_g mean terms - sum_t mean terms + global
  // mean term, which is exact only under balance.
  SymMatrix sigma_w = ga.global.sigma;
  Vec upsilon_w = ga.global.upsilon;
  double psi_w = ga.global.psi;
  for (const auto& g : ga.groups) subtract_mean_terms(g, sigma_w, upsilon_w, psi_w, 1.0);
  for (const auto& t : ga.second_groups) subtract_mean_terms(t, sigma_w, upsilon_w, psi_w, 1.0);
  subtract_mean_terms(ga.global, sigma_w, upsilon_w, psi_w, -1.0);

  FeResult out;
  out.absorbed_groups = n_g;
  out.absorbed_second_groups = n_t;
  out.fit = fit_demeaned(ga.global, sigma_w, upsilon_w, psi_w, n_g + n_t - 1);
  return out;
}

FeResult fe_recover_effects(const GroupedAccumulator& ga, std::int64_t max_groups) {
  if (ga.groups.empty()) throw UsageError("fe_recover_effects: no group aggregates");
  require_no_constant(ga, "fe_recover_effects");
  const std::int64_t n_g = static_cast<std::int64_t>(ga.groups.size());
  if (n_g > max_groups)
    throw TooManyGroups("fe_recover_effects: " + std::to_string(n_g) +
                        " groups exceed the bordered-system cap of " + std::to_string(max_groups));

  const int k = ga.k;
  const int p = k + static_cast<int>(n_g);
  if (ga.global.n <= p)
    throw InsufficientObservations("fe_recover_effects: n = " + std::to_string(ga.global.n) +
                                   " rows for " + std::to_string(p) + " parameters");

  // Bordered normal equations of the full dummy design:
  //   [ Sigma  S' ] [slopes ]   [ Upsilon ]
  //   [ S      D  ] [effects] = [ t       ]
  // with S rows the per-group covariate sums and D = diag(group weight).
  SymMatrix a(p);
  Vec rhs(p, 0.0);
  for (int i = 0; i < k; ++i) {
    for (int j = i; j < k; ++j) a.set(i, j, ga.global.sigma(i, j));
    rhs[i] = ga.global.upsilon[i];
  }
  for (int g = 0; g < static_cast<int>(n_g); ++g) {
    const CrossProducts& cp = ga.groups[g];
    for (int j = 0; j < k; ++j) a.set(j, k + g, cp.sum_x[j]);
    a.set(k + g, k + g, cp.sum_w);
    rhs[k + g] = cp.sum_y;
  }

  const Vec theta = spd_solve(a, rhs).solution;
  const double rss_raw = ga.global.psi - dot(rhs, theta);
  const double dof = static_cast<double>(ga.global.n - p);
  const double sigma2 = std::max(rss_raw, 0.0) / dof;
  SymMatrix vcv_full = sym_inverse(a).inverse;
  vcv_full.scale(sigma2);

  FeResult out;
  out.absorbed_groups = n_g;
  FitResult& fit = out.fit;
  fit.method = Method::ols;
  fit.coefficients.assign(theta.begin(), theta.begin() + k);
  fit.vcv = SymMatrix(k);
  for (int i = 0; i < k; ++i)
    for (int j = i; j < k; ++j) fit.vcv.set(i, j, vcv_full(i, j));
  fit.vcv_kind = VcvKind::iid;
  fit.n = ga.global.n;
  fit.dof_residual = ga.global.n - p;
  fit.sigma2 = sigma2;
  fit.sigma2_raw = rss_raw / dof;
  const double tss = ga.global.sum_w > 0
                         ? ga.global.psi - ga.global.sum_y * ga.global.sum_y / ga.global.sum_w
                         : 0.0;
  if (tss <= 1e-12 * static_cast<double>(ga.global.n)) {
    fit.degenerate_tss = true;
  } else {
    // The dummies span the constant, so the centered R-squared applies.
    fit.r2 = 1.0 - std::max(rss_raw, 0.0) / tss;
    fit.adj_r2 = 1.0 - (1.0 - fit.r2) * static_cast<double>(ga.global.n - 1) / dof;
  }

  out.effects = Vec(theta.begin() + k, theta.end());
  Vec se;
  se.reserve(n_g);
  for (int g = 0; g < static_cast<int>(n_g); ++g) {
    const double v = vcv_full(k + g, k + g);
    se.push_back(v > 0 ? std::sqrt(v) : 0.0);
  }
  out.effect_se = std::move(se);
  return out;
}

FitResult subsample_fit(const GroupedAccumulator& ga, std::span<const int> keep_groups,
                        const std::function<FitResult(const CrossProducts&)>& estimator) {
  if (keep_groups.empty()) throw UsageError("subsample_fit: empty group selection");
  CrossProducts merged = CrossProducts::zero(ga.k, ga.l, ga.global.intercept);
  std::vector<bool> seen(ga.groups.size(), false);
  for (int id : keep_groups) {
    if (id < 0 || id >= static_cast<int>(ga.groups.size()))
      throw UnknownGroup("subsample_fit: group id " + std::to_string(id) + " does not exist");
    if (seen[id]) throw UsageError("subsample_fit: group id " + std::to_string(id) + " repeated");
    seen[id] = true;
    merged.merge_from(ga.groups[id]);
  }
  return estimator(merged);
}

FitResult subsample_fit(const GroupedAccumulator& ga, std::span<const int> keep_groups) {
  return subsample_fit(ga, keep_groups, [](const CrossProducts& cp) { return ols_fit(cp); });
}

}  // namespace streamreg
