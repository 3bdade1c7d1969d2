#include "streamreg/reference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace streamreg::reference {

namespace {

// Minimal dense helpers, independent of the streaming linear algebra.
struct DMat {
  int rows = 0, cols = 0;
  std::vector<double> a;
  DMat() = default;
  DMat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}
  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
};

DMat mul(const DMat& x, const DMat& y) {
  DMat out(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int k = 0; k < x.cols; ++k)
      for (int j = 0; j < y.cols; ++j) out.at(i, j) += x.at(i, k) * y.at(k, j);
  return out;
}

// Gauss-Jordan with partial pivoting on [A | I].
DMat inverse(DMat m) {
  if (m.rows != m.cols) throw std::invalid_argument("reference: inverse of non-square matrix");
  const int n = m.rows;
  DMat inv(n, n);
  for (int i = 0; i < n; ++i) inv.at(i, i) = 1.0;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(m.at(r, col)) > std::abs(m.at(pivot, col))) pivot = r;
    if (std::abs(m.at(pivot, col)) < 1e-300)
      throw std::runtime_error("reference: singular matrix");
    if (pivot != col)
      for (int c = 0; c < n; ++c) {
        std::swap(m.at(pivot, c), m.at(col, c));
        std::swap(inv.at(pivot, c), inv.at(col, c));
      }
    const double p = m.at(col, col);
    for (int c = 0; c < n; ++c) {
      m.at(col, c) /= p;
      inv.at(col, c) /= p;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = m.at(r, col);
      if (f == 0.0) continue;
      for (int c = 0; c < n; ++c) {
        m.at(r, c) -= f * m.at(col, c);
        inv.at(r, c) -= f * inv.at(col, c);
      }
    }
  }
  return inv;
}

Vec mul_vec(const DMat& m, const Vec& v) {
  Vec out(m.rows, 0.0);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) out[i] += m.at(i, j) * v[j];
  return out;
}

DMat cross_wxx(const DenseDataset& d) {  // X'WX
  DMat m(d.k, d.k);
  for (int i = 0; i < d.n; ++i) {
    const double w = d.wat(i);
    for (int a = 0; a < d.k; ++a)
      for (int b = 0; b < d.k; ++b) m.at(a, b) += w * d.xat(i, a) * d.xat(i, b);
  }
  return m;
}

Vec cross_wxy(const DenseDataset& d) {  // X'Wy
  Vec v(d.k, 0.0);
  for (int i = 0; i < d.n; ++i) {
    const double wy = d.wat(i) * d.y[i];
    for (int a = 0; a < d.k; ++a) v[a] += wy * d.xat(i, a);
  }
  return v;
}

double fitted(const DenseDataset& d, const Vec& beta, int i) {
  double s = 0.0;
  for (int j = 0; j < d.k; ++j) s += d.xat(i, j) * beta[j];
  return s;
}

double residual_ss(const DenseDataset& d, const Vec& beta) {
  double rss = 0.0;
  for (int i = 0; i < d.n; ++i) {
    const double u = d.y[i] - fitted(d, beta, i);
    rss += d.wat(i) * u * u;
  }
  return rss;
}

SymMatrix to_sym(const DMat& m) {
  SymMatrix s(m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = i; j < m.cols; ++j) s.set(i, j, 0.5 * (m.at(i, j) + m.at(j, i)));
  return s;
}

void fill_stats(OracleFit& fit, const DenseDataset& d, int n_params) {
  const double rss = residual_ss(d, fit.beta);
  const double dof = d.n - n_params;
  fit.dof_residual = d.n - n_params;
  fit.sigma2 = rss / dof;
  double tss = 0.0;
  if (d.intercept) {
    double sw = 0.0, swy = 0.0;
    for (int i = 0; i < d.n; ++i) {
      sw += d.wat(i);
      swy += d.wat(i) * d.y[i];
    }
    const double ybar = swy / sw;
    for (int i = 0; i < d.n; ++i) tss += d.wat(i) * (d.y[i] - ybar) * (d.y[i] - ybar);
  } else {
    for (int i = 0; i < d.n; ++i) tss += d.wat(i) * d.y[i] * d.y[i];
  }
  if (tss <= 1e-12 * d.n) {
    fit.r2 = 0.0;
    fit.adj_r2 = 0.0;
    return;
  }
  fit.r2 = 1.0 - std::max(rss, 0.0) / tss;
  fit.adj_r2 = 1.0 - (1.0 - fit.r2) * (d.n - 1) / dof;
  if (d.intercept && n_params > 1 && rss > 0.0)
    fit.f_stat = ((tss - rss) / (n_params - 1)) / (rss / dof);
}

DMat cross_wzz(const DenseDataset& d) {
  DMat m(d.l, d.l);
  for (int i = 0; i < d.n; ++i) {
    const double w = d.wat(i);
    for (int a = 0; a < d.l; ++a)
      for (int b = 0; b < d.l; ++b) m.at(a, b) += w * d.zat(i, a) * d.zat(i, b);
  }
  return m;
}

DMat cross_wxz(const DenseDataset& d) {
  DMat m(d.k, d.l);
  for (int i = 0; i < d.n; ++i) {
    const double w = d.wat(i);
    for (int a = 0; a < d.k; ++a)
      for (int b = 0; b < d.l; ++b) m.at(a, b) += w * d.xat(i, a) * d.zat(i, b);
  }
  return m;
}

Vec cross_wzy(const DenseDataset& d) {
  Vec v(d.l, 0.0);
  for (int i = 0; i < d.n; ++i) {
    const double wy = d.wat(i) * d.y[i];
    for (int b = 0; b < d.l; ++b) v[b] += wy * d.zat(i, b);
  }
  return v;
}

DMat transpose(const DMat& m) {
  DMat t(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) t.at(j, i) = m.at(i, j);
  return t;
}

double norm_cdf(double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }
double norm_pdf(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * 3.14159265358979323846); }

}  // namespace

OracleFit ols(const DenseDataset& d) {
  OracleFit fit;
  const DMat xtx_inv = inverse(cross_wxx(d));
  fit.beta = mul_vec(xtx_inv, cross_wxy(d));
  fill_stats(fit, d, d.k);
  fit.vcv = to_sym(xtx_inv);
  fit.vcv.scale(fit.sigma2);
  return fit;
}

OracleFit iv(const DenseDataset& d) {
  OracleFit fit;
  const DMat ztx_inv = inverse(transpose(cross_wxz(d)));  // (Z'X)^-1, requires l == k
  fit.beta = mul_vec(ztx_inv, cross_wzy(d));
  fill_stats(fit, d, d.k);
  fit.f_stat.reset();
  const DMat v = mul(mul(ztx_inv, cross_wzz(d)), transpose(ztx_inv));
  fit.vcv = to_sym(v);
  fit.vcv.scale(fit.sigma2);
  return fit;
}

OracleFit tsls(const DenseDataset& d) {
  OracleFit fit;
  const DMat xz = cross_wxz(d);
  const DMat zz_inv = inverse(cross_wzz(d));
  const DMat p = mul(xz, zz_inv);
  const DMat a_inv = inverse(mul(p, transpose(xz)));
  fit.beta = mul_vec(a_inv, mul_vec(p, cross_wzy(d)));
  fill_stats(fit, d, d.k);
  fit.f_stat.reset();
  fit.vcv = to_sym(a_inv);
  fit.vcv.scale(fit.sigma2);
  return fit;
}

Vec ridge(const DenseDataset& d, double lambda, bool penalize_intercept) {
  DMat m = cross_wxx(d);
  for (int j = 0; j < d.k; ++j) {
    if (j == 0 && d.intercept && !penalize_intercept) continue;
    m.at(j, j) += lambda;
  }
  return mul_vec(inverse(m), cross_wxy(d));
}

Vec coordinate_descent(const DenseDataset& d, double lambda1, double lambda2,
                       bool penalize_intercept, int max_iterations, double tolerance) {
  Vec beta(d.k, 0.0);
  Vec resid(d.y);
  Vec col_ss(d.k, 0.0);
  for (int i = 0; i < d.n; ++i)
    for (int j = 0; j < d.k; ++j) col_ss[j] += d.wat(i) * d.xat(i, j) * d.xat(i, j);

  for (int it = 0; it < max_iterations; ++it) {
    double max_delta = 0.0;
    for (int j = 0; j < d.k; ++j) {
      if (col_ss[j] <= 0.0) continue;
      double rho = col_ss[j] * beta[j];
      for (int i = 0; i < d.n; ++i) rho += d.wat(i) * d.xat(i, j) * resid[i];
      const bool penalized = penalize_intercept || !(d.intercept && j == 0);
      double next;
      if (penalized) {
        const double soft = std::max(std::abs(rho) - lambda1, 0.0);
        next = (rho >= 0 ? soft : -soft) / (col_ss[j] + lambda2);
      } else {
        next = rho / col_ss[j];
      }
      const double delta = next - beta[j];
      if (delta != 0.0) {
        for (int i = 0; i < d.n; ++i) resid[i] -= delta * d.xat(i, j);
        beta[j] = next;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    if (max_delta < tolerance) break;
  }
  return beta;
}

double penalized_objective(const DenseDataset& d, const Vec& beta, double lambda1, double lambda2,
                           bool penalize_intercept) {
  double obj = 0.5 * residual_ss(d, beta);
  for (int j = 0; j < d.k; ++j) {
    if (!penalize_intercept && d.intercept && j == 0) continue;
    obj += lambda1 * std::abs(beta[j]) + 0.5 * lambda2 * beta[j] * beta[j];
  }
  return obj;
}

SymMatrix hc1(const DenseDataset& d, const Vec& beta) {
  const DMat bread = inverse(cross_wxx(d));
  DMat meat(d.k, d.k);
  for (int i = 0; i < d.n; ++i) {
    const double s = d.wat(i) * (d.y[i] - fitted(d, beta, i));
    for (int a = 0; a < d.k; ++a)
      for (int b = 0; b < d.k; ++b) meat.at(a, b) += s * s * d.xat(i, a) * d.xat(i, b);
  }
  DMat v = mul(mul(bread, meat), bread);
  const double c = static_cast<double>(d.n) / (d.n - d.k);
  SymMatrix out = to_sym(v);
  out.scale(c);
  return out;
}

SymMatrix crve(const DenseDataset& d, const Vec& beta) {
  const DMat bread = inverse(cross_wxx(d));
  const int n_g = *std::max_element(d.g.begin(), d.g.end()) + 1;
  DMat scores(n_g, d.k);
  for (int i = 0; i < d.n; ++i) {
    const double s = d.wat(i) * (d.y[i] - fitted(d, beta, i));
    for (int a = 0; a < d.k; ++a) scores.at(d.g[i], a) += s * d.xat(i, a);
  }
  DMat meat(d.k, d.k);
  for (int g = 0; g < n_g; ++g)
    for (int a = 0; a < d.k; ++a)
      for (int b = 0; b < d.k; ++b) meat.at(a, b) += scores.at(g, a) * scores.at(g, b);
  DMat v = mul(mul(bread, meat), bread);
  const double c = (static_cast<double>(d.n - 1) / (d.n - d.k)) *
                   (static_cast<double>(n_g) / (n_g - 1));
  SymMatrix out = to_sym(v);
  out.scale(c);
  return out;
}

Vec glm_newton(const DenseDataset& d, bool probit, int max_iterations, double tolerance) {
  Vec beta(d.k, 0.0);
  for (int it = 0; it < max_iterations; ++it) {
    Vec score(d.k, 0.0);
    DMat info(d.k, d.k);
    for (int i = 0; i < d.n; ++i) {
      const double eta = fitted(d, beta, i);
      double s, h;
      if (probit) {
        const double p = norm_cdf(eta);
        const double phi = norm_pdf(eta);
        s = d.y[i] > 0.5 ? phi / p : -phi / (1.0 - p);
        h = d.y[i] > 0.5 ? phi * (phi + eta * p) / (p * p)
                         : phi * (phi - eta * (1.0 - p)) / ((1.0 - p) * (1.0 - p));
      } else {
        const double p = 1.0 / (1.0 + std::exp(-eta));
        s = d.y[i] - p;
        h = p * (1.0 - p);
      }
      for (int a = 0; a < d.k; ++a) {
        score[a] += s * d.xat(i, a);
        for (int b = 0; b < d.k; ++b) info.at(a, b) += h * d.xat(i, a) * d.xat(i, b);
      }
    }
    const Vec step = mul_vec(inverse(info), score);
    double max_delta = 0.0;
    for (int j = 0; j < d.k; ++j) {
      beta[j] += step[j];
      max_delta = std::max(max_delta, std::abs(step[j]));
    }
    if (max_delta < tolerance) break;
  }
  return beta;
}

double glm_loglik(const DenseDataset& d, const Vec& beta, bool probit) {
  double ll = 0.0;
  for (int i = 0; i < d.n; ++i) {
    const double eta = fitted(d, beta, i);
    const double p = probit ? norm_cdf(eta) : 1.0 / (1.0 + std::exp(-eta));
    ll += d.y[i] > 0.5 ? std::log(p) : std::log(1.0 - p);
  }
  return ll;
}

FeFit fe_dummy(const DenseDataset& d) {
  const int n_g = *std::max_element(d.g.begin(), d.g.end()) + 1;
  const int p = d.k + n_g;
  DMat xtx(p, p);
  Vec xty(p, 0.0);
  Vec row(p, 0.0);
  double yty = 0.0;
  for (int i = 0; i < d.n; ++i) {
    std::fill(row.begin(), row.end(), 0.0);
    for (int j = 0; j < d.k; ++j) row[j] = d.xat(i, j);
    row[d.k + d.g[i]] = 1.0;
    const double w = d.wat(i);
    for (int a = 0; a < p; ++a) {
      if (row[a] == 0.0) continue;
      xty[a] += w * row[a] * d.y[i];
      for (int b = 0; b < p; ++b) xtx.at(a, b) += w * row[a] * row[b];
    }
    yty += w * d.y[i] * d.y[i];
  }
  const DMat inv = inverse(xtx);
  const Vec theta = mul_vec(inv, xty);

  double rss = 0.0;
  for (int i = 0; i < d.n; ++i) {
    double fit = theta[d.k + d.g[i]];
    for (int j = 0; j < d.k; ++j) fit += d.xat(i, j) * theta[j];
    const double u = d.y[i] - fit;
    rss += d.wat(i) * u * u;
  }
  FeFit out;
  out.sigma2 = rss / (d.n - p);
  out.slopes.assign(theta.begin(), theta.begin() + d.k);
  out.effects.assign(theta.begin() + d.k, theta.end());
  for (int j = 0; j < d.k; ++j) out.slope_se.push_back(std::sqrt(out.sigma2 * inv.at(j, j)));
  for (int g = 0; g < n_g; ++g)
    out.effect_se.push_back(std::sqrt(out.sigma2 * inv.at(d.k + g, d.k + g)));
  return out;
}

Vec fe_twoway_dummy(const DenseDataset& d) {
  const int n_g = *std::max_element(d.g.begin(), d.g.end()) + 1;
  const int n_t = *std::max_element(d.t.begin(), d.t.end()) + 1;
  const int p = d.k + n_g + (n_t - 1);
  DMat xtx(p, p);
  Vec xty(p, 0.0);
  Vec row(p, 0.0);
  for (int i = 0; i < d.n; ++i) {
    std::fill(row.begin(), row.end(), 0.0);
    for (int j = 0; j < d.k; ++j) row[j] = d.xat(i, j);
    row[d.k + d.g[i]] = 1.0;
    if (d.t[i] < n_t - 1) row[d.k + n_g + d.t[i]] = 1.0;
    const double w = d.wat(i);
    for (int a = 0; a < p; ++a) {
      if (row[a] == 0.0) continue;
      xty[a] += w * row[a] * d.y[i];
      for (int b = 0; b < p; ++b) xtx.at(a, b) += w * row[a] * row[b];
    }
  }
  const Vec theta = mul_vec(inverse(xtx), xty);
  return Vec(theta.begin(), theta.begin() + d.k);
}

double mean_squared_error(const DenseDataset& d, const Vec& beta) {
  double acc = 0.0, sw = 0.0;
  for (int i = 0; i < d.n; ++i) {
    const double u = d.y[i] - fitted(d, beta, i);
    acc += d.wat(i) * u * u;
    sw += d.wat(i);
  }
  return acc / sw;
}

}  // namespace streamreg::reference
