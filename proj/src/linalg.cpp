#include "streamreg/linalg.hpp"

#include <cmath>
#include <cstdlib>
#include <optional>

#include "streamreg/errors.hpp"

namespace streamreg {

namespace {

constexpr double kPivotTolerance = 1e-12;

// Dense row-major copy of a packed symmetric matrix.
std::vector<double> to_full(const SymMatrix& a) {
  const int n = a.dim();
  std::vector<double> full(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) full[static_cast<std::size_t>(i) * n + j] = a(i, j);
  return full;
}

struct CholFactor {
  std::vector<double> l;  // lower triangle, row-major full storage
  double min_pivot = 0.0;
  double max_pivot = 0.0;
};

// In-place lower Cholesky of a full copy.  Returns nullopt when a pivot
// falls below tol (semi-definite or indefinite input).
std::optional<CholFactor> chol_factor(const SymMatrix& a, double tol) {
  const int n = a.dim();
  CholFactor f;
  f.l = to_full(a);
  f.min_pivot = 0.0;
  f.max_pivot = 0.0;
  auto at = [&](int i, int j) -> double& { return f.l[static_cast<std::size_t>(i) * n + j]; };
  for (int j = 0; j < n; ++j) {
    double d = at(j, j);
    for (int k = 0; k < j; ++k) d -= at(j, k) * at(j, k);
    if (!(d > tol)) return std::nullopt;
    if (j == 0 || d < f.min_pivot) f.min_pivot = d;
    if (j == 0 || d > f.max_pivot) f.max_pivot = d;
    const double root = std::sqrt(d);
    at(j, j) = root;
    for (int i = j + 1; i < n; ++i) {
      double s = at(i, j);
      for (int k = 0; k < j; ++k) s -= at(i, k) * at(j, k);
      at(i, j) = s / root;
    }
  }
  return f;
}

Vec chol_solve(const CholFactor& f, int n, const Vec& b) {
  auto at = [&](int i, int j) { return f.l[static_cast<std::size_t>(i) * n + j]; };
  Vec x(b);
  for (int i = 0; i < n; ++i) {
    double s = x[i];
    for (int k = 0; k < i; ++k) s -= at(i, k) * x[k];
    x[i] = s / at(i, i);
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = x[i];
    for (int k = i + 1; k < n; ++k) s -= at(k, i) * x[k];
    x[i] = s / at(i, i);
  }
  return x;
}

// Fully pivoted Gauss-Jordan inversion of a full row-major matrix.
// Throws RankDeficient when the best remaining pivot is below tol.
void gauss_jordan_invert(std::vector<double>& a, int n, double tol) {
  std::vector<int> indxc(n), indxr(n), ipiv(n, 0);
  auto at = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };
  for (int i = 0; i < n; ++i) {
    double big = 0.0;
    int irow = -1, icol = -1;
    for (int j = 0; j < n; ++j) {
      if (ipiv[j] == 1) continue;
      for (int k = 0; k < n; ++k) {
        if (ipiv[k] == 0 && std::abs(at(j, k)) >= big) {
          big = std::abs(at(j, k));
          irow = j;
          icol = k;
        }
      }
    }
    if (irow < 0 || big <= tol)
      throw RankDeficient("matrix is numerically singular (pivot " + std::to_string(big) + ")");
    ++ipiv[icol];
    if (irow != icol)
      for (int k = 0; k < n; ++k) std::swap(at(irow, k), at(icol, k));
    indxr[i] = irow;
    indxc[i] = icol;
    const double pivinv = 1.0 / at(icol, icol);
    at(icol, icol) = 1.0;
    for (int k = 0; k < n; ++k) at(icol, k) *= pivinv;
    for (int ll = 0; ll < n; ++ll) {
      if (ll == icol) continue;
      const double dum = at(ll, icol);
      at(ll, icol) = 0.0;
      for (int k = 0; k < n; ++k) at(ll, k) -= at(icol, k) * dum;
    }
  }
  for (int l = n - 1; l >= 0; --l) {
    if (indxr[l] == indxc[l]) continue;
    for (int k = 0; k < n; ++k) std::swap(at(k, indxr[l]), at(k, indxc[l]));
  }
}

double full_one_norm(const std::vector<double>& a, int n) {
  double best = 0.0;
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::abs(a[static_cast<std::size_t>(i) * n + j]);
    if (s > best) best = s;
  }
  return best;
}

double sym_tolerance(const SymMatrix& a) {
  return kPivotTolerance * std::max(a.max_diag(), 1e-300);
}

}  // namespace

SymMatrix SymMatrix::identity(int dim) {
  SymMatrix m(dim);
  for (int i = 0; i < dim; ++i) m.set(i, i, 1.0);
  return m;
}

void SymMatrix::add_outer(std::span<const double> x, double scale) {
  std::size_t idx = 0;
  for (int i = 0; i < dim_; ++i) {
    const double xi = scale * x[i];
    for (int j = i; j < dim_; ++j) upper_[idx++] += xi * x[j];
  }
}

void SymMatrix::add_scaled(const SymMatrix& other, double s) {
  for (std::size_t i = 0; i < upper_.size(); ++i) upper_[i] += s * other.upper_[i];
}

void SymMatrix::scale(double s) {
  for (double& v : upper_) v *= s;
}

Vec SymMatrix::matvec(std::span<const double> v) const {
  Vec out(dim_, 0.0);
  for (int i = 0; i < dim_; ++i) {
    double s = 0.0;
    for (int j = 0; j < dim_; ++j) s += (*this)(i, j) * v[j];
    out[i] = s;
  }
  return out;
}

double SymMatrix::quad_form(std::span<const double> v) const {
  double s = 0.0;
  for (int i = 0; i < dim_; ++i) {
    s += (*this)(i, i) * v[i] * v[i];
    for (int j = i + 1; j < dim_; ++j) s += 2.0 * (*this)(i, j) * v[i] * v[j];
  }
  return s;
}

double SymMatrix::max_diag() const {
  double best = 0.0;
  for (int i = 0; i < dim_; ++i) best = std::max(best, std::abs((*this)(i, i)));
  return best;
}

double SymMatrix::one_norm() const {
  double best = 0.0;
  for (int i = 0; i < dim_; ++i) {
    double s = 0.0;
    for (int j = 0; j < dim_; ++j) s += std::abs((*this)(i, j));
    if (s > best) best = s;
  }
  return best;
}

Vec Mat::matvec(std::span<const double> v) const {
  Vec out(rows_, 0.0);
  for (int i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (int j = 0; j < cols_; ++j) s += (*this)(i, j) * v[j];
    out[i] = s;
  }
  return out;
}

Vec Mat::tmatvec(std::span<const double> v) const {
  Vec out(cols_, 0.0);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) out[j] += (*this)(i, j) * v[i];
  return out;
}

Mat Mat::transposed() const {
  Mat t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

LinalgCounters& linalg_counters() {
  static LinalgCounters counters;
  return counters;
}

SolveReport spd_solve(const SymMatrix& a, const Vec& b) {
  if (a.dim() != static_cast<int>(b.size()))
    throw DimensionMismatch("spd_solve: matrix dim " + std::to_string(a.dim()) +
                            " vs rhs dim " + std::to_string(b.size()));
  if (a.dim() == 0) return {Vec{}, SolveMethod::cholesky, 1.0};
  linalg_counters().factorizations.fetch_add(1, std::memory_order_relaxed);

  const double tol = sym_tolerance(a);
  if (auto f = chol_factor(a, tol)) {
    SolveReport r;
    r.solution = chol_solve(*f, a.dim(), b);
    r.method = SolveMethod::cholesky;
    r.rcond = f->max_pivot > 0 ? f->min_pivot / f->max_pivot : 0.0;
    return r;
  }

  std::vector<double> inv = to_full(a);
  gauss_jordan_invert(inv, a.dim(), tol);
  SolveReport r;
  r.method = SolveMethod::pivoted_fallback;
  const int n = a.dim();
  r.solution.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += inv[static_cast<std::size_t>(i) * n + j] * b[j];
    r.solution[i] = s;
  }
  const double denom = a.one_norm() * full_one_norm(inv, n);
  r.rcond = denom > 0 ? 1.0 / denom : 0.0;
  return r;
}

InverseReport sym_inverse(const SymMatrix& a) {
  InverseReport r;
  const int n = a.dim();
  if (n == 0) {
    r.rcond = 1.0;
    return r;
  }
  linalg_counters().factorizations.fetch_add(1, std::memory_order_relaxed);
  const double tol = sym_tolerance(a);

  std::vector<double> inv;
  if (auto f = chol_factor(a, tol)) {
    // Invert from the factor: solve L L' X = I column by column.
    inv.assign(static_cast<std::size_t>(n) * n, 0.0);
    Vec e(n, 0.0);
    for (int j = 0; j < n; ++j) {
      e.assign(n, 0.0);
      e[j] = 1.0;
      Vec col = chol_solve(*f, n, e);
      for (int i = 0; i < n; ++i) inv[static_cast<std::size_t>(i) * n + j] = col[i];
    }
    r.method = SolveMethod::cholesky;
    r.rcond = f->max_pivot > 0 ? f->min_pivot / f->max_pivot : 0.0;
  } else {
    inv = to_full(a);
    gauss_jordan_invert(inv, n, tol);
    r.method = SolveMethod::pivoted_fallback;
    const double denom = a.one_norm() * full_one_norm(inv, n);
    r.rcond = denom > 0 ? 1.0 / denom : 0.0;
  }

  r.inverse = SymMatrix(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      // Symmetrize: the two off-diagonal estimates differ only by round-off.
      const double v = 0.5 * (inv[static_cast<std::size_t>(i) * n + j] +
                              inv[static_cast<std::size_t>(j) * n + i]);
      r.inverse.set(i, j, v);
    }
  return r;
}

Vec gen_solve(const Mat& a, const Vec& b) {
  if (a.rows() != a.cols()) throw DimensionMismatch("gen_solve: matrix is not square");
  if (a.rows() != static_cast<int>(b.size()))
    throw DimensionMismatch("gen_solve: matrix dim vs rhs dim");
  Mat inv = gen_inverse(a);
  return inv.matvec(b);
}

Mat gen_inverse(const Mat& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("gen_inverse: matrix is not square");
  const int n = a.rows();
  if (n == 0) return a;
  linalg_counters().factorizations.fetch_add(1, std::memory_order_relaxed);
  std::vector<double> work(a.data().begin(), a.data().end());
  double scale = 0.0;
  for (double v : work) scale = std::max(scale, std::abs(v));
  gauss_jordan_invert(work, n, kPivotTolerance * std::max(scale, 1e-300));
  Mat inv(n, n);
  std::copy(work.begin(), work.end(), inv.data_mutable().begin());
  return inv;
}

SymMatrix sym_accumulate_outer(SymMatrix a, std::span<const double> x, double scale) {
  if (a.dim() != static_cast<int>(x.size()))
    throw DimensionMismatch("sym_accumulate_outer: dim mismatch");
  a.add_outer(x, scale);
  return a;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace streamreg
