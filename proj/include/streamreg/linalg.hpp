#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

namespace streamreg {

using Vec = std::vector<double>;

// Symmetric matrix with packed upper-triangle storage.  Symmetry is
// structural: a single entry backs (i,j) and (j,i), so the two can never
// disagree.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int dim) : dim_(dim), upper_(packed_size(dim), 0.0) {}

  static SymMatrix identity(int dim);

  int dim() const { return dim_; }
  bool empty() const { return dim_ == 0; }

  double operator()(int i, int j) const { return upper_[index(i, j)]; }
  void set(int i, int j, double v) { upper_[index(i, j)] = v; }
  void add(int i, int j, double v) { upper_[index(i, j)] += v; }

  // A += scale * x x'
  void add_outer(std::span<const double> x, double scale = 1.0);
  // A += scale * B
  void add_scaled(const SymMatrix& other, double scale = 1.0);
  void scale(double s);

  Vec matvec(std::span<const double> v) const;
  double quad_form(std::span<const double> v) const;  // v' A v
  double max_diag() const;
  double one_norm() const;

  std::span<const double> packed() const { return upper_; }
  std::span<double> packed_mutable() { return upper_; }

  static std::size_t packed_size(int dim) {
    return static_cast<std::size_t>(dim) * (dim + 1) / 2;
  }

 private:
  std::size_t index(int i, int j) const {
    if (i > j) std::swap(i, j);
    return static_cast<std::size_t>(i) * dim_ - static_cast<std::size_t>(i) * (i - 1) / 2 + (j - i);
  }

  int dim_ = 0;
  std::vector<double> upper_;
};

// Dense rectangular matrix, row-major.  Used for the instrument cross
// products (K x L) and the non-symmetric solves they require.
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, 0.0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
  double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

  Vec matvec(std::span<const double> v) const;           // A v        (len cols)
  Vec tmatvec(std::span<const double> v) const;          // A' v       (len rows)
  Mat transposed() const;

  std::span<const double> data() const { return data_; }
  std::span<double> data_mutable() { return data_; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

enum class SolveMethod { cholesky, pivoted_fallback };

struct SolveReport {
  Vec solution;
  SolveMethod method = SolveMethod::cholesky;
  double rcond = 0.0;  // reciprocal condition estimate
};

struct InverseReport {
  SymMatrix inverse;
  SolveMethod method = SolveMethod::cholesky;
  double rcond = 0.0;
};

// Solve A x = b for symmetric positive definite A.  Attempts a Cholesky
// factorization first and falls back to fully pivoted Gauss-Jordan
// elimination when A is semi-definite or mildly indefinite.  Pivots below
// 1e-12 * max|diag| are treated as zero; throws RankDeficient.
SolveReport spd_solve(const SymMatrix& a, const Vec& b);

// Inverse of a symmetric matrix via the same Cholesky-then-fallback route.
InverseReport sym_inverse(const SymMatrix& a);

// Solve A x = b / invert A for general square A (partially pivoted
// Gauss-Jordan).  Throws RankDeficient on numerically singular input.
Vec gen_solve(const Mat& a, const Vec& b);
Mat gen_inverse(const Mat& a);

// Pure form of the accumulation primitive: returns a + scale * x x'.
SymMatrix sym_accumulate_outer(SymMatrix a, std::span<const double> x, double scale = 1.0);

double dot(std::span<const double> a, std::span<const double> b);

// Counts of K x K factorizations performed, for cost instrumentation.
struct LinalgCounters {
  std::atomic<std::uint64_t> factorizations{0};
  void reset() { factorizations = 0; }
};
LinalgCounters& linalg_counters();

}  // namespace streamreg
