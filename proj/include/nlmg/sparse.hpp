#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nlmg {

using Vector = std::vector<double>;

struct Triplet {
  int row;
  int col;
  double value;
};

/// Compressed-sparse-row matrix. Entries are kept in row-major order with
/// sorted, unique column indices per row.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  CsrMatrix(int rows, int cols) : rows_(rows), cols_(cols), row_ptr_(static_cast<std::size_t>(rows) + 1, 0) {}

  /// Duplicate (row, col) pairs are summed. Structural zeros are kept.
  static CsrMatrix from_triplets(int rows, int cols, std::vector<Triplet> triplets);
  static CsrMatrix identity(int n);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  std::span<const int> row_ptr() const noexcept { return row_ptr_; }
  std::span<const int> col_idx() const noexcept { return col_idx_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  /// Entry lookup by binary search; 0 for entries outside the pattern.
  double at(int row, int col) const;
  double diagonal(int row) const { return at(row, row); }

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;
  Vector operator*(std::span<const double> x) const;
  /// y = A^T x
  void multiply_transpose(std::span<const double> x, std::span<double> y) const;

  CsrMatrix transpose() const;
  double max_abs() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> col_idx_;
  std::vector<double> values_;
};

/// C = A B
CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b);
/// alpha A + beta B on the union pattern.
CsrMatrix add(const CsrMatrix& a, const CsrMatrix& b, double alpha = 1.0, double beta = 1.0);
/// P^T A P
CsrMatrix galerkin_product(const CsrMatrix& p, const CsrMatrix& a);
/// max |A - A^T| over the union pattern.
double symmetry_defect(const CsrMatrix& a);

double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);
/// x^T A y
double inner(const CsrMatrix& a, std::span<const double> x, std::span<const double> y);

}  // namespace nlmg
