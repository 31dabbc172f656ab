#include "nlmg/sparse.hpp"

#include "nlmg/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nlmg {

CsrMatrix CsrMatrix::from_triplets(int rows, int cols, std::vector<Triplet> triplets) {
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  CsrMatrix m(rows, cols);
  m.col_idx_.reserve(triplets.size());
  m.values_.reserve(triplets.size());
  int last_row = -1, last_col = -1;
  for (const Triplet& t : triplets) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw Error(ErrorKind::invalid_argument, "CsrMatrix::from_triplets: index out of range");
    if (t.row == last_row && t.col == last_col) {
      m.values_.back() += t.value;
      continue;
    }
    m.col_idx_.push_back(t.col);
    m.values_.push_back(t.value);
    ++m.row_ptr_[static_cast<std::size_t>(t.row) + 1];
    last_row = t.row;
    last_col = t.col;
  }
  std::partial_sum(m.row_ptr_.begin(), m.row_ptr_.end(), m.row_ptr_.begin());
  return m;
}

CsrMatrix CsrMatrix::identity(int n) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  return from_triplets(n, n, std::move(t));
}

double CsrMatrix::at(int row, int col) const {
  const auto begin = col_idx_.begin() + row_ptr_[row];
  const auto end = col_idx_.begin() + row_ptr_[row + 1];
  const auto it = std::lower_bound(begin, end, col);
  if (it == end || *it != col) return 0.0;
  return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (int i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s += values_[p] * x[col_idx_[p]];
    y[i] = s;
  }
}

Vector CsrMatrix::operator*(std::span<const double> x) const {
  Vector y(static_cast<std::size_t>(rows_));
  multiply(x, y);
  return y;
}

void CsrMatrix::multiply_transpose(std::span<const double> x, std::span<double> y) const {
  std::fill(y.begin(), y.end(), 0.0);
  for (int i = 0; i < rows_; ++i)
    for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) y[col_idx_[p]] += values_[p] * x[i];
}

CsrMatrix CsrMatrix::transpose() const {
  CsrMatrix t(cols_, rows_);
  for (int c : col_idx_) ++t.row_ptr_[static_cast<std::size_t>(c) + 1];
  std::partial_sum(t.row_ptr_.begin(), t.row_ptr_.end(), t.row_ptr_.begin());
  t.col_idx_.resize(nnz());
  t.values_.resize(nnz());
  std::vector<int> next(t.row_ptr_.begin(), t.row_ptr_.end() - 1);
  // rows visited in increasing order, so each transposed row stays sorted
  for (int i = 0; i < rows_; ++i)
    for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      const int dst = next[col_idx_[p]]++;
      t.col_idx_[dst] = i;
      t.values_[dst] = values_[p];
    }
  return t;
}

double CsrMatrix::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b) {
  if (a.cols() != b.rows()) throw Error(ErrorKind::invalid_argument, "multiply: shape mismatch");
  // Gustavson's row-by-row product with a dense accumulator
  std::vector<double> acc(static_cast<std::size_t>(b.cols()), 0.0);
  std::vector<int> marker(static_cast<std::size_t>(b.cols()), -1);
  std::vector<Triplet> out;
  std::vector<int> cols;
  const auto arp = a.row_ptr();
  const auto aci = a.col_idx();
  const auto av = a.values();
  const auto brp = b.row_ptr();
  const auto bci = b.col_idx();
  const auto bv = b.values();
  for (int i = 0; i < a.rows(); ++i) {
    cols.clear();
    for (int p = arp[i]; p < arp[i + 1]; ++p) {
      const int k = aci[p];
      for (int q = brp[k]; q < brp[k + 1]; ++q) {
        const int j = bci[q];
        if (marker[j] != i) {
          marker[j] = i;
          acc[j] = 0.0;
          cols.push_back(j);
        }
        acc[j] += av[p] * bv[q];
      }
    }
    std::sort(cols.begin(), cols.end());
    for (int j : cols) out.push_back({i, j, acc[j]});
  }
  return CsrMatrix::from_triplets(a.rows(), b.cols(), std::move(out));
}

CsrMatrix add(const CsrMatrix& a, const CsrMatrix& b, double alpha, double beta) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorKind::invalid_argument, "add: shape mismatch");
  std::vector<Triplet> t;
  t.reserve(a.nnz() + b.nnz());
  for (const auto* m : {&a, &b}) {
    const double s = m == &a ? alpha : beta;
    const auto rp = m->row_ptr();
    const auto ci = m->col_idx();
    const auto v = m->values();
    for (int i = 0; i < m->rows(); ++i)
      for (int p = rp[i]; p < rp[i + 1]; ++p) t.push_back({i, ci[p], s * v[p]});
  }
  return CsrMatrix::from_triplets(a.rows(), a.cols(), std::move(t));
}

CsrMatrix galerkin_product(const CsrMatrix& p, const CsrMatrix& a) {
  return multiply(p.transpose(), multiply(a, p));
}

double symmetry_defect(const CsrMatrix& a) {
  if (a.rows() != a.cols()) throw Error(ErrorKind::invalid_argument, "symmetry_defect: not square");
  return add(a, a.transpose(), 1.0, -1.0).max_abs();
}

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

double inner(const CsrMatrix& a, std::span<const double> x, std::span<const double> y) {
  const auto rp = a.row_ptr();
  const auto ci = a.col_idx();
  const auto v = a.values();
  double s = 0.0;
  for (int i = 0; i < a.rows(); ++i) {
    double r = 0.0;
    for (int p = rp[i]; p < rp[i + 1]; ++p) r += v[p] * y[ci[p]];
    s += x[i] * r;
  }
  return s;
}

}  // namespace nlmg
