#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace crystalite {

// Dense row-major matrix of doubles. Row vectors are 1xC, column count is
// always explicit; no implicit broadcasting.
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), d_(static_cast<size_t>(rows) * cols, fill) {}

  static Mat zeros(int rows, int cols) { return Mat(rows, cols, 0.0); }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return d_.size(); }
  bool empty() const { return d_.empty(); }

  double& operator()(int r, int c) {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return d_[static_cast<size_t>(r) * cols_ + c];
  }
  double operator()(int r, int c) const {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return d_[static_cast<size_t>(r) * cols_ + c];
  }
  double& operator[](size_t i) { return d_[i]; }
  double operator[](size_t i) const { return d_[i]; }

  double* data() { return d_.data(); }
  const double* data() const { return d_.data(); }
  double* row(int r) { return d_.data() + static_cast<size_t>(r) * cols_; }
  const double* row(int r) const { return d_.data() + static_cast<size_t>(r) * cols_; }

  bool same_shape(const Mat& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  void fill(double v) { std::fill(d_.begin(), d_.end(), v); }

  Mat& operator+=(const Mat& o) {
    assert(same_shape(o));
    for (size_t i = 0; i < d_.size(); ++i) d_[i] += o.d_[i];
    return *this;
  }
  Mat& operator-=(const Mat& o) {
    assert(same_shape(o));
    for (size_t i = 0; i < d_.size(); ++i) d_[i] -= o.d_[i];
    return *this;
  }
  Mat& operator*=(double s) {
    for (double& v : d_) v *= s;
    return *this;
  }

  bool all_finite() const {
    for (double v : d_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> d_;
};

// C = A * B, ikj loop order.
inline Mat matmul(const Mat& a, const Mat& b) {
  assert(a.cols() == b.rows());
  Mat c(a.rows(), b.cols());
  const int n = a.rows(), k = a.cols(), m = b.cols();
  for (int i = 0; i < n; ++i) {
    double* ci = c.row(i);
    const double* ai = a.row(i);
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      const double* bp = b.row(p);
      for (int j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
  return c;
}

inline Mat transpose(const Mat& a) {
  Mat t(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

// Sums values in ascending order so the result depends only on the multiset,
// not on the storage order. Used where reductions cross atom tokens and
// permutation equivariance must hold bit-for-bit.
double stable_sum(const double* v, int n);

}  // namespace crystalite
