#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "error.hpp"

namespace intona {

// Dense row-major matrix. Vectors are 1 x n.
template <typename T>
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<T> v;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, T(0)) {}
  Mat(int r, int c, std::vector<T> data) : rows(r), cols(c), v(std::move(data)) {
    require(v.size() == static_cast<size_t>(r) * c, Status::ShapeMismatch,
            "matrix data does not match shape");
  }

  T& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  T at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
  T* row_ptr(int r) { return v.data() + static_cast<size_t>(r) * cols; }
  const T* row_ptr(int r) const {
    return v.data() + static_cast<size_t>(r) * cols;
  }
  size_t size() const { return v.size(); }

  bool same_shape(const Mat& o) const {
    return rows == o.rows && cols == o.cols;
  }

  bool all_finite() const {
    for (T x : v)
      if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
  }

  template <typename U>
  Mat<U> cast() const {
    Mat<U> out(rows, cols);
    for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
    return out;
  }
};

// out = a * b, with optional transposition of either side.
template <typename T>
void gemm(const Mat<T>& a, bool ta, const Mat<T>& b, bool tb, Mat<T>& out,
          bool accumulate = false) {
  const int m = ta ? a.cols : a.rows;
  const int k = ta ? a.rows : a.cols;
  const int kb = tb ? b.cols : b.rows;
  const int n = tb ? b.rows : b.cols;
  require(k == kb, Status::ShapeMismatch, "gemm inner dimensions differ");
  if (out.rows != m || out.cols != n) out = Mat<T>(m, n);
  if (!accumulate) std::fill(out.v.begin(), out.v.end(), T(0));
  // i-k-j loop keeps the inner accesses contiguous for the common
  // untransposed case.
  for (int i = 0; i < m; ++i) {
    T* orow = out.row_ptr(i);
    for (int p = 0; p < k; ++p) {
      const T aval = ta ? a.at(p, i) : a.at(i, p);
      if (aval == T(0)) continue;
      if (!tb) {
        const T* brow = b.row_ptr(p);
        for (int j = 0; j < n; ++j) orow[j] += aval * brow[j];
      } else {
        for (int j = 0; j < n; ++j) orow[j] += aval * b.at(j, p);
      }
    }
  }
}

}  // namespace intona
