#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "rgat/errors.hpp"

namespace rgat {

// Dense row-major matrix. Vectors are columns, shape (rows, 1).
template <typename S>
struct Mat {
  using value_type = S;

  int rows = 0;
  int cols = 0;
  std::vector<S> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, S(0)) {}
  Mat(int r, int c, std::initializer_list<S> vals) : rows(r), cols(c), a(vals) {
    if (a.size() != static_cast<std::size_t>(r) * c)
      throw dimension_error("matrix initializer has " + std::to_string(a.size()) +
                            " values for shape " + shape_str());
  }

  static Mat colvec(std::initializer_list<S> vals) {
    Mat m(static_cast<int>(vals.size()), 1);
    int i = 0;
    for (S v : vals) m.a[i++] = v;
    return m;
  }

  S& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  const S& operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }

  std::size_t size() const { return a.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
  void fill(S v) { std::fill(a.begin(), a.end(), v); }

  std::string shape_str() const {
    return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
  }
};

template <typename S>
bool all_finite(const Mat<S>& m) {
  for (S v : m.a)
    if (!std::isfinite(static_cast<double>(v))) return false;
  return true;
}

template <typename S>
Mat<S> transpose(const Mat<S>& m) {
  Mat<S> t(m.cols, m.rows);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) t(c, r) = m(r, c);
  return t;
}

template <typename To, typename From>
Mat<To> cast_mat(const Mat<From>& m) {
  Mat<To> out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.a.size(); ++i) out.a[i] = static_cast<To>(m.a[i]);
  return out;
}

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw dimension_error(msg);
}

// C += A * B
template <typename S>
void mm_nn_acc(const Mat<S>& A, const Mat<S>& B, Mat<S>& C) {
  for (int i = 0; i < A.rows; ++i)
    for (int k = 0; k < A.cols; ++k) {
      const S aik = A(i, k);
      if (aik == S(0)) continue;
      for (int j = 0; j < B.cols; ++j) C(i, j) += aik * B(k, j);
    }
}

// C += A * B^T
template <typename S>
void mm_nt_acc(const Mat<S>& A, const Mat<S>& B, Mat<S>& C) {
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < B.rows; ++j) {
      S s = 0;
      for (int k = 0; k < A.cols; ++k) s += A(i, k) * B(j, k);
      C(i, j) += s;
    }
}

// C += A^T * B
template <typename S>
void mm_tn_acc(const Mat<S>& A, const Mat<S>& B, Mat<S>& C) {
  for (int k = 0; k < A.rows; ++k)
    for (int i = 0; i < A.cols; ++i) {
      const S aki = A(k, i);
      if (aki == S(0)) continue;
      for (int j = 0; j < B.cols; ++j) C(i, j) += aki * B(k, j);
    }
}

}  // namespace detail
}  // namespace rgat
