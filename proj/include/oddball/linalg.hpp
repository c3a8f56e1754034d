#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace oddball {

using Vector = std::vector<double>;

// Row-major dense matrix. Just enough for a two-layer net; nothing clever.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  bool same_shape(const Matrix& o) const {
    return rows == o.rows && cols == o.cols;
  }
};

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline bool all_finite(const Matrix& m) {
  return all_finite(std::span<const double>(m.data));
}

// y = M x, rows processed in blocks of four so the sum chains overlap; each
// row's sum still runs left to right, bit-identical to the naive loop.
inline void matvec(const Matrix& m, const double* x, double* y) {
  std::size_t i = 0;
  for (; i + 4 <= m.rows; i += 4) {
    const double* r0 = m.row(i);
    const double* r1 = m.row(i + 1);
    const double* r2 = m.row(i + 2);
    const double* r3 = m.row(i + 3);
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) {
      const double xj = x[j];
      s0 += r0[j] * xj;
      s1 += r1[j] * xj;
      s2 += r2[j] * xj;
      s3 += r3[j] * xj;
    }
    y[i] = s0;
    y[i + 1] = s1;
    y[i + 2] = s2;
    y[i + 3] = s3;
  }
  for (; i < m.rows; ++i) {
    const double* r = m.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) s += r[j] * x[j];
    y[i] = s;
  }
}

}  // namespace oddball
