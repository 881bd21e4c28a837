#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace gfsml {

using Vec = std::vector<double>;

// Dense row-major matrix. Small and dumb on purpose: every hot loop in this
// project fits in cache at desk scale.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

  const double* row(std::size_t r) const { return a.data() + r * cols; }
  double* row(std::size_t r) { return a.data() + r * cols; }
};

inline double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

inline double dot(const Vec& x, const Vec& y) {
  assert(x.size() == y.size());
  return dot(x.data(), y.data(), x.size());
}

// y = M x + b
inline void affine(const Mat& m, const Vec& b, const Vec& x, Vec& y) {
  assert(m.cols == x.size() && m.rows == b.size());
  y.resize(m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) y[r] = dot(m.row(r), x.data(), m.cols) + b[r];
}

// y = M^T x
inline void matvec_transpose(const Mat& m, const Vec& x, Vec& y) {
  assert(m.rows == x.size());
  y.assign(m.cols, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double xr = x[r];
    const double* row = m.row(r);
    for (std::size_t c = 0; c < m.cols; ++c) y[c] += xr * row[c];
  }
}

inline double euclidean_distance(const Vec& x, const Vec& y) {
  assert(x.size() == y.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline double sigmoid(double t) {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace gfsml
