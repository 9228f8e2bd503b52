#pragma once

#include <cstddef>
#include <vector>
#include <cmath>
#include <algorithm>
#include <stdexcept>

namespace srkit {

// Dense row-major matrix of doubles. Kept deliberately minimal; heavy linear
// algebra lives next to the model that needs it.
struct Matrix {
  std::size_t n = 0;  // rows
  std::size_t m = 0;  // cols
  std::vector<double> a;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : n(rows), m(cols), a(rows * cols, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return a[i * m + j]; }
  double at(std::size_t i, std::size_t j) const { return a[i * m + j]; }
  const double* row(std::size_t i) const { return a.data() + i * m; }
  double* row(std::size_t i) { return a.data() + i * m; }

  void append_row(const std::vector<double>& r) {
    if (r.size() != m) throw std::invalid_argument("append_row: width mismatch");
    a.insert(a.end(), r.begin(), r.end());
    ++n;
  }
};

struct ColumnStats {
  double lo = 0, hi = 0, mean = 0, sd = 0;
};

inline ColumnStats column_stats(const Matrix& X, std::size_t col, const std::vector<std::size_t>& rows) {
  ColumnStats s;
  if (rows.empty()) return s;
  s.lo = s.hi = X.at(rows[0], col);
  double sum = 0, sum2 = 0;
  for (std::size_t r : rows) {
    double v = X.at(r, col);
    s.lo = std::min(s.lo, v);
    s.hi = std::max(s.hi, v);
    sum += v;
    sum2 += v * v;
  }
  double n = double(rows.size());
  s.mean = sum / n;
  double var = std::max(0.0, sum2 / n - s.mean * s.mean);
  s.sd = std::sqrt(var);
  return s;
}

inline double vec_mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0;
  for (double x : v) s += x;
  return s / double(v.size());
}

inline double vec_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = vec_mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size()));
}

}  // namespace srkit
