#pragma once

#include <cassert>
#include <complex>
#include <vector>

namespace modeflux {

using Complex = std::complex<double>;

// Dense square matrix of doubles, row-major.
class Mat {
 public:
  Mat() = default;
  explicit Mat(int n, double fill = 0.0) : n_(n), a_(static_cast<size_t>(n) * n, fill) {}

  int n() const { return n_; }
  double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * n_ + j]; }
  double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * n_ + j]; }
  double* data() { return a_.data(); }
  const double* data() const { return a_.data(); }

  double max_abs() const {
    double m = 0.0;
    for (double v : a_) m = std::max(m, std::abs(v));
    return m;
  }

  Mat top_left(int m) const {
    assert(m <= n_);
    Mat out(m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) out(i, j) = (*this)(i, j);
    return out;
  }

 private:
  int n_ = 0;
  std::vector<double> a_;
};

// Packed storage for a symmetric matrix: row-major upper triangle, i <= j.
inline int packed_size(int n) { return n * (n + 1) / 2; }
inline int packed_index(int n, int i, int j) {
  if (i > j) std::swap(i, j);
  return i * n - i * (i - 1) / 2 + (j - i);
}

inline void unpack_symmetric(int n, const double* packed, double* full) {
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double v = packed[packed_index(n, i, j)];
      full[static_cast<size_t>(i) * n + j] = v;
      full[static_cast<size_t>(j) * n + i] = v;
    }
}

inline void pack_symmetric(int n, const double* full, double* packed) {
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      packed[packed_index(n, i, j)] = full[static_cast<size_t>(i) * n + j];
}

}  // namespace modeflux
