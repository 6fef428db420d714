#include <algorithm>
#include <cmath>

#include "modeflux/kernels.hpp"

namespace modeflux::kernels {
namespace {

void dgemv_scalar(int n, const double* a, const double* x, double* y) {
  for (int i = 0; i < n; ++i) {
    const double* row = a + static_cast<size_t>(i) * n;
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
}

void dgemm_scalar(int n, const double* a, const double* b, double* c) {
  std::fill(c, c + static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    double* crow = c + static_cast<size_t>(i) * n;
    for (int k = 0; k < n; ++k) {
      double aik = a[static_cast<size_t>(i) * n + k];
      const double* brow = b + static_cast<size_t>(k) * n;
      for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
}

double error_norm_scalar(int n, const double* err, const double* y0, const double* y1,
                         double atol, double rtol) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    double r = err[i] / sc;
    acc += r * r;
  }
  return std::sqrt(acc / n);
}

}  // namespace

const Ops& scalar() {
  static const Ops ops{"scalar", dgemv_scalar, dgemm_scalar, error_norm_scalar};
  return ops;
}

}  // namespace modeflux::kernels
