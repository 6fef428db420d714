#include "modeflux/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

#include <algorithm>
#include <cmath>

namespace modeflux::kernels {
namespace {

void dgemv_neon(int n, const double* a, const double* x, double* y) {
  for (int i = 0; i < n; ++i) {
    const double* row = a + static_cast<size_t>(i) * n;
    float64x2_t acc = vdupq_n_f64(0.0);
    int j = 0;
    for (; j + 2 <= n; j += 2) acc = vfmaq_f64(acc, vld1q_f64(row + j), vld1q_f64(x + j));
    double s = vaddvq_f64(acc);
    for (; j < n; ++j) s += row[j] * x[j];
    y[i] = s;
  }
}

void dgemm_neon(int n, const double* a, const double* b, double* c) {
  std::fill(c, c + static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    double* crow = c + static_cast<size_t>(i) * n;
    for (int k = 0; k < n; ++k) {
      float64x2_t aik = vdupq_n_f64(a[static_cast<size_t>(i) * n + k]);
      const double* brow = b + static_cast<size_t>(k) * n;
      int j = 0;
      for (; j + 2 <= n; j += 2)
        vst1q_f64(crow + j, vfmaq_f64(vld1q_f64(crow + j), aik, vld1q_f64(brow + j)));
      double s = a[static_cast<size_t>(i) * n + k];
      for (; j < n; ++j) crow[j] += s * brow[j];
    }
  }
}

double error_norm_neon(int n, const double* err, const double* y0, const double* y1,
                       double atol, double rtol) {
  float64x2_t va = vdupq_n_f64(atol);
  float64x2_t vr = vdupq_n_f64(rtol);
  float64x2_t acc = vdupq_n_f64(0.0);
  int i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t m = vmaxq_f64(vabsq_f64(vld1q_f64(y0 + i)), vabsq_f64(vld1q_f64(y1 + i)));
    float64x2_t sc = vfmaq_f64(va, vr, m);
    float64x2_t r = vdivq_f64(vld1q_f64(err + i), sc);
    acc = vfmaq_f64(acc, r, r);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) {
    double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    double r = err[i] / sc;
    s += r * r;
  }
  return std::sqrt(s / n);
}

}  // namespace

const Ops* neon() {
  static const Ops ops{"neon", dgemv_neon, dgemm_neon, error_norm_neon};
  return &ops;
}

}  // namespace modeflux::kernels

#else

namespace modeflux::kernels {
const Ops* neon() { return nullptr; }
}  // namespace modeflux::kernels

#endif
