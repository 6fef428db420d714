#include "modeflux/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace modeflux::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

void dgemv_avx2(int n, const double* a, const double* x, double* y) {
  for (int i = 0; i < n; ++i) {
    const double* row = a + static_cast<size_t>(i) * n;
    __m256d acc = _mm256_setzero_pd();
    int j = 0;
    for (; j + 4 <= n; j += 4)
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(row + j), _mm256_loadu_pd(x + j), acc);
    double s = hsum(acc);
    for (; j < n; ++j) s += row[j] * x[j];
    y[i] = s;
  }
}

void dgemm_avx2(int n, const double* a, const double* b, double* c) {
  std::fill(c, c + static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    double* crow = c + static_cast<size_t>(i) * n;
    for (int k = 0; k < n; ++k) {
      __m256d aik = _mm256_set1_pd(a[static_cast<size_t>(i) * n + k]);
      const double* brow = b + static_cast<size_t>(k) * n;
      int j = 0;
      for (; j + 4 <= n; j += 4) {
        __m256d cj = _mm256_loadu_pd(crow + j);
        cj = _mm256_fmadd_pd(aik, _mm256_loadu_pd(brow + j), cj);
        _mm256_storeu_pd(crow + j, cj);
      }
      double s = a[static_cast<size_t>(i) * n + k];
      for (; j < n; ++j) crow[j] += s * brow[j];
    }
  }
}

double error_norm_avx2(int n, const double* err, const double* y0, const double* y1,
                       double atol, double rtol) {
  __m256d va = _mm256_set1_pd(atol);
  __m256d vr = _mm256_set1_pd(rtol);
  __m256d sign_mask = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d a0 = _mm256_andnot_pd(sign_mask, _mm256_loadu_pd(y0 + i));
    __m256d a1 = _mm256_andnot_pd(sign_mask, _mm256_loadu_pd(y1 + i));
    __m256d sc = _mm256_fmadd_pd(vr, _mm256_max_pd(a0, a1), va);
    __m256d r = _mm256_div_pd(_mm256_loadu_pd(err + i), sc);
    acc = _mm256_fmadd_pd(r, r, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    double r = err[i] / sc;
    s += r * r;
  }
  return std::sqrt(s / n);
}

}  // namespace

const Ops* avx2() {
  if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma")) return nullptr;
  static const Ops ops{"avx2", dgemv_avx2, dgemm_avx2, error_norm_avx2};
  return &ops;
}

}  // namespace modeflux::kernels

#else

namespace modeflux::kernels {
const Ops* avx2() { return nullptr; }
}  // namespace modeflux::kernels

#endif
