#pragma once

#include <complex>
#include <vector>

namespace modeflux {

// In-place radix-2 transform, |a| a power of two.
// sign = +1 computes sum_k a[k] e^{+2*pi*i*k*n/N} (no 1/N factor),
// sign = -1 the conjugate transform.
void fft_pow2(std::vector<std::complex<double>>& a, int sign);

inline size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace modeflux
