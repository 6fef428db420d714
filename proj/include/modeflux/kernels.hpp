#pragma once

#include <vector>

namespace modeflux::kernels {

// Data-parallel inner loops used by the ODE right-hand sides and the
// integrator error control. Scalar reference implementations plus SIMD
// variants selected once at startup; MODEFLUX_KERNELS=scalar|avx2|neon
// overrides the automatic pick.
struct Ops {
  const char* name;
  // y = A x, A row-major n x n
  void (*dgemv)(int n, const double* a, const double* x, double* y);
  // C = A B, all row-major n x n
  void (*dgemm)(int n, const double* a, const double* b, double* c);
  // RMS of err[i] / (atol + rtol * max(|y0[i]|, |y1[i]|))
  double (*error_norm)(int n, const double* err, const double* y0, const double* y1,
                       double atol, double rtol);
};

const Ops& scalar();
const Ops* avx2();  // nullptr when unsupported
const Ops* neon();  // nullptr when unsupported
const Ops& active();
std::vector<const Ops*> all_available();

}  // namespace modeflux::kernels
