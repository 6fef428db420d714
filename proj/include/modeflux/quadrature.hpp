#pragma once

#include <functional>

namespace modeflux {

struct QuadResult {
  double value = 0.0;
  double abs_error = 0.0;  // estimated
  int panels = 0;
};

// Globally adaptive Gauss-Kronrod 7/15 on [a, b] to absolute tolerance.
// The worst panel is bisected until the summed error estimate drops below
// abs_tol or max_panels is reached. initial_panels > 1 pre-splits the
// interval, which is how oscillatory integrands get seeded at their
// oscillation scale.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double abs_tol, int max_panels = 4000, int initial_panels = 1);

}  // namespace modeflux
