#pragma once

#include <functional>
#include <span>
#include <vector>

namespace modeflux {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-14;
  double h_init = 0.0;  // 0 -> automatic
  double h_max = 0.0;   // 0 -> |z1 - z0|
  long max_steps = 4'000'000;
};

// Dormand-Prince 5(4) with the classic order-4 dense interpolant.
// Integrates in either direction; `grid` must be monotone from z0 toward z1
// and is sampled from the dense output as the solver passes each point.
class Dopri5 {
 public:
  using Rhs = std::function<void(double z, const double* y, double* dydz)>;
  using GridSink = std::function<void(int grid_index, double z, const double* y)>;

  Dopri5(int dim, Rhs rhs, OdeOptions opt = {});

  // y holds the initial state on entry and the solution at z1 on return.
  void integrate(std::vector<double>& y, double z0, double z1,
                 std::span<const double> grid = {}, const GridSink& on_grid = nullptr);

  long steps_taken() const { return n_accepted_; }
  long steps_rejected() const { return n_rejected_; }

 private:
  int dim_;
  Rhs rhs_;
  OdeOptions opt_;
  long n_accepted_ = 0, n_rejected_ = 0;
};

}  // namespace modeflux
