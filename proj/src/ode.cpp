#include "modeflux/ode.hpp"

#include <algorithm>
#include <cmath>

#include "modeflux/errors.hpp"
#include "modeflux/kernels.hpp"

namespace modeflux {
namespace {

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

}  // namespace

Dopri5::Dopri5(int dim, Rhs rhs, OdeOptions opt)
    : dim_(dim), rhs_(std::move(rhs)), opt_(opt) {}

void Dopri5::integrate(std::vector<double>& y, double z0, double z1,
                       std::span<const double> grid, const GridSink& on_grid) {
  if (z0 == z1) {
    for (size_t g = 0; g < grid.size(); ++g)
      if (grid[g] == z0 && on_grid) on_grid(static_cast<int>(g), z0, y.data());
    return;
  }
  const auto& K = kernels::active();
  const double dir = (z1 > z0) ? 1.0 : -1.0;
  const double span = std::abs(z1 - z0);
  const double hmax = opt_.h_max > 0 ? opt_.h_max : span;
  const int n = dim_;

  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
  std::vector<double> ytmp(n), ynew(n), err(n);
  std::vector<double> rc1(n), rc2(n), rc3(n), rc4(n), rc5(n);

  rhs_(z0, y.data(), k1.data());

  // starting step from the scale of y and y'
  double h = opt_.h_init;
  if (h <= 0) {
    double dn = 0, yn = 0;
    for (int i = 0; i < n; ++i) {
      dn = std::max(dn, std::abs(k1[i]));
      yn = std::max(yn, std::abs(y[i]));
    }
    h = (dn > 0) ? std::min(hmax, 0.01 * std::max(yn, 1e-6) / dn) : 1e-6 * span;
    h = std::min(h, 1e-2 * span);
    if (h <= 0 || !std::isfinite(h)) h = 1e-6 * span;
  }
  h = std::min(h, hmax);

  double z = z0;
  size_t gi = 0;
  // emit grid points that coincide with the start
  while (gi < grid.size() && (grid[gi] - z) * dir <= 0.0) {
    if (on_grid) on_grid(static_cast<int>(gi), grid[gi], y.data());
    ++gi;
  }

  long steps = 0;
  bool last_rejected = false;
  while ((z1 - z) * dir > 0.0) {
    if (++steps > opt_.max_steps)
      throw NumericalError("SolverToleranceExceeded",
                           "step limit exceeded at z=" + std::to_string(z));
    double remaining = std::abs(z1 - z);
    if (h > remaining) h = remaining;
    double hs = h * dir;

    auto stage = [&](std::vector<double>& out, std::initializer_list<std::pair<double, const std::vector<double>*>> terms) {
      for (int i = 0; i < n; ++i) {
        double acc = y[i];
        for (const auto& [c, k] : terms) acc += hs * c * (*k)[i];
        out[i] = acc;
      }
    };

    stage(ytmp, {{a21, &k1}});
    rhs_(z + c2 * hs, ytmp.data(), k2.data());
    stage(ytmp, {{a31, &k1}, {a32, &k2}});
    rhs_(z + c3 * hs, ytmp.data(), k3.data());
    stage(ytmp, {{a41, &k1}, {a42, &k2}, {a43, &k3}});
    rhs_(z + c4 * hs, ytmp.data(), k4.data());
    stage(ytmp, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}});
    rhs_(z + c5 * hs, ytmp.data(), k5.data());
    stage(ytmp, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
    rhs_(z + hs, ytmp.data(), k6.data());
    stage(ynew, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
    rhs_(z + hs, ynew.data(), k7.data());

    for (int i = 0; i < n; ++i)
      err[i] = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                     e7 * k7[i]);
    double norm = K.error_norm(n, err.data(), y.data(), ynew.data(), opt_.atol, opt_.rtol);

    if (norm <= 1.0) {
      ++n_accepted_;
      double znew = z + hs;
      if (std::abs(z1 - znew) < 1e-12 * span) znew = z1;

      // dense output for grid points inside (z, znew]
      if (gi < grid.size() && (grid[gi] - znew) * dir <= 1e-12 * span) {
        for (int i = 0; i < n; ++i) {
          double dy = ynew[i] - y[i];
          double bspl = hs * k1[i] - dy;
          rc1[i] = y[i];
          rc2[i] = dy;
          rc3[i] = bspl;
          rc4[i] = dy - hs * k7[i] - bspl;
          rc5[i] = hs * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] +
                         d7 * k7[i]);
        }
        while (gi < grid.size() && (grid[gi] - znew) * dir <= 1e-12 * span) {
          double theta = (grid[gi] - z) / hs;
          theta = std::clamp(theta, 0.0, 1.0);
          double th1 = 1.0 - theta;
          for (int i = 0; i < n; ++i)
            ytmp[i] = rc1[i] + theta * (rc2[i] + th1 * (rc3[i] + theta * (rc4[i] + th1 * rc5[i])));
          if (on_grid) on_grid(static_cast<int>(gi), grid[gi], ytmp.data());
          ++gi;
        }
      }

      z = znew;
      y.swap(ynew);
      k1.swap(k7);  // FSAL

      double fac = 0.9 * std::pow(std::max(norm, 1e-10), -0.2);
      fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
      h = std::min(h * fac, hmax);
      last_rejected = false;
    } else {
      ++n_rejected_;
      last_rejected = true;
      double fac = std::max(0.1, 0.9 * std::pow(norm, -0.2));
      h *= fac;
      if (h < 1e-14 * span)
        throw NumericalError("SolverToleranceExceeded",
                             "step size underflow at z=" + std::to_string(z));
    }
  }

  // any grid points numerically at the endpoint
  while (gi < grid.size() && (grid[gi] - z1) * dir <= 1e-9 * span) {
    if (on_grid) on_grid(static_cast<int>(gi), grid[gi], y.data());
    ++gi;
  }
}

}  // namespace modeflux
