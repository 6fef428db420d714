#include <doctest.h>

#include <cmath>

#include "modeflux/ode.hpp"

using namespace modeflux;

TEST_CASE("dopri5 integrates a decaying exponential to tolerance") {
  OdeOptions opt;
  opt.rtol = 1e-10;
  opt.atol = 1e-14;
  Dopri5 solver(1, [](double, const double* y, double* dy) { dy[0] = -y[0]; }, opt);
  std::vector<double> y{1.0};
  solver.integrate(y, 0.0, 5.0);
  CHECK(std::abs(y[0] - std::exp(-5.0)) < 1e-11);
}

TEST_CASE("dopri5 integrates backward") {
  Dopri5 solver(1, [](double z, const double* , double* dy) { dy[0] = std::cos(z); });
  std::vector<double> y{std::sin(2.0)};
  solver.integrate(y, 2.0, -3.0);
  CHECK(std::abs(y[0] - std::sin(-3.0)) < 1e-10);
}

TEST_CASE("dense output hits grid points at interpolation accuracy") {
  OdeOptions opt;
  opt.rtol = 1e-10;
  opt.atol = 1e-12;
  // harmonic oscillator, solution (cos t, -sin t)
  Dopri5 solver(2,
                [](double, const double* y, double* dy) {
                  dy[0] = y[1];
                  dy[1] = -y[0];
                },
                opt);
  std::vector<double> y{1.0, 0.0};
  std::vector<double> grid;
  for (int i = 0; i <= 200; ++i) grid.push_back(10.0 * i / 200);
  double worst = 0;
  solver.integrate(y, 0.0, 10.0, grid, [&](int, double z, const double* yy) {
    worst = std::max(worst, std::abs(yy[0] - std::cos(z)));
    worst = std::max(worst, std::abs(yy[1] + std::sin(z)));
  });
  CHECK(worst < 1e-8);  // dense interpolant is one order below the step error
  CHECK(std::abs(y[0] - std::cos(10.0)) < 1e-9);
}

TEST_CASE("halving the tolerance changes the answer within the expected band") {
  auto run = [](double rtol) {
    OdeOptions opt;
    opt.rtol = rtol;
    opt.atol = 1e-16;
    Dopri5 solver(1, [](double z, const double* y, double* dy) { dy[0] = y[0] * std::cos(z); },
                  opt);
    std::vector<double> y{1.0};
    solver.integrate(y, 0.0, 8.0);
    return y[0];
  };
  double a = run(1e-9), b = run(5e-10);
  double exact = std::exp(std::sin(8.0));
  CHECK(std::abs(a - exact) < 10 * 1e-9 * exact);
  CHECK(std::abs(a - b) < 10 * 1e-9 * exact);
}
