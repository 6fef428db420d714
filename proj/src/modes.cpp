#include "modeflux/modes.hpp"

#include <cmath>
#include <functional>

#include "modeflux/errors.hpp"
#include "modeflux/quadrature.hpp"

namespace modeflux {

double mode_mu(int j, double d) {
  if (j < 1) throw ValidationError("InvalidModeIndex", "mode index must be >= 1");
  if (!(d > 0)) throw ValidationError("InvalidWidth", "opening must be positive");
  return M_PI * j / d;
}

double beta_propagating(double k, int j, double d) {
  double mu = mode_mu(j, d);
  if (!(k > mu))
    throw NumericalError("NotPropagating",
                         "mode " + std::to_string(j) + " is at or past cutoff");
  return std::sqrt((k - mu) * (k + mu));
}

double beta_evanescent(double k, int j, double d) {
  double mu = mode_mu(j, d);
  if (!(mu > k))
    throw NumericalError("NotEvanescent",
                         "mode " + std::to_string(j) + " is propagating");
  return std::sqrt((mu - k) * (mu + k));
}

double eigenfunction(int j, double rho, double d) {
  if (std::abs(rho) > d / 2)
    throw ValidationError("OutOfCrossSection", "|rho| exceeds D/2");
  return std::sqrt(2.0 / d) * std::sin(0.5 * (2 * rho + d) * mode_mu(j, d));
}

double eigenfunction_drho(int j, double rho, double d) {
  if (std::abs(rho) > d / 2)
    throw ValidationError("OutOfCrossSection", "|rho| exceeds D/2");
  double mu = mode_mu(j, d);
  return std::sqrt(2.0 / d) * mu * std::cos(0.5 * (2 * rho + d) * mu);
}

double eigenfunction_dwidth(int j, double rho, double d) {
  if (std::abs(rho) > d / 2)
    throw ValidationError("OutOfCrossSection", "|rho| exceeds D/2");
  double mu = mode_mu(j, d);
  double arg = 0.5 * (2 * rho + d) * mu;
  // d/dD of sqrt(2/D) sin(pi j (rho/D + 1/2))
  return -0.5 / d * std::sqrt(2.0 / d) * std::sin(arg) -
         std::sqrt(2.0 / d) * std::cos(arg) * mu * rho / d;
}

namespace {

double quad_cross_section(const std::function<double(double)>& f, double d, double tol,
                          int lobes) {
  return integrate(f, -d / 2, d / 2, tol, 4000, std::max(4, lobes)).value;
}

inline int parity(int j, int q) { return ((j + q) % 2 == 0) ? 1 : -1; }

}  // namespace

std::vector<IdentityResidual> identity_residuals(int j, int q, double d, double quad_tol) {
  if (j < 1 || q < 1) throw ValidationError("InvalidModeIndex", "indices must be >= 1");
  auto y = [&](int m, double r) { return eigenfunction(m, r, d); };
  auto yr = [&](int m, double r) { return eigenfunction_drho(m, r, d); };
  auto yd = [&](int m, double r) { return eigenfunction_dwidth(m, r, d); };
  const int lobes = j + q + 2;
  const double jd = j, qd = q;
  const double pm = parity(j, q);

  std::vector<IdentityResidual> out;
  auto add = [&](const char* name, const std::function<double(double)>& f, double closed) {
    double v = quad_cross_section(f, d, quad_tol, lobes);
    out.push_back({name, j, q, d, v, closed, std::abs(v - closed)});
  };

  add("orthonormality", [&](double r) { return y(j, r) * y(q, r); }, j == q ? 1.0 : 0.0);
  add("odd_moment", [&](double r) { return r * y(j, r) * y(j, r); }, 0.0);
  add("weighted_drho",  // (2 rho + D) y_j y_q'
      [&](double r) { return (2 * r + d) * y(j, r) * yr(q, r); },
      j == q ? -1.0 : -4.0 * jd * qd * pm / (jd * jd - qd * qd));
  add("z_derivative",  // y_j dy_q/dz at D' = 1
      [&](double r) { return y(j, r) * yd(q, r); },
      j == q ? 0.0 : jd * qd * (pm + 1.0) / (d * (jd * jd - qd * qd)));
  add("weighted_sq",  // (2 rho + D)^2 y_j y_q
      [&](double r) { return (2 * r + d) * (2 * r + d) * y(j, r) * y(q, r); },
      j == q ? d * d * (4.0 / 3.0 - 2.0 / (M_PI * jd * M_PI * jd))
             : 32.0 * d * d * jd * qd * pm /
                   (M_PI * M_PI * (jd * jd - qd * qd) * (jd * jd - qd * qd)));
  add("plain_drho",  // y_j y_q'
      [&](double r) { return y(j, r) * yr(q, r); },
      j == q ? 0.0 : 2.0 * jd * qd * (1.0 - pm) / (d * (jd * jd - qd * qd)));
  add("weighted_plain",  // (2 rho + D) y_j y_q
      [&](double r) { return (2 * r + d) * y(j, r) * y(q, r); },
      j == q ? d
             : -8.0 * d * jd * qd * (1.0 - pm) /
                   (M_PI * M_PI * (jd * jd - qd * qd) * (jd * jd - qd * qd)));
  add("weighted_sq_diag",  // (2 rho + D)^2 y_j^2
      [&](double r) { return (2 * r + d) * (2 * r + d) * y(j, r) * y(j, r); },
      d * d * (4.0 / 3.0 - 2.0 / (M_PI * jd * M_PI * jd)));
  return out;
}

}  // namespace modeflux
