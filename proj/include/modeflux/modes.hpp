#pragma once

#include <vector>

namespace modeflux {

// Transverse eigenvalue sqrt: mu_j = pi j / D.
double mode_mu(int j, double d);

// beta_j = sqrt(k^2 - mu_j^2) for propagating modes (throws NotPropagating at
// or past cutoff), sqrt(mu_j^2 - k^2) for evanescent ones.
double beta_propagating(double k, int j, double d);
double beta_evanescent(double k, int j, double d);

// y_j(rho) = sqrt(2/D) sin((2 rho + D) mu_j / 2) on |rho| <= D/2.
double eigenfunction(int j, double rho, double d);
double eigenfunction_drho(int j, double rho, double d);
// Partial derivative with respect to the opening at fixed rho; multiply by
// D'(z) for the z-derivative.
double eigenfunction_dwidth(int j, double rho, double d);

struct IdentityResidual {
  const char* name;
  int j, q;
  double d;
  double quadrature;
  double closed_form;
  double residual;
};

// Cross-section integral identities of the eigenfunctions, each evaluated by
// adaptive quadrature and compared against its closed form. The z-derivative
// identity is evaluated at unit opening slope.
std::vector<IdentityResidual> identity_residuals(int j, int q, double d,
                                                 double quad_tol = 1e-12);

}  // namespace modeflux
