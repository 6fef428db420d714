#pragma once

#include <utility>
#include <vector>

#include "modeflux/correlation.hpp"
#include "modeflux/mat.hpp"

namespace modeflux {

// Which coefficient groups to assemble; kappa and gs carry quadrature cost.
enum CouplingParts : unsigned {
  kPartGc = 1u,
  kPartG0 = 2u,
  kPartGs = 4u,
  kPartKappa = 8u,
  kPartAll = 15u,
};

struct CouplingOptions {
  int evanescent_cutoff = 200;
  double beta_floor_frac = 1e-6;   // reject beta_j < frac * k
  double quad_tol = 1e-10;
  double kappa_tail_rtol = 1e-8;   // NonConvergedTail above this
};

// Diffusion-limit coefficient matrices at one arc length, for one sector's
// propagating-mode count. gc rows sum to zero by construction; gs has the
// diagonal filled with minus its column sums; kappa includes the evanescent
// series with an asymptotic completion of the tail.
struct CouplingSet {
  double z = 0;
  double d = 0;
  int n_prop = 0;
  double sigma = 0;
  Mat gc, g0, gs;
  std::vector<double> kappa;
  std::vector<double> kappa_tail_bound;  // residual after the tail completion
  unsigned parts = 0;
};

// Leading coupling constants Gamma_{jq} = j q (-1)^{j+q} / (q^2 - j^2) and
// Theta = 2 Gamma. j != q.
std::pair<double, double> gamma_theta(int j, int q);

// Deterministic coupling from the slow geometry changes: (gamma_o, theta_o).
std::pair<double, double> slow_coupling(int j, int q, double k, double d, double d_prime,
                                        double curvature);

// nu'^2 / nu nu'' quadratic noise coefficients (pre-limit system, sigma^2 order).
std::pair<double, double> quadratic_noise_coupling(int j, int q, double nu, double nu1,
                                                   double nu2);
// Diagonal sigma^2 coefficient g_j.
double diagonal_quadratic(int j, double mu_j, double nu, double nu1);

CouplingSet coupling_set(double k, double sigma, const CorrelationModel& model, double d,
                         int n_prop, const CouplingOptions& opt = {},
                         unsigned parts = kPartAll);

struct LengthScales {
  std::vector<double> smf;      // mean-amplitude decay lengths
  std::vector<double> tmf;      // power-exchange lengths
  double equipartition = 0;     // 1/|second eigenvalue| of gc
  std::vector<double> spectrum; // gc eigenvalues, ascending
  double null_vector_deviation = 0;  // distance of the kernel from all-ones
};

LengthScales length_scales(const CouplingSet& set);

struct ForwardScatteringReport {
  double min_argument = 0;   // 2 beta_N
  double psd_at_min = 0;
  double psd_at_zero = 0;
  double ratio = 0;
  double threshold = 0;
  bool flagged = false;
};

ForwardScatteringReport forward_scattering_diagnostic(double k, const CorrelationModel& model,
                                                      double d, int n_prop,
                                                      double threshold = 1e-3);

}  // namespace modeflux
