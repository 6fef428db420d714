#include "modeflux/coupling.hpp"
#include <cstdio>

#include <Eigen/Dense>
#include <cmath>

#include "modeflux/errors.hpp"
#include "modeflux/modes.hpp"

namespace modeflux {

std::pair<double, double> gamma_theta(int j, int q) {
  if (j == q) throw ValidationError("EqualIndices", "gamma/theta need j != q");
  if (j < 1 || q < 1) throw ValidationError("InvalidModeIndex", "indices must be >= 1");
  double jd = j, qd = q;
  double sign = ((j + q) % 2 == 0) ? 1.0 : -1.0;
  double g = jd * qd * sign / (qd * qd - jd * jd);
  return {g, 2.0 * g};
}

std::pair<double, double> slow_coupling(int j, int q, double k, double d, double d_prime,
                                        double curvature) {
  if (j == q) throw ValidationError("EqualIndices", "slow coupling needs j != q");
  double jd = j, qd = q;
  double sign = ((j + q) % 2 == 0) ? 1.0 : -1.0;
  double den = (qd * qd - jd * jd);
  double kd_pi = k * d / M_PI;
  double gamma_o = curvature / d * 2.0 * jd * qd * (1.0 - sign) *
                   (jd * jd + 3.0 * qd * qd - 4.0 * kd_pi * kd_pi) / (den * den);
  double theta_o = d_prime / d * 2.0 * jd * qd * (1.0 + sign) / den;
  return {gamma_o, theta_o};
}

std::pair<double, double> quadratic_noise_coupling(int j, int q, double nu, double nu1,
                                                   double nu2) {
  if (j == q) throw ValidationError("EqualIndices", "coupling needs j != q");
  double jd = j, qd = q;
  double sign = ((j + q) % 2 == 0) ? 1.0 : -1.0;
  double den = qd * qd - jd * jd;
  double gamma2 = jd * qd * sign / (2.0 * den) *
                  ((3.0 * jd * jd + qd * qd) / den * nu1 * nu1 - nu * nu2);
  double theta2 = -jd * qd * sign / den * nu * nu1;
  return {gamma2, theta2};
}

double diagonal_quadratic(int j, double mu_j, double nu, double nu1) {
  double pj = M_PI * j;
  return -0.75 * mu_j * mu_j * nu * nu - (pj * pj / 12.0 + 1.0 / 16.0) * nu1 * nu1;
}

namespace {

// Bracket of the evanescent kappa integrand after the -beta_l R''(0)
// subtraction, expanded for large |s| = |beta_l - i beta_j|:
//   B ~ -4 R''(0) beta_j^2 beta_l / |s|^2
//       + sum_{m=2,4,6} R^{(2+m)}(0) Re[(conj s)^{m+3}] / |s|^{2(m+1)}
double bracket_asymptotic(const CorrelationModel& model, double bj, double bl) {
  double s2 = bl * bl + bj * bj;
  double out = -4.0 * model.deriv0(2) * bj * bj * bl / s2;
  std::complex<double> sbar(bl, bj);
  std::complex<double> sb3 = sbar * sbar * sbar;
  std::complex<double> sb5 = sb3 * sbar * sbar;
  std::complex<double> sb7 = sb5 * sbar * sbar;
  std::complex<double> sb9 = sb7 * sbar * sbar;
  double s6 = s2 * s2 * s2;
  out += model.deriv0(4) * sb5.real() / s6;
  out += model.deriv0(6) * sb7.real() / (s6 * s2 * s2);
  out += model.deriv0(8) * sb9.real() / (s6 * s6 * s2);
  return out;
}

}  // namespace

CouplingSet coupling_set(double k, double sigma, const CorrelationModel& model, double d,
                         int n_prop, const CouplingOptions& opt, unsigned parts) {
  if (!(k > 0) || !(d > 0))
    throw ValidationError("InvalidArgument", "k and D must be positive");
  if (sigma < 0) throw ValidationError("InvalidArgument", "sigma must be >= 0");
  if (n_prop < 1 || mode_mu(n_prop, d) >= k)
    throw ValidationError("InvalidModeCount",
                          "n_prop must be within the propagating range");

  CouplingSet set;
  set.d = d;
  set.n_prop = n_prop;
  set.sigma = sigma;
  set.parts = parts;
  const int n = n_prop;
  const double s2 = sigma * sigma;

  std::vector<double> mu(n), beta(n);
  const double beta_floor = opt.beta_floor_frac * k;
  for (int i = 0; i < n; ++i) {
    mu[i] = mode_mu(i + 1, d);
    beta[i] = beta_propagating(k, i + 1, d);
    if (beta[i] < beta_floor)
      throw NumericalError("TurningPointTooClose",
                           "beta_" + std::to_string(i + 1) + " below floor; stay outside "
                           "the turning-point collar");
  }
  // sigma^2 mu_j^2 mu_l^2 / (4 beta_j beta_l) prefactors via u_j = mu_j^2 / (2 beta_j)
  std::vector<double> u(n);
  for (int i = 0; i < n; ++i) u[i] = mu[i] * mu[i] / (2.0 * beta[i]);

  if (parts & kPartGc) {
    set.gc = Mat(n);
    for (int i = 0; i < n; ++i)
      for (int l = i + 1; l < n; ++l) {
        double v = s2 * u[i] * u[l] * model.psd(beta[i] - beta[l]);
        set.gc(i, l) = v;
        set.gc(l, i) = v;
      }
    for (int i = 0; i < n; ++i) {
      double row_sum = 0.0;
      for (int l = 0; l < n; ++l)
        if (l != i) row_sum += set.gc(i, l);
      set.gc(i, i) = -row_sum;
    }
  }
  if (parts & kPartG0) {
    set.g0 = Mat(n);
    double psd0 = model.psd(0.0);
    for (int i = 0; i < n; ++i)
      for (int l = i; l < n; ++l) {
        double v = s2 * u[i] * u[l] * psd0;
        set.g0(i, l) = v;
        set.g0(l, i) = v;
      }
  }
  if (parts & kPartGs) {
    set.gs = Mat(n);
    for (int i = 0; i < n; ++i)
      for (int l = i + 1; l < n; ++l) {
        double sv = sine_half_transform(model, beta[i] - beta[l], opt.quad_tol);
        set.gs(i, l) = 2.0 * s2 * u[i] * u[l] * sv;
        set.gs(l, i) = -set.gs(i, l);  // sine transform is odd in the argument
      }
    // diagonal: minus the column sums
    for (int i = 0; i < n; ++i) {
      double col = 0.0;
      for (int l = 0; l < n; ++l)
        if (l != i) col += set.gs(l, i);
      set.gs(i, i) = -col;
    }
  }
  if (parts & kPartKappa) {
    set.kappa.assign(n, 0.0);
    set.kappa_tail_bound.assign(n, 0.0);
    const double r0 = model.deriv0(0);
    const double rpp0 = model.deriv0(2);
    for (int i = 0; i < n; ++i) {
      int j = i + 1;
      double bj = beta[i];
      double kap = s2 / (2.0 * bj) *
                   ((M_PI * M_PI * j * j / 12.0 + 1.0 / 16.0) * rpp0 -
                    0.75 * mu[i] * mu[i] * r0);
      // propagating sum; sigma^2 applied for dimensional consistency with the
      // neighboring terms (see output metadata flag kappa_sigma2_second_sum)
      for (int l = 0; l < n; ++l) {
        if (l == i) continue;
        double bl = beta[l];
        kap -= s2 * mu[i] * mu[i] * mu[l] * mu[l] /
               (4.0 * bj * bl * (bj - bl)) * (r0 + rpp0 / ((bj + bl) * (bj + bl)));
      }
      // evanescent series: exact terms to the cutoff, asymptotic completion after
      double term_exact_last = 0.0, term_asy_last = 0.0;
      const int l_hi = n + opt.evanescent_cutoff;
      for (int l = n + 1; l <= l_hi; ++l) {
        double mul = mode_mu(l, d);
        double bl = std::sqrt((mul - k) * (mul + k));
        double lap = kappa_laplace_integral(model, bj, bl, opt.quad_tol);
        double pref = s2 * mu[i] * mu[i] * mul * mul /
                      (2.0 * bj * bl * (bj * bj + bl * bl) * (bj * bj + bl * bl));
        double t = pref * (-bl * rpp0 + lap);
        kap += t;
        if (l == l_hi) {
          term_exact_last = t;
          term_asy_last = pref * bracket_asymptotic(model, bj, bl);
        }
      }
      // asymptotic completion: summed terms decay like 1/l^4, so after a
      // stretch of direct summation the remainder closes with the
      // Euler-Maclaurin estimate t_last (l/3 + 1/2)
      double tail = 0.0, t_last = 0.0;
      const int l_far = l_hi + 4000;
      for (int l = l_hi + 1; l <= l_far; ++l) {
        double mul = mode_mu(l, d);
        double bl = std::sqrt((mul - k) * (mul + k));
        double pref = s2 * mu[i] * mu[i] * mul * mul /
                      (2.0 * bj * bl * (bj * bj + bl * bl) * (bj * bj + bl * bl));
        t_last = pref * bracket_asymptotic(model, bj, bl);
        tail += t_last;
      }
      tail += t_last * (l_far / 3.0 + 0.5);
      kap += tail;
      // residual: mismatch of the asymptotic form where it takes over, summed
      // as a ~1/l^4 tail, plus the next Euler-Maclaurin order of the closure
      double mismatch = std::abs(term_exact_last - term_asy_last);
      double bound = mismatch * l_hi / 3.0 + std::abs(t_last);
      set.kappa[i] = kap;
      set.kappa_tail_bound[i] = bound;
      if (bound > opt.kappa_tail_rtol * std::max(std::abs(kap), 1e-300)) {
        char msg[128];
        std::snprintf(msg, sizeof(msg), "kappa tail bound %.3e exceeds %.1e relative for mode %d",
                      bound, opt.kappa_tail_rtol, j);
        throw NumericalError("NonConvergedTail", msg);
      }
    }
  }
  return set;
}

LengthScales length_scales(const CouplingSet& set) {
  if (!(set.sigma > 0))
    throw ValidationError("InvalidArgument", "length scales need sigma > 0");
  if (!(set.parts & kPartGc) || !(set.parts & kPartG0))
    throw ValidationError("InvalidArgument", "length scales need gc and g0");
  const int n = set.n_prop;
  LengthScales out;
  out.smf.resize(n);
  out.tmf.resize(n);
  for (int i = 0; i < n; ++i) {
    out.smf[i] = 2.0 / (set.g0(i, i) - set.gc(i, i));
    out.tmf[i] = -2.0 / set.gc(i, i);
  }
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = set.gc(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  if (es.info() != Eigen::Success)
    throw NumericalError("EigenSolveFailed", "symmetric eigensolve did not converge");
  out.spectrum.assign(es.eigenvalues().data(), es.eigenvalues().data() + n);
  double scale = std::max(set.gc.max_abs(), 1e-300);
  if (n < 2 || std::abs(out.spectrum[n - 1]) > 1e-10 * scale ||
      !(out.spectrum[n - 2] < -1e-12 * scale))
    throw NumericalError("DegenerateSpectrum",
                         "zero eigenvalue of gc is not simple within tolerance");
  out.equipartition = 1.0 / std::abs(out.spectrum[n - 2]);
  Eigen::VectorXd null_vec = es.eigenvectors().col(n - 1);
  double sgn = null_vec.sum() >= 0 ? 1.0 : -1.0;
  out.null_vector_deviation =
      (null_vec - sgn / std::sqrt(double(n)) * Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff();
  return out;
}

ForwardScatteringReport forward_scattering_diagnostic(double k, const CorrelationModel& model,
                                                      double d, int n_prop,
                                                      double threshold) {
  ForwardScatteringReport rep;
  rep.threshold = threshold;
  rep.psd_at_zero = model.psd(0.0);
  // beta decreases with the index, so the smallest sum argument is 2 beta_N;
  // the spectrum is assumed peaked at zero, which makes that the worst pair.
  double bn = beta_propagating(k, n_prop, d);
  rep.min_argument = 2.0 * bn;
  rep.psd_at_min = model.psd(rep.min_argument);
  rep.ratio = rep.psd_at_min / rep.psd_at_zero;
  rep.flagged = rep.ratio > threshold;
  return rep;
}

}  // namespace modeflux
