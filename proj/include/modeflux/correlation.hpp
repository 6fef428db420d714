#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace modeflux {

// Boundary-noise statistics. R(0) = 1 in scaled units, R even and integrable,
// psd = Rhat >= 0. The built-in model is the unit-width Gaussian; arbitrary
// models enter through a tabulated non-negative spectrum from which R and its
// derivatives are reconstructed by cosine transforms.
class CorrelationModel {
 public:
  enum class Kind { Gaussian, TabulatedSpectrum };

  static CorrelationModel gaussian();
  // (beta, psd) table, beta strictly increasing from 0, psd >= 0, linear
  // interpolation, zero beyond the last knot. Must be normalized so that
  // R(0) = (1/pi) * integral(psd) = 1.
  static CorrelationModel tabulated_spectrum(std::vector<double> beta,
                                             std::vector<double> psd);

  Kind kind() const { return kind_; }
  double autocorrelation(double zeta) const;      // R
  double autocorrelation_dd(double zeta) const;   // R''
  double r2_at_0() const { return deriv0(2); }
  // R^{(order)}(0) for even order 0..8; odd orders vanish.
  double deriv0(int order) const;
  double psd(double beta) const;                  // Rhat, even, >= 0
  // |R| < tiny beyond this lag; integration cutoff for the half transforms.
  double support_zeta() const { return support_zeta_; }
  // psd < rel * psd(0) beyond this frequency.
  double support_beta(double rel = 1e-12) const;

 private:
  CorrelationModel() = default;
  Kind kind_ = Kind::Gaussian;
  std::vector<double> tab_beta_, tab_psd_;
  double moments_[5] = {0, 0, 0, 0, 0};  // (1/pi) int beta^{2m} psd, m = 0..4
  double support_zeta_ = 0;
};

// Rhat(beta) = 2 int_0^inf R cos(beta zeta) dzeta, evaluated by adaptive
// quadrature (the model's psd() is the native route; this is the cross-check).
double psd_by_quadrature(const CorrelationModel& m, double beta, double tol = 1e-10);

// int_0^inf R(zeta) sin(beta zeta) dzeta; antisymmetric in beta.
double sine_half_transform(const CorrelationModel& m, double beta, double tol = 1e-10);

// int_0^inf R''(zeta) e^{-beta_l zeta} [ (beta_l^2 - beta_j^2) cos(beta_j zeta)
//   - 2 beta_j beta_l sin(beta_j zeta) ] dzeta, beta_l > 0.
double kappa_laplace_integral(const CorrelationModel& m, double beta_j, double beta_l,
                              double tol = 1e-10);
// Same integral for an arbitrary R'' (test hook).
double kappa_laplace_integral(const std::function<double(double)>& rpp, double zeta_max,
                              double beta_j, double beta_l, double tol = 1e-10);

// Stationary Gaussian sample path on a uniform grid in the fast variable,
// with derivatives from term-wise differentiation of the spectral sum.
struct NoisePath {
  double zeta0 = 0;
  double dzeta = 0;
  int n = 0;
  uint64_t seed = 0;
  std::vector<double> nu, nu1, nu2, nu3;
  double spectral_mass = 0;  // fraction of R(0) captured by the truncated sum
  int modes_used = 0;

  double zeta_end() const { return zeta0 + dzeta * (n - 1); }
};

struct SynthesisOptions {
  double truncation_rel = 1e-12;  // spectrum cut where psd < rel * psd(0)
  double mass_min = 1.0 - 1e-6;
  bool clip = false;              // clamp nu to +-clip_level (derivatives untouched)
  double clip_level = 5.0;
};

NoisePath synthesize_path(const CorrelationModel& m, double zeta_begin, double zeta_end,
                          double dzeta, uint64_t seed, const SynthesisOptions& opt = {});

// Deterministic standard normals: mt19937_64 + Box-Muller. The engine is
// fully specified by the standard; std::normal_distribution is not, so the
// transform is done here.
class NormalSampler {
 public:
  explicit NormalSampler(uint64_t seed);
  ~NormalSampler();
  NormalSampler(NormalSampler&&) noexcept;
  NormalSampler& operator=(NormalSampler&&) noexcept;
  double next();

 private:
  struct Impl;
  Impl* impl_;
};

}  // namespace modeflux
