#include "modeflux/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include "modeflux/errors.hpp"
#include "modeflux/fft.hpp"
#include "modeflux/quadrature.hpp"

namespace modeflux {

namespace {
constexpr double kSqrt2Pi = 2.5066282746310002;
}

CorrelationModel CorrelationModel::gaussian() {
  CorrelationModel m;
  m.kind_ = Kind::Gaussian;
  // R^{(2m)}(0) = (-1)^m (2m-1)!! for R = exp(-zeta^2/2)
  m.moments_[0] = 1.0;
  m.moments_[1] = 1.0;
  m.moments_[2] = 3.0;
  m.moments_[3] = 15.0;
  m.moments_[4] = 105.0;
  m.support_zeta_ = std::sqrt(2.0 * std::log(1e18));
  return m;
}

CorrelationModel CorrelationModel::tabulated_spectrum(std::vector<double> beta,
                                                      std::vector<double> psd) {
  if (beta.size() < 2 || beta.size() != psd.size())
    throw ValidationError("InvalidSpectrum", "spectrum table needs >= 2 rows");
  if (beta.front() != 0.0)
    throw ValidationError("InvalidSpectrum", "spectrum table must start at beta = 0");
  for (size_t i = 0; i + 1 < beta.size(); ++i)
    if (!(beta[i] < beta[i + 1]))
      throw ValidationError("InvalidSpectrum", "beta column must strictly increase");
  for (double v : psd)
    if (v < 0.0) throw ValidationError("InvalidSpectrum", "psd must be non-negative");

  CorrelationModel m;
  m.kind_ = Kind::TabulatedSpectrum;
  m.tab_beta_ = std::move(beta);
  m.tab_psd_ = std::move(psd);
  // beta^{2p} moments of the linearly interpolated table, exact per segment
  for (int p = 0; p <= 4; ++p) {
    double acc = 0.0;
    for (size_t i = 0; i + 1 < m.tab_beta_.size(); ++i) {
      double b0 = m.tab_beta_[i], b1 = m.tab_beta_[i + 1];
      double p0 = m.tab_psd_[i], p1 = m.tab_psd_[i + 1];
      double s = (p1 - p0) / (b1 - b0);
      // integral of (p0 + s (b - b0)) b^{2p}
      double c0 = p0 - s * b0;
      int e1 = 2 * p + 1, e2 = 2 * p + 2;
      acc += c0 * (std::pow(b1, e1) - std::pow(b0, e1)) / e1 +
             s * (std::pow(b1, e2) - std::pow(b0, e2)) / e2;
    }
    m.moments_[p] = acc / M_PI;
  }
  if (std::abs(m.moments_[0] - 1.0) > 1e-6)
    throw ValidationError("SpectrumNotNormalized",
                          "tabulated spectrum gives R(0) = " + std::to_string(m.moments_[0]) +
                              ", expected 1 within 1e-6");
  // R decays no faster than the spectrum resolution allows; use a generous lag
  m.support_zeta_ = 64.0 * M_PI / (m.tab_beta_[1] - m.tab_beta_[0]);
  m.support_zeta_ = std::min(m.support_zeta_, 1e4);
  return m;
}

double CorrelationModel::autocorrelation(double zeta) const {
  if (kind_ == Kind::Gaussian) return std::exp(-0.5 * zeta * zeta);
  // (1/pi) sum over segments of int (p0 + s(b-b0)) cos(b zeta) db
  double z = zeta;
  if (std::abs(z) < 1e-9) {
    // Taylor around 0 to avoid cancellation: R(z) ~ m0 - m1 z^2/2
    return moments_[0] - 0.5 * moments_[1] * z * z;
  }
  double acc = 0.0;
  for (size_t i = 0; i + 1 < tab_beta_.size(); ++i) {
    double b0 = tab_beta_[i], b1 = tab_beta_[i + 1];
    double p0 = tab_psd_[i], p1 = tab_psd_[i + 1];
    double s = (p1 - p0) / (b1 - b0);
    // int p(b) cos(bz) db = [p(b) sin(bz)/z]_{b0}^{b1} - s/z int sin(bz) db
    acc += (p1 * std::sin(b1 * z) - p0 * std::sin(b0 * z)) / z +
           s / (z * z) * (std::cos(b1 * z) - std::cos(b0 * z));
  }
  return acc / M_PI;
}

double CorrelationModel::autocorrelation_dd(double zeta) const {
  if (kind_ == Kind::Gaussian)
    return (zeta * zeta - 1.0) * std::exp(-0.5 * zeta * zeta);
  double z = zeta;
  if (std::abs(z) < 1e-6) return -moments_[1] + 0.5 * moments_[2] * z * z;
  // -(1/pi) int b^2 psd(b) cos(bz) db, per segment by quadrature
  double acc = 0.0;
  for (size_t i = 0; i + 1 < tab_beta_.size(); ++i) {
    double b0 = tab_beta_[i], b1 = tab_beta_[i + 1];
    double p0 = tab_psd_[i], p1 = tab_psd_[i + 1];
    double s = (p1 - p0) / (b1 - b0);
    auto f = [&](double b) { return b * b * (p0 + s * (b - b0)) * std::cos(b * z); };
    int panels = 1 + static_cast<int>((b1 - b0) * std::abs(z) / M_PI);
    acc += integrate(f, b0, b1, 1e-12, 4000, panels).value;
  }
  return -acc / M_PI;
}

double CorrelationModel::deriv0(int order) const {
  if (order % 2 != 0 || order < 0 || order > 8)
    throw ValidationError("InvalidDerivOrder", "even orders 0..8 only");
  int m = order / 2;
  double sign = (m % 2 == 0) ? 1.0 : -1.0;
  return sign * moments_[m];
}

double CorrelationModel::psd(double beta) const {
  if (kind_ == Kind::Gaussian) return kSqrt2Pi * std::exp(-0.5 * beta * beta);
  double b = std::abs(beta);
  if (b >= tab_beta_.back()) return 0.0;
  size_t i = std::upper_bound(tab_beta_.begin(), tab_beta_.end(), b) - tab_beta_.begin();
  if (i == 0) return tab_psd_.front();
  double t = (b - tab_beta_[i - 1]) / (tab_beta_[i] - tab_beta_[i - 1]);
  return tab_psd_[i - 1] + t * (tab_psd_[i] - tab_psd_[i - 1]);
}

double CorrelationModel::support_beta(double rel) const {
  if (kind_ == Kind::Gaussian) return std::sqrt(-2.0 * std::log(rel));
  return tab_beta_.back();
}

double psd_by_quadrature(const CorrelationModel& m, double beta, double tol) {
  double zmax = m.support_zeta();
  auto f = [&](double z) { return m.autocorrelation(z) * std::cos(beta * z); };
  int panels = 4 + static_cast<int>(zmax * std::abs(beta) / M_PI);
  return 2.0 * integrate(f, 0.0, zmax, tol / 2, 8000, panels).value;
}

double sine_half_transform(const CorrelationModel& m, double beta, double tol) {
  if (beta == 0.0) return 0.0;
  double zmax = m.support_zeta();
  auto f = [&](double z) { return m.autocorrelation(z) * std::sin(std::abs(beta) * z); };
  int panels = 4 + static_cast<int>(zmax * std::abs(beta) / M_PI);
  double v = integrate(f, 0.0, zmax, tol, 8000, panels).value;
  return beta > 0 ? v : -v;
}

double kappa_laplace_integral(const std::function<double(double)>& rpp, double zeta_max,
                              double beta_j, double beta_l, double tol) {
  if (!(beta_l > 0))
    throw ValidationError("InvalidLaplaceRate", "beta_l must be positive");
  // e^{-beta_l zeta} is below 1e-14 past 33/beta_l
  double zmax = std::min(zeta_max, 33.0 / beta_l);
  double blsq = beta_l * beta_l, bjsq = beta_j * beta_j;
  auto f = [&](double z) {
    return rpp(z) * std::exp(-beta_l * z) *
           ((blsq - bjsq) * std::cos(beta_j * z) - 2.0 * beta_j * beta_l * std::sin(beta_j * z));
  };
  int panels = 4 + static_cast<int>(zmax * std::abs(beta_j) / M_PI);
  return integrate(f, 0.0, zmax, tol, 8000, panels).value;
}

double kappa_laplace_integral(const CorrelationModel& m, double beta_j, double beta_l,
                              double tol) {
  return kappa_laplace_integral([&](double z) { return m.autocorrelation_dd(z); },
                                m.support_zeta(), beta_j, beta_l, tol);
}

struct NormalSampler::Impl {
  std::mt19937_64 eng;
  double spare = 0;
  bool has_spare = false;
};

NormalSampler::NormalSampler(uint64_t seed) : impl_(new Impl) { impl_->eng.seed(seed); }
NormalSampler::~NormalSampler() { delete impl_; }
NormalSampler::NormalSampler(NormalSampler&& o) noexcept : impl_(o.impl_) { o.impl_ = nullptr; }
NormalSampler& NormalSampler::operator=(NormalSampler&& o) noexcept {
  std::swap(impl_, o.impl_);
  return *this;
}

double NormalSampler::next() {
  if (impl_->has_spare) {
    impl_->has_spare = false;
    return impl_->spare;
  }
  // Box-Muller on (0,1] uniforms built from the top 53 bits
  auto uniform = [&]() {
    return (static_cast<double>(impl_->eng() >> 11) + 1.0) * 0x1p-53;
  };
  double u1 = uniform(), u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * M_PI * u2;
  impl_->spare = r * std::sin(a);
  impl_->has_spare = true;
  return r * std::cos(a);
}

NoisePath synthesize_path(const CorrelationModel& m, double zeta_begin, double zeta_end,
                          double dzeta, uint64_t seed, const SynthesisOptions& opt) {
  if (!(dzeta > 0) || !(zeta_end > zeta_begin))
    throw ValidationError("InvalidPathSpan", "need zeta_end > zeta_begin and dzeta > 0");

  const double beta_max = m.support_beta(opt.truncation_rel);
  if (beta_max > M_PI / dzeta * 0.75)
    throw NumericalError("SpectrumTruncationTooCoarse",
                         "grid step cannot represent the spectrum support; need dzeta <= " +
                             std::to_string(0.75 * M_PI / beta_max));

  const int n = static_cast<int>(std::ceil((zeta_end - zeta_begin) / dzeta)) + 1;
  const size_t nfft = next_pow2(static_cast<size_t>(n) + 16);
  const double dw = 2.0 * M_PI / (static_cast<double>(nfft) * dzeta);
  const int n_modes = static_cast<int>(std::floor(beta_max / dw)) + 1;
  if (static_cast<size_t>(n_modes) > nfft)
    throw NumericalError("SpectrumTruncationTooCoarse", "mode count exceeds transform size");

  // midpoint frequencies avoid a DC component
  NormalSampler rng(seed);
  std::vector<std::complex<double>> coeff(nfft, 0.0);
  double mass = 0.0;
  for (int mi = 0; mi < n_modes; ++mi) {
    double w = (mi + 0.5) * dw;
    double c2 = m.psd(w) * dw / M_PI;
    mass += c2;
    double c = std::sqrt(c2);
    double xi = rng.next(), eta = rng.next();
    coeff[mi] = c * std::complex<double>(xi, -eta) *
                std::exp(std::complex<double>(0.0, w * zeta_begin));
  }
  if (mass < opt.mass_min * m.deriv0(0))
    throw NumericalError("SpectrumTruncationTooCoarse",
                         "truncated spectrum captures only " + std::to_string(mass) +
                             " of the variance");

  NoisePath path;
  path.zeta0 = zeta_begin;
  path.dzeta = dzeta;
  path.n = n;
  path.seed = seed;
  path.spectral_mass = mass;
  path.modes_used = n_modes;

  std::vector<std::complex<double>> buf(nfft);
  std::vector<double>* arrays[4] = {&path.nu, &path.nu1, &path.nu2, &path.nu3};
  for (int deriv = 0; deriv < 4; ++deriv) {
    for (size_t mi = 0; mi < static_cast<size_t>(n_modes); ++mi) {
      double w = (mi + 0.5) * dw;
      std::complex<double> f = coeff[mi];
      for (int p = 0; p < deriv; ++p) f *= std::complex<double>(0.0, w);
      buf[mi] = f;
    }
    std::fill(buf.begin() + n_modes, buf.end(), std::complex<double>(0.0, 0.0));
    fft_pow2(buf, +1);
    auto& arr = *arrays[deriv];
    arr.resize(n);
    const double half = 0.5 * dw * dzeta;  // midpoint twist per sample
    for (int i = 0; i < n; ++i) {
      std::complex<double> tw(std::cos(half * i), std::sin(half * i));
      arr[i] = (buf[i] * tw).real();
    }
  }
  if (opt.clip)
    for (double& v : path.nu) v = std::clamp(v, -opt.clip_level, opt.clip_level);
  return path;
}

}  // namespace modeflux
