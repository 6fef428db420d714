#include "modeflux/montecarlo.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "modeflux/errors.hpp"
#include "modeflux/modes.hpp"

namespace modeflux {

void validate(const McConfig& cfg) {
  if (!(cfg.epsilon > 0) || cfg.epsilon > 0.1)
    throw ValidationError("InvalidEpsilon", "need 0 < epsilon <= 0.1");
  if (cfg.n_trajectories < 2)
    throw ValidationError("InvalidTrajectoryCount", "need n_trajectories >= 2");
  if (cfg.step > cfg.epsilon / 10.0 + 1e-15)
    throw ValidationError("StepTooCoarseForFastScale",
                          "step must be <= epsilon/10 to resolve the boundary noise");
  if (!(cfg.z_left < cfg.z_right))
    throw ValidationError("InvalidSectorBounds", "need z_left < z_right");
  if (cfg.n_modes < 1) throw ValidationError("InvalidModeCount", "need n_modes >= 1");
  if (cfg.n_checkpoints < 1)
    throw ValidationError("InvalidCheckpointCount", "need n_checkpoints >= 1");
}

namespace {

struct StepPlan {
  long n_steps = 0;
  double h = 0;
  double dzeta = 0;
  long steps_per_checkpoint = 0;
};

StepPlan plan_steps(const McConfig& cfg) {
  StepPlan sp;
  double step = cfg.step > 0 ? cfg.step : cfg.epsilon / 10.0;
  double len = cfg.z_right - cfg.z_left;
  long per_ck = static_cast<long>(std::ceil(len / (step * cfg.n_checkpoints)));
  per_ck = std::max<long>(per_ck, 1);
  sp.steps_per_checkpoint = per_ck;
  sp.n_steps = per_ck * cfg.n_checkpoints;
  sp.h = len / static_cast<double>(sp.n_steps);
  sp.dzeta = sp.h / (2.0 * cfg.epsilon);
  return sp;
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline long path_index_of(const NoisePath& path, double zeta) {
  double fi = (zeta - path.zeta0) / path.dzeta;
  long i = std::lround(fi);
  if (std::abs(fi - static_cast<double>(i)) > 1e-6)
    throw NumericalError("PathCoverage", "integration stage off the noise-path grid");
  if (i < 0 || i >= path.n)
    throw NumericalError("PathCoverage", "noise path does not span the requested z");
  return i;
}

// Pairwise (binary tree) summation in fixed index order.
template <class T, class F>
T pairwise_sum(long lo, long hi, const F& term) {
  if (hi - lo == 1) return term(lo);
  long mid = lo + (hi - lo) / 2;
  return pairwise_sum<T>(lo, mid, term) + pairwise_sum<T>(mid, hi, term);
}

}  // namespace

void assemble_upsilon_bb(const McContext& ctx, const McConfig& cfg, double z,
                         const NoisePath& path, long path_index,
                         const std::vector<double>& phases, std::vector<Complex>& out) {
  const int n = cfg.n_modes;
  const double k = ctx.phys.k;
  const double sigma = ctx.phys.sigma;
  const double eps = cfg.epsilon;
  if (path_index < 0 || path_index >= path.n)
    throw NumericalError("PathCoverage", "path index outside the synthesized grid");

  const ProfileEval pe = ctx.profile->evaluate(z);
  const double d = pe.d;
  const double nu = path.nu[path_index];
  const double nu1 = path.nu1[path_index];
  const double nu2 = path.nu2[path_index];
  const double sq = sigma / std::sqrt(eps);
  const double s2 = sigma * sigma;

  std::vector<double> mu(n), beta(n);
  std::vector<Complex> ph(n);
  for (int i = 0; i < n; ++i) {
    mu[i] = mode_mu(i + 1, d);
    beta[i] = beta_propagating(k, i + 1, d);
    double arg = phases[i] / eps;
    ph[i] = Complex(std::cos(arg), std::sin(arg));  // e^{+i phi_j / eps}
  }

  out.assign(static_cast<size_t>(n) * n, Complex(0, 0));
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < n; ++l) {
      if (l == i) {
        double diag = sq * mu[i] * mu[i] * nu;
        if (cfg.include_sigma2_terms) diag += s2 * diagonal_quadratic(i + 1, mu[i], nu, nu1);
        out[static_cast<size_t>(i) * n + i] = Complex(0, -diag / (2.0 * beta[i]));
        continue;
      }
      auto [gam, the] = gamma_theta(i + 1, l + 1);
      Complex brace(sq * gam * nu2, -beta[l] * sq * the * nu1);
      if (cfg.include_sigma2_terms) {
        auto [g2, t2] = quadratic_noise_coupling(i + 1, l + 1, nu, nu1, nu2);
        brace += Complex(s2 * g2, -beta[l] * s2 * t2);
      }
      if (cfg.include_slow_terms) {
        auto [go, to] = slow_coupling(i + 1, l + 1, k, d, pe.d_prime, ctx.phys.curvature);
        brace += Complex(go, -beta[l] * to);
      }
      // e^{-i (phi_l - phi_i)/eps} = ph_i * conj(ph_l)
      Complex phase = ph[i] * std::conj(ph[l]);
      out[static_cast<size_t>(i) * n + l] =
          Complex(0, 1) / (2.0 * std::sqrt(beta[i] * beta[l])) * phase * brace;
    }
  }
}

TrajectoryRecord integrate_trajectory(const McContext& ctx, const McConfig& cfg,
                                      const std::vector<Complex>& b_init,
                                      const NoisePath& path) {
  validate(cfg);
  const int n = cfg.n_modes;
  if (static_cast<int>(b_init.size()) != n)
    throw ValidationError("InvalidArgument", "initial amplitude size mismatch");
  const StepPlan sp = plan_steps(cfg);
  const double eps = cfg.epsilon;
  const double k = ctx.phys.k;

  // accumulated beta integrals from the source to the entry end
  std::vector<double> phi(n, 0.0);
  {
    const int ngl = 64;
    for (int g = 0; g < ngl; ++g) {
      // composite midpoint on [0, z_right]; exact for constant profiles and
      // ample for slow ones (the entry phase is a constant offset per mode)
      double z = cfg.z_right * (g + 0.5) / ngl;
      double d = ctx.profile->evaluate(z).d;
      for (int i = 0; i < n; ++i)
        phi[i] += beta_propagating(k, i + 1, d) * cfg.z_right / ngl;
    }
  }

  auto advance_phase = [&](std::vector<double>& p, double z_from, double z_to) {
    // 2-point Gauss-Legendre on the half step
    double c = 0.5 * (z_from + z_to), half = 0.5 * (z_to - z_from);
    double e = half / std::sqrt(3.0);
    double d1 = ctx.profile->evaluate(c - e).d;
    double d2 = ctx.profile->evaluate(c + e).d;
    for (int i = 0; i < n; ++i)
      p[i] += half * (beta_propagating(k, i + 1, d1) + beta_propagating(k, i + 1, d2));
  };

  TrajectoryRecord rec;
  rec.amps.resize(static_cast<size_t>(cfg.n_checkpoints) * n);
  rec.z_checkpoints.resize(cfg.n_checkpoints);

  std::vector<Complex> b(b_init), k1(n), k2(n), k3(n), k4(n), tmp(n);
  std::vector<Complex> ups;
  std::vector<double> phi_half(n), phi_next(n);

  double p_start = 0;
  for (auto& v : b) p_start += std::norm(v);

  auto apply = [&](double z, long iz, const std::vector<double>& phases,
                   const std::vector<Complex>& x, std::vector<Complex>& out) {
    assemble_upsilon_bb(ctx, cfg, z, path, iz, phases, ups);
    for (int i = 0; i < n; ++i) {
      Complex acc(0, 0);
      const Complex* row = ups.data() + static_cast<size_t>(i) * n;
      for (int l = 0; l < n; ++l) acc += row[l] * x[l];
      out[i] = acc;
    }
  };

  double z = cfg.z_right;
  long iz = path_index_of(path, z / eps);
  const double h = -sp.h;  // leftward march
  int ck = 0;
  for (long s = 0; s < sp.n_steps; ++s) {
    double z_half = z + 0.5 * h, z_next = z + h;
    phi_half = phi;
    advance_phase(phi_half, z, z_half);
    phi_next = phi_half;
    advance_phase(phi_next, z_half, z_next);
    long iz_half = iz - 1, iz_next = iz - 2;

    apply(z, iz, phi, b, k1);
    for (int i = 0; i < n; ++i) tmp[i] = b[i] + 0.5 * h * k1[i];
    apply(z_half, iz_half, phi_half, tmp, k2);
    for (int i = 0; i < n; ++i) tmp[i] = b[i] + 0.5 * h * k2[i];
    apply(z_half, iz_half, phi_half, tmp, k3);
    for (int i = 0; i < n; ++i) tmp[i] = b[i] + h * k3[i];
    apply(z_next, iz_next, phi_next, tmp, k4);
    for (int i = 0; i < n; ++i)
      b[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

    z = z_next;
    iz = iz_next;
    phi = phi_next;
    if ((s + 1) % sp.steps_per_checkpoint == 0) {
      rec.z_checkpoints[ck] = z;
      std::copy(b.begin(), b.end(), rec.amps.begin() + static_cast<size_t>(ck) * n);
      ++ck;
    }
  }

  double p_end = 0;
  for (auto& v : b) p_end += std::norm(v);
  rec.conservation_drift = std::abs(p_end - p_start);
  if (ctx.phys.sigma == 0.0) {
    double len = cfg.z_right - cfg.z_left;
    if (rec.conservation_drift / std::max(p_start, 1e-300) > 1e-3 * len)
      throw NumericalError("StepTooCoarse",
                           "deterministic run drifted " +
                               std::to_string(rec.conservation_drift) + " over " +
                               std::to_string(len));
  }
  return rec;
}

EnsembleStats run_ensemble(const McContext& ctx, const McConfig& cfg,
                           const std::vector<Complex>& b_init) {
  validate(cfg);
  const int n = cfg.n_modes;
  const int nck = cfg.n_checkpoints;
  const long ntraj = cfg.n_trajectories;
  const StepPlan sp = plan_steps(cfg);

  // one shared noise-path footprint; each trajectory owns its samples
  const double margin = 4.0 * sp.dzeta;
  const double zeta_lo = cfg.z_left / cfg.epsilon - margin;
  const double zeta_hi = cfg.z_right / cfg.epsilon + margin;

  std::vector<Complex> raw(static_cast<size_t>(ntraj) * nck * n);
  std::vector<double> drifts(ntraj, 0.0);

  int n_threads = cfg.n_threads;
  if (const char* env = std::getenv("MODEFLUX_THREADS")) n_threads = std::atoi(env);
  if (n_threads <= 0) n_threads = static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::clamp(n_threads, 1, 64);

  SynthesisOptions sopt;
  sopt.clip = cfg.clip_noise;
  std::vector<double> zck;

  auto work = [&](long lo, long hi) {
    for (long t = lo; t < hi; ++t) {
      uint64_t seed_t = splitmix64(cfg.seed ^ splitmix64(static_cast<uint64_t>(t) + 1));
      NoisePath path = synthesize_path(*ctx.model, zeta_lo, zeta_hi, sp.dzeta, seed_t, sopt);
      TrajectoryRecord rec = integrate_trajectory(ctx, cfg, b_init, path);
      std::copy(rec.amps.begin(), rec.amps.end(),
                raw.begin() + static_cast<size_t>(t) * nck * n);
      drifts[t] = rec.conservation_drift;
      if (t == 0) zck = rec.z_checkpoints;
    }
  };
  if (n_threads == 1 || ntraj < 4) {
    work(0, ntraj);
  } else {
    std::vector<std::thread> pool;
    long chunk = (ntraj + n_threads - 1) / n_threads;
    for (int th = 0; th < n_threads; ++th) {
      long lo = th * chunk, hi = std::min<long>(ntraj, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(work, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  EnsembleStats st;
  st.z_checkpoints = zck;
  st.n_modes = n;
  st.n_trajectories = static_cast<int>(ntraj);
  const size_t stride = static_cast<size_t>(nck) * n;
  auto amp_at = [&](long t, int c, int j) -> Complex {
    return raw[static_cast<size_t>(t) * stride + static_cast<size_t>(c) * n + j];
  };

  st.mean_amp.resize(stride);
  st.se_amp.resize(stride);
  st.mean_power.resize(stride);
  st.se_power.resize(stride);
  st.var_power.resize(stride);
  st.se_var_power.resize(stride);
  st.sum_var.assign(nck, 0.0);
  st.se_sum_var.assign(nck, 0.0);
  st.cov_power.assign(nck, std::vector<double>(packed_size(n), 0.0));

  const double dn = static_cast<double>(ntraj);
  for (int c = 0; c < nck; ++c) {
    for (int j = 0; j < n; ++j) {
      size_t idx = static_cast<size_t>(c) * n + j;
      Complex ma = pairwise_sum<Complex>(0, ntraj, [&](long t) { return amp_at(t, c, j); }) /
                   dn;
      double mp =
          pairwise_sum<double>(0, ntraj, [&](long t) { return std::norm(amp_at(t, c, j)); }) /
          dn;
      double va = pairwise_sum<double>(0, ntraj, [&](long t) {
                    return std::norm(amp_at(t, c, j) - ma);
                  }) /
                  dn;
      double vp = pairwise_sum<double>(0, ntraj, [&](long t) {
                    double d = std::norm(amp_at(t, c, j)) - mp;
                    return d * d;
                  }) /
                  dn;
      double m4 = pairwise_sum<double>(0, ntraj, [&](long t) {
                    double d = std::norm(amp_at(t, c, j)) - mp;
                    return d * d * d * d;
                  }) /
                  dn;
      st.mean_amp[idx] = ma;
      st.se_amp[idx] = std::sqrt(va / dn);
      st.mean_power[idx] = mp;
      double vp_unbiased = vp * dn / (dn - 1.0);
      st.se_power[idx] = std::sqrt(vp_unbiased / dn);
      st.var_power[idx] = vp_unbiased;
      st.se_var_power[idx] = std::sqrt(std::max(m4 - vp * vp, 0.0) / dn);
    }
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double mi = st.mean_power[static_cast<size_t>(c) * n + i];
        double mj = st.mean_power[static_cast<size_t>(c) * n + j];
        double cov = pairwise_sum<double>(0, ntraj, [&](long t) {
                       return (std::norm(amp_at(t, c, i)) - mi) *
                              (std::norm(amp_at(t, c, j)) - mj);
                     }) /
                     (dn - 1.0);
        st.cov_power[c][packed_index(n, i, j)] = cov;
      }
    double sv = 0;
    for (int j = 0; j < n; ++j) sv += st.var_power[static_cast<size_t>(c) * n + j];
    st.sum_var[c] = sv;
    // influence-function standard error of the summed per-mode variances
    auto uval = [&](long t) {
      double u = 0;
      for (int j = 0; j < n; ++j) {
        double d = std::norm(amp_at(t, c, j)) - st.mean_power[static_cast<size_t>(c) * n + j];
        u += d * d;
      }
      return u;
    };
    double mean_u = pairwise_sum<double>(0, ntraj, uval) / dn;
    double var_u = pairwise_sum<double>(0, ntraj, [&](long t) {
                     double d = uval(t) - mean_u;
                     return d * d;
                   }) /
                   (dn - 1.0);
    st.se_sum_var[c] = std::sqrt(var_u / dn);
  }
  st.max_conservation_drift = *std::max_element(drifts.begin(), drifts.end());
  return st;
}

MomentPrediction predict_moments(const McContext& ctx, const McConfig& cfg,
                                 const std::vector<Complex>& b_init, const OdeOptions& opt) {
  validate(cfg);
  const int n = cfg.n_modes;
  const StepPlan sp = plan_steps(cfg);
  MomentPrediction pred;
  pred.z.resize(cfg.n_checkpoints);
  for (int c = 0; c < cfg.n_checkpoints; ++c)
    pred.z[c] = cfg.z_right + (c + 1) * sp.steps_per_checkpoint * (-sp.h);
  pred.z.back() = cfg.z_left;

  CouplingOptions copt;
  CoefficientProvider prov(ctx.phys, ctx.profile, ctx.model, copt);

  std::vector<double> p(n), m(packed_size(n));
  for (int i = 0; i < n; ++i) p[i] = std::norm(b_init[i]);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) m[packed_index(n, i, j)] = p[i] * p[j];

  pred.mean_power.assign(pred.z.size() * n, 0.0);
  pred.var_power.assign(pred.z.size() * n, 0.0);
  pred.sum_var.assign(pred.z.size(), 0.0);

  std::vector<std::vector<double>> pr(pred.z.size(), std::vector<double>(n));
  evolve_mean_powers(
      prov, n, p, cfg.z_right, cfg.z_left, pred.z,
      [&](int gi, double, const double* y) { std::copy(y, y + n, pr[gi].begin()); }, opt);
  std::vector<std::vector<double>> mr(pred.z.size(), std::vector<double>(packed_size(n)));
  evolve_second_moments(
      prov, n, m, cfg.z_right, cfg.z_left, pred.z,
      [&](int gi, double, const double* y) {
        std::copy(y, y + packed_size(n), mr[gi].begin());
      },
      opt);
  for (size_t c = 0; c < pred.z.size(); ++c) {
    for (int j = 0; j < n; ++j) {
      pred.mean_power[c * n + j] = pr[c][j];
      double var = mr[c][packed_index(n, j, j)] - pr[c][j] * pr[c][j];
      pred.var_power[c * n + j] = var;
      pred.sum_var[c] += var;
    }
  }
  return pred;
}

CompareReport compare_to_moments(const EnsembleStats& stats, const MomentPrediction& pred) {
  CompareReport rep;
  if (stats.z_checkpoints.size() != pred.z.size())
    throw ValidationError("GridMismatch", "checkpoint counts differ");
  for (size_t c = 0; c < pred.z.size(); ++c)
    if (std::abs(stats.z_checkpoints[c] - pred.z[c]) > 1e-9)
      throw ValidationError("GridMismatch", "checkpoint abscissae differ");
  const int n = stats.n_modes;
  const int nck = static_cast<int>(pred.z.size());
  rep.z = pred.z;
  rep.z_mean.resize(static_cast<size_t>(nck) * n);
  rep.z_var.resize(static_cast<size_t>(nck) * n);
  rep.z_sum_var.resize(nck);
  for (int c = 0; c < nck; ++c) {
    for (int j = 0; j < n; ++j) {
      size_t idx = static_cast<size_t>(c) * n + j;
      double se = std::max(stats.se_power[idx], 1e-300);
      rep.z_mean[idx] = (stats.mean_power[idx] - pred.mean_power[idx]) / se;
      double sev = std::max(stats.se_var_power[idx], 1e-300);
      rep.z_var[idx] = (stats.var_power[idx] - pred.var_power[idx]) / sev;
      rep.max_abs_z_mean = std::max(rep.max_abs_z_mean, std::abs(rep.z_mean[idx]));
    }
    double ses = std::max(stats.se_sum_var[c], 1e-300);
    rep.z_sum_var[c] = (stats.sum_var[c] - pred.sum_var[c]) / ses;
    rep.max_abs_z_sum_var = std::max(rep.max_abs_z_sum_var, std::abs(rep.z_sum_var[c]));
  }
  rep.n_comparisons = nck * n + nck;
  rep.pass = rep.max_abs_z_mean <= 3.0 && rep.max_abs_z_sum_var <= 3.0;
  char note[160];
  std::snprintf(note, sizeof(note),
                "3-sigma gate over %d comparisons; about %.2f exceedances are "
                "expected from chance alone under a correct model",
                rep.n_comparisons, rep.n_comparisons * 0.0027);
  rep.note = note;
  return rep;
}

}  // namespace modeflux
