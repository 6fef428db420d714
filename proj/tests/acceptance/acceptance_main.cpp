// End-to-end acceptance suite. Each criterion prints one pass/fail line;
// the exit status is the number of failed criteria.

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "modeflux/config.hpp"
#include "modeflux/errors.hpp"
#include "modeflux/modes.hpp"
#include "modeflux/montecarlo.hpp"
#include "modeflux/runner.hpp"
#include "modeflux/transport.hpp"

using namespace modeflux;

namespace {

int g_failures = 0;

void criterion(int id, const std::string& name, const std::function<bool(std::string&)>& fn) {
  std::string detail;
  bool ok = false;
  try {
    ok = fn(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  std::printf("[%s] criterion %2d: %s%s%s\n", ok ? "PASS" : "FAIL", id, name.c_str(),
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string g_presets = "presets";

struct PresetSetup {
  RunConfig cfg;
  WidthProfile profile;
  CorrelationModel model;
  SectorLayout layout;

  explicit PresetSetup(const std::string& preset)
      : cfg(load_config(g_presets + "/" + preset)),
        profile(make_profile(cfg, g_presets)),
        model(make_model(cfg, g_presets)),
        layout(find_turning_points(cfg.physics.k, profile, cfg.geometry.z_max)) {}
};

char buf_[256];
std::string fmt(const char* f, ...) {
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf_, sizeof(buf_), f, ap);
  va_end(ap);
  return buf_;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_presets = argv[1];

  // Shared full transport run of the point-source preset (criteria 3, 7, 10).
  TransportLedger fig3_led;
  PresetSetup* fig3 = nullptr;

  criterion(1, "cutoff check: 2 beta_40 = 1.97 +- 0.005 at k = 2pi, D = 20.25",
            [&](std::string& d) {
              double v = 2.0 * beta_propagating(2 * M_PI, 40, 20.25);
              d = fmt("2 beta_40 = %.6f", v);
              return std::abs(v - 1.97) <= 0.005;
            });

  criterion(2, "layout check: one left turning point at -1000 +- 1e-6, counts 40 -> 39",
            [&](std::string& d) {
              fig3 = new PresetSetup("paper-fig3.cfg");
              const auto& lay = fig3->layout;
              if (lay.left_turning_points.size() != 1 || !lay.right_turning_points.empty())
                return false;
              d = fmt("z = %.9f, n0 = %d, n_min = %d", lay.left_turning_points[0], lay.n0,
                      lay.n_min);
              return std::abs(lay.left_turning_points[0] + 1000.0) <= 1e-6 && lay.n0 == 40 &&
                     lay.n_min == 39;
            });

  criterion(3, "conservation: per-sector total power 1e-8, global balance 1e-8",
            [&](std::string& d) {
              if (!fig3) {
                d = "skipped: preset setup unavailable";
                return false;
              }
              Excitation exc = make_excitation(fig3->cfg, fig3->profile);
              TransportOptions topt = make_transport_options(fig3->cfg);
              fig3_led = chain_sectors(fig3->layout, fig3->profile, fig3->model,
                                        make_physics(fig3->cfg), exc, topt);
              double worst = 0;
              for (const auto& tr : fig3_led.left)
                for (size_t g = 0; g < tr.grid.size(); ++g) {
                  double s = 0;
                  for (double v : tr.powers[g]) s += v;
                  worst = std::max(worst,
                                   std::abs(s - tr.entry_total_power) / tr.entry_total_power);
                }
              d = fmt("max sector drift %.2e, balance residual %.2e", worst,
                      fig3_led.global_balance_residual_rel);
              return worst <= 1e-8 && fig3_led.global_balance_residual_rel <= 1e-8;
            });

  criterion(4, "generator structure of gc across 20 z-values of the preset",
            [&](std::string& d) {
              if (!fig3) {
                d = "skipped: preset setup unavailable";
                return false;
              }
              double worst_row = 0, worst_sym = 0, worst_null = 0;
              for (int i = 0; i < 20; ++i) {
                double z = -990.0 + i * (985.0 / 19.0);
                double dz = fig3->profile.evaluate(z).d;
                int n = mode_count(fig3->cfg.physics.k, fig3->profile, z);
                CouplingSet s = coupling_set(fig3->cfg.physics.k, fig3->cfg.physics.sigma,
                                             fig3->model, dz, n, {}, kPartGc | kPartG0);
                double scale = s.gc.max_abs();
                for (int a = 0; a < n; ++a) {
                  double row = 0;
                  for (int b = 0; b < n; ++b) {
                    row += s.gc(a, b);
                    worst_sym = std::max(worst_sym,
                                         std::abs(s.gc(a, b) - s.gc(b, a)) / scale);
                    if (a != b && s.gc(a, b) < 0) return false;
                  }
                  worst_row = std::max(worst_row, std::abs(row) / scale);
                }
                LengthScales ls = length_scales(s);  // throws if zero not simple
                worst_null = std::max(worst_null, ls.null_vector_deviation);
                for (size_t e = 0; e + 1 < ls.spectrum.size(); ++e)
                  if (!(ls.spectrum[e] < 0)) return false;
              }
              d = fmt("row sums %.1e, asymmetry %.1e, null-vector dev %.1e", worst_row,
                      worst_sym, worst_null);
              return worst_row <= 1e-14 && worst_sym <= 1e-14 && worst_null <= 1e-10;
            });

  criterion(5, "identity suite: 8 closed forms vs quadrature, 1e-9, j,q <= 30",
            [&](std::string& d) {
              double worst = 0;
              for (double dd : {0.5, 1.0, 20.25})
                for (int j = 1; j <= 30; ++j)
                  for (int q = 1; q <= 30; ++q)
                    for (const auto& r : identity_residuals(j, q, dd))
                      worst = std::max(worst, r.residual);
              d = fmt("max residual %.2e", worst);
              return worst < 1e-9;
            });

  criterion(6, "length scales: smf ordering and L_eq beyond the sector", [&](std::string& d) {
    if (!fig3) {
      d = "skipped: preset setup unavailable";
      return false;
    }
    CouplingSet s = coupling_set(fig3->cfg.physics.k, fig3->cfg.physics.sigma, fig3->model,
                                 fig3->profile.evaluate(0.0).d, fig3->layout.n0);
    LengthScales ls = length_scales(s);
    bool mono = true;
    for (int j = 1; j < 40; ++j) mono = mono && ls.smf[j] < ls.smf[j - 1];
    bool under100 = true, under1000 = true;
    for (int j = 16; j <= 40; ++j) under100 = under100 && ls.smf[j - 1] < 100.0;
    for (int j = 6; j <= 40; ++j) under1000 = under1000 && ls.smf[j - 1] < 1000.0;
    d = fmt("L_eq = %.0f, smf(6) = %.0f, smf(16) = %.1f", ls.equipartition, ls.smf[5],
            ls.smf[15]);
    return mono && under100 && under1000 && ls.equipartition > 1000.0;
  });

  criterion(7, "point-source run: amplitude decay, equipartition, StD/mean at the turning point",
            [&](std::string& d) {
              if (fig3_led.left.empty()) {
                d = "skipped: transport run unavailable";
                return false;
              }
              const auto& s1 = fig3_led.left[0];
              const auto& src = fig3_led.source.b;
              // grid point at the turning point (last of sector 1)
              size_t gt = s1.grid.size() - 1;
              double worst_amp = 0;
              for (int j = 6; j <= 40; ++j)
                worst_amp = std::max(worst_amp, std::abs(s1.mean_amps[gt][j - 1]) /
                                                    std::abs(src[j - 1]));
              double share = fig3_led.p0_left / 40.0;
              double worst_eq = 0;
              for (int j = 6; j <= 40; ++j)
                worst_eq = std::max(worst_eq,
                                    std::abs(s1.powers[gt][j - 1] / share - 1.0));
              double ratio = fig3_led.left[1].trans_std / fig3_led.left[1].trans_mean;
              d = fmt("max |<b>|/|b_o| (j>5) = %.3f, max eq dev = %.3f, StD/mean = %.3f",
                      worst_amp, worst_eq, ratio);
              return worst_amp < 0.05 && worst_eq < 0.20 && ratio < 0.10;
            });

  criterion(8, "universal strong-scattering limit within 1%", [&](std::string& d) {
    WidthProfile prof = WidthProfile::linear_ramp_with_cubic_caps(-3000.0, 0.0, 1.95, 2.76,
                                                                  1.949, 2.761, 0.2);
    CorrelationModel model = CorrelationModel::gaussian();
    PhysicsParams phys{2 * M_PI, std::sqrt(0.2), 1e-3, 0.0};
    SectorLayout lay = find_turning_points(phys.k, prof, 3100.0);
    if (lay.n0 != 5 || lay.n_min != 3) return false;
    // every sector must be at least 5 equipartition distances long
    for (const auto& sec : lay.left_sectors()) {
      double zm = 0.5 * (sec.z_left + sec.z_right);
      CouplingSet s = coupling_set(phys.k, phys.sigma, model, prof.evaluate(zm).d,
                                   sec.n_modes, {}, kPartGc | kPartG0);
      if (sec.n_modes < 2) continue;
      double leq = length_scales(s).equipartition;
      if (sec.z_right - sec.z_left < 5.0 * leq) {
        d = fmt("sector %.0f..%.0f shorter than 5 L_eq = %.1f", sec.z_left, sec.z_right,
                5 * leq);
        return false;
      }
    }
    Excitation exc;
    exc.rho_star = prof.evaluate(0.0).d / 7.0;
    TransportOptions topt;
    topt.with_mean_amps = false;
    TransportLedger led = chain_sectors(lay, prof, model, phys, exc, topt);
    double universal = led.p0_left * lay.n_min / lay.n0;
    double rel = std::abs(led.trans_mean_final - universal) / universal;
    d = fmt("transmitted/universal - 1 = %.2e", rel);
    return rel < 0.01;
  });

  criterion(9, "Monte Carlo oracle: means and summed power variance at 3 sigma; shrinking bias",
            [&](std::string& d) {
              WidthProfile prof = WidthProfile::piecewise_linear({0.0}, {2.62});
              CorrelationModel model = CorrelationModel::gaussian();
              PhysicsParams phys{2 * M_PI, std::sqrt(0.02), 1e-3, 0.0};
              McContext ctx{phys, &prof, &model};
              Excitation exc;
              exc.rho_star = 2.62 / 7.0;
              auto b0 = source_amplitudes(exc, phys.k, 2.62, 5).b;

              McConfig mc;
              mc.n_trajectories = 2000;
              mc.seed = 20260810;
              mc.z_left = -1.0;
              mc.z_right = 0.0;
              mc.n_modes = 5;
              mc.n_checkpoints = 10;

              // Bias against the limit predictions. The mean-power bias sits
              // below the 2000-trajectory noise floor at every epsilon here,
              // so the sweep also scores the total-power variance, whose limit
              // prediction is exactly zero (pathwise conservation) and whose
              // finite-epsilon excess is measured with ~3% precision.
              double bias[3];
              CompareReport nominal;
              const double epss[3] = {1e-2, 3e-3, 1e-3};
              const double p0sq = [&] {
                double s = 0;
                for (auto& v : b0) s += std::norm(v);
                return s * s;
              }();
              for (int e = 0; e < 3; ++e) {
                mc.epsilon = epss[e];
                McContext c2 = ctx;
                c2.phys.epsilon = epss[e];
                EnsembleStats st = run_ensemble(c2, mc, b0);
                MomentPrediction pred = predict_moments(c2, mc, b0);
                CompareReport rep = compare_to_moments(st, pred);
                if (e == 2) nominal = rep;
                double rms2 = 0, noise2 = 0;
                for (size_t i = 0; i < st.mean_power.size(); ++i) {
                  double dv = st.mean_power[i] - pred.mean_power[i];
                  rms2 += dv * dv;
                  noise2 += st.se_power[i] * st.se_power[i];
                }
                rms2 /= st.mean_power.size();
                noise2 /= st.mean_power.size();
                double var_tot = 0;  // empirical Var[sum_j P_j], prediction 0
                for (size_t c = 0; c < st.z_checkpoints.size(); ++c) {
                  double s = 0;
                  for (int a = 0; a < 5; ++a)
                    for (int b = 0; b < 5; ++b)
                      s += st.cov_power[c][packed_index(5, std::min(a, b), std::max(a, b))];
                  var_tot += s;
                }
                var_tot /= st.z_checkpoints.size();
                bias[e] = std::sqrt(std::max(rms2 - noise2, 0.0) / p0sq + var_tot / p0sq);
              }
              d = fmt("max|z_mean| = %.2f, max|z_sumvar| = %.2f, bias sweep %.2e > %.2e > %.2e",
                      nominal.max_abs_z_mean, nominal.max_abs_z_sum_var, bias[0], bias[1],
                      bias[2]);
              return nominal.max_abs_z_mean <= 3.0 && nominal.max_abs_z_sum_var <= 3.0 &&
                     bias[0] > bias[1] && bias[1] > bias[2];
            });

  criterion(10, "second moments: sector totals 1e-6 and the 2-mode generator oracle 1e-8",
            [&](std::string& d) {
              if (fig3_led.left.empty() || fig3_led.left[0].moments.empty()) {
                d = "skipped: transport run unavailable";
                return false;
              }
              // totals over the stored preset traces
              double worst = 0;
              for (const auto& tr : fig3_led.left) {
                double entry = 0;
                for (int a = 0; a < tr.n_modes; ++a)
                  for (int b = 0; b < tr.n_modes; ++b)
                    entry += tr.moments[0][packed_index(tr.n_modes, std::min(a, b),
                                                        std::max(a, b))];
                for (size_t g = 0; g < tr.grid.size(); ++g) {
                  double s = 0;
                  for (int a = 0; a < tr.n_modes; ++a)
                    for (int b = 0; b < tr.n_modes; ++b)
                      s += tr.moments[g][packed_index(tr.n_modes, std::min(a, b),
                                                      std::max(a, b))];
                  worst = std::max(worst, std::abs(s - entry) / entry);
                }
              }

              // closed 2-mode system from the generator, integrated independently
              WidthProfile flat = WidthProfile::piecewise_linear({0.0}, {1.3});
              CorrelationModel model = CorrelationModel::gaussian();
              PhysicsParams phys{2 * M_PI, 0.2, 1e-3, 0.0};
              CoefficientProvider prov(phys, &flat, &model, {});
              CouplingSet set = coupling_set(phys.k, phys.sigma, model, 1.3, 2);
              double g = set.gc(0, 1);
              double p1 = 0.8, p2 = 0.2;
              double m11 = p1 * p1, m12 = p1 * p2, m22 = p2 * p2;
              const double zend = -4.0;
              {  // RK4 on the hand-derived closed system, backward in z
                double z = 0;
                const double h = -2e-4;
                auto step = [&](double a11, double a12, double a22, double* out) {
                  out[0] = 2 * g * a11 - 4 * g * a12;
                  out[1] = 4 * g * a12 - g * a11 - g * a22;
                  out[2] = 2 * g * a22 - 4 * g * a12;
                };
                double k1[3], k2[3], k3[3], k4[3];
                while (z > zend + 1e-12) {
                  double hh = std::max(zend - z, h);
                  step(m11, m12, m22, k1);
                  step(m11 + 0.5 * hh * k1[0], m12 + 0.5 * hh * k1[1], m22 + 0.5 * hh * k1[2], k2);
                  step(m11 + 0.5 * hh * k2[0], m12 + 0.5 * hh * k2[1], m22 + 0.5 * hh * k2[2], k3);
                  step(m11 + hh * k3[0], m12 + hh * k3[1], m22 + hh * k3[2], k4);
                  m11 += hh / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
                  m12 += hh / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
                  m22 += hh / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]);
                  z += hh;
                }
              }
              std::vector<double> m(packed_size(2));
              m[packed_index(2, 0, 0)] = p1 * p1;
              m[packed_index(2, 0, 1)] = p1 * p2;
              m[packed_index(2, 1, 1)] = p2 * p2;
              OdeOptions oo;
              oo.rtol = 1e-12;
              oo.atol = 1e-16;
              evolve_second_moments(prov, 2, m, 0.0, zend, {}, nullptr, oo);
              double dev = std::max({std::abs(m[packed_index(2, 0, 0)] - m11),
                                     std::abs(m[packed_index(2, 0, 1)] - m12),
                                     std::abs(m[packed_index(2, 1, 1)] - m22)});
              d = fmt("max total drift %.2e, oracle deviation %.2e", worst, dev);
              return worst <= 1e-6 && dev <= 1e-8;
            });

  criterion(11, "single-mode excitations: ordering of transmitted fractions",
            [&](std::string& d) {
              double frac[2];
              int i = 0;
              for (const char* preset : {"paper-fig6-right.cfg", "paper-fig6-left.cfg"}) {
                PresetSetup s(preset);
                Excitation exc = make_excitation(s.cfg, s.profile);
                TransportOptions topt = make_transport_options(s.cfg);
                topt.with_mean_amps = false;
                topt.with_moments = false;
                TransportLedger led = chain_sectors(s.layout, s.profile, s.model,
                                                    make_physics(s.cfg), exc, topt);
                frac[i++] = led.trans_mean_final / led.p0_left;
              }
              d = fmt("fraction(mode 40) = %.6f, fraction(mode 39) = %.6f", frac[0], frac[1]);
              return frac[0] > 0.5 && frac[1] > frac[0];
            });

  delete fig3;
  std::printf("%d of 11 criteria passed\n", 11 - g_failures);
  return g_failures;
}
