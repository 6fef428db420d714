#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "modeflux/errors.hpp"
#include "modeflux/modes.hpp"
#include "modeflux/montecarlo.hpp"

using namespace modeflux;

namespace {

struct Toy {
  WidthProfile profile = WidthProfile::piecewise_linear({0.0}, {2.62});
  CorrelationModel model = CorrelationModel::gaussian();
  PhysicsParams phys{2 * M_PI, std::sqrt(0.02), 1e-3, 0.0};
  McContext ctx{phys, &profile, &model};

  McConfig cfg() const {
    McConfig c;
    c.epsilon = phys.epsilon;
    c.n_trajectories = 64;
    c.seed = 99;
    c.z_left = -1.0;
    c.z_right = 0.0;
    c.n_modes = 5;
    c.n_checkpoints = 10;
    return c;
  }

  std::vector<Complex> b0() const {
    Excitation exc;
    exc.rho_star = 2.62 / 7;
    return source_amplitudes(exc, phys.k, 2.62, 5).b;
  }

  NoisePath path(const McConfig& c, uint64_t seed) const {
    double step = c.step > 0 ? c.step : c.epsilon / 10;
    double dz = step / (2 * c.epsilon);
    return synthesize_path(model, c.z_left / c.epsilon - 4 * dz,
                           c.z_right / c.epsilon + 4 * dz, dz, seed);
  }
};

}  // namespace

TEST_CASE("mc config validation") {
  Toy toy;
  McConfig c = toy.cfg();
  c.step = c.epsilon;  // too coarse for the fast scale
  CHECK_THROWS_AS(validate(c), ValidationError);
  c = toy.cfg();
  c.n_trajectories = 1;
  CHECK_THROWS_AS(validate(c), ValidationError);
  c = toy.cfg();
  c.epsilon = 0.3;
  CHECK_THROWS_AS(validate(c), ValidationError);
}

TEST_CASE("upsilon assembly") {
  Toy toy;
  McConfig c = toy.cfg();
  NoisePath path = toy.path(c, 5);
  std::vector<double> phases(5, 0.0);
  std::vector<Complex> ups;

  SUBCASE("sigma = 0 with all flags off gives the zero matrix") {
    McContext ctx = toy.ctx;
    ctx.phys.sigma = 0.0;
    assemble_upsilon_bb(ctx, c, -0.5, path, path.n / 2, phases, ups);
    for (auto v : ups) CHECK(std::abs(v) == 0.0);
  }

  SUBCASE("zero noise with slow terms on leaves the deterministic entries") {
    // a varying profile so theta_o is nonzero
    WidthProfile ramp = WidthProfile::linear_ramp_with_cubic_caps(-10.0, 0.0, 1.28, 1.30,
                                                                  1.279, 1.301, 0.1);
    McContext ctx{PhysicsParams{2 * M_PI, 0.0, 1e-3, 0.002}, &ramp, &toy.model};
    McConfig c2 = toy.cfg();
    c2.n_modes = 2;
    c2.include_slow_terms = true;
    NoisePath zero = path;
    std::fill(zero.nu.begin(), zero.nu.end(), 0.0);
    std::fill(zero.nu1.begin(), zero.nu1.end(), 0.0);
    std::fill(zero.nu2.begin(), zero.nu2.end(), 0.0);
    std::vector<double> ph(2, 0.0);
    double z = -5.0;
    assemble_upsilon_bb(ctx, c2, z, zero, zero.n / 2, ph, ups);
    auto pe = ramp.evaluate(z);
    auto [go, to] = slow_coupling(1, 2, 2 * M_PI, pe.d, pe.d_prime, 0.002);
    double b1 = beta_propagating(2 * M_PI, 1, pe.d);
    double b2 = beta_propagating(2 * M_PI, 2, pe.d);
    Complex expect = Complex(0, 1) / (2.0 * std::sqrt(b1 * b2)) * Complex(go, -b2 * to);
    CHECK(std::abs(ups[1] - expect) < 1e-14);
    CHECK(std::abs(ups[0]) == 0.0);  // diagonal carries only noise terms
  }
}

TEST_CASE("trajectory integration") {
  Toy toy;
  SUBCASE("sigma = 0 keeps the amplitudes constant") {
    McContext ctx = toy.ctx;
    ctx.phys.sigma = 0.0;
    McConfig c = toy.cfg();
    NoisePath path = toy.path(c, 7);
    auto b0 = toy.b0();
    TrajectoryRecord rec = integrate_trajectory(ctx, c, b0, path);
    for (int j = 0; j < 5; ++j)
      CHECK(std::abs(rec.amps[9 * 5 + j] - b0[j]) < 1e-12);
    CHECK(rec.conservation_drift < 1e-12);
  }

  SUBCASE("fixed seed is bit-identical") {
    McConfig c = toy.cfg();
    NoisePath path = toy.path(c, 11);
    auto b0 = toy.b0();
    TrajectoryRecord r1 = integrate_trajectory(toy.ctx, c, b0, path);
    TrajectoryRecord r2 = integrate_trajectory(toy.ctx, c, b0, path);
    for (size_t i = 0; i < r1.amps.size(); ++i) CHECK(r1.amps[i] == r2.amps[i]);
  }

  SUBCASE("deterministic slow coupling nearly conserves power") {
    WidthProfile ramp = WidthProfile::linear_ramp_with_cubic_caps(-10.0, 0.0, 1.295, 1.305,
                                                                  1.2949, 1.3051, 0.1);
    McContext ctx{PhysicsParams{2 * M_PI, 0.0, 1e-3, 0.0}, &ramp, &toy.model};
    McConfig c = toy.cfg();
    c.n_modes = 2;
    c.z_left = -1.0;
    c.z_right = 0.0;
    c.include_slow_terms = true;
    NoisePath path = toy.path(c, 13);
    std::vector<Complex> b0{{1.0, 0.0}, {0.5, 0.5}};
    TrajectoryRecord rec = integrate_trajectory(ctx, c, b0, path);
    CHECK(rec.conservation_drift < 1e-6);
  }

  SUBCASE("noise-path coverage is enforced") {
    McConfig c = toy.cfg();
    NoisePath path = toy.path(c, 17);
    path.n /= 4;  // truncate the grid
    path.nu.resize(path.n);
    path.nu1.resize(path.n);
    path.nu2.resize(path.n);
    path.nu3.resize(path.n);
    CHECK_THROWS_AS(integrate_trajectory(toy.ctx, c, toy.b0(), path), NumericalError);
  }
}

TEST_CASE("ensemble statistics") {
  Toy toy;
  SUBCASE("n = 2 with sigma = 0 gives zero-variance stats equal to the deterministic run") {
    McContext ctx = toy.ctx;
    ctx.phys.sigma = 0.0;
    McConfig c = toy.cfg();
    c.n_trajectories = 2;
    auto b0 = toy.b0();
    EnsembleStats st = run_ensemble(ctx, c, b0);
    for (int j = 0; j < 5; ++j) {
      CHECK(std::abs(st.mean_amp[9 * 5 + j] - b0[j]) < 1e-12);
      CHECK(st.var_power[9 * 5 + j] == 0.0);
      CHECK(st.se_power[9 * 5 + j] == 0.0);
    }
  }

  SUBCASE("reduction is identical across thread counts") {
    McConfig c = toy.cfg();
    c.n_trajectories = 12;
    c.n_threads = 1;
    EnsembleStats s1 = run_ensemble(toy.ctx, c, toy.b0());
    c.n_threads = 4;
    EnsembleStats s4 = run_ensemble(toy.ctx, c, toy.b0());
    for (size_t i = 0; i < s1.mean_power.size(); ++i) {
      CHECK(s1.mean_power[i] == s4.mean_power[i]);
      CHECK(s1.mean_amp[i] == s4.mean_amp[i]);
    }
  }
}

TEST_CASE("comparison against the moment system") {
  Toy toy;
  SUBCASE("identical inputs give zero z-scores") {
    McConfig c = toy.cfg();
    c.n_trajectories = 16;
    EnsembleStats st = run_ensemble(toy.ctx, c, toy.b0());
    MomentPrediction pred;
    pred.z = st.z_checkpoints;
    pred.mean_power = st.mean_power;
    pred.var_power = st.var_power;
    pred.sum_var = st.sum_var;
    CompareReport rep = compare_to_moments(st, pred);
    CHECK(rep.max_abs_z_mean == 0.0);
    CHECK(rep.max_abs_z_sum_var == 0.0);
    CHECK(rep.pass);
  }

  SUBCASE("grid mismatch is rejected") {
    McConfig c = toy.cfg();
    c.n_trajectories = 4;
    EnsembleStats st = run_ensemble(toy.ctx, c, toy.b0());
    MomentPrediction pred;
    pred.z = st.z_checkpoints;
    pred.z[3] += 0.01;
    pred.mean_power = st.mean_power;
    pred.var_power = st.var_power;
    pred.sum_var = st.sum_var;
    CHECK_THROWS_AS(compare_to_moments(st, pred), ValidationError);
  }

  SUBCASE("nominal run passes, a corrupted coupling matrix fails with growing scores") {
    McConfig c = toy.cfg();
    c.epsilon = 5e-3;
    c.n_trajectories = 2400;
    auto b0 = toy.b0();
    EnsembleStats st = run_ensemble(toy.ctx, c, b0);
    MomentPrediction good = predict_moments(toy.ctx, c, b0);
    CompareReport rep = compare_to_moments(st, good);
    CHECK(rep.max_abs_z_mean < 4.0);  // loose gate for the small ensemble

    // corrupt one symmetric coupling pair (x2) and rebuild the mean prediction
    // with an independent fixed-step integrator
    CouplingSet set = coupling_set(toy.phys.k, toy.phys.sigma, toy.model, 2.62, 5);
    Mat bad = set.gc;
    bad(3, 4) *= 2.0;
    bad(4, 3) *= 2.0;
    bad(3, 3) -= bad(3, 4) / 2.0;  // keep rows summing to zero
    bad(4, 4) -= bad(4, 3) / 2.0;
    MomentPrediction corrupted = good;
    {
      std::vector<double> p(5);
      for (int j = 0; j < 5; ++j) p[j] = std::norm(b0[j]);
      double z = 0;
      const double h = -1e-3;
      std::vector<double> k1(5), tmp(5), k2(5), k3(5), k4(5);
      auto rhs = [&](const std::vector<double>& y, std::vector<double>& dy) {
        for (int i = 0; i < 5; ++i) {
          double acc = 0;
          for (int l = 0; l < 5; ++l) acc += bad(i, l) * y[l];
          dy[i] = -acc;
        }
      };
      for (size_t ck = 0; ck < corrupted.z.size(); ++ck) {
        while (z > corrupted.z[ck] + 1e-12) {
          double hh = std::max(corrupted.z[ck] - z, h);
          rhs(p, k1);
          for (int i = 0; i < 5; ++i) tmp[i] = p[i] + 0.5 * hh * k1[i];
          rhs(tmp, k2);
          for (int i = 0; i < 5; ++i) tmp[i] = p[i] + 0.5 * hh * k2[i];
          rhs(tmp, k3);
          for (int i = 0; i < 5; ++i) tmp[i] = p[i] + hh * k3[i];
          rhs(tmp, k4);
          for (int i = 0; i < 5; ++i)
            p[i] += hh / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
          z += hh;
        }
        for (int j = 0; j < 5; ++j) corrupted.mean_power[ck * 5 + j] = p[j];
      }
    }
    CompareReport bad_rep = compare_to_moments(st, corrupted);
    CHECK(!bad_rep.pass);
    // systematic growth of the worst mean z-score along the sector
    auto worst_at = [&](int ck) {
      double w = 0;
      for (int j = 0; j < 5; ++j)
        w = std::max(w, std::abs(bad_rep.z_mean[static_cast<size_t>(ck) * 5 + j]));
      return w;
    };
    CHECK(worst_at(9) > worst_at(2));
    CHECK(worst_at(9) > 3.0);

    // empirical decay rate of the mean amplitude of the fastest mode against
    // (g0_jj - gc_jj)/2, by regression of log|<b_5>| over the checkpoints
    // where the predicted mean is still well above the noise
    double rate_pred = 0;
    {
      CouplingSet full = coupling_set(toy.phys.k, toy.phys.sigma, toy.model, 2.62, 5);
      rate_pred = 0.5 * (full.g0(4, 4) - full.gc(4, 4));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int npts = 0;
    double b5o = std::abs(b0[4]);
    for (size_t ck = 0; ck < st.z_checkpoints.size(); ++ck) {
      double s = -st.z_checkpoints[ck];  // travel distance
      if (std::exp(-rate_pred * s) < 0.2) break;
      double y = std::log(std::abs(st.mean_amp[ck * 5 + 4]) / b5o);
      sx += s;
      sy += y;
      sxx += s * s;
      sxy += s * y;
      ++npts;
    }
    REQUIRE(npts >= 4);
    double slope = (npts * sxy - sx * sy) / (npts * sxx - sx * sx);
    CHECK(std::abs(-slope - rate_pred) < 0.10 * rate_pred);
  }
}

TEST_CASE("quadratic noise corrections integrate and stay near-conservative") {
  Toy toy;
  McConfig c = toy.cfg();
  c.include_sigma2_terms = true;
  NoisePath path = toy.path(c, 23);
  TrajectoryRecord rec = integrate_trajectory(toy.ctx, c, toy.b0(), path);
  double p0 = 0;
  for (auto v : toy.b0()) p0 += std::norm(v);
  CHECK(rec.conservation_drift < 0.2 * p0);  // O(sqrt(eps)) leakage scale
}

TEST_CASE("varying opening: ensemble still matches the moment system") {
  // slow ramp without a turning point; the per-step phase quadrature and the
  // z-dependent coupling matrices both come into play
  WidthProfile ramp = WidthProfile::linear_ramp_with_cubic_caps(-1.0, 0.0, 2.55, 2.62,
                                                                2.5499, 2.6201, 0.01);
  CorrelationModel model = CorrelationModel::gaussian();
  PhysicsParams phys{2 * M_PI, std::sqrt(0.02), 5e-3, 0.0};
  McContext ctx{phys, &ramp, &model};
  Excitation exc;
  exc.rho_star = 2.62 / 7;
  auto b0 = source_amplitudes(exc, phys.k, 2.62, 5).b;
  McConfig c;
  c.epsilon = 5e-3;
  c.n_trajectories = 600;
  c.seed = 424242;
  c.z_left = -1.0;
  c.z_right = 0.0;
  c.n_modes = 5;
  c.n_checkpoints = 5;
  EnsembleStats st = run_ensemble(ctx, c, b0);
  MomentPrediction pred = predict_moments(ctx, c, b0);
  CompareReport rep = compare_to_moments(st, pred);
  INFO("max |z_mean| = ", rep.max_abs_z_mean);
  CHECK(rep.max_abs_z_mean < 3.5);
}

TEST_CASE("halving the step leaves the means within the sampling noise") {
  // the two ensembles draw independent paths, so the difference of the means
  // carries sqrt(2) of one-run noise; any step bias would push it beyond
  Toy toy;
  McConfig c = toy.cfg();
  c.epsilon = 1e-2;
  c.n_trajectories = 160;
  auto b0 = toy.b0();
  EnsembleStats coarse = run_ensemble(toy.ctx, c, b0);
  c.step = c.epsilon / 20;
  c.seed = c.seed + 1;
  EnsembleStats fine = run_ensemble(toy.ctx, c, b0);
  double chi2 = 0;
  for (size_t i = 0; i < coarse.mean_power.size(); ++i) {
    double se = std::hypot(coarse.se_power[i], fine.se_power[i]);
    double zd = (coarse.mean_power[i] - fine.mean_power[i]) / std::max(se, 1e-300);
    CHECK(std::abs(zd) <= 3.5);
    chi2 += zd * zd;
  }
  CHECK(chi2 / coarse.mean_power.size() < 2.0);
}
