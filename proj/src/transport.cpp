#include "modeflux/transport.hpp"

#include <algorithm>
#include <cmath>

#include "modeflux/errors.hpp"
#include "modeflux/kernels.hpp"
#include "modeflux/modes.hpp"

namespace modeflux {

SourceAmplitudes source_amplitudes(const Excitation& exc, double k, double d0, int n0) {
  if (n0 < 1) throw ValidationError("InvalidModeCount", "need at least one mode");
  SourceAmplitudes out;
  out.b.assign(n0, Complex(0, 0));
  out.a.assign(n0, Complex(0, 0));
  if (exc.kind == Excitation::Kind::SingleMode) {
    if (exc.mode_index < 1 || exc.mode_index > n0)
      throw ValidationError("InvalidModeIndex", "excited mode outside propagating range");
    out.b[exc.mode_index - 1] = exc.amplitude;
    return out;
  }
  if (std::abs(exc.rho_star) >= d0 / 2)
    throw ValidationError("SourceOutsideGuide", "|rho*| must be below D(0)/2");
  const Complex two_i(0, 2);
  for (int j = 1; j <= n0; ++j) {
    double yj = eigenfunction(j, exc.rho_star, d0);
    Complex v = exc.f * yj / (two_i * std::sqrt(beta_propagating(k, j, d0)));
    out.b[j - 1] = -v;
    out.a[j - 1] = v;
  }
  return out;
}

CoefficientProvider::CoefficientProvider(PhysicsParams phys, const WidthProfile* profile,
                                         const CorrelationModel* model, CouplingOptions copt)
    : phys_(phys), profile_(profile), model_(model), copt_(copt) {}

void CoefficientProvider::fill_gc(double z, int n, Mat& out) const {
  CouplingSet set =
      coupling_set(phys_.k, phys_.sigma, *model_, profile_->evaluate(z).d, n, copt_, kPartGc);
  out = std::move(set.gc);
}

CouplingSet CoefficientProvider::coupling_at(double z, int n, unsigned parts) const {
  CouplingSet set =
      coupling_set(phys_.k, phys_.sigma, *model_, profile_->evaluate(z).d, n, copt_, parts);
  set.z = z;
  return set;
}

std::vector<Complex> CoefficientProvider::mean_decay_rates(double z, int n) const {
  CouplingSet set = coupling_at(z, n, kPartGc | kPartG0 | kPartGs | kPartKappa);
  std::vector<Complex> q(n);
  for (int i = 0; i < n; ++i)
    q[i] = 0.5 * Complex(set.g0(i, i) - set.gc(i, i),
                         -(set.gs(i, i) + 2.0 * set.kappa[i]));
  return q;
}

MeanRateTable MeanRateTable::build(const CoefficientProvider& prov, int n, double z_lo,
                                   double z_hi, bool grade_lo, bool grade_hi,
                                   int nodes_per_panel) {
  if (!(z_hi > z_lo)) throw ValidationError("InvalidArgument", "need z_hi > z_lo");
  MeanRateTable t;
  t.n_ = n;
  const int m = nodes_per_panel;
  t.cheb_x_.resize(m);
  t.cheb_w_.resize(m);
  for (int i = 0; i < m; ++i) {
    t.cheb_x_[i] = std::cos(M_PI * (2.0 * i + 1.0) / (2.0 * m));  // Chebyshev 1st kind
    t.cheb_w_[i] = ((i % 2) ? -1.0 : 1.0) * std::sin(M_PI * (2.0 * i + 1.0) / (2.0 * m));
  }

  // Panels graded geometrically toward collar edges, where rates steepen like
  // the inverse distance to the turning point just outside the domain.
  std::vector<double> edges{0.0, 0.5, 1.0};
  if (grade_lo)
    for (double g = 1e-3; g < 0.5; g *= 3.0) edges.push_back(g);
  if (grade_hi)
    for (double g = 1e-3; g < 0.5; g *= 3.0) edges.push_back(1.0 - g);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  const double len = z_hi - z_lo;
  for (size_t p = 0; p + 1 < edges.size(); ++p) {
    double a = z_lo + edges[p] * len;
    double b = z_lo + edges[p + 1] * len;
    t.panel_lo_.push_back(a);
    t.panel_hi_.push_back(b);
    std::vector<Complex> vals(static_cast<size_t>(m) * n);
    for (int i = 0; i < m; ++i) {
      double z = 0.5 * (a + b) + 0.5 * (b - a) * t.cheb_x_[i];
      std::vector<Complex> q = prov.mean_decay_rates(z, n);
      for (int j = 0; j < n; ++j) vals[static_cast<size_t>(i) * n + j] = q[j];
    }
    t.values_.push_back(std::move(vals));
  }
  return t;
}

void MeanRateTable::rates(double z, std::vector<Complex>& out) const {
  out.assign(n_, Complex(0, 0));
  size_t p = 0;
  while (p + 1 < panel_lo_.size() && z > panel_hi_[p]) ++p;
  double a = panel_lo_[p], b = panel_hi_[p];
  double x = std::clamp(2.0 * (z - a) / (b - a) - 1.0, -1.0, 1.0);
  const int m = static_cast<int>(cheb_x_.size());
  const auto& vals = values_[p];
  // barycentric interpolation
  double denom = 0.0;
  std::vector<double> c(m);
  for (int i = 0; i < m; ++i) {
    double dx = x - cheb_x_[i];
    if (std::abs(dx) < 1e-14) {
      for (int j = 0; j < n_; ++j) out[j] = vals[static_cast<size_t>(i) * n_ + j];
      return;
    }
    c[i] = cheb_w_[i] / dx;
    denom += c[i];
  }
  for (int i = 0; i < m; ++i) {
    double w = c[i] / denom;
    for (int j = 0; j < n_; ++j) out[j] += w * vals[static_cast<size_t>(i) * n_ + j];
  }
}

namespace {

// Travel-direction sign: -1 when the wave moves toward decreasing z.
inline double direction_sign(double z_begin, double z_end) {
  return (z_end > z_begin) ? 1.0 : -1.0;
}

}  // namespace

void evolve_mean_powers(const CoefficientProvider& prov, int n, std::vector<double>& p,
                        double z_begin, double z_end, std::span<const double> grid,
                        const GridSinkP& sink, const OdeOptions& opt) {
  if (static_cast<int>(p.size()) != n)
    throw ValidationError("InvalidArgument", "initial power size mismatch");
  for (double v : p)
    if (v < 0) throw ValidationError("InvalidArgument", "initial powers must be >= 0");
  const double dir = direction_sign(z_begin, z_end);
  Mat gc;
  auto rhs = [&](double z, const double* y, double* dy) {
    prov.fill_gc(z, n, gc);
    kernels::active().dgemv(n, gc.data(), y, dy);
    for (int i = 0; i < n; ++i) dy[i] *= dir;
  };
  Dopri5 solver(n, rhs, opt);
  solver.integrate(p, z_begin, z_end, grid, sink);
}

void evolve_second_moments(const CoefficientProvider& prov, int n, std::vector<double>& m,
                           double z_begin, double z_end, std::span<const double> grid,
                           const GridSinkP& sink, const OdeOptions& opt) {
  const int np = packed_size(n);
  if (static_cast<int>(m.size()) != np)
    throw ValidationError("InvalidArgument", "initial moment size mismatch");
  const double dir = direction_sign(z_begin, z_end);
  Mat gc;
  std::vector<double> full(static_cast<size_t>(n) * n), prod(static_cast<size_t>(n) * n);
  auto rhs = [&](double z, const double* y, double* dy) {
    prov.fill_gc(z, n, gc);
    unpack_symmetric(n, y, full.data());
    kernels::active().dgemm(n, gc.data(), full.data(), prod.data());
    // dM/ds = -[2 gc o M - T - T^t - 2 diag(T)], T = gc M; the diagonal rows
    // carry the doubled relaxation of the squared powers.
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double t_ij = prod[static_cast<size_t>(i) * n + j];
        double t_ji = prod[static_cast<size_t>(j) * n + i];
        double v = 2.0 * gc(i, j) * full[static_cast<size_t>(i) * n + j] - t_ij - t_ji;
        if (i == j) v -= 2.0 * t_ij;
        dy[packed_index(n, i, j)] = -dir * v;
      }
  };
  Dopri5 solver(np, rhs, opt);
  solver.integrate(m, z_begin, z_end, grid, sink);
}

void evolve_mean_amplitudes(const MeanRateTable& rates, std::vector<Complex>& b,
                            double z_begin, double z_end, std::span<const double> grid,
                            const std::function<void(int, double, const Complex*)>& sink,
                            const OdeOptions& opt) {
  const int n = rates.n_modes();
  if (static_cast<int>(b.size()) != n)
    throw ValidationError("InvalidArgument", "initial amplitude size mismatch");
  const double dir = direction_sign(z_begin, z_end);
  std::vector<Complex> q(n);
  auto rhs = [&](double z, const double* y, double* dy) {
    rates.rates(z, q);
    for (int i = 0; i < n; ++i) {
      Complex bi(y[2 * i], y[2 * i + 1]);
      Complex d = -dir * q[i] * bi;
      dy[2 * i] = d.real();
      dy[2 * i + 1] = d.imag();
    }
  };
  std::vector<double> y(2 * n);
  for (int i = 0; i < n; ++i) {
    y[2 * i] = b[i].real();
    y[2 * i + 1] = b[i].imag();
  }
  std::vector<Complex> row(n);
  auto wrap = [&](int gi, double z, const double* yy) {
    for (int i = 0; i < n; ++i) row[i] = Complex(yy[2 * i], yy[2 * i + 1]);
    if (sink) sink(gi, z, row.data());
  };
  Dopri5 solver(2 * n, rhs, opt);
  solver.integrate(y, z_begin, z_end, grid, wrap);
  for (int i = 0; i < n; ++i) b[i] = Complex(y[2 * i], y[2 * i + 1]);
}

namespace {

double packed_total(int n, const std::vector<double>& m) {
  double s = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      s += (i == j ? 1.0 : 2.0) * m[packed_index(n, i, j)];
  return s;
}

struct SectorResult {
  std::vector<Complex> amps;
  std::vector<double> powers;
  std::vector<double> moments;
};

// Run one sector: hold values across the collars, integrate in between,
// sample the trace grid. The grid runs from the entry end outward.
SectorResult run_sector(const CoefficientProvider& prov, SectorTrace& tr,
                        std::vector<Complex> b0, std::vector<double> p0,
                        std::vector<double> m0, const TransportOptions& opt) {
  const int n = tr.n_modes;
  const int ng = static_cast<int>(tr.grid.size());
  const bool leftward = tr.left_side;
  const double z_int_entry = leftward ? tr.z_int_right : tr.z_int_left;
  const double z_int_exit = leftward ? tr.z_int_left : tr.z_int_right;

  auto inside = [&](double z) {
    return leftward ? (z <= z_int_entry && z >= z_int_exit)
                    : (z >= z_int_entry && z <= z_int_exit);
  };
  auto past_exit = [&](double z) {
    return leftward ? (z < z_int_exit) : (z > z_int_exit);
  };

  std::vector<double> inner_grid;
  std::vector<int> inner_to_trace;
  for (int g = 0; g < ng; ++g)
    if (inside(tr.grid[g])) {
      inner_grid.push_back(tr.grid[g]);
      inner_to_trace.push_back(g);
    }

  const bool with_amps = !b0.empty();
  const bool with_moments = !m0.empty();
  if (with_amps) tr.mean_amps.assign(ng, std::vector<Complex>(n));
  tr.powers.assign(ng, std::vector<double>(n));
  if (with_moments) tr.moments.assign(ng, std::vector<double>(packed_size(n)));

  // entry-collar grid points carry the entry values
  for (int g = 0; g < ng; ++g) {
    if (inside(tr.grid[g]) || past_exit(tr.grid[g])) continue;
    if (with_amps) tr.mean_amps[g] = b0;
    tr.powers[g] = p0;
    if (with_moments) tr.moments[g] = m0;
  }

  const double p_total = tr.entry_total_power;
  evolve_mean_powers(
      prov, n, p0, z_int_entry, z_int_exit, inner_grid,
      [&](int gi, double, const double* y) {
        auto& row = tr.powers[inner_to_trace[gi]];
        std::copy(y, y + n, row.begin());
        double s = 0, mn = 0;
        for (int i = 0; i < n; ++i) {
          s += y[i];
          mn = std::min(mn, y[i]);
        }
        if (std::abs(s - p_total) > opt.conservation_rtol * std::max(p_total, 1e-300))
          throw NumericalError("PowerConservationViolated",
                               "sector total mean power drifted by " +
                                   std::to_string(std::abs(s - p_total)));
        if (mn < -opt.negative_power_rtol * std::max(p_total, 1e-300))
          throw NumericalError("NegativePowerBeyondTolerance",
                               "mean power " + std::to_string(mn) + " below tolerance");
      },
      opt.ode);

  if (with_moments) {
    const double m_total = packed_total(n, m0);
    evolve_second_moments(
        prov, n, m0, z_int_entry, z_int_exit, inner_grid,
        [&](int gi, double, const double* y) {
          auto& row = tr.moments[inner_to_trace[gi]];
          std::copy(y, y + packed_size(n), row.begin());
          double s = 0;
          for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j)
              s += (i == j ? 1.0 : 2.0) * y[packed_index(n, i, j)];
          if (std::abs(s - m_total) >
              opt.moment_conservation_rtol * std::max(std::abs(m_total), 1e-300))
            throw NumericalError(
                "SecondMomentConservationViolated",
                "total second moment of the sector power drifted by " +
                    std::to_string(std::abs(s - m_total)) +
                    "; the coupled second-moment system is inconsistent");
        },
        opt.ode);
  }

  if (with_amps) {
    const bool lo_tp = (tr.z_int_left != tr.z_left);
    const bool hi_tp = (tr.z_int_right != tr.z_right);
    MeanRateTable rates = MeanRateTable::build(
        prov, n, std::min(z_int_entry, z_int_exit), std::max(z_int_entry, z_int_exit),
        lo_tp, hi_tp);
    evolve_mean_amplitudes(
        rates, b0, z_int_entry, z_int_exit, inner_grid,
        [&](int gi, double, const Complex* y) {
          std::copy(y, y + n, tr.mean_amps[inner_to_trace[gi]].begin());
        },
        opt.ode);
  }

  // exit-collar grid points carry the exit values
  for (int g = 0; g < ng; ++g) {
    if (!past_exit(tr.grid[g])) continue;
    if (with_amps) tr.mean_amps[g] = b0;
    tr.powers[g] = p0;
    if (with_moments) tr.moments[g] = m0;
  }

  return SectorResult{std::move(b0), std::move(p0), std::move(m0)};
}

std::vector<double> linspace(double a, double b, int m) {
  std::vector<double> g(m);
  for (int i = 0; i < m; ++i) g[i] = a + (b - a) * i / (m - 1);
  g.back() = b;
  return g;
}

}  // namespace

TransportLedger chain_sectors(const SectorLayout& layout, const WidthProfile& profile,
                              const CorrelationModel& model, const PhysicsParams& phys,
                              const Excitation& exc, const TransportOptions& opt) {
  TransportLedger led;
  const double d0 = profile.evaluate(0.0).d;
  led.source = source_amplitudes(exc, layout.k, d0, layout.n0);
  for (auto& v : led.source.b) led.p0_left += std::norm(v);
  for (auto& v : led.source.a) led.p0_right += std::norm(v);

  double delta = opt.delta_collar;
  if (delta <= 0) delta = 10.0 * std::pow(phys.epsilon, 2.0 / 3.0);

  // ---- left chain: b-amplitudes from the source to -z_max
  std::vector<Complex> b(led.source.b);
  std::vector<double> p(layout.n0);
  for (int i = 0; i < layout.n0; ++i) p[i] = std::norm(b[i]);
  std::vector<double> m;  // packed second moments; deterministic start
  if (opt.with_moments) {
    m.assign(packed_size(layout.n0), 0.0);
    for (int i = 0; i < layout.n0; ++i)
      for (int j = i; j < layout.n0; ++j)
        m[packed_index(layout.n0, i, j)] = p[i] * p[j];
  }

  auto sectors = layout.left_sectors();
  CoefficientProvider prov(phys, &profile, &model, opt.coupling);
  for (size_t t = 0; t < sectors.size(); ++t) {
    const auto& sec = sectors[t];
    SectorTrace tr;
    tr.index = static_cast<int>(t);
    tr.left_side = true;
    tr.n_modes = sec.n_modes;
    tr.z_left = sec.z_left;
    tr.z_right = sec.z_right;
    tr.z_int_left = sec.z_left + (sec.left_is_turning_point ? delta : 0.0);
    tr.z_int_right = sec.z_right - (sec.right_is_turning_point ? delta : 0.0);
    if (!(tr.z_int_left < tr.z_int_right))
      throw ValidationError("LayoutMismatch",
                            "sector shorter than twice the turning-point collar");
    tr.grid = linspace(tr.z_right, tr.z_left, opt.output_grid);

    double ptot = 0;
    for (double v : p) ptot += v;
    tr.entry_total_power = ptot;
    tr.trans_mean = ptot;
    if (opt.with_moments) {
      double var = packed_total(sec.n_modes, m) - ptot * ptot;
      tr.trans_std = std::sqrt(std::max(var, 0.0));
    }

    SectorResult res = run_sector(prov, tr, opt.with_mean_amps ? b : std::vector<Complex>{},
                                  p, m, opt);

    if (sec.left_is_turning_point) {
      // turning mode reflects; its power and second-moment row leave the chain
      const int n = sec.n_modes;
      ReflectionEntry re;
      re.z = sec.z_left;
      re.mode = n;
      re.mean_power = res.powers[n - 1];
      if (opt.with_moments)
        re.variance = res.moments[packed_index(n, n - 1, n - 1)] -
                      res.powers[n - 1] * res.powers[n - 1];
      led.reflections.push_back(re);
      led.refl_mean += re.mean_power;

      if (opt.with_mean_amps) res.amps.resize(n - 1);
      res.powers.resize(n - 1);
      if (opt.with_moments) {
        std::vector<double> m2(packed_size(n - 1));
        for (int i = 0; i < n - 1; ++i)
          for (int j = i; j < n - 1; ++j)
            m2[packed_index(n - 1, i, j)] = res.moments[packed_index(n, i, j)];
        res.moments = std::move(m2);
      }
    }
    b = std::move(res.amps);
    p = std::move(res.powers);
    m = std::move(res.moments);
    led.left.push_back(std::move(tr));
  }

  led.trans_mean_final = 0;
  for (double v : p) led.trans_mean_final += v;
  if (opt.with_moments) {
    double var = packed_total(layout.n_min, m) - led.trans_mean_final * led.trans_mean_final;
    led.trans_std_final = std::sqrt(std::max(var, 0.0));
  }
  led.refl_std = led.trans_std_final;  // exact pathwise conservation ties the two
  led.global_balance_residual_rel =
      std::abs(led.refl_mean + led.trans_mean_final - led.p0_left) /
      std::max(led.p0_left, 1e-300);

  // ---- right chain: direct source excitation only; reflected returns are
  // accounted for in the anticipated right-going summary.
  std::vector<double> pr(layout.n0);
  for (int i = 0; i < layout.n0; ++i) pr[i] = std::norm(led.source.a[i]);
  auto rsectors = layout.right_sectors();
  for (size_t t = 0; t < rsectors.size(); ++t) {
    const auto& sec = rsectors[t];
    SectorTrace tr;
    tr.index = static_cast<int>(t);
    tr.left_side = false;
    tr.n_modes = sec.n_modes;
    tr.z_left = sec.z_left;
    tr.z_right = sec.z_right;
    tr.z_int_left = sec.z_left + (sec.left_is_turning_point ? delta : 0.0);
    tr.z_int_right = sec.z_right - (sec.right_is_turning_point ? delta : 0.0);
    if (!(tr.z_int_left < tr.z_int_right))
      throw ValidationError("LayoutMismatch",
                            "sector shorter than twice the turning-point collar");
    tr.grid = linspace(tr.z_left, tr.z_right, opt.output_grid);
    double ptot = 0;
    for (double v : pr) ptot += v;
    tr.entry_total_power = ptot;
    tr.trans_mean = ptot;

    SectorResult res = run_sector(prov, tr, {}, pr, {}, opt);
    pr = std::move(res.powers);
    if (sec.right_is_turning_point) pr.push_back(0.0);  // new turning mode starts empty
    led.right.push_back(std::move(tr));
  }

  return led;
}

RightSummary right_power_summary(const TransportLedger& ledger) {
  RightSummary s;
  s.anticipated = true;
  s.mean = ledger.p0_right + ledger.p0_left - ledger.trans_mean_final;
  return s;
}

}  // namespace modeflux
