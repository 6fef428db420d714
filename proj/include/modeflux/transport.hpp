#pragma once

#include <functional>
#include <span>

#include "modeflux/coupling.hpp"
#include "modeflux/geometry.hpp"
#include "modeflux/mat.hpp"
#include "modeflux/ode.hpp"

namespace modeflux {

struct PhysicsParams {
  double k = 2 * M_PI;
  double sigma = 0;
  double epsilon = 1e-3;
  double curvature = 0;  // axis curvature, constant in scaled units
};

struct Excitation {
  enum class Kind { PointSource, SingleMode };
  Kind kind = Kind::PointSource;
  Complex f{1.0, 0.0};   // point-source signal
  double rho_star = 0;   // transverse source position, |rho*| < D(0)/2
  int mode_index = 1;    // SingleMode
  Complex amplitude{1.0, 0.0};
};

struct SourceAmplitudes {
  std::vector<Complex> b;  // left-going initial amplitudes at z = 0-
  std::vector<Complex> a;  // right-going jumps at z = 0+
};

// b_{j,o} = -f y_j(rho*, 0) / (2 i sqrt(beta_j)), a_{j,o} = +f y_j / (2 i sqrt(beta_j)).
SourceAmplitudes source_amplitudes(const Excitation& exc, double k, double d0, int n0);

// Per-z coefficient assembly for a fixed mode count, bound to a profile and
// a correlation model.
class CoefficientProvider {
 public:
  CoefficientProvider(PhysicsParams phys, const WidthProfile* profile,
                      const CorrelationModel* model, CouplingOptions copt = {});

  void fill_gc(double z, int n, Mat& out) const;
  CouplingSet coupling_at(double z, int n, unsigned parts) const;
  // d<b_j>/ds = -q_j <b_j> with s the travel distance away from the source;
  // q_j = [ (g0_jj - gc_jj) - i (gs_jj + 2 kappa_j) ] / 2.
  std::vector<Complex> mean_decay_rates(double z, int n) const;

  const PhysicsParams& physics() const { return phys_; }
  const WidthProfile& profile() const { return *profile_; }
  const CorrelationModel& model() const { return *model_; }
  const CouplingOptions& coupling_options() const { return copt_; }

 private:
  PhysicsParams phys_;
  const WidthProfile* profile_;
  const CorrelationModel* model_;
  CouplingOptions copt_;
};

// Piecewise-Chebyshev proxy of the mean decay rates over one sector. Panels
// are graded toward turning-point collars, where the rates steepen like the
// inverse distance to the turning point.
class MeanRateTable {
 public:
  static MeanRateTable build(const CoefficientProvider& prov, int n, double z_lo,
                             double z_hi, bool grade_lo, bool grade_hi,
                             int nodes_per_panel = 14);
  void rates(double z, std::vector<Complex>& out) const;
  int n_modes() const { return n_; }

 private:
  int n_ = 0;
  std::vector<double> panel_lo_, panel_hi_;
  std::vector<std::vector<Complex>> values_;  // [panel][node * n + mode]
  std::vector<double> cheb_x_;                // nodes on [-1, 1]
  std::vector<double> cheb_w_;                // barycentric weights
};

// The three moment systems of one sector. The wave travels from z_begin to
// z_end (either direction); trajectories are sampled on `grid`, which must be
// monotone from z_begin toward z_end.
using GridSinkP = std::function<void(int, double, const double*)>;

void evolve_mean_powers(const CoefficientProvider& prov, int n, std::vector<double>& p,
                        double z_begin, double z_end, std::span<const double> grid,
                        const GridSinkP& sink, const OdeOptions& opt);

// Packed symmetric second moments (see packed_index).
void evolve_second_moments(const CoefficientProvider& prov, int n, std::vector<double>& m,
                           double z_begin, double z_end, std::span<const double> grid,
                           const GridSinkP& sink, const OdeOptions& opt);

void evolve_mean_amplitudes(const MeanRateTable& rates, std::vector<Complex>& b,
                            double z_begin, double z_end, std::span<const double> grid,
                            const std::function<void(int, double, const Complex*)>& sink,
                            const OdeOptions& opt);

struct TransportOptions {
  OdeOptions ode{};                     // rtol 1e-10, atol 1e-14 defaults
  int output_grid = 200;
  double delta_collar = 0;              // 0 -> 10 epsilon^{2/3}
  CouplingOptions coupling{};
  bool with_mean_amps = true;
  bool with_moments = true;
  double conservation_rtol = 1e-8;
  double moment_conservation_rtol = 1e-6;
  double negative_power_rtol = 1e-10;
};

struct SectorTrace {
  int index = 0;            // 0 = adjacent to the source
  bool left_side = true;    // z < 0 chain
  int n_modes = 0;
  double z_left = 0, z_right = 0;
  double z_int_left = 0, z_int_right = 0;  // integration range, collar excluded
  std::vector<double> grid;                // from the sector entry outward
  std::vector<std::vector<Complex>> mean_amps;   // [grid][mode]
  std::vector<std::vector<double>> powers;       // [grid][mode]
  std::vector<std::vector<double>> moments;      // [grid][packed]
  double entry_total_power = 0;
  double trans_mean = 0;    // transmitted power carried by this sector
  double trans_std = 0;
};

struct ReflectionEntry {
  double z = 0;
  int mode = 0;
  double mean_power = 0;
  double variance = 0;
};

struct TransportLedger {
  SourceAmplitudes source;
  double p0_left = 0, p0_right = 0;
  std::vector<SectorTrace> left, right;
  std::vector<ReflectionEntry> reflections;
  double trans_mean_final = 0, trans_std_final = 0;
  double refl_mean = 0, refl_std = 0;
  double global_balance_residual_rel = 0;
};

TransportLedger chain_sectors(const SectorLayout& layout, const WidthProfile& profile,
                              const CorrelationModel& model, const PhysicsParams& phys,
                              const Excitation& exc, const TransportOptions& opt = {});

struct RightSummary {
  double mean = 0;
  bool anticipated = true;  // relies on the uniform-reflection-phase heuristic
};

RightSummary right_power_summary(const TransportLedger& ledger);

}  // namespace modeflux
