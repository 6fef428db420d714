#pragma once

#include <cstdint>
#include <vector>

#include "modeflux/correlation.hpp"
#include "modeflux/geometry.hpp"
#include "modeflux/mat.hpp"
#include "modeflux/transport.hpp"

namespace modeflux {

struct McConfig {
  double epsilon = 1e-3;
  int n_trajectories = 2000;
  double step = 0;  // 0 -> epsilon / 10; must resolve the fast scale
  uint64_t seed = 1;
  bool include_sigma2_terms = false;  // quadratic noise corrections (phases)
  bool include_slow_terms = false;    // deterministic gamma_o / theta_o coupling
  double z_left = -1.0, z_right = 0.0;
  int n_modes = 0;
  int n_checkpoints = 10;
  bool clip_noise = false;
  int n_threads = 0;  // 0 -> hardware, or MODEFLUX_THREADS
};

void validate(const McConfig& cfg);

struct McContext {
  PhysicsParams phys;
  const WidthProfile* profile = nullptr;
  const CorrelationModel* model = nullptr;
};

// One-sided pre-limit coupling matrix for the left-going amplitudes at arc
// length z; `phases` holds the accumulated beta integrals from the source and
// `path_index` the aligned sample of the noise path. Entries follow the
// conjugated convention of the b-block.
void assemble_upsilon_bb(const McContext& ctx, const McConfig& cfg, double z,
                         const NoisePath& path, long path_index,
                         const std::vector<double>& phases, std::vector<Complex>& out);

struct TrajectoryRecord {
  std::vector<double> z_checkpoints;
  std::vector<Complex> amps;  // [checkpoint * n_modes + mode]
  double conservation_drift = 0;
};

// Fixed-step RK4 on the slow envelope with exact phase bookkeeping; stage
// abscissae land on the noise-path grid by construction.
TrajectoryRecord integrate_trajectory(const McContext& ctx, const McConfig& cfg,
                                      const std::vector<Complex>& b_init,
                                      const NoisePath& path);

struct EnsembleStats {
  std::vector<double> z_checkpoints;
  int n_modes = 0;
  int n_trajectories = 0;
  // [checkpoint * n_modes + mode]
  std::vector<Complex> mean_amp;
  std::vector<double> se_amp;
  std::vector<double> mean_power, se_power;
  std::vector<double> var_power, se_var_power;
  std::vector<std::vector<double>> cov_power;  // per checkpoint, packed symmetric
  std::vector<double> sum_var, se_sum_var;     // per checkpoint
  double max_conservation_drift = 0;
};

EnsembleStats run_ensemble(const McContext& ctx, const McConfig& cfg,
                           const std::vector<Complex>& b_init);

struct MomentPrediction {
  std::vector<double> z;
  std::vector<double> mean_power;  // [checkpoint * n_modes + mode]
  std::vector<double> var_power;   // [checkpoint * n_modes + mode]
  std::vector<double> sum_var;     // per checkpoint
};

// Transport-module moments evaluated on the Monte Carlo checkpoints.
MomentPrediction predict_moments(const McContext& ctx, const McConfig& cfg,
                                 const std::vector<Complex>& b_init,
                                 const OdeOptions& opt = {});

struct CompareReport {
  std::vector<double> z;
  std::vector<double> z_mean;     // [checkpoint * n_modes + mode]
  std::vector<double> z_var;      // [checkpoint * n_modes + mode]
  std::vector<double> z_sum_var;  // per checkpoint
  double max_abs_z_mean = 0;
  double max_abs_z_sum_var = 0;
  int n_comparisons = 0;
  bool pass = false;  // every score within 3 sigma
  std::string note;
};

CompareReport compare_to_moments(const EnsembleStats& stats, const MomentPrediction& pred);

}  // namespace modeflux
