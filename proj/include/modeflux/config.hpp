#pragma once

#include <string>
#include <vector>

#include "modeflux/correlation.hpp"
#include "modeflux/geometry.hpp"
#include "modeflux/montecarlo.hpp"
#include "modeflux/transport.hpp"

namespace modeflux {

// Run configuration, INI-style sections. All lengths are in wavelengths;
// k defaults to 2 pi so that one wavelength is one unit.
struct RunConfig {
  struct Geometry {
    std::string profile = "linear-ramp-with-cubic-caps";
    double z_start = -1, z_end = 0;
    double d_start = 0, d_end = 0;
    double flat_left = 0, flat_right = 0;
    double cap_width = 0.2;
    double d = 0;  // constant profile shorthand
    std::vector<double> knot_z, knot_d;
    std::string profile_file;
    double z_max = 0;
    bool operator==(const Geometry&) const = default;
  } geometry;

  struct Physics {
    double k = 2 * M_PI;
    double sigma = -1;  // required
    double epsilon = 1e-3;
    std::string correlation = "gaussian";
    std::string spectrum_file;
    bool operator==(const Physics&) const = default;
  } physics;

  struct Source {
    std::string kind = "point";
    double f_re = 1, f_im = 0;
    double rho_star = 0;
    double rho_fraction = 0;  // rho* = fraction * D(0) when nonzero
    int mode_index = 0;
    double amplitude_re = 1, amplitude_im = 0;
    bool operator==(const Source&) const = default;
  } source;

  struct Numerics {
    double ode_rtol = 1e-10;
    double ode_atol = 1e-14;
    double delta_collar = 0;  // 0 -> 10 epsilon^{2/3}
    int evanescent_cutoff = 200;
    int output_grid = 200;
    double beta_floor_frac = 1e-6;
    double source_margin = 1e-6;
    double fsc_threshold = 1e-3;
    bool clip_noise = false;
    double curvature = 0;
    bool operator==(const Numerics&) const = default;
  } numerics;

  struct Mc {
    int n_trajectories = 2000;
    double step = 0;  // 0 -> epsilon/10
    uint64_t seed = 1;
    bool include_sigma2_terms = false;
    bool include_slow_terms = false;
    double z_left = 0, z_right = 0;  // both zero -> first left sector
    int n_checkpoints = 10;
    int threads = 0;
    bool operator==(const Mc&) const = default;
  } mc;

  struct Output {
    std::string dir = "out";
    bool operator==(const Output&) const = default;
  } output;

  bool operator==(const RunConfig&) const = default;
};

// Parse the documented key-value schema. Unknown sections or keys are errors;
// every invariant is checked.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& cfg);

// Materialize the domain objects described by a config. The config directory
// is used to resolve relative file references.
WidthProfile make_profile(const RunConfig& cfg, const std::string& base_dir = ".");
CorrelationModel make_model(const RunConfig& cfg, const std::string& base_dir = ".");
Excitation make_excitation(const RunConfig& cfg, const WidthProfile& profile);
PhysicsParams make_physics(const RunConfig& cfg);
TransportOptions make_transport_options(const RunConfig& cfg);
McConfig make_mc_config(const RunConfig& cfg, const SectorLayout& layout);

// Two-column CSV helpers (header row optional).
std::pair<std::vector<double>, std::vector<double>> load_two_column_csv(
    const std::string& path);

}  // namespace modeflux
