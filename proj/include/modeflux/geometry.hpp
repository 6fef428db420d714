#pragma once

#include <vector>

namespace modeflux {

struct ProfileEval {
  double d;        // opening D(z)
  double d_prime;  // dD/dz
};

// Slowly varying opening D(z). Non-decreasing everywhere, strictly increasing
// on the varying region, flat extensions outside it.
class WidthProfile {
 public:
  enum class Kind { LinearRampCubicCaps, PiecewiseLinear, Tabulated };

  // Linear ramp d_start -> d_end on [z_start, z_end], C^1 cubic transitions of
  // width cap_width to the flat levels flat_left / flat_right.
  static WidthProfile linear_ramp_with_cubic_caps(double z_start, double z_end,
                                                  double d_start, double d_end,
                                                  double flat_left, double flat_right,
                                                  double cap_width);
  // Connect-the-dots profile; flat beyond the first/last knot. A single knot
  // gives a constant opening.
  static WidthProfile piecewise_linear(std::vector<double> z, std::vector<double> d);
  // Monotone C^1 cubic interpolation (Fritsch-Carlson) through the table.
  static WidthProfile tabulated(std::vector<double> z, std::vector<double> d);

  ProfileEval evaluate(double z) const;

  Kind kind() const { return kind_; }
  // Varying region including the caps; D' = 0 outside [z_lo, z_hi].
  double z_lo() const { return z_lo_; }
  double z_hi() const { return z_hi_; }

 private:
  WidthProfile() = default;
  void validate() const;

  Kind kind_ = Kind::PiecewiseLinear;
  double z_lo_ = 0, z_hi_ = 0;
  // LinearRampCubicCaps parameters
  double z_start_ = 0, z_end_ = 0, d_start_ = 0, d_end_ = 0;
  double flat_left_ = 0, flat_right_ = 0, cap_ = 0;
  // knots for the other kinds
  std::vector<double> zs_, ds_, slopes_;
};

// N(z) = floor(k D(z) / pi)
int mode_count(double k, const WidthProfile& profile, double z);

struct SectorLayout {
  double k = 0;
  double z_max = 0;  // fluctuation support is (-z_max, z_max)
  std::vector<double> left_turning_points;   // descending: z1 > z2 > ...
  std::vector<double> right_turning_points;  // ascending
  int n0 = 0, n_min = 0, n_max = 0;

  struct Sector {
    double z_left, z_right;
    int n_modes;
    bool left_is_turning_point;
    bool right_is_turning_point;
  };
  // Sectors ordered away from the source. Left side: first sector is
  // (z1, 0) with n0 modes, last is (-z_max, z_last) with n_min modes.
  std::vector<Sector> left_sectors() const;
  std::vector<Sector> right_sectors() const;
};

struct TurningPointOptions {
  double root_tol_rel = 1e-12;    // of the varying-region length
  double source_margin = 1e-6;    // min distance of k D(0)/pi from integers
};

SectorLayout find_turning_points(double k, const WidthProfile& profile, double z_max,
                                 const TurningPointOptions& opt = {});

}  // namespace modeflux
