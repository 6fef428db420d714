#include "modeflux/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "modeflux/errors.hpp"

namespace modeflux {
namespace {

// Cubic Hermite on [0,1] with values y0, y1 and end slopes m0, m1 (already
// scaled by the interval width).
inline double hermite(double t, double y0, double y1, double m0, double m1) {
  double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * y1 +
         (t3 - t2) * m1;
}
inline double hermite_d(double t, double y0, double y1, double m0, double m1) {
  double t2 = t * t;
  return (6 * t2 - 6 * t) * y0 + (3 * t2 - 4 * t + 1) * m0 + (-6 * t2 + 6 * t) * y1 +
         (3 * t2 - 2 * t) * m1;
}

}  // namespace

WidthProfile WidthProfile::linear_ramp_with_cubic_caps(double z_start, double z_end,
                                                       double d_start, double d_end,
                                                       double flat_left, double flat_right,
                                                       double cap_width) {
  if (!(z_start < z_end))
    throw ValidationError("InvalidProfile", "z_start must be below z_end");
  if (!(cap_width > 0))
    throw ValidationError("InvalidProfile", "cap_width must be positive");
  if (!(flat_left > 0 && d_start > 0 && d_end > 0 && flat_right > 0))
    throw ValidationError("InvalidProfile", "opening must stay positive");
  if (!(flat_left <= d_start && d_start < d_end && d_end <= flat_right))
    throw ValidationError("InvalidProfile",
                          "need flat_left <= d_start < d_end <= flat_right");
  WidthProfile p;
  p.kind_ = Kind::LinearRampCubicCaps;
  p.z_start_ = z_start;
  p.z_end_ = z_end;
  p.d_start_ = d_start;
  p.d_end_ = d_end;
  p.flat_left_ = flat_left;
  p.flat_right_ = flat_right;
  p.cap_ = cap_width;
  p.z_lo_ = z_start - cap_width;
  p.z_hi_ = z_end + cap_width;
  return p;
}

WidthProfile WidthProfile::piecewise_linear(std::vector<double> z, std::vector<double> d) {
  if (z.empty() || z.size() != d.size())
    throw ValidationError("InvalidProfile", "knot vectors empty or mismatched");
  for (size_t i = 0; i + 1 < z.size(); ++i) {
    if (!(z[i] < z[i + 1]))
      throw ValidationError("InvalidProfile", "knot abscissae must strictly increase");
    if (d[i + 1] < d[i])
      throw ValidationError("NonMonotoneProfile", "opening must be non-decreasing");
  }
  for (double v : d)
    if (!(v > 0)) throw ValidationError("InvalidProfile", "opening must stay positive");
  WidthProfile p;
  p.kind_ = Kind::PiecewiseLinear;
  p.zs_ = std::move(z);
  p.ds_ = std::move(d);
  p.z_lo_ = p.zs_.front();
  p.z_hi_ = p.zs_.back();
  return p;
}

WidthProfile WidthProfile::tabulated(std::vector<double> z, std::vector<double> d) {
  if (z.size() < 2 || z.size() != d.size())
    throw ValidationError("InvalidProfile", "tabulated profile needs >= 2 rows");
  const size_t n = z.size();
  for (size_t i = 0; i + 1 < n; ++i) {
    if (!(z[i] < z[i + 1]))
      throw ValidationError("InvalidProfile", "table abscissae must strictly increase");
    if (d[i + 1] < d[i])
      throw ValidationError("NonMonotoneProfile", "opening must be non-decreasing");
  }
  for (double v : d)
    if (!(v > 0)) throw ValidationError("InvalidProfile", "opening must stay positive");

  // Fritsch-Carlson slopes: monotone C^1 interpolant.
  std::vector<double> slope(n, 0.0), delta(n - 1);
  for (size_t i = 0; i + 1 < n; ++i) delta[i] = (d[i + 1] - d[i]) / (z[i + 1] - z[i]);
  slope[0] = delta[0];
  slope[n - 1] = delta[n - 2];
  for (size_t i = 1; i + 1 < n; ++i)
    slope[i] = (delta[i - 1] * delta[i] <= 0.0) ? 0.0 : 0.5 * (delta[i - 1] + delta[i]);
  for (size_t i = 0; i + 1 < n; ++i) {
    if (delta[i] == 0.0) {
      slope[i] = slope[i + 1] = 0.0;
      continue;
    }
    double alpha = slope[i] / delta[i], beta = slope[i + 1] / delta[i];
    double s = alpha * alpha + beta * beta;
    if (s > 9.0) {
      double tau = 3.0 / std::sqrt(s);
      slope[i] = tau * alpha * delta[i];
      slope[i + 1] = tau * beta * delta[i];
    }
  }

  WidthProfile p;
  p.kind_ = Kind::Tabulated;
  p.zs_ = std::move(z);
  p.ds_ = std::move(d);
  p.slopes_ = std::move(slope);
  p.z_lo_ = p.zs_.front();
  p.z_hi_ = p.zs_.back();
  return p;
}

ProfileEval WidthProfile::evaluate(double z) const {
  switch (kind_) {
    case Kind::LinearRampCubicCaps: {
      if (z <= z_lo_) return {flat_left_, 0.0};
      if (z >= z_hi_) return {flat_right_, 0.0};
      const double ramp_slope = (d_end_ - d_start_) / (z_end_ - z_start_);
      if (z < z_start_) {
        double t = (z - z_lo_) / cap_;
        return {hermite(t, flat_left_, d_start_, 0.0, cap_ * ramp_slope),
                hermite_d(t, flat_left_, d_start_, 0.0, cap_ * ramp_slope) / cap_};
      }
      if (z <= z_end_) return {d_start_ + ramp_slope * (z - z_start_), ramp_slope};
      double t = (z - z_end_) / cap_;
      return {hermite(t, d_end_, flat_right_, cap_ * ramp_slope, 0.0),
              hermite_d(t, d_end_, flat_right_, cap_ * ramp_slope, 0.0) / cap_};
    }
    case Kind::PiecewiseLinear: {
      if (z <= zs_.front()) return {ds_.front(), 0.0};
      if (z >= zs_.back()) return {ds_.back(), 0.0};
      size_t i = std::upper_bound(zs_.begin(), zs_.end(), z) - zs_.begin() - 1;
      double s = (ds_[i + 1] - ds_[i]) / (zs_[i + 1] - zs_[i]);
      return {ds_[i] + s * (z - zs_[i]), s};
    }
    case Kind::Tabulated: {
      if (z <= zs_.front()) return {ds_.front(), 0.0};
      if (z >= zs_.back()) return {ds_.back(), 0.0};
      size_t i = std::upper_bound(zs_.begin(), zs_.end(), z) - zs_.begin() - 1;
      double h = zs_[i + 1] - zs_[i];
      double t = (z - zs_[i]) / h;
      return {hermite(t, ds_[i], ds_[i + 1], h * slopes_[i], h * slopes_[i + 1]),
              hermite_d(t, ds_[i], ds_[i + 1], h * slopes_[i], h * slopes_[i + 1]) / h};
    }
  }
  return {0.0, 0.0};  // unreachable
}

int mode_count(double k, const WidthProfile& profile, double z) {
  return static_cast<int>(std::floor(k * profile.evaluate(z).d / M_PI));
}

namespace {

// Bisection for k D(z) = pi * level on [lo, hi]; the bracket must change sign.
double bisect_level(double k, const WidthProfile& p, double level, double lo, double hi,
                    double tol) {
  auto g = [&](double z) { return k * p.evaluate(z).d - M_PI * level; };
  double glo = g(lo), ghi = g(hi);
  if (glo > 0 || ghi < 0)
    throw NumericalError("BracketingFailed", "turning point bracket lost its sign change");
  for (int it = 0; it < 200 && (hi - lo) > tol; ++it) {
    double mid = 0.5 * (lo + hi);
    if (p.evaluate(mid).d_prime < 0.0 && mid > p.z_lo() && mid < p.z_hi())
      throw ValidationError("NonMonotoneProfile",
                            "opening decreases inside the varying region");
    double gm = g(mid);
    if (gm >= 0)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

SectorLayout find_turning_points(double k, const WidthProfile& profile, double z_max,
                                 const TurningPointOptions& opt) {
  if (!(k > 0)) throw ValidationError("InvalidWavenumber", "k must be positive");
  if (!(z_max > 0) || z_max < std::max(std::abs(profile.z_lo()), std::abs(profile.z_hi())))
    throw ValidationError("InvalidZMax",
                          "z_max must be positive and cover the varying region");

  double q0 = k * profile.evaluate(0.0).d / M_PI;
  if (std::abs(q0 - std::round(q0)) < opt.source_margin)
    throw ValidationError("SourceOnTurningPoint",
                          "k D(0)/pi is within margin of an integer; move the source or "
                          "perturb the geometry");

  SectorLayout lay;
  lay.k = k;
  lay.z_max = z_max;
  lay.n0 = mode_count(k, profile, 0.0);
  lay.n_min = mode_count(k, profile, -z_max);
  lay.n_max = mode_count(k, profile, z_max);
  if (lay.n_min < 1)
    throw ValidationError("NoPropagatingModes", "waveguide must support at least one mode");

  double tol = opt.root_tol_rel * std::max(profile.z_hi() - profile.z_lo(), 1.0);

  // Left of the source the count drops by one at each turning point; the t-th
  // one solves k D = pi (n0 - (t-1)).
  for (int t = 1; t <= lay.n0 - lay.n_min; ++t) {
    double level = lay.n0 - (t - 1);
    double hi = lay.left_turning_points.empty() ? 0.0 : lay.left_turning_points.back();
    double z = bisect_level(k, profile, level, -z_max, hi, tol);
    if (profile.evaluate(z).d_prime <= 0.0)
      throw ValidationError("NonMonotoneProfile",
                            "turning point with non-positive slope at z=" + std::to_string(z));
    lay.left_turning_points.push_back(z);
  }
  // Right of the source the count rises by one; the t-th crossing solves
  // k D = pi (n0 + t).
  for (int t = 1; t <= lay.n_max - lay.n0; ++t) {
    double level = lay.n0 + t;
    double lo = lay.right_turning_points.empty() ? 0.0 : lay.right_turning_points.back();
    double z = bisect_level(k, profile, level, lo, z_max, tol);
    if (profile.evaluate(z).d_prime <= 0.0)
      throw ValidationError("NonMonotoneProfile",
                            "turning point with non-positive slope at z=" + std::to_string(z));
    lay.right_turning_points.push_back(z);
  }
  return lay;
}

std::vector<SectorLayout::Sector> SectorLayout::left_sectors() const {
  std::vector<Sector> out;
  double right = 0.0;
  for (size_t t = 0; t < left_turning_points.size(); ++t) {
    out.push_back({left_turning_points[t], right, n0 - static_cast<int>(t), true, t > 0});
    right = left_turning_points[t];
  }
  out.push_back({-z_max, right, n_min, false, !left_turning_points.empty()});
  return out;
}

std::vector<SectorLayout::Sector> SectorLayout::right_sectors() const {
  std::vector<Sector> out;
  double left = 0.0;
  for (size_t t = 0; t < right_turning_points.size(); ++t) {
    out.push_back({left, right_turning_points[t], n0 + static_cast<int>(t), t > 0, true});
    left = right_turning_points[t];
  }
  out.push_back({left, z_max, n_max, !right_turning_points.empty(), false});
  return out;
}

}  // namespace modeflux
