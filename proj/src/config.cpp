#include "modeflux/config.hpp"

#include <algorithm>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "modeflux/errors.hpp"

namespace modeflux {
namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void parse_fail(int line, int col, const std::string& what) {
  throw ValidationError("ParseError", "line " + std::to_string(line) + ", col " +
                                          std::to_string(col) + ": " + what);
}

double to_double(const std::string& v, int line) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) parse_fail(line, 1, "trailing characters in number '" + v + "'");
    return x;
  } catch (const std::logic_error&) {
    parse_fail(line, 1, "expected a number, got '" + v + "'");
  }
}

int to_int(const std::string& v, int line) {
  double x = to_double(v, line);
  if (x != std::floor(x)) parse_fail(line, 1, "expected an integer, got '" + v + "'");
  return static_cast<int>(x);
}

bool to_bool(const std::string& v, int line) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  parse_fail(line, 1, "expected a boolean (0/1/true/false), got '" + v + "'");
}

uint64_t to_u64(const std::string& v, int line) {
  try {
    size_t pos = 0;
    unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) parse_fail(line, 1, "trailing characters in integer '" + v + "'");
    return x;
  } catch (const std::logic_error&) {
    parse_fail(line, 1, "expected an unsigned integer, got '" + v + "'");
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  bool have_sigma = false;

  using Setter = std::function<void(const std::string&, int)>;
  std::map<std::string, std::map<std::string, Setter>> schema;
  auto& g = schema["geometry"];
  g["profile"] = [&](const std::string& v, int) { cfg.geometry.profile = v; };
  g["z_start"] = [&](const std::string& v, int l) { cfg.geometry.z_start = to_double(v, l); };
  g["z_end"] = [&](const std::string& v, int l) { cfg.geometry.z_end = to_double(v, l); };
  g["d_start"] = [&](const std::string& v, int l) { cfg.geometry.d_start = to_double(v, l); };
  g["d_end"] = [&](const std::string& v, int l) { cfg.geometry.d_end = to_double(v, l); };
  g["flat_left"] = [&](const std::string& v, int l) { cfg.geometry.flat_left = to_double(v, l); };
  g["flat_right"] = [&](const std::string& v, int l) {
    cfg.geometry.flat_right = to_double(v, l);
  };
  g["cap_width"] = [&](const std::string& v, int l) { cfg.geometry.cap_width = to_double(v, l); };
  g["d"] = [&](const std::string& v, int l) { cfg.geometry.d = to_double(v, l); };
  g["z_max"] = [&](const std::string& v, int l) { cfg.geometry.z_max = to_double(v, l); };
  g["profile_file"] = [&](const std::string& v, int) { cfg.geometry.profile_file = v; };
  g["knots"] = [&](const std::string& v, int l) {
    cfg.geometry.knot_z.clear();
    cfg.geometry.knot_d.clear();
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      size_t colon = item.find(':');
      if (colon == std::string::npos) parse_fail(l, 1, "knots format is z:d, z:d, ...");
      cfg.geometry.knot_z.push_back(to_double(trim(item.substr(0, colon)), l));
      cfg.geometry.knot_d.push_back(to_double(trim(item.substr(colon + 1)), l));
    }
  };
  auto& ph = schema["physics"];
  ph["k"] = [&](const std::string& v, int l) { cfg.physics.k = to_double(v, l); };
  ph["sigma"] = [&](const std::string& v, int l) {
    cfg.physics.sigma = to_double(v, l);
    have_sigma = true;
  };
  ph["epsilon"] = [&](const std::string& v, int l) { cfg.physics.epsilon = to_double(v, l); };
  ph["correlation"] = [&](const std::string& v, int) { cfg.physics.correlation = v; };
  ph["spectrum_file"] = [&](const std::string& v, int) { cfg.physics.spectrum_file = v; };
  auto& so = schema["source"];
  so["kind"] = [&](const std::string& v, int) { cfg.source.kind = v; };
  so["f_re"] = [&](const std::string& v, int l) { cfg.source.f_re = to_double(v, l); };
  so["f_im"] = [&](const std::string& v, int l) { cfg.source.f_im = to_double(v, l); };
  so["rho_star"] = [&](const std::string& v, int l) { cfg.source.rho_star = to_double(v, l); };
  so["rho_fraction"] = [&](const std::string& v, int l) {
    cfg.source.rho_fraction = to_double(v, l);
  };
  so["mode_index"] = [&](const std::string& v, int l) { cfg.source.mode_index = to_int(v, l); };
  so["amplitude_re"] = [&](const std::string& v, int l) {
    cfg.source.amplitude_re = to_double(v, l);
  };
  so["amplitude_im"] = [&](const std::string& v, int l) {
    cfg.source.amplitude_im = to_double(v, l);
  };
  auto& nu = schema["numerics"];
  nu["ode_rtol"] = [&](const std::string& v, int l) { cfg.numerics.ode_rtol = to_double(v, l); };
  nu["ode_atol"] = [&](const std::string& v, int l) { cfg.numerics.ode_atol = to_double(v, l); };
  nu["delta_collar"] = [&](const std::string& v, int l) {
    cfg.numerics.delta_collar = to_double(v, l);
  };
  nu["evanescent_cutoff"] = [&](const std::string& v, int l) {
    cfg.numerics.evanescent_cutoff = to_int(v, l);
  };
  nu["output_grid"] = [&](const std::string& v, int l) {
    cfg.numerics.output_grid = to_int(v, l);
  };
  nu["beta_floor_frac"] = [&](const std::string& v, int l) {
    cfg.numerics.beta_floor_frac = to_double(v, l);
  };
  nu["source_margin"] = [&](const std::string& v, int l) {
    cfg.numerics.source_margin = to_double(v, l);
  };
  nu["fsc_threshold"] = [&](const std::string& v, int l) {
    cfg.numerics.fsc_threshold = to_double(v, l);
  };
  nu["clip_noise"] = [&](const std::string& v, int l) {
    cfg.numerics.clip_noise = to_bool(v, l);
  };
  nu["curvature"] = [&](const std::string& v, int l) { cfg.numerics.curvature = to_double(v, l); };
  auto& mc = schema["mc"];
  mc["n_trajectories"] = [&](const std::string& v, int l) {
    cfg.mc.n_trajectories = to_int(v, l);
  };
  mc["step"] = [&](const std::string& v, int l) { cfg.mc.step = to_double(v, l); };
  mc["seed"] = [&](const std::string& v, int l) { cfg.mc.seed = to_u64(v, l); };
  mc["include_sigma2_terms"] = [&](const std::string& v, int l) {
    cfg.mc.include_sigma2_terms = to_bool(v, l);
  };
  mc["include_slow_terms"] = [&](const std::string& v, int l) {
    cfg.mc.include_slow_terms = to_bool(v, l);
  };
  mc["z_left"] = [&](const std::string& v, int l) { cfg.mc.z_left = to_double(v, l); };
  mc["z_right"] = [&](const std::string& v, int l) { cfg.mc.z_right = to_double(v, l); };
  mc["n_checkpoints"] = [&](const std::string& v, int l) {
    cfg.mc.n_checkpoints = to_int(v, l);
  };
  mc["threads"] = [&](const std::string& v, int l) { cfg.mc.threads = to_int(v, l); };
  auto& ou = schema["output"];
  ou["dir"] = [&](const std::string& v, int) { cfg.output.dir = v; };

  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') parse_fail(lineno, static_cast<int>(s.size()), "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (!schema.count(section)) parse_fail(lineno, 1, "unknown section '" + section + "'");
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string::npos) parse_fail(lineno, 1, "expected key = value");
    if (section.empty()) parse_fail(lineno, 1, "key outside of any section");
    std::string key = trim(s.substr(0, eq));
    std::string val = trim(s.substr(eq + 1));
    auto& sec = schema[section];
    auto it = sec.find(key);
    if (it == sec.end())
      parse_fail(lineno, 1, "unknown key '" + key + "' in section [" + section + "]");
    it->second(val, lineno);
  }

  // ---- invariants
  if (!(cfg.physics.k > 0)) throw ValidationError("ValidationError", "physics.k must be > 0");
  if (!have_sigma)
    throw ValidationError("ValidationError", "physics.sigma is required");
  if (cfg.physics.sigma < 0)
    throw ValidationError("ValidationError", "physics.sigma must be >= 0");
  if (!(cfg.physics.epsilon > 0) || cfg.physics.epsilon > 0.1)
    throw ValidationError("ValidationError", "physics.epsilon must satisfy 0 < eps <= 0.1");
  if (cfg.physics.correlation != "gaussian" && cfg.physics.correlation != "spectrum-file")
    throw ValidationError("ValidationError",
                          "physics.correlation must be gaussian or spectrum-file");
  if (cfg.physics.correlation == "spectrum-file" && cfg.physics.spectrum_file.empty())
    throw ValidationError("ValidationError", "physics.spectrum_file is required");
  if (cfg.source.kind != "point" && cfg.source.kind != "mode")
    throw ValidationError("ValidationError", "source.kind must be point or mode");
  if (cfg.source.kind == "mode" && cfg.source.mode_index < 1)
    throw ValidationError("ValidationError", "source.mode_index must be >= 1");
  if (!(cfg.numerics.ode_rtol > 0) || !(cfg.numerics.ode_atol > 0))
    throw ValidationError("ValidationError", "ode tolerances must be positive");
  if (cfg.numerics.output_grid < 2)
    throw ValidationError("ValidationError", "numerics.output_grid must be >= 2");
  if (cfg.numerics.evanescent_cutoff < 1)
    throw ValidationError("ValidationError", "numerics.evanescent_cutoff must be >= 1");
  if (cfg.mc.n_trajectories < 2)
    throw ValidationError("ValidationError", "mc.n_trajectories must be >= 2");
  if (!(cfg.geometry.z_max > 0))
    throw ValidationError("ValidationError", "geometry.z_max must be > 0");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("ConfigNotFound", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream o;
  o << "[geometry]\n";
  o << "profile = " << c.geometry.profile << "\n";
  if (c.geometry.profile == "linear-ramp-with-cubic-caps") {
    o << "z_start = " << fmt(c.geometry.z_start) << "\n";
    o << "z_end = " << fmt(c.geometry.z_end) << "\n";
    o << "d_start = " << fmt(c.geometry.d_start) << "\n";
    o << "d_end = " << fmt(c.geometry.d_end) << "\n";
    o << "flat_left = " << fmt(c.geometry.flat_left) << "\n";
    o << "flat_right = " << fmt(c.geometry.flat_right) << "\n";
    o << "cap_width = " << fmt(c.geometry.cap_width) << "\n";
  } else if (c.geometry.profile == "constant") {
    o << "d = " << fmt(c.geometry.d) << "\n";
  } else if (c.geometry.profile == "piecewise-linear") {
    o << "knots = ";
    for (size_t i = 0; i < c.geometry.knot_z.size(); ++i) {
      if (i) o << ", ";
      o << fmt(c.geometry.knot_z[i]) << ":" << fmt(c.geometry.knot_d[i]);
    }
    o << "\n";
  } else if (c.geometry.profile == "tabulated") {
    o << "profile_file = " << c.geometry.profile_file << "\n";
  }
  o << "z_max = " << fmt(c.geometry.z_max) << "\n";
  o << "\n[physics]\n";
  o << "k = " << fmt(c.physics.k) << "\n";
  o << "sigma = " << fmt(c.physics.sigma) << "\n";
  o << "epsilon = " << fmt(c.physics.epsilon) << "\n";
  o << "correlation = " << c.physics.correlation << "\n";
  if (!c.physics.spectrum_file.empty())
    o << "spectrum_file = " << c.physics.spectrum_file << "\n";
  o << "\n[source]\n";
  o << "kind = " << c.source.kind << "\n";
  if (c.source.kind == "point") {
    o << "f_re = " << fmt(c.source.f_re) << "\n";
    o << "f_im = " << fmt(c.source.f_im) << "\n";
    if (c.source.rho_fraction != 0)
      o << "rho_fraction = " << fmt(c.source.rho_fraction) << "\n";
    else
      o << "rho_star = " << fmt(c.source.rho_star) << "\n";
  } else {
    o << "mode_index = " << c.source.mode_index << "\n";
    o << "amplitude_re = " << fmt(c.source.amplitude_re) << "\n";
    o << "amplitude_im = " << fmt(c.source.amplitude_im) << "\n";
  }
  o << "\n[numerics]\n";
  o << "ode_rtol = " << fmt(c.numerics.ode_rtol) << "\n";
  o << "ode_atol = " << fmt(c.numerics.ode_atol) << "\n";
  o << "delta_collar = " << fmt(c.numerics.delta_collar) << "\n";
  o << "evanescent_cutoff = " << c.numerics.evanescent_cutoff << "\n";
  o << "output_grid = " << c.numerics.output_grid << "\n";
  o << "beta_floor_frac = " << fmt(c.numerics.beta_floor_frac) << "\n";
  o << "source_margin = " << fmt(c.numerics.source_margin) << "\n";
  o << "fsc_threshold = " << fmt(c.numerics.fsc_threshold) << "\n";
  o << "clip_noise = " << (c.numerics.clip_noise ? 1 : 0) << "\n";
  o << "curvature = " << fmt(c.numerics.curvature) << "\n";
  o << "\n[mc]\n";
  o << "n_trajectories = " << c.mc.n_trajectories << "\n";
  o << "step = " << fmt(c.mc.step) << "\n";
  o << "seed = " << c.mc.seed << "\n";
  o << "include_sigma2_terms = " << (c.mc.include_sigma2_terms ? 1 : 0) << "\n";
  o << "include_slow_terms = " << (c.mc.include_slow_terms ? 1 : 0) << "\n";
  o << "z_left = " << fmt(c.mc.z_left) << "\n";
  o << "z_right = " << fmt(c.mc.z_right) << "\n";
  o << "n_checkpoints = " << c.mc.n_checkpoints << "\n";
  o << "threads = " << c.mc.threads << "\n";
  o << "\n[output]\n";
  o << "dir = " << c.output.dir << "\n";
  return o.str();
}

std::pair<std::vector<double>, std::vector<double>> load_two_column_csv(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("FileNotFound", "cannot open " + path);
  std::vector<double> a, b;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream row(s);
    double x, y;
    if (!(row >> x >> y)) {
      if (lineno == 1) continue;  // header row
      throw ValidationError("ParseError",
                            path + ": line " + std::to_string(lineno) + ": expected two numbers");
    }
    a.push_back(x);
    b.push_back(y);
  }
  if (a.size() < 2)
    throw ValidationError("ParseError", path + ": fewer than two data rows");
  return {std::move(a), std::move(b)};
}

namespace {
std::string join_path(const std::string& dir, const std::string& file) {
  if (file.empty() || file.front() == '/') return file;
  if (dir.empty() || dir == ".") return file;
  return dir + "/" + file;
}
}  // namespace

WidthProfile make_profile(const RunConfig& cfg, const std::string& base_dir) {
  const auto& g = cfg.geometry;
  if (g.profile == "linear-ramp-with-cubic-caps")
    return WidthProfile::linear_ramp_with_cubic_caps(g.z_start, g.z_end, g.d_start, g.d_end,
                                                     g.flat_left, g.flat_right, g.cap_width);
  if (g.profile == "constant") {
    if (!(g.d > 0)) throw ValidationError("ValidationError", "geometry.d must be > 0");
    return WidthProfile::piecewise_linear({0.0}, {g.d});
  }
  if (g.profile == "piecewise-linear")
    return WidthProfile::piecewise_linear(g.knot_z, g.knot_d);
  if (g.profile == "tabulated") {
    auto [z, d] = load_two_column_csv(join_path(base_dir, g.profile_file));
    return WidthProfile::tabulated(std::move(z), std::move(d));
  }
  throw ValidationError("ValidationError", "unknown geometry.profile '" + g.profile + "'");
}

CorrelationModel make_model(const RunConfig& cfg, const std::string& base_dir) {
  if (cfg.physics.correlation == "gaussian") return CorrelationModel::gaussian();
  auto [beta, psd] = load_two_column_csv(join_path(base_dir, cfg.physics.spectrum_file));
  return CorrelationModel::tabulated_spectrum(std::move(beta), std::move(psd));
}

Excitation make_excitation(const RunConfig& cfg, const WidthProfile& profile) {
  Excitation exc;
  if (cfg.source.kind == "mode") {
    exc.kind = Excitation::Kind::SingleMode;
    exc.mode_index = cfg.source.mode_index;
    exc.amplitude = Complex(cfg.source.amplitude_re, cfg.source.amplitude_im);
    return exc;
  }
  exc.kind = Excitation::Kind::PointSource;
  exc.f = Complex(cfg.source.f_re, cfg.source.f_im);
  exc.rho_star = cfg.source.rho_fraction != 0
                     ? cfg.source.rho_fraction * profile.evaluate(0.0).d
                     : cfg.source.rho_star;
  return exc;
}

PhysicsParams make_physics(const RunConfig& cfg) {
  PhysicsParams p;
  p.k = cfg.physics.k;
  p.sigma = cfg.physics.sigma;
  p.epsilon = cfg.physics.epsilon;
  p.curvature = cfg.numerics.curvature;
  return p;
}

TransportOptions make_transport_options(const RunConfig& cfg) {
  TransportOptions t;
  t.ode.rtol = cfg.numerics.ode_rtol;
  t.ode.atol = cfg.numerics.ode_atol;
  t.output_grid = cfg.numerics.output_grid;
  t.delta_collar = cfg.numerics.delta_collar;
  t.coupling.evanescent_cutoff = cfg.numerics.evanescent_cutoff;
  t.coupling.beta_floor_frac = cfg.numerics.beta_floor_frac;
  return t;
}

McConfig make_mc_config(const RunConfig& cfg, const SectorLayout& layout) {
  McConfig m;
  m.epsilon = cfg.physics.epsilon;
  m.n_trajectories = cfg.mc.n_trajectories;
  m.step = cfg.mc.step > 0 ? cfg.mc.step : cfg.physics.epsilon / 10.0;
  m.seed = cfg.mc.seed;
  m.include_sigma2_terms = cfg.mc.include_sigma2_terms;
  m.include_slow_terms = cfg.mc.include_slow_terms;
  m.n_checkpoints = cfg.mc.n_checkpoints;
  m.clip_noise = cfg.numerics.clip_noise;
  m.n_threads = cfg.mc.threads;
  if (cfg.mc.z_left == 0 && cfg.mc.z_right == 0) {
    auto sec = layout.left_sectors().front();
    double delta = cfg.numerics.delta_collar > 0
                       ? cfg.numerics.delta_collar
                       : 10.0 * std::pow(cfg.physics.epsilon, 2.0 / 3.0);
    m.z_left = sec.z_left + (sec.left_is_turning_point ? delta : 0.0);
    m.z_right = sec.z_right;
  } else {
    m.z_left = cfg.mc.z_left;
    m.z_right = cfg.mc.z_right;
  }
  m.n_modes = layout.n0;
  return m;
}

}  // namespace modeflux
