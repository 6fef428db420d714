#include "modeflux/runner.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "modeflux/errors.hpp"
#include "modeflux/kernels.hpp"
#include "modeflux/modes.hpp"

namespace modeflux {
namespace {

using nlohmann::json;

// CSV cells with 17 significant digits.
std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& header) : out_(path) {
    if (!out_) throw ValidationError("OutputError", "cannot write " + path);
    out_ << header << "\n";
  }
  template <class... Ts>
  void row(Ts... cells) {
    bool first = true;
    ((out_ << (first ? "" : ","), first = false, write_cell(cells)), ...);
    out_ << "\n";
  }

 private:
  void write_cell(double v) { out_ << num(v); }
  void write_cell(int v) { out_ << v; }
  void write_cell(const char* v) { out_ << v; }
  void write_cell(const std::string& v) { out_ << v; }
  std::ofstream out_;
};

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("OutputError", "cannot write " + path);
  out << j.dump(2) << "\n";
}

void write_manifest(const RunConfig& cfg, const std::string& out_dir,
                    const std::string& subcommand, uint64_t seed) {
  json j;
  j["tool"] = "modeflux";
  j["version"] = "0.1.0";
  j["subcommand"] = subcommand;
  j["config_text"] = serialize_config(cfg);
  j["config_hash"] = config_hash(cfg);
  j["seed"] = seed;
  j["seed_derivation"] = "trajectory t uses splitmix64(seed xor splitmix64(t+1))";
  j["kappa_sigma2_second_sum"] = true;
  j["kernels"] = kernels::active().name;
  write_json(out_dir + "/manifest.json", j);
}

struct Setup {
  WidthProfile profile;
  CorrelationModel model;
  SectorLayout layout;
  PhysicsParams phys;
};

Setup make_setup(const RunConfig& cfg, const std::string& base_dir) {
  Setup s{make_profile(cfg, base_dir), make_model(cfg, base_dir), {}, make_physics(cfg)};
  TurningPointOptions tp;
  tp.source_margin = cfg.numerics.source_margin;
  s.layout = find_turning_points(cfg.physics.k, s.profile, cfg.geometry.z_max, tp);
  return s;
}

json layout_json(const SectorLayout& lay) {
  json j;
  j["k"] = lay.k;
  j["z_max"] = lay.z_max;
  j["n0"] = lay.n0;
  j["n_min"] = lay.n_min;
  j["n_max"] = lay.n_max;
  j["left_turning_points"] = lay.left_turning_points;
  j["right_turning_points"] = lay.right_turning_points;
  auto secs = json::array();
  for (const auto& s : lay.left_sectors())
    secs.push_back({{"side", "left"},
                    {"z_left", s.z_left},
                    {"z_right", s.z_right},
                    {"n_modes", s.n_modes}});
  for (const auto& s : lay.right_sectors())
    secs.push_back({{"side", "right"},
                    {"z_left", s.z_left},
                    {"z_right", s.z_right},
                    {"n_modes", s.n_modes}});
  j["sectors"] = secs;
  return j;
}

}  // namespace

std::string config_hash(const RunConfig& cfg) {
  std::string text = serialize_config(cfg);
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int run_layout(const RunConfig& cfg, const std::string& base_dir, const std::string& out_dir) {
  Setup s = make_setup(cfg, base_dir);
  write_json(out_dir + "/layout.json", layout_json(s.layout));
  write_manifest(cfg, out_dir, "layout", cfg.mc.seed);
  return 0;
}

int run_coefficients(const RunConfig& cfg, const std::string& base_dir,
                     const std::string& out_dir) {
  Setup s = make_setup(cfg, base_dir);
  CouplingOptions copt;
  copt.evanescent_cutoff = cfg.numerics.evanescent_cutoff;
  copt.beta_floor_frac = cfg.numerics.beta_floor_frac;
  const double d0 = s.profile.evaluate(0.0).d;
  CouplingSet set =
      coupling_set(cfg.physics.k, cfg.physics.sigma, s.model, d0, s.layout.n0, copt);
  LengthScales scales = length_scales(set);

  CsvWriter mats(out_dir + "/coefficients.csv", "j,l,Gc,G0,Gs");
  for (int i = 0; i < set.n_prop; ++i)
    for (int l = 0; l < set.n_prop; ++l)
      mats.row(i + 1, l + 1, set.gc(i, l), set.g0(i, l), set.gs(i, l));
  CsvWriter kap(out_dir + "/kappa.csv", "j,kappa,L_smf,L_tmf");
  for (int i = 0; i < set.n_prop; ++i)
    kap.row(i + 1, set.kappa[i], scales.smf[i], scales.tmf[i]);

  ForwardScatteringReport fsc = forward_scattering_diagnostic(
      cfg.physics.k, s.model, d0, s.layout.n0, cfg.numerics.fsc_threshold);
  json j;
  j["z"] = 0.0;
  j["n_prop"] = set.n_prop;
  j["equipartition_distance"] = scales.equipartition;
  j["gc_spectrum"] = scales.spectrum;
  j["kappa_tail_bound_max"] =
      *std::max_element(set.kappa_tail_bound.begin(), set.kappa_tail_bound.end());
  j["forward_scattering"] = {{"min_argument", fsc.min_argument},
                             {"psd_at_min", fsc.psd_at_min},
                             {"psd_at_zero", fsc.psd_at_zero},
                             {"ratio", fsc.ratio},
                             {"threshold", fsc.threshold},
                             {"flagged", fsc.flagged}};
  write_json(out_dir + "/summary.json", j);
  write_manifest(cfg, out_dir, "coefficients", cfg.mc.seed);
  return 0;
}

int run_transport(const RunConfig& cfg, const std::string& base_dir,
                  const std::string& out_dir) {
  Setup s = make_setup(cfg, base_dir);
  Excitation exc = make_excitation(cfg, s.profile);
  TransportOptions topt = make_transport_options(cfg);
  TransportLedger led = chain_sectors(s.layout, s.profile, s.model, s.phys, exc, topt);

  CsvWriter means(out_dir + "/means.csv", "z,side,sector,j,re_mean_amp,im_mean_amp,abs_mean_amp");
  CsvWriter powers(out_dir + "/powers.csv", "z,side,sector,j,mean_power");
  CsvWriter moments(out_dir + "/moments.csv", "z,side,sector,j,l,second_moment");
  auto emit = [&](const SectorTrace& tr, const char* side) {
    for (size_t g = 0; g < tr.grid.size(); ++g) {
      for (int j = 0; j < tr.n_modes; ++j) {
        if (!tr.mean_amps.empty()) {
          Complex b = tr.mean_amps[g][j];
          means.row(tr.grid[g], side, tr.index, j + 1, b.real(), b.imag(), std::abs(b));
        }
        powers.row(tr.grid[g], side, tr.index, j + 1, tr.powers[g][j]);
        if (!tr.moments.empty())
          for (int l = j; l < tr.n_modes; ++l)
            moments.row(tr.grid[g], side, tr.index, j + 1, l + 1,
                        tr.moments[g][packed_index(tr.n_modes, j, l)]);
      }
    }
  };
  for (const auto& tr : led.left) emit(tr, "left");
  for (const auto& tr : led.right) emit(tr, "right");

  json j;
  j["p0_left"] = led.p0_left;
  j["p0_right"] = led.p0_right;
  auto secs = json::array();
  auto sec_json = [](const SectorTrace& tr, const char* side) {
    return json{{"side", side},          {"index", tr.index},
                {"n_modes", tr.n_modes}, {"z_left", tr.z_left},
                {"z_right", tr.z_right}, {"entry_total_power", tr.entry_total_power},
                {"trans_mean", tr.trans_mean}, {"trans_std", tr.trans_std}};
  };
  for (const auto& tr : led.left) secs.push_back(sec_json(tr, "left"));
  for (const auto& tr : led.right) secs.push_back(sec_json(tr, "right"));
  j["sectors"] = secs;
  auto refl = json::array();
  for (const auto& r : led.reflections)
    refl.push_back({{"z", r.z}, {"mode", r.mode}, {"mean_power", r.mean_power},
                    {"variance", r.variance}});
  j["reflections"] = refl;
  j["transmitted_final"] = {{"mean", led.trans_mean_final}, {"std", led.trans_std_final}};
  j["reflected"] = {{"mean", led.refl_mean}, {"std", led.refl_std}};
  j["global_balance_residual_rel"] = led.global_balance_residual_rel;
  RightSummary rs = right_power_summary(led);
  j["right_going"] = {{"mean", rs.mean}, {"anticipated", rs.anticipated}};
  double universal = led.p0_left * s.layout.n_min / std::max(s.layout.n0, 1);
  j["universal_limit"] = {{"value", universal},
                          {"transmitted_over_universal",
                           universal > 0 ? led.trans_mean_final / universal : 0.0}};
  write_json(out_dir + "/summary.json", j);
  write_manifest(cfg, out_dir, "transport", cfg.mc.seed);
  return 0;
}

int run_montecarlo(const RunConfig& cfg, const std::string& base_dir,
                   const std::string& out_dir, const RunOverrides& ov) {
  RunConfig c = cfg;
  if (ov.has_seed) c.mc.seed = ov.seed;
  if (ov.has_trajectories) c.mc.n_trajectories = ov.trajectories;
  Setup s = make_setup(c, base_dir);
  McConfig mc = make_mc_config(c, s.layout);
  McContext ctx{s.phys, &s.profile, &s.model};

  Excitation exc = make_excitation(c, s.profile);
  SourceAmplitudes src = source_amplitudes(exc, c.physics.k, s.profile.evaluate(0.0).d,
                                           mc.n_modes);

  EnsembleStats stats = run_ensemble(ctx, mc, src.b);
  OdeOptions oopt;
  oopt.rtol = c.numerics.ode_rtol;
  oopt.atol = c.numerics.ode_atol;
  MomentPrediction pred = predict_moments(ctx, mc, src.b, oopt);
  CompareReport rep = compare_to_moments(stats, pred);

  CsvWriter ens(out_dir + "/ensemble.csv",
                "z,j,emp_mean_power,std_err,emp_mean_amp_re,emp_mean_amp_im");
  for (size_t ck = 0; ck < stats.z_checkpoints.size(); ++ck)
    for (int j = 0; j < stats.n_modes; ++j) {
      size_t idx = ck * stats.n_modes + j;
      ens.row(stats.z_checkpoints[ck], j + 1, stats.mean_power[idx], stats.se_power[idx],
              stats.mean_amp[idx].real(), stats.mean_amp[idx].imag());
    }

  json j;
  j["n_trajectories"] = stats.n_trajectories;
  j["z_checkpoints"] = rep.z;
  j["z_scores_mean_power"] = rep.z_mean;
  j["z_scores_var_power"] = rep.z_var;
  j["z_scores_sum_var"] = rep.z_sum_var;
  j["max_abs_z_mean"] = rep.max_abs_z_mean;
  j["max_abs_z_sum_var"] = rep.max_abs_z_sum_var;
  j["n_comparisons"] = rep.n_comparisons;
  j["pass_3sigma"] = rep.pass;
  j["multiple_comparison_note"] = rep.note;
  j["max_conservation_drift"] = stats.max_conservation_drift;
  write_json(out_dir + "/compare.json", j);
  write_manifest(c, out_dir, "montecarlo", mc.seed);
  // the statistical verdict lives in compare.json; a completed run is a success
  return 0;
}

int run_validate(const RunConfig& cfg, const std::string& base_dir,
                 const std::string& out_dir) {
  (void)base_dir;
  CsvWriter csv(out_dir + "/identities.csv", "identity,j,q,D,quadrature,closed_form,residual");
  double worst = 0;
  for (double d : {0.5, 1.0, 20.25})
    for (int j = 1; j <= 30; ++j)
      for (int q = 1; q <= 30; ++q)
        for (const auto& r : identity_residuals(j, q, d)) {
          csv.row(r.name, r.j, r.q, r.d, r.quadrature, r.closed_form, r.residual);
          worst = std::max(worst, r.residual);
        }
  json j;
  j["max_residual"] = worst;
  j["tolerance"] = 1e-9;
  j["pass"] = worst < 1e-9;
  write_json(out_dir + "/summary.json", j);
  write_manifest(cfg, out_dir, "validate", cfg.mc.seed);
  return worst < 1e-9 ? 0 : 1;
}

int run_subcommand(const std::string& name, const RunConfig& cfg, const std::string& base_dir,
                   const std::string& out_dir, const RunOverrides& ov) {
  std::filesystem::create_directories(out_dir);
  if (name == "layout") return run_layout(cfg, base_dir, out_dir);
  if (name == "coefficients") return run_coefficients(cfg, base_dir, out_dir);
  if (name == "transport") return run_transport(cfg, base_dir, out_dir);
  if (name == "montecarlo") return run_montecarlo(cfg, base_dir, out_dir, ov);
  if (name == "validate") return run_validate(cfg, base_dir, out_dir);
  throw ValidationError("UnknownSubcommand", name);
}

}  // namespace modeflux
