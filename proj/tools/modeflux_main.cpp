#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "modeflux/errors.hpp"
#include "modeflux/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"modeflux - mode power transport in slowly varying random waveguides"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  modeflux::RunOverrides ov;
  uint64_t seed = 0;
  int trajectories = 0;

  const char* names[] = {"layout", "coefficients", "transport", "montecarlo", "validate"};
  const char* descs[] = {
      "turning points, sector table and mode counts",
      "coupling matrices, kappa, length scales and the forward-scattering check",
      "sector-chained moment transport and the power ledgers",
      "pre-limit stochastic ensemble and comparison against the moment system",
      "eigenfunction identity suite (quadrature vs closed forms)"};
  for (int i = 0; i < 5; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], descs[i]);
    sub->add_option("--config", config_path, "run configuration file")->required();
    sub->add_option("--out", out_dir, "output directory");
    if (std::string(names[i]) == "montecarlo") {
      sub->add_option("--seed", seed, "override mc.seed");
      sub->add_option("--trajectories", trajectories, "override mc.n_trajectories");
    }
  }

  CLI11_PARSE(app, argc, argv);
  CLI::App* sub = app.get_subcommands().front();

  try {
    modeflux::RunConfig cfg = modeflux::load_config(config_path);
    std::string base_dir = ".";
    if (auto slash = config_path.find_last_of('/'); slash != std::string::npos)
      base_dir = config_path.substr(0, slash);
    if (sub->get_name() == "montecarlo") {
      if (sub->count("--seed")) {
        ov.has_seed = true;
        ov.seed = seed;
      }
      if (sub->count("--trajectories")) {
        ov.has_trajectories = true;
        ov.trajectories = trajectories;
      }
    }
    int rc = modeflux::run_subcommand(sub->get_name(), cfg, base_dir, out_dir, ov);
    if (rc == 0)
      std::printf("%s: ok (outputs in %s)\n", sub->get_name().c_str(), out_dir.c_str());
    else
      std::printf("%s: completed with failures (status %d)\n", sub->get_name().c_str(), rc);
    return rc;
  } catch (const modeflux::ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 1;
  } catch (const modeflux::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
