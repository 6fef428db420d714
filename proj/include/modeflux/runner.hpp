#pragma once

#include <string>

#include "modeflux/config.hpp"

namespace modeflux {

struct RunOverrides {
  bool has_seed = false;
  uint64_t seed = 0;
  bool has_trajectories = false;
  int trajectories = 0;
};

// Subcommand drivers; each writes its artifacts plus manifest.json into
// out_dir and returns the process exit status (0 ok, 1 validation failure,
// 2 numerical failure).
int run_layout(const RunConfig& cfg, const std::string& base_dir, const std::string& out_dir);
int run_coefficients(const RunConfig& cfg, const std::string& base_dir,
                     const std::string& out_dir);
int run_transport(const RunConfig& cfg, const std::string& base_dir,
                  const std::string& out_dir);
int run_montecarlo(const RunConfig& cfg, const std::string& base_dir,
                   const std::string& out_dir, const RunOverrides& ov = {});
int run_validate(const RunConfig& cfg, const std::string& base_dir,
                 const std::string& out_dir);

int run_subcommand(const std::string& name, const RunConfig& cfg, const std::string& base_dir,
                   const std::string& out_dir, const RunOverrides& ov = {});

// FNV-1a of the canonical config text; recorded in the manifest.
std::string config_hash(const RunConfig& cfg);

}  // namespace modeflux
