#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "octlts/errors.hpp"

namespace octlts {

struct SolverConfig {
  int dimension = 3;
  int maxdepth = 6;
  int min_level = 2;
  double wavelet_tol = 1e-5;
  double coarsen_factor = 0.1;
  double domain_lo = -10.0;
  double domain_hi = 10.0;
  double cfl = 0.25;
  int points_per_octant = 7;
  int pad = 2;
  std::string tableau = "rk3";
  bool nonlinear = false;
  double end_time = 1.0;
  int ranks = 1;
  std::string sfc = "hilbert";
  std::string partition_mode = "lts";
  int threads = 1;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  int ts_mode = 0;
  double wave_k_chi = 1.0;
  double wave_k_phi = 2.0;
  std::string id_profile = "gaussian";
  std::array<double, 3> id_center{0.0, 0.0, 0.0};
  double id_width = 1.0;
  double id_amplitude = 1.0;
  int id_axis = 0;
  // Error against the plane solution is measured where |x_d| <= this for d != axis.
  double analysis_halfwidth = 5.0;
  bool write_vtk = false;
  bool write_fields = false;

  // Throws ConfigError naming the first bad key.
  void validate() const;
};

// Reads a JSON document; unknown keys are rejected. Environment variables
// LTS_<KEY> (upper case) override file values.
SolverConfig parse_config(const std::string& path, bool use_env = true);
SolverConfig parse_config_string(const std::string& text, bool use_env = true);
std::string dump_config(const SolverConfig& cfg);
std::string config_hash(const SolverConfig& cfg);

}  // namespace octlts
