#pragma once

#include <optional>
#include <string>
#include <vector>

#include "octlts/config.hpp"
#include "octlts/mesh.hpp"
#include "octlts/perf_model.hpp"
#include "octlts/stepper.hpp"
#include "octlts/wave.hpp"

namespace octlts {

enum class TsMode { LTS = 0, GTS = 1, Compare = 2, CompareToEnd = 3 };

struct TimeseriesRow {
  std::uint64_t step = 0;  // finest steps taken
  double time = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
};

struct DiffRow {
  double time = 0.0;
  double linf_diff = 0.0;
};

struct WorkRow {
  int level = 0;  // relative, 0 = finest
  double alpha = 0.0;
  std::uint64_t steps = 0;  // counted block-point-steps
};

struct RunResult {
  TsMode mode = TsMode::LTS;
  std::vector<TimeseriesRow> timeseries;
  std::vector<DiffRow> diff;
  std::vector<WorkRow> work;
  PhaseTimes phases;      // LTS run, or GTS for mode 1
  PhaseTimes gts_phases;  // modes 2 and 3
  SpeedupEstimate estimate;
  double lts_seconds = 0.0;
  double gts_seconds = 0.0;
  double measured_speedup = 0.0;  // modes 2 and 3
  double dt_finest = 0.0;
  int rounds = 0;
  int delta_levels = 0;
  std::uint64_t exchanged_nodes = 0;
  ZipField final_state;
  ZipField final_gts;
};

WaveParams wave_params(const SolverConfig& cfg);
InitialData initial_data(const SolverConfig& cfg);
Domain domain_of(const SolverConfig& cfg);
// Wavelet-driven construction, 2:1 balance and weighted partition.
Mesh build_mesh(const SolverConfig& cfg);

// Finest step size and round count that land exactly on end_time.
struct TimeGrid {
  double dt_finest = 0.0;
  int rounds = 0;
};
TimeGrid time_grid(const SolverConfig& cfg, const Mesh& mesh);

// `rounds` overrides the count derived from end_time; mode 2 otherwise runs one.
RunResult run(const SolverConfig& cfg, const Mesh& mesh, TsMode mode,
              std::optional<int> rounds = std::nullopt);

// Writes timeseries.csv, phases.csv, work.csv, manifest.json and, by mode,
// gts_vs_lts.csv, phases_gts.csv, fields and VTK files. Returns files written.
std::vector<std::string> write_outputs(const SolverConfig& cfg, const Mesh& mesh,
                                       const RunResult& res, const std::string& dir);

void write_timeseries_csv(std::ostream& os, const std::vector<TimeseriesRow>& rows);
void write_diff_csv(std::ostream& os, const std::vector<DiffRow>& rows);
void write_phases_csv(std::ostream& os, int ranks, const PhaseTimes& p);
void write_work_csv(std::ostream& os, const std::vector<WorkRow>& rows);
// `rank,octants,weight`
void write_partition_csv(std::ostream& os, const PartitionMap& pmap);

}  // namespace octlts
