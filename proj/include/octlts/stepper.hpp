#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <tuple>
#include <vector>

#include "octlts/mesh.hpp"
#include "octlts/rk.hpp"
#include "octlts/system.hpp"

namespace octlts {

// Level l steps at fine index i iff i mod 2^(l_max - l) == 0.
struct TimeLevelSchedule {
  int l_min = 0;
  int l_max = 0;

  int delta_levels() const { return l_max - l_min; }
  int fine_steps() const { return 1 << delta_levels(); }
  std::int64_t ticks(int level) const { return std::int64_t{1} << (l_max - level); }
  bool steps(int level, int i) const { return i % ticks(level) == 0; }
  // Coarsest level stepping at fine index i.
  int min_active_level(int i) const;
  std::vector<std::size_t> active_blocks(const Mesh& mesh, int i) const;
};

struct PhaseTimes {
  double blk_sync = 0.0;
  double time_interp = 0.0;
  double rhs = 0.0;
  double comm = 0.0;
};

struct WorkCounters {
  std::vector<std::uint64_t> block_steps;
  std::vector<std::uint64_t> block_rhs;        // stage evaluations
  std::vector<std::uint64_t> rank_leaf_steps;  // leaves advanced, per rank
  std::vector<std::uint64_t> level_point_steps;  // by absolute leaf level
  std::uint64_t point_steps = 0;               // sum of steps x interior points
  std::uint64_t pseudo_steps = 0;
  std::uint64_t exchanged_nodes = 0;
  PhaseTimes phases;
};

struct StepperOptions {
  ButcherTableau tableau = kutta_rk3();
  double cfl = 0.25;
  int threads = 1;
};

class Stepper {
 public:
  Stepper(const Mesh& mesh, const System& system, StepperOptions opt = {});

  const Mesh& mesh() const { return mesh_; }
  const TimeLevelSchedule& schedule() const { return sched_; }
  const StepperOptions& options() const { return opt_; }

  void set_state(const ZipField& u, double t = 0.0);
  ZipField state() const;
  double time() const;
  bool synchronized() const { return fine_index_ == 0; }

  // cfl times the finest node spacing.
  double max_dt() const;
  double dt_finest() const { return dt_f_; }
  // Refuses steps above max_dt.
  void set_dt_finest(double dt);

  // One step of every block with the finest step size.
  void gts_step();
  // One coarse round: 2^(l_max - l_min) fine steps with per-level step sizes.
  void lts_round();
  // Forward Euler rounds where coarse blocks supply half-step pseudo states.
  void lts_single_stage_round();
  // Advances one fine index of the current round (leaves blocks unsynchronized).
  void lts_fine_step();
  // Start time of the current step of block b, and its step size.
  double block_time(std::size_t b) const;
  double block_dt(std::size_t b) const;

  const WorkCounters& counters() const { return counters_; }
  void reset_counters();

 private:
  using CoeffKey = std::tuple<std::int64_t, std::int64_t, std::int64_t, int>;

  void check_dt() const;
  void step_blocks(const std::vector<std::size_t>& active, bool uniform, int fine_index);
  const std::vector<double>& coefficients(std::int64_t owner_ticks, std::int64_t shift_ticks,
                                          std::int64_t ticks, int stage);
  std::int64_t ticks_of(std::size_t b, bool uniform) const;

  const Mesh& mesh_;
  const System& sys_;
  StepperOptions opt_;
  TimeLevelSchedule sched_;
  int nvar_ = 1;
  int p_ = 1;
  double dt_f_ = 0.0;
  double t_round_ = 0.0;  // time at fine index 0 of the current round
  int fine_index_ = 0;
  std::vector<std::int64_t> block_t0_;     // step start, ticks since round start
  std::vector<std::int64_t> block_ticks_;  // step length of the current step
  std::vector<LocalField> U_, U0_;
  std::vector<std::vector<LocalField>> K_;  // [rank][stage]
  std::vector<ExchangeProgram> programs_;   // by min active level
  std::map<CoeffKey, std::vector<double>> coeff_cache_;
  std::vector<std::vector<std::uint32_t>> readers_;  // blocks reading from each block
  WorkCounters counters_;
};

// Free-function forms operating on a zip field.
ZipField gts_step(const ZipField& u, double dt, const Mesh& mesh, const System& sys,
                  const ButcherTableau& tab, double cfl = 0.25, int threads = 1);
ZipField lts_coarse_step(const ZipField& u, double dt_finest, const Mesh& mesh, const System& sys,
                         const ButcherTableau& tab, double cfl = 0.25, int threads = 1);
ZipField lts_single_stage_step(const ZipField& u, double dt_finest, const Mesh& mesh,
                               const System& sys, double cfl = 0.25, int threads = 1);

// One explicit RK step of the scalar ODE u' = f(t, u).
double rk_scalar_step(const ButcherTableau& tab, const std::function<double(double, double)>& f,
                      double t, double u, double dt);

}  // namespace octlts
