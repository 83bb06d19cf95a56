#include "octlts/run.hpp"

#include <chrono>
#include <cmath>

#include "octlts/wavelet.hpp"

namespace octlts {

WaveParams wave_params(const SolverConfig& cfg) {
  WaveParams p;
  p.nonlinear = cfg.nonlinear;
  p.k_chi = cfg.wave_k_chi;
  p.k_phi = cfg.wave_k_phi;
  return p;
}

InitialData initial_data(const SolverConfig& cfg) {
  InitialData id;
  id.profile = cfg.id_profile == "plane" ? InitialData::Profile::Plane : InitialData::Profile::Gaussian;
  id.center = cfg.id_center;
  id.width = cfg.id_width;
  id.amplitude = cfg.id_amplitude;
  id.axis = cfg.id_axis;
  return id;
}

Domain domain_of(const SolverConfig& cfg) { return Domain{cfg.domain_lo, cfg.domain_hi}; }

Mesh build_mesh(const SolverConfig& cfg) {
  cfg.validate();
  const Domain dom = domain_of(cfg);
  const InitialData id = initial_data(cfg);
  RefinePolicy pol;
  pol.tolerance = cfg.wavelet_tol;
  pol.coarsen_factor = cfg.coarsen_factor;
  pol.min_level = cfg.min_level;
  pol.max_level = cfg.maxdepth;
  const int dim = cfg.dimension;
  LinearOctree tree = construct_wavelet([&](const Point& x) { return id.chi(x, dim); }, dim,
                                        cfg.maxdepth, pol, cfg.points_per_octant, dom,
                                        sfc_kind_from_string(cfg.sfc));
  tree = balance_2to1(tree);
  const StepMode wm = cfg.partition_mode == "gts" ? StepMode::GTS : StepMode::LTS;
  PartitionMap pm = weighted_partition(tree, octant_weights(tree, wm), cfg.ranks);
  MeshParams mp;
  mp.points_per_octant = cfg.points_per_octant;
  mp.pad = cfg.pad;
  return Mesh(std::move(tree), mp, std::move(pm), dom);
}

TimeGrid time_grid(const SolverConfig& cfg, const Mesh& mesh) {
  TimeGrid tg;
  const int fine = 1 << (mesh.max_block_level() - mesh.min_block_level());
  const double dt_max = cfg.cfl * mesh.finest_spacing();
  if (cfg.end_time <= 0.0) {
    tg.dt_finest = dt_max;
    tg.rounds = 0;
    return tg;
  }
  const double span = dt_max * fine;
  tg.rounds = std::max(1, int(std::ceil(cfg.end_time / span * (1.0 - 1e-12))));
  tg.dt_finest = cfg.end_time / (double(tg.rounds) * fine);
  return tg;
}

namespace {

using Clock = std::chrono::steady_clock;

std::vector<WorkRow> work_rows(const Mesh& mesh, const WorkCounters& c) {
  const WorkHistogram h = histogram_from_mesh(mesh);
  std::vector<WorkRow> rows;
  const int lmax = mesh.max_block_level();
  for (int l = 0; l <= h.levels(); ++l) {
    rows.push_back({l, h.alpha[l], c.level_point_steps[std::size_t(lmax - l)]});
  }
  return rows;
}

}  // namespace

RunResult run(const SolverConfig& cfg, const Mesh& mesh, TsMode mode, std::optional<int> rounds) {
  RunResult res;
  res.mode = mode;
  const WaveSystem sys(wave_params(cfg));
  const InitialData id = initial_data(cfg);
  TimeGrid tg = time_grid(cfg, mesh);
  const StepperOptions opt{tableau_by_name(cfg.tableau), cfg.cfl, cfg.threads};
  if (rounds) {
    tg.rounds = *rounds;
    tg.dt_finest = cfg.cfl * mesh.finest_spacing();
  }
  if (mode == TsMode::Compare && !rounds) tg.rounds = 1;
  res.dt_finest = tg.dt_finest;
  res.rounds = tg.rounds;
  res.delta_levels = mesh.max_block_level() - mesh.min_block_level();
  res.estimate = estimate(histogram_from_mesh(mesh));
  const int fine = 1 << res.delta_levels;

  const bool analytic = id.profile == InitialData::Profile::Plane && !cfg.nonlinear;
  const int dim = cfg.dimension;
  auto measure = [&](const ZipField& u, double t, std::uint64_t step) {
    Norms n;
    if (analytic) {
      n = norms_vs(
          mesh, u, 0, [&](const Point& x) { return id.analytic_chi(x, t); },
          [&](const Point& x) {
            for (int d = 0; d < dim; ++d)
              if (d != id.axis && std::abs(x[d]) > cfg.analysis_halfwidth) return false;
            return true;
          });
    } else {
      n = norms_vs(mesh, u, 0, [](const Point&) { return 0.0; });
    }
    return TimeseriesRow{step, t, n.l2, n.linf};
  };

  const ZipField u0 = wave_initial_state(mesh, id);
  const bool need_lts = mode != TsMode::GTS;
  const bool need_gts = mode != TsMode::LTS;
  std::optional<Stepper> lts, gts;
  if (need_lts) {
    lts.emplace(mesh, sys, opt);
    lts->set_dt_finest(tg.dt_finest);
    lts->set_state(u0);
  }
  if (need_gts) {
    gts.emplace(mesh, sys, opt);
    gts->set_dt_finest(tg.dt_finest);
    gts->set_state(u0);
  }
  res.timeseries.push_back(measure(u0, 0.0, 0));
  if (need_lts && need_gts) res.diff.push_back({0.0, 0.0});

  for (int r = 0; r < tg.rounds; ++r) {
    const std::uint64_t step = std::uint64_t(r + 1) * std::uint64_t(fine);
    if (lts) {
      const auto t0 = Clock::now();
      lts->lts_round();
      res.lts_seconds += std::chrono::duration<double>(Clock::now() - t0).count();
    }
    if (gts) {
      const auto t0 = Clock::now();
      for (int i = 0; i < fine; ++i) gts->gts_step();
      res.gts_seconds += std::chrono::duration<double>(Clock::now() - t0).count();
    }
    const Stepper& primary = lts ? *lts : *gts;
    const ZipField u = primary.state();
    res.timeseries.push_back(measure(u, primary.time(), step));
    if (lts && gts) {
      res.diff.push_back({lts->time(), norms(u, gts->state(), 0).linf});
    }
  }

  const Stepper& primary = lts ? *lts : *gts;
  res.final_state = primary.state();
  res.phases = primary.counters().phases;
  res.work = work_rows(mesh, primary.counters());
  res.exchanged_nodes = primary.counters().exchanged_nodes;
  if (lts && gts) {
    res.final_gts = gts->state();
    res.gts_phases = gts->counters().phases;
    if (res.lts_seconds > 0.0) res.measured_speedup = res.gts_seconds / res.lts_seconds;
  }
  return res;
}

}  // namespace octlts
