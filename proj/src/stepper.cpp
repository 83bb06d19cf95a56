#include "octlts/stepper.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <string>

#include "octlts/parallel.hpp"

namespace octlts {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Scratch {
  std::vector<double> src, padded, out;
  std::vector<const double*> in_ptr;
  std::vector<double*> out_ptr;
  double t_interp = 0.0, t_sync = 0.0, t_rhs = 0.0;
};

}  // namespace

std::vector<std::string> System::var_names() const {
  std::vector<std::string> names;
  for (int v = 0; v < num_vars(); ++v) names.push_back("u" + std::to_string(v));
  return names;
}

void DecaySystem::rhs(const BlockGeometry& g, double, const double* const* in,
                      double* const* out) const {
  for (int v = 0; v < vars_; ++v) {
    const double* f = in[v];
    double* o = out[v];
    for_each_interior(g, [&](std::size_t ii, std::size_t p, int, int, int) { o[ii] = -rate_ * f[p]; });
  }
}

void ZeroSystem::rhs(const BlockGeometry& g, double, const double* const*, double* const* out) const {
  for (int v = 0; v < vars_; ++v) std::fill(out[v], out[v] + g.interior_size(), 0.0);
}

int TimeLevelSchedule::min_active_level(int i) const {
  if (i % fine_steps() == 0) return l_min;
  const int tz = std::countr_zero(unsigned(i));
  return std::max(l_min, l_max - tz);
}

std::vector<std::size_t> TimeLevelSchedule::active_blocks(const Mesh& mesh, int i) const {
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < mesh.num_blocks(); ++b)
    if (steps(mesh.blocks()[b].leaf_level, i)) out.push_back(b);
  return out;
}

Stepper::Stepper(const Mesh& mesh, const System& system, StepperOptions opt)
    : mesh_(mesh), sys_(system), opt_(std::move(opt)) {
  opt_.tableau.validate();
  if (!(opt_.cfl > 0.0)) throw InvalidInput("cfl must be positive");
  nvar_ = sys_.num_vars();
  p_ = opt_.tableau.stages;
  sched_.l_min = mesh_.min_block_level();
  sched_.l_max = mesh_.max_block_level();
  if (sched_.delta_levels() > 30) throw InvalidInput("stepper: too many time levels");
  block_t0_.assign(mesh_.num_blocks(), 0);
  block_ticks_.assign(mesh_.num_blocks(), 1);
  const int R = mesh_.ranks();
  U_.resize(R);
  U0_.resize(R);
  K_.resize(R);
  for (int r = 0; r < R; ++r) {
    const std::size_t n = mesh_.rank(r).local_size();
    U_[r] = LocalField(nvar_, n);
    U0_[r] = LocalField(nvar_, n);
    K_[r].assign(p_, LocalField(nvar_, n));
  }
  const SyncMaps maps = build_sync_maps(mesh_);
  readers_.assign(mesh_.num_blocks(), {});
  for (const auto& e : maps.full) readers_[e.sender].push_back(e.receiver);
  if (R > 1) {
    for (int m = maps.l_min; m <= maps.l_max; ++m) {
      std::vector<SyncEntry> entries;
      for (std::uint32_t idx : maps.for_min_level(m)) entries.push_back(maps.full[idx]);
      programs_.push_back(mesh_.program_for(entries));
    }
  }
  dt_f_ = max_dt();
  reset_counters();
}

void Stepper::reset_counters() {
  counters_ = WorkCounters{};
  counters_.block_steps.assign(mesh_.num_blocks(), 0);
  counters_.block_rhs.assign(mesh_.num_blocks(), 0);
  counters_.rank_leaf_steps.assign(std::size_t(mesh_.ranks()), 0);
  counters_.level_point_steps.assign(std::size_t(mesh_.max_depth() + 1), 0);
}

void Stepper::set_state(const ZipField& u, double t) {
  if (u.nvar != nvar_) throw InvalidInput("set_state: variable count does not match the system");
  U_ = mesh_.scatter(u);
  U0_ = U_;
  for (auto& ks : K_)
    for (auto& k : ks) std::fill(k.values.begin(), k.values.end(), 0.0);
  t_round_ = t;
  fine_index_ = 0;
  std::fill(block_t0_.begin(), block_t0_.end(), 0);
}

ZipField Stepper::state() const { return mesh_.gather(U_); }

double Stepper::time() const { return t_round_ + double(fine_index_) * dt_f_; }

double Stepper::max_dt() const { return opt_.cfl * mesh_.finest_spacing(); }

void Stepper::set_dt_finest(double dt) {
  if (!(dt > 0.0)) throw InvalidInput("timestep must be positive");
  if (dt > max_dt() * (1.0 + 1e-12)) {
    throw InvalidInput("CFL violation: dt " + std::to_string(dt) + " exceeds cfl * dx_finest = " +
                       std::to_string(max_dt()));
  }
  if (!synchronized()) throw InvalidState("set_dt_finest: blocks are not synchronized");
  if (dt != dt_f_) coeff_cache_.clear();
  dt_f_ = dt;
}

double Stepper::block_time(std::size_t b) const {
  return t_round_ + double(block_t0_[b]) * dt_f_;
}

double Stepper::block_dt(std::size_t b) const { return double(block_ticks_[b]) * dt_f_; }

std::int64_t Stepper::ticks_of(std::size_t b, bool uniform) const {
  return uniform ? 1 : sched_.ticks(mesh_.blocks()[b].leaf_level);
}

const std::vector<double>& Stepper::coefficients(std::int64_t owner_ticks,
                                                 std::int64_t shift_ticks, std::int64_t ticks,
                                                 int stage) {
  const CoeffKey key{owner_ticks, shift_ticks, ticks, stage};
  auto it = coeff_cache_.find(key);
  if (it != coeff_cache_.end()) return it->second;
  const ButcherTableau& tab = opt_.tableau;
  const double dtb = double(ticks) * dt_f_;
  std::vector<double> e(std::size_t(p_), 0.0);
  if (owner_ticks == ticks && shift_ticks == 0) {
    for (int j = 0; j < stage; ++j) e[j] = dtb * tab.a(stage, j);
  } else {
    const double dto = double(owner_ticks) * dt_f_;
    const double delta = double(shift_ticks) * dt_f_;
    Matrix T = stage_transfer(tab, dto, dtb, delta);
    if (shift_ticks == 0) {
      for (int i = 0; i < p_; ++i)
        for (int j = i + 1; j < p_; ++j) T(i, j) = 0.0;
    }
    if (shift_ticks != 0) e = value_shift(tab, dto, delta);
    for (int k = 0; k < stage; ++k)
      for (int j = 0; j < p_; ++j) e[j] += dtb * tab.a(stage, k) * T(k, j);
  }
  return coeff_cache_.emplace(key, std::move(e)).first->second;
}

void Stepper::step_blocks(const std::vector<std::size_t>& active, bool uniform, int fine_index) {
  const int R = mesh_.ranks();
  const ButcherTableau& tab = opt_.tableau;
  for (std::size_t b : active) {
    block_t0_[b] = fine_index;
    block_ticks_[b] = ticks_of(b, uniform);
    const int r = mesh_.blocks()[b].owner_rank;
    const UnzipPlan& plan = mesh_.plan(b);
    for (int v = 0; v < nvar_; ++v) {
      const double* u = U_[r].var(v);
      double* u0 = U0_[r].var(v);
      for (std::uint32_t l : plan.owned_local) u0[l] = u[l];
    }
    const std::uint64_t pts = mesh_.interior_points(b);
    const std::uint64_t leaves = mesh_.blocks()[b].last_leaf - mesh_.blocks()[b].first_leaf;
    counters_.block_steps[b] += 1;
    counters_.block_rhs[b] += std::uint64_t(p_);
    counters_.point_steps += pts;
    counters_.level_point_steps[std::size_t(mesh_.blocks()[b].leaf_level)] += pts;
    counters_.rank_leaf_steps[std::size_t(r)] += leaves;
  }

  const ExchangeProgram* prog = nullptr;
  if (R > 1) {
    prog = uniform ? &mesh_.full_program()
                   : &programs_[std::size_t(sched_.min_active_level(fine_index) - sched_.l_min)];
  }
  std::vector<std::vector<LocalField*>> fields(static_cast<std::size_t>(R));
  for (int r = 0; r < R; ++r) {
    fields[r].push_back(&U0_[r]);
    for (auto& k : K_[r]) fields[r].push_back(&k);
  }

  const int workers = std::max(1, std::min<int>(opt_.threads, int(active.size())));
  std::vector<Scratch> scratch(static_cast<std::size_t>(workers));
  // coefficient rows per active block and owner slot
  std::vector<std::vector<const double*>> rows(active.size());

  for (int s = 0; s < p_; ++s) {
    if (prog && !prog->pairs.empty()) {
      const auto t0 = Clock::now();
      mesh_.exchange_fields(*prog, fields, opt_.threads);
      counters_.exchanged_nodes += prog->nodes();
      counters_.phases.comm += seconds_since(t0);
    }
    for (std::size_t a = 0; a < active.size(); ++a) {
      const std::size_t b = active[a];
      const UnzipPlan& plan = mesh_.plan(b);
      rows[a].resize(plan.owner_blocks.size());
      for (std::size_t o = 0; o < plan.owner_blocks.size(); ++o) {
        const std::uint32_t ob = plan.owner_blocks[o];
        rows[a][o] = coefficients(block_ticks_[ob], block_t0_[b] - block_t0_[ob], block_ticks_[b], s)
                         .data();
      }
    }
    const double cs = tab.node(s);
    parallel_for(active.size(), workers, [&](std::size_t a, int w) {
      Scratch& sc = scratch[std::size_t(w)];
      const std::size_t b = active[a];
      const int r = mesh_.blocks()[b].owner_rank;
      const UnzipPlan& plan = mesh_.plan(b);
      const BlockGeometry g = mesh_.geometry(b);
      const std::size_t np = g.padded_size();
      const std::size_t ni = g.interior_size();
      const std::size_t ns = plan.source_local.size();
      sc.src.resize(ns);
      sc.padded.resize(np * std::size_t(nvar_));
      sc.out.resize(ni * std::size_t(nvar_));
      sc.in_ptr.resize(std::size_t(nvar_));
      sc.out_ptr.resize(std::size_t(nvar_));
      for (int v = 0; v < nvar_; ++v) {
        auto t0 = Clock::now();
        const double* u0 = U0_[r].var(v);
        for (std::size_t k = 0; k < ns; ++k) {
          const std::uint32_t l = plan.source_local[k];
          const double* e = rows[a][plan.source_owner[k]];
          double y = u0[l];
          for (int j = 0; j < p_; ++j)
            if (e[j] != 0.0) y += e[j] * K_[r][j].var(v)[l];
          sc.src[k] = y;
        }
        const auto t1 = Clock::now();
        mesh_.fill_padded(b, sc.src.data(), sc.padded.data() + std::size_t(v) * np);
        sc.t_interp += std::chrono::duration<double>(t1 - t0).count();
        sc.t_sync += seconds_since(t1);
        sc.in_ptr[v] = sc.padded.data() + std::size_t(v) * np;
        sc.out_ptr[v] = sc.out.data() + std::size_t(v) * ni;
      }
      const auto t2 = Clock::now();
      const double t = t_round_ + double(block_t0_[b]) * dt_f_ + cs * double(block_ticks_[b]) * dt_f_;
      sys_.rhs(g, t, sc.in_ptr.data(), sc.out_ptr.data());
      sc.t_rhs += seconds_since(t2);
      for (int v = 0; v < nvar_; ++v) {
        double* ks = K_[r][s].var(v);
        const double* o = sc.out_ptr[v];
        for (std::size_t i = 0; i < plan.owned_interior.size(); ++i) ks[plan.owned_local[i]] = o[plan.owned_interior[i]];
      }
    });
  }

  parallel_for(active.size(), workers, [&](std::size_t a, int) {
    const std::size_t b = active[a];
    const int r = mesh_.blocks()[b].owner_rank;
    const UnzipPlan& plan = mesh_.plan(b);
    const double dtb = double(block_ticks_[b]) * dt_f_;
    std::vector<double> wdt(static_cast<std::size_t>(p_));
    for (int j = 0; j < p_; ++j) wdt[j] = dtb * tab.w[j];
    for (int v = 0; v < nvar_; ++v) {
      double* u = U_[r].var(v);
      const double* u0 = U0_[r].var(v);
      for (std::uint32_t l : plan.owned_local) {
        double y = u0[l];
        for (int j = 0; j < p_; ++j) y += wdt[j] * K_[r][j].var(v)[l];
        u[l] = y;
      }
    }
  });
  for (const Scratch& sc : scratch) {
    counters_.phases.time_interp += sc.t_interp / workers;
    counters_.phases.blk_sync += sc.t_sync / workers;
    counters_.phases.rhs += sc.t_rhs / workers;
  }
}

void Stepper::check_dt() const {
  if (dt_f_ > max_dt() * (1.0 + 1e-12)) throw InvalidInput("CFL violation");
}

void Stepper::gts_step() {
  if (!synchronized()) throw InvalidState("gts_step: blocks are not synchronized");
  check_dt();
  std::vector<std::size_t> all(mesh_.num_blocks());
  for (std::size_t b = 0; b < all.size(); ++b) all[b] = b;
  step_blocks(all, true, 0);
  t_round_ += dt_f_;
  std::fill(block_t0_.begin(), block_t0_.end(), 0);
}

void Stepper::lts_fine_step() {
  check_dt();
  const auto active = sched_.active_blocks(mesh_, fine_index_);
  if (p_ == 1) {
    std::vector<char> is_active(mesh_.num_blocks(), 0);
    for (std::size_t b : active) is_active[b] = 1;
    for (std::size_t b = 0; b < mesh_.num_blocks(); ++b) {
      if (is_active[b]) continue;
      const bool helps = std::any_of(readers_[b].begin(), readers_[b].end(),
                                     [&](std::uint32_t r) { return is_active[r] != 0; });
      if (helps) ++counters_.pseudo_steps;
    }
  }
  step_blocks(active, false, fine_index_);
  if (++fine_index_ == sched_.fine_steps()) {
    t_round_ += double(sched_.fine_steps()) * dt_f_;
    fine_index_ = 0;
    std::fill(block_t0_.begin(), block_t0_.end(), 0);
  }
}

void Stepper::lts_round() {
  if (!synchronized()) throw InvalidState("lts_round: blocks are not synchronized at entry");
  for (int i = 0; i < sched_.fine_steps(); ++i) lts_fine_step();
}

void Stepper::lts_single_stage_round() {
  if (p_ != 1) {
    throw UnsupportedScheme("single-stage local timestepping needs a one-stage scheme, got '" +
                            opt_.tableau.name + "'");
  }
  lts_round();
}

ZipField gts_step(const ZipField& u, double dt, const Mesh& mesh, const System& sys,
                  const ButcherTableau& tab, double cfl, int threads) {
  Stepper st(mesh, sys, {tab, cfl, threads});
  st.set_dt_finest(dt);
  st.set_state(u);
  st.gts_step();
  return st.state();
}

ZipField lts_coarse_step(const ZipField& u, double dt_finest, const Mesh& mesh, const System& sys,
                         const ButcherTableau& tab, double cfl, int threads) {
  Stepper st(mesh, sys, {tab, cfl, threads});
  st.set_dt_finest(dt_finest);
  st.set_state(u);
  st.lts_round();
  return st.state();
}

ZipField lts_single_stage_step(const ZipField& u, double dt_finest, const Mesh& mesh,
                               const System& sys, double cfl, int threads) {
  Stepper st(mesh, sys, {forward_euler(), cfl, threads});
  st.set_dt_finest(dt_finest);
  st.set_state(u);
  st.lts_single_stage_round();
  return st.state();
}

double rk_scalar_step(const ButcherTableau& tab, const std::function<double(double, double)>& f,
                      double t, double u, double dt) {
  std::vector<double> k(static_cast<std::size_t>(tab.stages));
  for (int i = 0; i < tab.stages; ++i) {
    double y = u;
    for (int j = 0; j < i; ++j)
      if (tab.a(i, j) != 0.0) y += dt * tab.a(i, j) * k[j];
    k[i] = f(t + tab.node(i) * dt, y);
  }
  double out = u;
  for (int i = 0; i < tab.stages; ++i) out += dt * tab.w[i] * k[i];
  return out;
}

}  // namespace octlts
