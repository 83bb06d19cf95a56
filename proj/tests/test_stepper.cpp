#include <doctest.h>

#include <cmath>
#include <map>

#include "octlts/perf_model.hpp"
#include "octlts/stepper.hpp"
#include "octlts/wave.hpp"
#include "support.hpp"

using namespace octlts;
using namespace octlts::testing;

namespace {

// u_t = lap u, second-order five/seven-point stencil.
class Diffusion : public System {
 public:
  int num_vars() const override { return 1; }
  void rhs(const BlockGeometry& g, double, const double* const* in, double* const* out) const override {
    const std::size_t m = std::size_t(g.n + 2 * g.pad);
    const std::size_t st[3] = {1, m, m * m};
    const double ih2 = 1.0 / (g.h * g.h);
    for_each_interior(g, [&](std::size_t ii, std::size_t p, int, int, int) {
      double s = 0.0;
      for (int d = 0; d < g.dim; ++d) s += in[0][p - st[d]] + in[0][p + st[d]] - 2.0 * in[0][p];
      out[0][ii] = s * ih2;
    });
  }
};

ZipField bump(const Mesh& m, int nvar = 1) {
  ZipField u = m.make_zip(nvar);
  m.sample(u, [&](const Point& x, double* v) {
    for (int i = 0; i < nvar; ++i) v[i] = std::exp(-0.05 * (x[0] * x[0] + 2 * x[1] * x[1] + x[2] * x[2])) * (1 + i);
  });
  return u;
}

double linf(const ZipField& a, const ZipField& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) d = std::max(d, std::abs(a.values[i] - b.values[i]));
  return d;
}

// Two-level mesh: the lower-left quadrant one level finer.
LinearOctree two_level(int dim, int max_depth, int base) {
  return balance_2to1(construct(
      [=](const OctKey& k) {
        if (k.level < base) return true;
        if (k.level > base) return false;
        for (int d = 0; d < dim; ++d)
          if (k.anchor[d] >= (1u << (max_depth - 1))) return false;
        return true;
      },
      dim, max_depth));
}

}  // namespace

TEST_CASE("schedule reproduces the fine-step pattern") {
  TimeLevelSchedule s{3, 5};
  CHECK(s.fine_steps() == 4);
  CHECK(s.min_active_level(0) == 3);
  CHECK(s.min_active_level(1) == 5);
  CHECK(s.min_active_level(2) == 4);
  CHECK(s.min_active_level(3) == 5);
  for (int l = 3; l <= 5; ++l) {
    int n = 0;
    for (int i = 0; i < s.fine_steps(); ++i) {
      n += s.steps(l, i);
      CHECK(s.steps(l, i) == (l >= s.min_active_level(i)));
    }
    CHECK(n == (1 << (l - 3)));
  }
}

TEST_CASE("scalar RK3 example and order") {
  const auto f = [](double, double u) { return -u; };
  CHECK(rk_scalar_step(kutta_rk3(), f, 0.0, 1.0, 0.1) == doctest::Approx(0.9048333333333333).epsilon(1e-15));
  std::vector<double> err;
  for (double dt : {0.1, 0.05, 0.025}) {
    double u = 1.0;
    const int n = int(std::lround(1.0 / dt));
    for (int i = 0; i < n; ++i) u = rk_scalar_step(kutta_rk3(), f, i * dt, u, dt);
    err.push_back(std::abs(u - std::exp(-1.0)));
  }
  for (int i = 0; i < 2; ++i) CHECK(std::log2(err[i] / err[i + 1]) >= 2.9);
}

TEST_CASE("GTS with zero right-hand side leaves the state unchanged") {
  const Mesh m(balance_2to1(random_tree(4, 2, 5, 0.3, 2)));
  const ZeroSystem zero(2);
  const ZipField u = bump(m, 2);
  const ZipField v = gts_step(u, m.finest_spacing() * 0.25, m, zero, kutta_rk3());
  CHECK(v.values == u.values);
}

TEST_CASE("GTS of a pointwise ODE matches the scalar integrator on every node") {
  const Mesh m(two_level(2, 4, 2));
  const DecaySystem decay(1.0);
  ZipField u = bump(m);
  const double dt = m.finest_spacing() * 0.25;
  const ZipField v = gts_step(u, dt, m, decay, kutta_rk3());
  for (std::size_t i = 0; i < u.nodes; ++i) {
    const double e = rk_scalar_step(kutta_rk3(), [](double, double y) { return -y; }, 0.0, u.at(0, i), dt);
    CHECK(v.at(0, i) == e);
  }
}

TEST_CASE("GTS on a uniform tree equals a dense-grid reference bit for bit") {
  const auto t = balance_2to1(uniform_tree(2, 3, 3));
  const Domain dom{-4.0, 4.0};
  const Mesh m(t, {}, std::nullopt, dom);
  REQUIRE(m.num_blocks() == 1);
  const Diffusion sys;
  const auto tab = kutta_rk3();
  StepperOptions opt;
  opt.tableau = tab;
  Stepper st(m, sys, opt);
  const double h = m.finest_spacing();
  const double dt = 0.2 * h * h;
  st.set_dt_finest(dt);

  const int n = m.blocks()[0].interior_dims;
  const auto& nodes = m.block_nodes(0);
  ZipField u = m.make_zip(1);
  m.sample(u, [](const Point& x, double* v) { v[0] = std::cos(0.3 * x[0]) * std::exp(-0.1 * x[1] * x[1]); });
  st.set_state(u);

  // dense reference with a zero halo of one point
  const int M = n + 2;
  std::vector<double> U(std::size_t(M) * M, 0.0);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) U[std::size_t(j + 1) * M + (i + 1)] = u.at(0, nodes[std::size_t(j) * n + i]);
  const double ih2 = 1.0 / (h * h);
  auto lap = [&](const std::vector<double>& y, std::vector<double>& out) {
    for (int j = 1; j <= n; ++j)
      for (int i = 1; i <= n; ++i) {
        const std::size_t p = std::size_t(j) * M + i;
        double s = 0.0;
        s += y[p - 1] + y[p + 1] - 2.0 * y[p];
        s += y[p - M] + y[p + M] - 2.0 * y[p];
        out[p] = s * ih2;
      }
  };
  for (int step = 0; step < 5; ++step) {
    std::vector<std::vector<double>> K(tab.stages, std::vector<double>(U.size(), 0.0));
    for (int s = 0; s < tab.stages; ++s) {
      std::vector<double> Y = U;
      for (int j = 0; j < s; ++j) {
        const double e = dt * tab.a(s, j);
        if (e == 0.0) continue;
        for (int jj = 1; jj <= n; ++jj)
          for (int i = 1; i <= n; ++i) {
            const std::size_t p = std::size_t(jj) * M + i;
            Y[p] = Y[p] + e * K[j][p];
          }
      }
      lap(Y, K[s]);
    }
    for (int j = 0; j < tab.stages; ++j) {
      const double e = dt * tab.w[j];
      for (int jj = 1; jj <= n; ++jj)
        for (int i = 1; i <= n; ++i) {
          const std::size_t p = std::size_t(jj) * M + i;
          U[p] = U[p] + e * K[j][p];
        }
    }
    st.gts_step();
  }
  const ZipField got = st.state();
  double worst = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      worst = std::max(worst, std::abs(got.at(0, nodes[std::size_t(j) * n + i]) - U[std::size_t(j + 1) * M + i + 1]));
  CHECK(worst == 0.0);
}

TEST_CASE("uniform tree: one LTS round equals one GTS step bit-exact") {
  const Mesh m(balance_2to1(uniform_tree(2, 4, 3)));
  const WaveSystem wave(WaveParams{});
  ZipField u = bump(m, 2);
  const double dt = m.finest_spacing() * 0.25;
  for (const auto& tab : {forward_euler(), midpoint_rk2(), kutta_rk3(), classic_rk4()}) {
    const auto a = gts_step(u, dt, m, wave, tab);
    const auto b = lts_coarse_step(u, dt, m, wave, tab);
    CHECK(a.values == b.values);
  }
  CHECK(lts_single_stage_step(u, dt, m, wave).values == gts_step(u, dt, m, wave, forward_euler()).values);
}

TEST_CASE("block-step counts per round follow the level rule and the work model") {
  for (std::uint64_t s = 0; s < 8; ++s) {
    const int dim = 2 + int(s % 2);
    const auto t = random_balanced(s + 40, dim, dim == 2 ? 6 : 4, 0.3, 1);
    const Mesh m(t, {}, weighted_partition(t, octant_weights(t, StepMode::LTS), 1 + int(s % 3)));
    const DecaySystem decay;
    Stepper st(m, decay);
    st.set_state(bump(m));
    st.lts_round();
    const auto& c = st.counters();
    for (std::size_t b = 0; b < m.num_blocks(); ++b)
      CHECK(c.block_steps[b] == (1u << (m.blocks()[b].leaf_level - m.min_block_level())));
    const auto est = estimate(histogram_from_mesh(m));
    CHECK(double(c.point_steps) == est.w_lts);

    st.reset_counters();
    for (int i = 0; i < (1 << (m.max_block_level() - m.min_block_level())); ++i) st.gts_step();
    CHECK(double(st.counters().point_steps) == est.w_gts);
  }
}

TEST_CASE("three levels with one block each give counts 4, 2, 1") {
  // 1D-like stack in 2D: levels 1, 2, 3 blocks
  const auto t = balance_2to1(construct(
      [](const OctKey& k) {
        if (k.level == 0) return true;
        if (k.level == 1) return k.anchor[0] == 0 && k.anchor[1] == 0;
        if (k.level == 2) return k.anchor[0] == 0 && k.anchor[1] == 0;
        return false;
      },
      2, 4));
  const Mesh m(t);
  const DecaySystem decay;
  Stepper st(m, decay);
  st.set_state(bump(m));
  st.lts_round();
  std::map<int, std::uint64_t> by_level;
  for (std::size_t b = 0; b < m.num_blocks(); ++b) by_level[m.blocks()[b].leaf_level] += st.counters().block_steps[b];
  std::map<int, std::size_t> blocks_at;
  for (const auto& b : m.blocks()) ++blocks_at[b.leaf_level];
  REQUIRE(by_level.size() == 3);
  CHECK(by_level[3] == 4 * blocks_at[3]);
  CHECK(by_level[2] == 2 * blocks_at[2]);
  CHECK(by_level[1] == 1 * blocks_at[1]);
}

TEST_CASE("adjacent blocks stay within the finer step in time") {
  const auto t = random_balanced(17, 2, 6, 0.35, 2);
  const Mesh m(t);
  const WaveSystem wave(WaveParams{});
  Stepper st(m, wave);
  st.set_state(bump(m, 2));
  const int fine = st.schedule().fine_steps();
  for (int i = 0; i < fine; ++i) {
    st.lts_fine_step();
    for (std::size_t a = 0; a < m.num_blocks(); ++a)
      for (std::size_t b = a + 1; b < m.num_blocks(); ++b) {
        if (!m.blocks()[a].root.touches(m.blocks()[b].root)) continue;
        const double bound = std::min(st.block_dt(a), st.block_dt(b));
        CHECK(std::abs(st.block_time(a) - st.block_time(b)) <= bound * (1 + 1e-12));
      }
    if (i + 1 < fine) CHECK_FALSE(st.synchronized());
  }
  CHECK(st.synchronized());
  CHECK(st.time() == doctest::Approx(fine * st.dt_finest()));
}

TEST_CASE("stepper refusals") {
  const Mesh m(two_level(2, 4, 2));
  const WaveSystem wave(WaveParams{});
  Stepper st(m, wave);
  CHECK_THROWS_AS(st.set_dt_finest(st.max_dt() * 1.01), InvalidInput);
  st.set_state(bump(m, 2));
  st.lts_fine_step();
  CHECK_THROWS_AS(st.lts_round(), InvalidState);
  CHECK_THROWS_AS(st.gts_step(), InvalidState);
  Stepper rk3(m, wave);
  rk3.set_state(bump(m, 2));
  CHECK_THROWS_AS(rk3.lts_single_stage_round(), UnsupportedScheme);
}

TEST_CASE("single-stage LTS") {
  // coarse, medium and fine blocks in a row
  const auto t = balance_2to1(construct(
      [](const OctKey& k) {
        if (k.level == 0) return true;
        if (k.level == 1) return k.anchor[0] == 0 && k.anchor[1] == 0;
        if (k.level == 2) return k.anchor[0] == 0 && k.anchor[1] == 0;
        return false;
      },
      2, 4));
  const Diffusion sys;
  const Domain dom{-3.0, 3.0};
  const Mesh m(t, {}, std::nullopt, dom);
  StepperOptions opt;
  opt.tableau = forward_euler();
  const double h = m.finest_spacing();

  SUBCASE("finer blocks take twice the steps and coarse blocks supply pseudo steps") {
    Stepper st(m, sys, opt);
    st.set_dt_finest(0.1 * h * h);
    st.set_state(bump(m));
    st.lts_single_stage_round();
    const auto& c = st.counters();
    for (std::size_t a = 0; a < m.num_blocks(); ++a)
      CHECK(c.block_steps[a] == (1u << (m.blocks()[a].leaf_level - m.min_block_level())));
    CHECK(c.pseudo_steps > 0);
  }

  SUBCASE("agrees with forward-Euler GTS to first order") {
    const ZipField u0 = bump(m);
    std::vector<double> diff;
    for (double f : {0.1, 0.05, 0.025}) {
      const double dt = f * h * h;
      Stepper lts(m, sys, opt), gts(m, sys, opt);
      lts.set_dt_finest(dt);
      gts.set_dt_finest(dt);
      lts.set_state(u0);
      gts.set_state(u0);
      const int rounds = int(std::lround(0.4 / f));
      for (int r = 0; r < rounds; ++r) {
        lts.lts_single_stage_round();
        for (int i = 0; i < lts.schedule().fine_steps(); ++i) gts.gts_step();
      }
      diff.push_back(linf(lts.state(), gts.state()));
    }
    CHECK(diff[0] > 0.0);
    for (int i = 0; i < 2; ++i) CHECK(std::log2(diff[i] / diff[i + 1]) == doctest::Approx(1.0).epsilon(0.15));
  }
}

TEST_CASE("LTS converges at third order on a two-level wave mesh") {
  const Domain dom{-6.0, 6.0};
  const Mesh m(two_level(2, 4, 2), {}, std::nullopt, dom);
  const WaveSystem wave(WaveParams{});
  InitialData id;
  id.width = 1.5;
  const ZipField u0 = wave_initial_state(m, id);
  const double T = 0.8;
  auto evolve = [&](double cfl) {
    Stepper st(m, wave);
    const double span = cfl * m.finest_spacing() * 2.0;
    const int rounds = int(std::ceil(T / span));
    st.set_dt_finest(T / (rounds * 2.0));
    st.set_state(u0);
    for (int r = 0; r < rounds; ++r) st.lts_round();
    return st.state();
  };
  const ZipField ref = evolve(0.25 / 16);
  std::vector<double> err;
  for (double c : {0.25, 0.125, 0.0625}) err.push_back(norms(evolve(c), ref, 0).l2);
  for (int i = 0; i < 2; ++i) CHECK(std::log2(err[i] / err[i + 1]) >= 2.5);
}

TEST_CASE("threaded and multi-rank drivers are bit-identical") {
  const auto t = random_balanced(23, 2, 6, 0.35, 2);
  const WaveSystem wave(WaveParams{true});
  ZipField ref;
  for (int R : {1, 3}) {
    const Mesh m(t, {}, weighted_partition(t, octant_weights(t, StepMode::LTS), R));
    for (int threads : {1, 4}) {
      StepperOptions opt;
      opt.threads = threads;
      Stepper st(m, wave, opt);
      st.set_state(bump(m, 2));
      st.lts_round();
      st.lts_round();
      const ZipField got = st.state();
      if (ref.values.empty()) {
        ref = got;
      } else {
        CHECK(got.values == ref.values);
      }
    }
  }
}
