// Acceptance harness: one PASS/FAIL line per criterion, report in acceptance_report.txt.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "octlts/partition.hpp"
#include "octlts/rk.hpp"
#include "octlts/run.hpp"
#include "octlts/stepper.hpp"
#include "octlts/system.hpp"
#include "support.hpp"

using namespace octlts;
using namespace octlts::testing;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

SolverConfig wave3d(bool nonlinear) {
  SolverConfig c;
  c.dimension = 3;
  c.maxdepth = 6;
  c.wavelet_tol = 1e-3;
  c.tableau = "rk3";
  c.nonlinear = nonlinear;
  return c;
}

Outcome lts_vs_gts(bool nonlinear) {
  const auto t0 = Clock::now();
  const auto cfg = wave3d(nonlinear);
  const Mesh mesh = build_mesh(cfg);
  const auto r = run(cfg, mesh, TsMode::Compare, 4);
  double worst = 0.0;
  std::string per_round;
  for (const auto& d : r.diff) {
    worst = std::max(worst, d.linf_diff);
    per_round += " " + fmt("%.3g", d.linf_diff);
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = worst <= 1e-12 && secs <= 300.0 && r.diff.size() == 5;
  o.detail = "max linf diff " + fmt("%.3e", worst) + " (tol 1e-12), per sync time:" + per_round + "; blocks " +
             std::to_string(mesh.num_blocks()) + ", dL " + std::to_string(r.delta_levels) + ", " +
             fmt("%.1f", secs) + " s (limit 300)";
  return o;
}

Outcome convergence() {
  const auto t0 = Clock::now();
  std::vector<double> err;
  for (int md : {6, 8}) {
    SolverConfig c;
    c.dimension = 2;
    c.maxdepth = md;
    c.wavelet_tol = 1e-8;
    c.id_profile = "plane";
    c.end_time = 1.0;
    const Mesh mesh = build_mesh(c);
    const auto r = run(c, mesh, TsMode::LTS);
    err.push_back(r.timeseries.back().l2);
  }
  const double secs = seconds_since(t0);
  const double ratio = err[0] / err[1];
  Outcome o;
  o.pass = ratio >= 2.0 && secs <= 120.0;
  o.detail = "l2 error maxdepth 6 " + fmt("%.3e", err[0]) + ", maxdepth 8 " + fmt("%.3e", err[1]) + ", ratio " +
             fmt("%.2f", ratio) + " (need >= 2); " + fmt("%.1f", secs) + " s (limit 120)";
  return o;
}

Outcome work_model() {
  const auto t0 = Clock::now();
  int good = 0;
  const DecaySystem decay;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const int dim = 2 + int(s % 2);
    const auto t = random_balanced(1000 + s, dim, dim == 2 ? 7 : 4, 0.3, 1 + int(s % 2));
    const Mesh m(t, {}, weighted_partition(t, octant_weights(t, StepMode::LTS), 1 + int(s % 4)));
    Stepper st(m, decay);
    ZipField u = m.make_zip(1);
    std::fill(u.values.begin(), u.values.end(), 1.0);
    st.set_state(u);
    const auto est = estimate(histogram_from_mesh(m));
    st.lts_round();
    const bool lts_ok = double(st.counters().point_steps) == est.w_lts;
    st.reset_counters();
    for (int i = 0; i < (1 << (m.max_block_level() - m.min_block_level())); ++i) st.gts_step();
    const bool gts_ok = double(st.counters().point_steps) == est.w_gts;
    good += lts_ok && gts_ok;
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = good == 50 && secs <= 60.0;
  o.detail = std::to_string(good) + "/50 meshes integer-exact for W_lts and W_gts; " + fmt("%.1f", secs) +
             " s (limit 60)";
  return o;
}

Outcome speedup() {
  struct Case {
    int dim, maxdepth;
    double tol;
    int rounds;
  };
  // dL 3, 3, 4, 4, 5
  const std::vector<Case> cases{{2, 7, 1e-4, 8}, {3, 7, 3e-4, 1}, {2, 8, 1e-5, 4}, {3, 6, 1e-3, 1}, {2, 8, 1e-6, 2}};
  const int trials = 3;
  Outcome o;
  o.pass = true;
  std::set<int> dls;
  for (const auto& c : cases) {
    SolverConfig cfg;
    cfg.dimension = c.dim;
    cfg.maxdepth = c.maxdepth;
    cfg.wavelet_tol = c.tol;
    const Mesh mesh = build_mesh(cfg);
    double lts = 1e300, gts = 1e300;
    RunResult r;
    for (int i = 0; i < trials; ++i) {
      r = run(cfg, mesh, TsMode::Compare, c.rounds);
      lts = std::min(lts, r.lts_seconds);
      gts = std::min(gts, r.gts_seconds);
    }
    const double measured = gts / lts;
    const double est = r.estimate.speedup;
    const double rel = std::abs(measured - est) / est;
    const bool ok = rel <= 0.35 && (r.delta_levels < 1 || measured > 1.0);
    o.pass = o.pass && ok;
    dls.insert(r.delta_levels);
    o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(c.dim) + "D dL " + std::to_string(r.delta_levels) +
                " est " + fmt("%.3f", est) + " meas " + fmt("%.3f", measured) + " rel " + fmt("%.1f%%", 100 * rel);
  }
  o.pass = o.pass && dls == std::set<int>{3, 4, 5};
  o.detail += " (tol 35%, best of " + std::to_string(trials) + ")";
  return o;
}

std::vector<double> forced(const ButcherTableau& tab, const std::function<double(double)>& g, double t0, double dt) {
  std::vector<double> k(tab.stages);
  for (int i = 0; i < tab.stages; ++i) k[i] = g(t0 + tab.node(i) * dt);
  return k;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

Outcome correction() {
  Outcome o;
  o.pass = true;
  for (const auto& tab : {forward_euler(), midpoint_rk2(), kutta_rk3(), classic_rk4()}) {
    const int p = tab.stages;
    const int degree = std::max(0, p - 2);
    const auto g = [&](double t) {
      double v = 0.7, tp = 1.0;
      for (int d = 1; d <= degree; ++d) v += (tp *= t) * (1.5 - 0.4 * d);
      return v;
    };
    const double t0 = 0.37, dtf = 0.05;
    const auto cs = build_M(tab, dtf, 2 * dtf);
    const auto kf = forced(tab, g, t0, dtf);
    const auto kc = forced(tab, g, t0, 2 * dtf);
    const auto kf2 = forced(tab, g, t0 + dtf, dtf);
    const double exact =
        std::max({max_diff(cs.M1_fc * kf, kc), max_diff(cs.M1_fc_inv * kc, kf), max_diff(cs.M2_cf * kc, kf2)});

    std::vector<double> res;
    for (double h : {0.1, 0.05, 0.025, 0.0125}) {
      const auto m = build_M(tab, h, 2 * h);
      const auto s = [](double t) { return std::sin(t); };
      res.push_back(max_diff(m.M2_cf * forced(tab, s, 0.4, 2 * h), forced(tab, s, 0.4 + h, h)));
    }
    const double slope = std::log2(res[res.size() - 2] / res.back());
    const bool ok = exact <= 1e-12 && slope >= p - 0.5;
    o.pass = o.pass && ok;
    o.detail += (o.detail.empty() ? "" : "; ") + tab.name + " degree " + std::to_string(degree) + " err " +
                fmt("%.1e", exact) + " slope " + fmt("%.2f", slope) + " (need " + fmt("%.1f", p - 0.5) + ")";
  }
  return o;
}

Outcome properties() {
  const auto t0 = Clock::now();
  std::vector<std::string> failed;

  int balanced = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const int dim = 2 + int(s % 2);
    balanced += is_balanced_bruteforce(balance_2to1(random_tree(5000 + s, dim, dim == 2 ? 6 : 4, 0.3)));
  }
  if (balanced != 200) failed.push_back("balance " + std::to_string(balanced) + "/200");

  std::mt19937_64 rng(2024);
  int bound_ok = 0;
  for (int c = 0; c < 500; ++c) {
    const int dim = 2 + c % 2;
    const auto t = random_balanced(rng(), dim, dim == 2 ? 6 : 4, 0.3, 1);
    std::vector<double> w(t.size());
    std::uniform_real_distribution<double> u(0.1, 10.0);
    for (auto& x : w) x = u(rng);
    const int R = 2 + int(rng() % 31);
    const auto pm = weighted_partition(t, w, R);
    const double wmax = *std::max_element(w.begin(), w.end());
    bound_ok += pm.max_weight() - pm.total_weight() / R <= wmax * (1 + 1e-12);
  }
  if (bound_ok != 500) failed.push_back("partition " + std::to_string(bound_ok) + "/500");

  int zip_ok = 0, cover_ok = 0;
  const int meshes = 12;
  for (int s = 0; s < meshes; ++s) {
    const auto t = random_balanced(700 + s, 2 + s % 2, s % 2 ? 4 : 6, 0.35, 2);
    const Mesh m(t, {}, weighted_partition(t, octant_weights(t, StepMode::LTS), 1 + s % 4));
    ZipField f = m.make_zip(2);
    std::mt19937_64 g(s);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : f.values) v = u(g);
    const auto once = m.zip(m.unzip(f), 2);
    zip_ok += once.values == f.values && m.zip(m.unzip(once), 2).values == f.values;

    // every plan source owned by another block appears in that sender's entry
    const auto maps = build_sync_maps(m);
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::set<std::uint64_t>> have;
    for (const auto& e : maps.full) have[{e.sender, e.receiver}].insert(e.nodes.begin(), e.nodes.end());
    bool ok = true;
    for (std::size_t b = 0; b < m.num_blocks() && ok; ++b)
      for (auto z : m.plan(b).source_global) {
        const auto owner = m.zip_owner_block(z);
        if (owner == b) continue;
        const auto it = have.find({owner, std::uint32_t(b)});
        if (it == have.end() || !it->second.count(z)) {
          ok = false;
          break;
        }
      }
    cover_ok += ok;
  }
  if (zip_ok != meshes) failed.push_back("zip/unzip " + std::to_string(zip_ok) + "/" + std::to_string(meshes));
  if (cover_ok != meshes) failed.push_back("sync coverage " + std::to_string(cover_ok) + "/" + std::to_string(meshes));

  int order_ok = 0;
  const int pairs = 4000;
  for (int i = 0; i < pairs; ++i) {
    const int dim = 2 + i % 2;
    const SfcKind kind = i % 4 < 2 ? SfcKind::Hilbert : SfcKind::Morton;
    auto key = [&] {
      const int level = int(rng() % 6);
      std::array<std::uint32_t, 3> a{0, 0, 0};
      for (int d = 0; d < dim; ++d) a[d] = std::uint32_t(rng() % (1u << level)) << (5 - level);
      return OctKey::make(dim, 5, level, a);
    };
    const auto a = key(), b = key(), c = key();
    const SfcLess lt{kind};
    bool ok = (sfc_compare(a, b, kind) == Ordering::Equal) == (a == b);
    ok = ok && (lt(a, b) != lt(b, a) || a == b);
    if (lt(a, b) && lt(b, c)) ok = ok && lt(a, c);
    if (a.level > 0) ok = ok && lt(a.parent(), a);
    order_ok += ok;
  }
  if (order_ok != pairs) failed.push_back("sfc order " + std::to_string(order_ok) + "/" + std::to_string(pairs));

  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = failed.empty() && secs <= 120.0;
  o.detail = "balance 200 trees, partition 500 cases, zip/unzip and sync coverage on " + std::to_string(meshes) +
             " meshes, sfc order " + std::to_string(pairs) + " triples";
  for (const auto& f : failed) o.detail += "; failed " + f;
  o.detail += "; " + fmt("%.1f", secs) + " s (limit 120)";
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  SolverConfig cfg;
  cfg.dimension = 2;
  cfg.maxdepth = 6;
  cfg.wavelet_tol = 1e-4;
  cfg.end_time = 0.5;
  cfg.ranks = 3;
  cfg.nonlinear = true;
  cfg.seed = 17;
  cfg.write_fields = true;
  const fs::path root = fs::temp_directory_path() / "octlts_acceptance_det";
  fs::remove_all(root);
  std::vector<std::vector<std::string>> listing;
  for (int threads : {1, 4, 8}) {
    cfg.threads = threads;
    const Mesh mesh = build_mesh(cfg);
    const auto dir = root / std::to_string(threads);
    auto files = write_outputs(cfg, mesh, run(cfg, mesh, TsMode::CompareToEnd), dir.string());
    std::sort(files.begin(), files.end());
    listing.push_back(files);
  }
  Outcome o;
  o.pass = listing[0] == listing[1] && listing[0] == listing[2];
  int compared = 0;
  for (const auto& f : listing[0]) {
    // wall-clock timings and the manifest (threads, timings) are expected to differ
    if (f.rfind("phases", 0) == 0 || f == "manifest.json") continue;
    const auto ref = slurp(root / "1" / f);
    for (const char* t : {"4", "8"})
      if (slurp(root / t / f) != ref) {
        o.pass = false;
        o.detail += "differs: " + f + " at " + t + " threads; ";
      }
    ++compared;
  }
  o.detail += std::to_string(compared) + " output files compared byte-for-byte at threads 1, 4, 8";
  fs::remove_all(root);
  return o;
}

Outcome rk_order() {
  const auto f = [](double, double u) { return -u; };
  std::vector<double> err;
  for (double dt : {0.1, 0.05, 0.025}) {
    double u = 1.0;
    const int n = int(std::lround(1.0 / dt));
    for (int i = 0; i < n; ++i) u = rk_scalar_step(kutta_rk3(), f, i * dt, u, dt);
    err.push_back(std::abs(u - std::exp(-1.0)));
  }
  const double p1 = std::log2(err[0] / err[1]), p2 = std::log2(err[1] / err[2]);
  Outcome o;
  o.pass = std::min(p1, p2) >= 2.9;
  o.detail = "orders " + fmt("%.3f", p1) + ", " + fmt("%.3f", p2) + " (need >= 2.9)";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> all{
      {1, "LTS equals GTS, linear wave", [] { return lts_vs_gts(false); }},
      {2, "LTS equals GTS, non-linear wave", [] { return lts_vs_gts(true); }},
      {3, "convergence with maxdepth", convergence},
      {4, "work-model exactness", work_model},
      {5, "speedup estimate vs measurement", speedup},
      {6, "correction-operator exactness", correction},
      {7, "structural property suites", properties},
      {8, "determinism across thread counts", determinism},
      {9, "RK3 order", rk_order},
  };
  std::ofstream report("acceptance_report.txt");
  int failures = 0, errors = 0;
  int ran = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    ++ran;
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
      ++errors;
    }
    failures += !o.pass;
    std::ostringstream line;
    line << (o.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail;
    std::cout << line.str() << std::endl;
    report << line.str() << '\n';
  }
  std::cout << (ran - failures) << "/" << ran << " criteria pass" << std::endl;
  report << (ran - failures) << "/" << ran << " criteria pass\n";
  // FAIL lines are findings; only a harness error makes the test fail
  return errors ? 1 : 0;
}
