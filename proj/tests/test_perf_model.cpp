#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "octlts/perf_model.hpp"
#include "support.hpp"

using namespace octlts;
using namespace octlts::testing;

TEST_CASE("speedup estimate examples") {
  const auto e = estimate({{3, 5}});
  CHECK(e.L == 1);
  CHECK(e.w_lts == 11.0);
  CHECK(e.w_gts == 16.0);
  CHECK(e.speedup == doctest::Approx(16.0 / 11.0));
  CHECK(e.bound == doctest::Approx(8.0 / 3.0));

  const auto f = estimate({{1, 1, 1}});
  CHECK(f.w_lts == 7.0);
  CHECK(f.w_gts == 12.0);
  CHECK(1.0 / f.speedup == doctest::Approx(7.0 / 12.0));

  CHECK(estimate({{42}}).speedup == 1.0);
  const auto g = estimate({{0, 4}});
  CHECK(g.bound_infinite);
  CHECK(g.speedup == 2.0);
}

TEST_CASE("estimate rejects bad histograms") {
  CHECK_THROWS_AS(estimate({}), InvalidInput);
  CHECK_THROWS_AS(estimate({{0, 0}}), InvalidInput);
  CHECK_THROWS_AS(estimate({{1, -1}}), InvalidInput);
  CHECK_THROWS_AS(estimate({{1, NAN}}), InvalidInput);
}

TEST_CASE("speedup lies between 1 and the bound") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int c = 0; c < 1000; ++c) {
    WorkHistogram w;
    w.alpha.resize(1 + rng() % 8);
    for (auto& a : w.alpha) a = (rng() % 4 == 0) ? 0.0 : u(rng);
    w.alpha[0] += 1.0;
    const auto e = estimate(w);
    CHECK(e.speedup >= 1.0 - 1e-15);
    CHECK(e.speedup <= e.bound * (1 + 1e-12));
    // W_lts by brute force over fine steps: level l steps every 2^l fine steps
    double brute = 0.0;
    for (int i = 0; i < (1 << e.L); ++i)
      for (int l = 0; l <= e.L; ++l)
        if (i % (1 << l) == 0) brute += w.alpha[l];
    CHECK(brute == doctest::Approx(e.w_lts).epsilon(1e-13));
  }
}

TEST_CASE("uniform mesh estimates no speedup") {
  const Mesh m(uniform_tree(2, 4, 3));
  const auto w = histogram_from_mesh(m);
  CHECK(w.levels() == 0);
  CHECK(estimate(w).speedup == 1.0);
}

TEST_CASE("histogram from a mesh sums interior points by level") {
  const Mesh m(balance_2to1(corner_tree(2, 5, 4)));
  const auto w = histogram_from_mesh(m);
  CHECK(w.levels() == m.max_block_level() - m.min_block_level());
  double total = 0;
  for (std::size_t b = 0; b < m.num_blocks(); ++b) total += double(m.interior_points(b));
  CHECK(w.total() == total);
  CHECK(estimate(w).speedup > 1.0);
}

TEST_CASE("histogram CSV round-trip and errors") {
  const WorkHistogram w{{1.5, 0, 1e6}};
  std::stringstream ss;
  write_histogram_csv(ss, w);
  const auto r = read_histogram_csv(ss);
  CHECK(r.alpha == w.alpha);

  std::stringstream noheader("0,2\n# comment\n\n1,3\n");
  CHECK(read_histogram_csv(noheader).alpha == std::vector<double>{2, 3});
  std::stringstream bad("level,alpha\n0;2\n");
  CHECK_THROWS_AS(read_histogram_csv(bad), InvalidInput);

  std::stringstream est;
  write_estimate_csv(est, estimate({{3, 5}}));
  std::string header;
  std::getline(est, header);
  CHECK(header == "L,W_lts,W_gts,S,S_bound");
}
