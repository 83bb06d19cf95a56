#include "octlts/perf_model.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace octlts {

double WorkHistogram::total() const {
  double s = 0.0;
  for (double a : alpha) s += a;
  return s;
}

void WorkHistogram::validate() const {
  if (alpha.empty()) throw InvalidInput("work histogram: no levels");
  bool any = false;
  for (double a : alpha) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidInput("work histogram: alpha must be >= 0");
    any |= a > 0.0;
  }
  if (!any) throw InvalidInput("work histogram: all levels are empty");
}

SpeedupEstimate estimate(const WorkHistogram& w) {
  w.validate();
  SpeedupEstimate e;
  e.L = w.levels();
  for (int l = 0; l <= e.L; ++l) e.w_lts += std::ldexp(w.alpha[l], e.L - l);
  e.w_gts = std::ldexp(w.total(), e.L);
  e.speedup = e.w_gts / e.w_lts;
  if (w.alpha[0] > 0.0) {
    e.bound = w.total() / w.alpha[0];
  } else {
    e.bound = std::numeric_limits<double>::infinity();
    e.bound_infinite = true;
  }
  return e;
}

WorkHistogram histogram_from_mesh(const Mesh& mesh) {
  WorkHistogram w;
  const int lmax = mesh.max_block_level();
  w.alpha.assign(std::size_t(lmax - mesh.min_block_level() + 1), 0.0);
  for (std::size_t b = 0; b < mesh.num_blocks(); ++b) {
    w.alpha[std::size_t(lmax - mesh.blocks()[b].leaf_level)] += double(mesh.interior_points(b));
  }
  return w;
}

WorkHistogram read_histogram_csv(std::istream& is) {
  WorkHistogram w;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (lineno == 1 && line.find("level") != std::string::npos) continue;
    std::istringstream ls(line);
    int level = -1;
    char comma = 0;
    double alpha = -1.0;
    if (!(ls >> level >> comma >> alpha) || comma != ',' || level < 0) {
      throw InvalidInput("histogram CSV line " + std::to_string(lineno) + ": expected level,alpha");
    }
    if (std::size_t(level) >= w.alpha.size()) w.alpha.resize(std::size_t(level) + 1, 0.0);
    w.alpha[level] += alpha;
  }
  w.validate();
  return w;
}

void write_histogram_csv(std::ostream& os, const WorkHistogram& w) {
  os << "level,alpha\n";
  os.precision(17);
  for (std::size_t l = 0; l < w.alpha.size(); ++l) os << l << ',' << w.alpha[l] << '\n';
}

void write_estimate_csv(std::ostream& os, const SpeedupEstimate& e) {
  os << "L,W_lts,W_gts,S,S_bound\n";
  os.precision(17);
  os << e.L << ',' << e.w_lts << ',' << e.w_gts << ',' << e.speedup << ',';
  if (e.bound_infinite) {
    os << "inf";
  } else {
    os << e.bound;
  }
  os << '\n';
}

}  // namespace octlts
