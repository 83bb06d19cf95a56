#pragma once

#include <iosfwd>
#include <vector>

#include "octlts/mesh.hpp"

namespace octlts {

// alpha[l]: work at relative level l, with l = 0 the finest level.
struct WorkHistogram {
  std::vector<double> alpha;

  int levels() const { return int(alpha.size()) - 1; }  // L
  double total() const;
  void validate() const;
};

struct SpeedupEstimate {
  int L = 0;
  double w_lts = 0.0;
  double w_gts = 0.0;
  double speedup = 1.0;
  double bound = 1.0;
  bool bound_infinite = false;  // alpha_0 == 0
};

SpeedupEstimate estimate(const WorkHistogram& w);

// alpha_l = interior points of the blocks at relative level l_max - leaf_level.
WorkHistogram histogram_from_mesh(const Mesh& mesh);

// `level,alpha` rows, header optional.
WorkHistogram read_histogram_csv(std::istream& is);
void write_histogram_csv(std::ostream& os, const WorkHistogram& w);
// `L,W_lts,W_gts,S,S_bound`
void write_estimate_csv(std::ostream& os, const SpeedupEstimate& e);

}  // namespace octlts
