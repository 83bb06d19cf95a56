#pragma once

#include <functional>
#include <vector>

#include "octlts/geometry.hpp"
#include "octlts/octree.hpp"

namespace octlts {

using ScalarField = std::function<double(const Point&)>;

struct RefinePolicy {
  double tolerance = 1e-5;
  double coarsen_factor = 0.1;
  int min_level = 0;
  int max_level = 0;

  void validate(int max_depth) const;
};

enum class RefineFlag { Refine, Keep, Coarsen };

// Max over the octant's non-coarse sample nodes of |f - I_c f|, where I_c is
// tensor Lagrange interpolation (cubic when enough nodes) from the even-index
// nodes.
double wavelet_coefficient(const ScalarField& f, const OctKey& key, int nodes_per_dim,
                           const Domain& domain = {});

std::vector<RefineFlag> refine_flags(const ScalarField& f, const LinearOctree& tree,
                                     const RefinePolicy& policy, int nodes_per_dim,
                                     const Domain& domain = {});

// construct() driven by the wavelet criterion: refine while the coefficient
// exceeds the tolerance (or the octant is below min_level), up to max_level.
LinearOctree construct_wavelet(const ScalarField& f, int dim, int max_depth,
                               const RefinePolicy& policy, int nodes_per_dim,
                               const Domain& domain = {}, SfcKind kind = SfcKind::Hilbert);

}  // namespace octlts
