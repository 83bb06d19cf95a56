#pragma once

#include <array>
#include <cstdint>

#include "octlts/octree.hpp"

namespace octlts {

using Point = std::array<double, 3>;

// Physical cube [lo, hi]^dim that the octree root maps onto.
struct Domain {
  double lo = -10.0;
  double hi = 10.0;

  double width() const { return hi - lo; }
  double octant_width(const OctKey& k) const {
    return width() / double(std::uint64_t{1} << k.level);
  }
  // Coordinate of octant node (i, j, k) with `nodes` points per axis.
  Point node_coord(const OctKey& key, const std::array<int, 3>& ijk, int nodes) const {
    const double ext = double(std::uint64_t{1} << key.max_depth);
    const double h = octant_width(key) / (nodes - 1);
    Point p{0.0, 0.0, 0.0};
    for (int d = 0; d < key.dim; ++d) p[d] = lo + width() * key.anchor[d] / ext + ijk[d] * h;
    return p;
  }
};

}  // namespace octlts
