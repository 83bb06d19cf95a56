#pragma once

#include <cstdint>
#include <random>

#include "octlts/octree.hpp"

namespace octlts::testing {

inline std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Random refinement: each octant splits with probability `p` (always below
// `min_level`), decided by a hash of the key and the seed.
inline LinearOctree random_tree(std::uint64_t seed, int dim, int max_depth, double p,
                                int min_level = 1, SfcKind kind = SfcKind::Hilbert) {
  return construct(
      [=](const OctKey& k) {
        if (k.level < min_level) return true;
        std::uint64_t h = mix(seed ^ mix(k.level));
        for (int d = 0; d < dim; ++d) h = mix(h ^ k.anchor[d]);
        return double(h >> 11) * 0x1.0p-53 < p;
      },
      dim, max_depth, kind);
}

inline LinearOctree random_balanced(std::uint64_t seed, int dim, int max_depth, double p,
                                    int min_level = 1, SfcKind kind = SfcKind::Hilbert) {
  return balance_2to1(random_tree(seed, dim, max_depth, p, min_level, kind));
}

// Refines only the octants touching the lower corner, down to `level`.
inline LinearOctree corner_tree(int dim, int max_depth, int level) {
  return construct(
      [=](const OctKey& k) {
        if (k.level >= level) return false;
        for (int d = 0; d < dim; ++d)
          if (k.anchor[d] != 0) return false;
        return true;
      },
      dim, max_depth);
}

inline LinearOctree uniform_tree(int dim, int max_depth, int level) {
  return construct([=](const OctKey& k) { return k.level < level; }, dim, max_depth);
}

}  // namespace octlts::testing
