#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "octlts/errors.hpp"

namespace octlts {

__extension__ typedef unsigned __int128 SfcIndex;

enum class SfcKind { Morton, Hilbert };

std::string to_string(SfcKind kind);
SfcKind sfc_kind_from_string(const std::string& name);

// An octant (quadrant in 2D) of the domain [0, 2^max_depth)^dim.
// Anchor coordinates are in units of the finest octant.
struct OctKey {
  std::array<std::uint32_t, 3> anchor{0, 0, 0};
  std::uint8_t level = 0;
  std::uint8_t dim = 3;
  std::uint8_t max_depth = 0;

  static OctKey root(int dim, int max_depth);
  static OctKey make(int dim, int max_depth, int level, std::array<std::uint32_t, 3> anchor);

  std::uint32_t size() const { return std::uint32_t{1} << (max_depth - level); }
  int num_children() const { return 1 << dim; }
  bool valid() const;

  OctKey parent() const;
  OctKey ancestor(int at_level) const;
  // Child c: bit d of c selects the upper half along axis d.
  OctKey child(int c) const;
  bool is_ancestor_of(const OctKey& other) const;  // strict
  bool contains(const OctKey& other) const { return *this == other || is_ancestor_of(other); }
  // Closed boxes intersect but interiors do not (face, edge or corner contact).
  bool touches(const OctKey& other) const;

  bool operator==(const OctKey& o) const {
    return level == o.level && dim == o.dim && max_depth == o.max_depth && anchor == o.anchor;
  }
  bool operator!=(const OctKey& o) const { return !(*this == o); }
};

struct OctKeyHash {
  std::size_t operator()(const OctKey& k) const noexcept;
};

std::ostream& operator<<(std::ostream& os, const OctKey& k);

// Position of the first finest cell of the octant along the curve. Octants map
// to aligned contiguous index ranges, so (index, level) orders keys with
// ancestors first.
SfcIndex sfc_index(const OctKey& key, SfcKind kind);

enum class Ordering { Less, Equal, Greater };

Ordering sfc_compare(const OctKey& a, const OctKey& b, SfcKind kind);

struct SfcLess {
  SfcKind kind = SfcKind::Hilbert;
  bool operator()(const OctKey& a, const OctKey& b) const {
    return sfc_compare(a, b, kind) == Ordering::Less;
  }
};

enum class Adjacency { Faces, All };

// SFC-sorted complete set of leaves.
class LinearOctree {
 public:
  LinearOctree() = default;
  // Sorts the leaves; throws InvalidInput unless they tile the domain.
  LinearOctree(std::vector<OctKey> leaves, int dim, int max_depth, SfcKind kind);

  const std::vector<OctKey>& leaves() const { return leaves_; }
  std::size_t size() const { return leaves_.size(); }
  const OctKey& operator[](std::size_t i) const { return leaves_[i]; }
  int dim() const { return dim_; }
  int max_depth() const { return max_depth_; }
  SfcKind sfc() const { return kind_; }
  bool balanced() const { return balanced_; }
  int min_level() const;
  int max_level() const;

  // Leaf equal to or containing `key`.
  std::optional<std::size_t> find_containing(const OctKey& key) const;
  std::optional<std::size_t> find(const OctKey& key) const;
  // Index range [first, last) of leaves descending from (or equal to) `key`.
  std::pair<std::size_t, std::size_t> descendant_range(const OctKey& key) const;

  void mark_balanced(bool b) { balanced_ = b; }

 private:
  std::size_t lower_bound(const OctKey& key) const;

  std::vector<OctKey> leaves_;
  std::vector<SfcIndex> index_;
  int dim_ = 3;
  int max_depth_ = 0;
  SfcKind kind_ = SfcKind::Hilbert;
  bool balanced_ = false;
};

using RefinePredicate = std::function<bool(const OctKey&)>;

LinearOctree construct(const RefinePredicate& refine, int dim, int max_depth,
                       SfcKind kind = SfcKind::Hilbert);

// Minimal refinement satisfying 2:1 balance across faces, edges and corners.
LinearOctree balance_2to1(const LinearOctree& tree);

// True iff every pair of touching leaves differs by at most one level (O(n^2)).
bool is_balanced_bruteforce(const LinearOctree& tree);

// Leaves touching `key`; Faces restricts to leaves sharing a (D-1)-face.
std::vector<OctKey> neighbors(const OctKey& key, const LinearOctree& tree,
                              Adjacency adjacency = Adjacency::Faces);

// ASCII dump: header `dim maxdepth count`, then `x y [z] level` per leaf.
void write_octree(std::ostream& os, const LinearOctree& tree);
LinearOctree read_octree(std::istream& is, SfcKind kind = SfcKind::Hilbert);

}  // namespace octlts
