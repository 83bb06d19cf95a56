#include "octlts/octree.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace octlts {

namespace {

void check_compatible(const OctKey& a, const OctKey& b) {
  if (a.dim != b.dim || a.max_depth != b.max_depth) {
    throw InvalidInput("octant keys from different trees (dim/max_depth mismatch)");
  }
}

SfcIndex morton_index(const std::array<std::uint32_t, 3>& x, int dim, int bits) {
  SfcIndex h = 0;
  for (int b = bits - 1; b >= 0; --b) {
    for (int d = dim - 1; d >= 0; --d) {
      h = (h << 1) | ((x[d] >> b) & 1u);
    }
  }
  return h;
}

// Skilling, "Programming the Hilbert curve" (2004): axes -> transposed index.
SfcIndex hilbert_index(std::array<std::uint32_t, 3> x, int dim, int bits) {
  if (bits == 0) return 0;
  const std::uint32_t m = std::uint32_t{1} << (bits - 1);
  for (std::uint32_t q = m; q > 1; q >>= 1) {
    const std::uint32_t p = q - 1;
    for (int i = 0; i < dim; ++i) {
      if (x[i] & q) {
        x[0] ^= p;
      } else {
        const std::uint32_t t = (x[0] ^ x[i]) & p;
        x[0] ^= t;
        x[i] ^= t;
      }
    }
  }
  for (int i = 1; i < dim; ++i) x[i] ^= x[i - 1];
  std::uint32_t t = 0;
  for (std::uint32_t q = m; q > 1; q >>= 1) {
    if (x[dim - 1] & q) t ^= q - 1;
  }
  for (int i = 0; i < dim; ++i) x[i] ^= t;

  SfcIndex h = 0;
  for (int b = bits - 1; b >= 0; --b) {
    for (int i = 0; i < dim; ++i) {
      h = (h << 1) | ((x[i] >> b) & 1u);
    }
  }
  return h;
}

SfcIndex volume(const OctKey& k) {
  return SfcIndex{1} << (k.dim * (k.max_depth - k.level));
}

bool key_less(SfcIndex ia, int la, SfcIndex ib, int lb) {
  return ia < ib || (ia == ib && la < lb);
}

}  // namespace

std::string to_string(SfcKind kind) { return kind == SfcKind::Morton ? "morton" : "hilbert"; }

SfcKind sfc_kind_from_string(const std::string& name) {
  if (name == "morton") return SfcKind::Morton;
  if (name == "hilbert") return SfcKind::Hilbert;
  throw InvalidInput("unknown sfc kind '" + name + "' (expected morton or hilbert)");
}

OctKey OctKey::root(int dim, int max_depth) { return make(dim, max_depth, 0, {0, 0, 0}); }

OctKey OctKey::make(int dim, int max_depth, int level, std::array<std::uint32_t, 3> anchor) {
  if (dim != 2 && dim != 3) throw InvalidInput("dimension must be 2 or 3");
  if (max_depth < 0 || max_depth > 31) throw InvalidInput("max_depth must be in [0, 31]");
  if (level < 0 || level > max_depth) throw InvalidInput("level out of range");
  OctKey k;
  k.dim = static_cast<std::uint8_t>(dim);
  k.max_depth = static_cast<std::uint8_t>(max_depth);
  k.level = static_cast<std::uint8_t>(level);
  k.anchor = anchor;
  if (dim == 2) k.anchor[2] = 0;
  if (!k.valid()) throw InvalidInput("anchor not aligned to octant size or outside domain");
  return k;
}

bool OctKey::valid() const {
  if ((dim != 2 && dim != 3) || max_depth > 31 || level > max_depth) return false;
  const std::uint64_t extent = std::uint64_t{1} << max_depth;
  for (int d = 0; d < 3; ++d) {
    if (d >= dim) {
      if (anchor[d] != 0) return false;
      continue;
    }
    if (anchor[d] % size() != 0 || anchor[d] >= extent) return false;
  }
  return true;
}

OctKey OctKey::parent() const {
  if (level == 0) throw InvalidInput("root has no parent");
  return ancestor(level - 1);
}

OctKey OctKey::ancestor(int at_level) const {
  OctKey k = *this;
  k.level = static_cast<std::uint8_t>(at_level);
  const std::uint32_t mask = ~(k.size() - 1);
  for (int d = 0; d < dim; ++d) k.anchor[d] &= mask;
  return k;
}

OctKey OctKey::child(int c) const {
  OctKey k = *this;
  k.level = static_cast<std::uint8_t>(level + 1);
  const std::uint32_t half = k.size();
  for (int d = 0; d < dim; ++d) {
    if ((c >> d) & 1) k.anchor[d] += half;
  }
  return k;
}

bool OctKey::is_ancestor_of(const OctKey& o) const {
  if (o.level <= level) return false;
  return o.ancestor(level) == *this;
}

bool OctKey::touches(const OctKey& o) const {
  const std::uint64_t sa = size();
  const std::uint64_t sb = o.size();
  bool open_all = true;
  for (int d = 0; d < dim; ++d) {
    const std::uint64_t a0 = anchor[d];
    const std::uint64_t b0 = o.anchor[d];
    if (a0 > b0 + sb || b0 > a0 + sa) return false;
    if (!(a0 < b0 + sb && b0 < a0 + sa)) open_all = false;
  }
  return !open_all;
}

std::size_t OctKeyHash::operator()(const OctKey& k) const noexcept {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  };
  mix(k.level);
  mix(k.anchor[0]);
  mix(k.anchor[1]);
  mix(k.anchor[2]);
  return static_cast<std::size_t>(h);
}

std::ostream& operator<<(std::ostream& os, const OctKey& k) {
  os << "(" << k.anchor[0] << "," << k.anchor[1];
  if (k.dim == 3) os << "," << k.anchor[2];
  return os << ";l=" << int(k.level) << ")";
}

SfcIndex sfc_index(const OctKey& key, SfcKind kind) {
  const int bits = key.max_depth;
  SfcIndex h = kind == SfcKind::Morton ? morton_index(key.anchor, key.dim, bits)
                                       : hilbert_index(key.anchor, key.dim, bits);
  const int low = key.dim * (key.max_depth - key.level);
  if (low > 0) h = (h >> low) << low;
  return h;
}

Ordering sfc_compare(const OctKey& a, const OctKey& b, SfcKind kind) {
  check_compatible(a, b);
  if (a == b) return Ordering::Equal;
  const SfcIndex ia = sfc_index(a, kind);
  const SfcIndex ib = sfc_index(b, kind);
  return key_less(ia, a.level, ib, b.level) ? Ordering::Less : Ordering::Greater;
}

LinearOctree::LinearOctree(std::vector<OctKey> leaves, int dim, int max_depth, SfcKind kind)
    : leaves_(std::move(leaves)), dim_(dim), max_depth_(max_depth), kind_(kind) {
  if (leaves_.empty()) throw InvalidInput("octree needs at least one leaf");
  for (const auto& k : leaves_) {
    if (k.dim != dim || k.max_depth != max_depth || !k.valid()) {
      throw InvalidInput("leaf does not belong to this tree");
    }
  }
  std::vector<std::pair<SfcIndex, std::size_t>> order(leaves_.size());
  for (std::size_t i = 0; i < leaves_.size(); ++i) order[i] = {sfc_index(leaves_[i], kind), i};
  std::sort(order.begin(), order.end(), [this](const auto& x, const auto& y) {
    return key_less(x.first, leaves_[x.second].level, y.first, leaves_[y.second].level);
  });
  std::vector<OctKey> sorted;
  sorted.reserve(leaves_.size());
  index_.reserve(leaves_.size());
  for (const auto& [idx, i] : order) {
    sorted.push_back(leaves_[i]);
    index_.push_back(idx);
  }
  leaves_ = std::move(sorted);

  SfcIndex total = 0;
  for (std::size_t i = 0; i < leaves_.size(); ++i) {
    total += volume(leaves_[i]);
    if (i + 1 < leaves_.size() && leaves_[i].contains(leaves_[i + 1])) {
      throw InvalidInput("overlapping leaves");
    }
  }
  if (total != (SfcIndex{1} << (dim * max_depth))) {
    throw InvalidInput("leaves do not tile the domain");
  }
}

int LinearOctree::min_level() const {
  int m = max_depth_;
  for (const auto& k : leaves_) m = std::min(m, int(k.level));
  return m;
}

int LinearOctree::max_level() const {
  int m = 0;
  for (const auto& k : leaves_) m = std::max(m, int(k.level));
  return m;
}

std::size_t LinearOctree::lower_bound(const OctKey& key) const {
  const SfcIndex ik = sfc_index(key, kind_);
  std::size_t lo = 0, hi = leaves_.size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (key_less(index_[mid], leaves_[mid].level, ik, key.level)) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return lo;
}

std::optional<std::size_t> LinearOctree::find_containing(const OctKey& key) const {
  if (key.dim != dim_ || key.max_depth != max_depth_) throw InvalidInput("key from another tree");
  // Largest leaf <= key; with ancestor-first order it is the only candidate.
  const SfcIndex ik = sfc_index(key, kind_);
  std::size_t lo = 0, hi = leaves_.size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (key_less(ik, key.level, index_[mid], leaves_[mid].level)) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  if (lo == 0) return std::nullopt;
  const std::size_t cand = lo - 1;
  if (leaves_[cand].contains(key)) return cand;
  return std::nullopt;
}

std::optional<std::size_t> LinearOctree::find(const OctKey& key) const {
  auto c = find_containing(key);
  if (c && leaves_[*c] == key) return c;
  return std::nullopt;
}

std::pair<std::size_t, std::size_t> LinearOctree::descendant_range(const OctKey& key) const {
  const std::size_t first = lower_bound(key);
  const SfcIndex end_index = sfc_index(key, kind_) + volume(key);
  std::size_t lo = first, hi = leaves_.size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (index_[mid] < end_index) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return {first, lo};
}

LinearOctree construct(const RefinePredicate& refine, int dim, int max_depth, SfcKind kind) {
  std::vector<OctKey> leaves;
  std::vector<OctKey> stack{OctKey::root(dim, max_depth)};
  while (!stack.empty()) {
    const OctKey k = stack.back();
    stack.pop_back();
    if (k.level < max_depth && refine(k)) {
      for (int c = k.num_children() - 1; c >= 0; --c) stack.push_back(k.child(c));
    } else {
      leaves.push_back(k);
    }
  }
  return LinearOctree(std::move(leaves), dim, max_depth, kind);
}

namespace {

// Calls fn(direction) for every nonzero offset in {-1,0,1}^dim (faces only if requested).
template <class Fn>
void for_each_direction(int dim, bool faces_only, Fn&& fn) {
  const int n = dim == 2 ? 9 : 27;
  for (int c = 0; c < n; ++c) {
    std::array<int, 3> d{c % 3 - 1, (c / 3) % 3 - 1, dim == 3 ? c / 9 - 1 : 0};
    const int nonzero = (d[0] != 0) + (d[1] != 0) + (d[2] != 0);
    if (nonzero == 0 || (faces_only && nonzero != 1)) continue;
    fn(d);
  }
}

// Same-size octant adjacent to `k` in direction `d`, if inside the domain.
std::optional<OctKey> shifted(const OctKey& k, const std::array<int, 3>& d) {
  const std::int64_t s = k.size();
  const std::int64_t extent = std::int64_t{1} << k.max_depth;
  OctKey n = k;
  for (int a = 0; a < k.dim; ++a) {
    const std::int64_t x = std::int64_t(k.anchor[a]) + d[a] * s;
    if (x < 0 || x >= extent) return std::nullopt;
    n.anchor[a] = static_cast<std::uint32_t>(x);
  }
  return n;
}

bool shares_face(const OctKey& a, const OctKey& b) {
  if (!a.touches(b)) return false;
  int open = 0;
  for (int d = 0; d < a.dim; ++d) {
    const std::uint64_t a0 = a.anchor[d], b0 = b.anchor[d];
    if (a0 < b0 + b.size() && b0 < a0 + a.size()) ++open;
  }
  return open == a.dim - 1;
}

}  // namespace

LinearOctree balance_2to1(const LinearOctree& tree) {
  std::unordered_set<OctKey, OctKeyHash> leaves(tree.leaves().begin(), tree.leaves().end());
  std::vector<OctKey> work(tree.leaves().begin(), tree.leaves().end());
  const int dim = tree.dim();

  auto containing_leaf = [&leaves](const OctKey& cell, int below_level) -> std::optional<OctKey> {
    for (int lev = below_level; lev >= 0; --lev) {
      const OctKey a = cell.ancestor(lev);
      if (leaves.count(a)) return a;
    }
    return std::nullopt;
  };

  while (!work.empty()) {
    const OctKey k = work.back();
    work.pop_back();
    if (!leaves.count(k) || k.level < 2) continue;
    for_each_direction(dim, false, [&](const std::array<int, 3>& d) {
      auto n = shifted(k, d);
      if (!n) return;
      // Split any leaf coarser than level-1 that covers the neighbor cell.
      while (auto coarse = containing_leaf(*n, k.level - 2)) {
        leaves.erase(*coarse);
        for (int c = 0; c < coarse->num_children(); ++c) {
          const OctKey ch = coarse->child(c);
          leaves.insert(ch);
          work.push_back(ch);
        }
      }
    });
  }

  LinearOctree out(std::vector<OctKey>(leaves.begin(), leaves.end()), dim, tree.max_depth(),
                   tree.sfc());
  out.mark_balanced(true);
  return out;
}

bool is_balanced_bruteforce(const LinearOctree& tree) {
  const auto& l = tree.leaves();
  for (std::size_t i = 0; i < l.size(); ++i) {
    for (std::size_t j = i + 1; j < l.size(); ++j) {
      if (std::abs(int(l[i].level) - int(l[j].level)) > 1 && l[i].touches(l[j])) return false;
    }
  }
  return true;
}

std::vector<OctKey> neighbors(const OctKey& key, const LinearOctree& tree, Adjacency adjacency) {
  if (!tree.find(key)) throw InvalidInput("neighbors: key is not a leaf of the tree");
  const bool faces = adjacency == Adjacency::Faces;
  std::vector<OctKey> out;
  auto accept = [&](const OctKey& cand) {
    if (faces ? shares_face(key, cand) : key.touches(cand)) out.push_back(cand);
  };
  for_each_direction(tree.dim(), faces, [&](const std::array<int, 3>& d) {
    auto n = shifted(key, d);
    if (!n) return;
    if (auto c = tree.find_containing(*n)) {
      accept(tree[*c]);
      return;
    }
    auto [first, last] = tree.descendant_range(*n);
    for (std::size_t i = first; i < last; ++i) accept(tree[i]);
  });
  SfcLess less{tree.sfc()};
  std::sort(out.begin(), out.end(), less);
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void write_octree(std::ostream& os, const LinearOctree& tree) {
  os << tree.dim() << " " << tree.max_depth() << " " << tree.size() << "\n";
  for (const auto& k : tree.leaves()) {
    os << k.anchor[0] << " " << k.anchor[1];
    if (tree.dim() == 3) os << " " << k.anchor[2];
    os << " " << int(k.level) << "\n";
  }
}

LinearOctree read_octree(std::istream& is, SfcKind kind) {
  int dim = 0, max_depth = 0;
  std::size_t count = 0;
  if (!(is >> dim >> max_depth >> count)) throw InvalidInput("octree dump: bad header");
  std::vector<OctKey> leaves;
  leaves.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::array<std::uint32_t, 3> a{0, 0, 0};
    int level = 0;
    for (int d = 0; d < dim; ++d) is >> a[d];
    is >> level;
    if (!is) throw InvalidInput("octree dump: truncated at leaf " + std::to_string(i));
    leaves.push_back(OctKey::make(dim, max_depth, level, a));
  }
  return LinearOctree(std::move(leaves), dim, max_depth, kind);
}

}  // namespace octlts
