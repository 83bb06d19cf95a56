#include "octlts/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <ostream>
#include <string>

#include "octlts/interp.hpp"
#include "octlts/parallel.hpp"

namespace octlts {

namespace {

constexpr int kLatticeBits = 21;
constexpr std::int64_t kLatticeMask = (std::int64_t{1} << kLatticeBits) - 1;

std::uint64_t pack(const Lattice& q) {
  return std::uint64_t(q[0]) | (std::uint64_t(q[1]) << kLatticeBits) |
         (std::uint64_t(q[2]) << (2 * kLatticeBits));
}

Lattice unpack(std::uint64_t v) {
  return {std::int64_t(v & kLatticeMask), std::int64_t((v >> kLatticeBits) & kLatticeMask),
          std::int64_t((v >> (2 * kLatticeBits)) & kLatticeMask)};
}

std::size_t ipow(std::size_t b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

}  // namespace

void MeshParams::validate() const {
  if (points_per_octant < 3 || points_per_octant % 2 == 0) {
    throw InvalidInput("points_per_octant must be odd and >= 3");
  }
  if (pad < 0 || pad > points_per_octant - 1) {
    throw InvalidInput("pad must lie in [0, points_per_octant - 1]");
  }
}

std::size_t BlockGeometry::padded_size() const { return ipow(std::size_t(n + 2 * pad), dim); }
std::size_t BlockGeometry::interior_size() const { return ipow(std::size_t(n), dim); }

std::vector<Block> decompose_blocks(const LinearOctree& tree, const MeshParams& params,
                                    const PartitionMap* pmap) {
  params.validate();
  if (pmap) pmap->validate(tree.size());
  std::vector<Block> blocks;
  const int dim = tree.dim();
  std::size_t i = 0;
  int rank = 0;
  while (i < tree.size()) {
    std::size_t rank_end = tree.size();
    if (pmap) {
      while (pmap->ranges[rank].second <= i) ++rank;
      rank_end = pmap->ranges[rank].second;
    }
    const OctKey& leaf = tree[i];
    const int l = leaf.level;
    OctKey root = leaf;
    std::size_t end = i + 1;
    for (int a = l - 1; a >= 0; --a) {
      const OctKey anc = leaf.ancestor(a);
      const auto [f, e] = tree.descendant_range(anc);
      if (f != i || e > rank_end) break;
      if (e - f != ipow(std::size_t{1} << dim, l - a)) break;
      bool uniform = true;
      for (std::size_t j = f; j < e && uniform; ++j) uniform = tree[j].level == l;
      if (!uniform) break;
      root = anc;
      end = e;
    }
    Block b;
    b.root = root;
    b.leaf_level = l;
    b.interior_dims = (params.points_per_octant - 1) * (1 << (l - root.level)) + 1;
    b.pad = params.pad;
    b.owner_rank = rank;
    b.first_leaf = i;
    b.last_leaf = end;
    blocks.push_back(b);
    i = end;
  }
  return blocks;
}

const std::vector<std::uint32_t>& SyncMaps::for_min_level(int m) const {
  m = std::clamp(m, l_min, l_max);
  return partial[std::size_t(m - l_min)];
}

Mesh::Mesh(LinearOctree tree, MeshParams params, std::optional<PartitionMap> pmap, Domain domain)
    : tree_(std::move(tree)), params_(params), domain_(domain) {
  params_.validate();
  if (!tree_.balanced() && !is_balanced_bruteforce(tree_)) {
    throw InvalidInput("mesh: octree is not 2:1 balanced");
  }
  extent_ = (std::int64_t{1} << tree_.max_depth()) * (params_.points_per_octant - 1);
  if (extent_ > kLatticeMask) throw InvalidInput("mesh: maxdepth too large for the node lattice");
  if (!(domain_.hi > domain_.lo)) throw InvalidInput("mesh: empty domain");
  pmap_ = pmap ? *pmap : single_rank_partition(tree_);
  pmap_.validate(tree_.size());
  build_blocks(pmap);
  build_zip();
  build_plans();
  plan_ = build_exchange_plan(tree_, pmap_, *this);
  full_.plan = plan_;
  for (const auto& pair : plan_.pairs) {
    PackedPair pp{pair.src, pair.dst, {}, {}};
    for (const auto& e : pair.entries)
      for (std::uint64_t z : e.nodes) {
        pp.send_local.push_back(std::uint32_t(z - layouts_[pair.src].zip_begin));
        pp.recv_local.push_back(local_index(pair.dst, z));
      }
    full_.pairs.push_back(std::move(pp));
  }
}

void Mesh::build_blocks(const std::optional<PartitionMap>& pmap) {
  blocks_ = decompose_blocks(tree_, params_, pmap ? &pmap_ : nullptr);
  leaf_block_.assign(tree_.size(), 0);
  lmin_ = 1 << 20;
  lmax_ = -1;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    for (std::size_t i = blocks_[b].first_leaf; i < blocks_[b].last_leaf; ++i)
      leaf_block_[i] = std::uint32_t(b);
    lmin_ = std::min(lmin_, blocks_[b].leaf_level);
    lmax_ = std::max(lmax_, blocks_[b].leaf_level);
  }
}

std::size_t Mesh::interior_points(std::size_t b) const {
  return ipow(std::size_t(blocks_[b].interior_dims), dim());
}

std::size_t Mesh::padded_points(std::size_t b) const {
  return ipow(std::size_t(blocks_[b].padded_dims()), dim());
}

Lattice Mesh::block_origin(std::size_t b) const {
  const int n1 = params_.points_per_octant - 1;
  const auto& a = blocks_[b].root.anchor;
  return {std::int64_t(a[0]) * n1, std::int64_t(a[1]) * n1,
          dim() == 3 ? std::int64_t(a[2]) * n1 : 0};
}

std::int64_t Mesh::block_spacing(std::size_t b) const {
  return std::int64_t{1} << (max_depth() - blocks_[b].leaf_level);
}

Point Mesh::lattice_coord(const Lattice& q) const {
  const double u = lattice_unit();
  Point p{0.0, 0.0, 0.0};
  for (int d = 0; d < dim(); ++d) p[d] = domain_.lo + u * double(q[d]);
  return p;
}

double Mesh::finest_spacing() const {
  return lattice_unit() * double(std::int64_t{1} << (max_depth() - tree_.max_level()));
}

Lattice Mesh::zip_lattice(std::size_t z) const { return unpack(zip_lattice_[z]); }

BlockGeometry Mesh::geometry(std::size_t b) const {
  BlockGeometry g;
  g.dim = dim();
  g.n = blocks_[b].interior_dims;
  g.pad = blocks_[b].pad;
  g.h = lattice_unit() * double(block_spacing(b));
  const Lattice o = block_origin(b);
  g.origin = lattice_coord(o);
  const std::int64_t span = block_spacing(b) * (g.n - 1);
  for (int d = 0; d < dim(); ++d) {
    g.lo_face[d] = o[d] == 0;
    g.hi_face[d] = o[d] + span == extent_;
  }
  g.r_eps = finest_spacing();
  return g;
}

std::optional<std::size_t> Mesh::leaf_of_cell(const Lattice& cell) const {
  const std::array<std::uint32_t, 3> a{std::uint32_t(cell[0]), std::uint32_t(cell[1]),
                                       std::uint32_t(dim() == 3 ? cell[2] : 0)};
  return tree_.find_containing(OctKey::make(dim(), max_depth(), max_depth(), a));
}

// Leaves whose closure contains lattice point q, deduplicated, ascending.
void Mesh::containing_leaves(const Lattice& q, std::vector<std::size_t>& out) const {
  out.clear();
  const int D = dim();
  const std::int64_t n1 = params_.points_per_octant - 1;
  const std::int64_t cells = std::int64_t{1} << max_depth();
  // candidate cells per axis: one unless q sits on a cell face
  std::int64_t lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
  for (int d = 0; d < D; ++d) {
    if (q[d] < 0 || q[d] > extent_) return;
    const std::int64_t c = q[d] / n1;
    lo[d] = (q[d] % n1 == 0) ? c - 1 : c;
    hi[d] = c;
    if (lo[d] < 0) lo[d] = 0;
    if (hi[d] >= cells) hi[d] = cells - 1;
  }
  for (std::int64_t z = lo[2]; z <= hi[2]; ++z)
    for (std::int64_t y = lo[1]; y <= hi[1]; ++y)
      for (std::int64_t x = lo[0]; x <= hi[0]; ++x) {
        const Lattice cell{x, y, z};
        bool known = false;
        for (std::size_t leaf : out) {
          const OctKey& k = tree_[leaf];
          bool in = true;
          for (int d = 0; d < D && in; ++d) {
            in = cell[d] >= std::int64_t(k.anchor[d]) && cell[d] < std::int64_t(k.anchor[d] + k.size());
          }
          if (in) {
            known = true;
            break;
          }
        }
        if (known) continue;
        if (auto leaf = leaf_of_cell(cell)) out.push_back(*leaf);
      }
  std::sort(out.begin(), out.end());
}

std::uint64_t Mesh::node_id(const Lattice& q, std::size_t leaf) const {
  const std::size_t b = leaf_block_[leaf];
  const Lattice o = block_origin(b);
  const std::int64_t h = block_spacing(b);
  const std::size_t n = std::size_t(blocks_[b].interior_dims);
  std::size_t idx = 0;
  for (int d = dim() - 1; d >= 0; --d) {
    const std::int64_t off = q[d] - o[d];
    if (off < 0 || off % h != 0 || std::size_t(off / h) >= n) {
      throw InvalidState("mesh: lattice point is not a node of the given leaf");
    }
    idx = idx * n + std::size_t(off / h);
  }
  return block_nodes_[b][idx];
}

void Mesh::build_zip() {
  const int D = dim();
  const int L = max_depth();
  const std::int64_t n1 = params_.points_per_octant - 1;
  block_nodes_.assign(blocks_.size(), {});
  std::unordered_map<std::uint64_t, std::uint64_t> shared;  // boundary node -> zip id
  std::vector<std::size_t> outside;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const Block& blk = blocks_[b];
    const int N = blk.interior_dims;
    const int l = blk.leaf_level;
    const std::int64_t h = block_spacing(b);
    const Lattice o = block_origin(b);
    const std::int64_t leaf_span = n1 << (L - l);
    // leaf index by block-local leaf coordinates
    const int per_axis = 1 << (l - blk.root.level);
    std::vector<std::uint32_t> local_leaf(ipow(std::size_t(per_axis), D));
    for (std::size_t i = blk.first_leaf; i < blk.last_leaf; ++i) {
      std::size_t idx = 0;
      for (int d = D - 1; d >= 0; --d) {
        idx = idx * per_axis +
              std::size_t((tree_[i].anchor[d] - blk.root.anchor[d]) >> (L - l));
      }
      local_leaf[idx] = std::uint32_t(i);
    }
    auto& nodes = block_nodes_[b];
    nodes.assign(ipow(std::size_t(N), D), kNone);
    const int nz = D == 3 ? N : 1;
    std::vector<std::size_t> leaves;
    std::size_t pt = 0;
    for (int k = 0; k < nz; ++k)
      for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i, ++pt) {
          const std::array<int, 3> ijk{i, j, k};
          const Lattice q{o[0] + i * h, o[1] + j * h, D == 3 ? o[2] + k * h : 0};
          bool boundary = false;
          for (int d = 0; d < D; ++d) boundary |= ijk[d] == 0 || ijk[d] == N - 1;
          std::size_t owner_leaf;
          int coarsest = l;
          if (!boundary) {
            std::size_t best = ~std::size_t{0};
            for (int s = 0; s < (1 << D); ++s) {
              std::size_t idx = 0;
              for (int d = D - 1; d >= 0; --d) {
                const std::int64_t c = (q[d] - o[d] - ((s >> d) & 1)) / leaf_span;
                idx = idx * per_axis + std::size_t(c);
              }
              best = std::min<std::size_t>(best, local_leaf[idx]);
            }
            owner_leaf = best;
          } else {
            containing_leaves(q, leaves);
            owner_leaf = leaves.front();
            for (std::size_t lf : leaves) coarsest = std::min<int>(coarsest, tree_[lf].level);
          }
          const std::int64_t hc = std::int64_t{1} << (L - coarsest);
          bool is_node = true;
          for (int d = 0; d < D; ++d) is_node &= q[d] % hc == 0;
          if (!is_node) continue;
          const std::uint32_t owner_block = leaf_block_[owner_leaf];
          if (owner_block == b) {
            const std::uint64_t id = zip_lattice_.size();
            zip_lattice_.push_back(pack(q));
            zip_owner_block_.push_back(std::uint32_t(b));
            zip_owner_leaf_.push_back(std::uint32_t(owner_leaf));
            nodes[pt] = id;
            if (boundary) shared.emplace(pack(q), id);
          } else {
            auto it = shared.find(pack(q));
            if (it == shared.end()) throw InvalidState("mesh: shared node visited before its owner");
            nodes[pt] = it->second;
          }
        }
  }
}

void Mesh::resolve(const Lattice& q, double scale,
                   std::vector<std::pair<std::uint64_t, double>>& acc, int depth) const {
  if (depth > 64) throw InvalidState("mesh: interpolation did not terminate");
  std::vector<std::size_t> leaves;
  containing_leaves(q, leaves);
  if (leaves.empty()) throw InvalidState("mesh: point outside the domain");
  std::size_t leaf = leaves.front();
  for (std::size_t lf : leaves)
    if (tree_[lf].level < tree_[leaf].level) leaf = lf;
  const int L = max_depth();
  const std::int64_t H = std::int64_t{1} << (L - tree_[leaf].level);
  bool is_node = true;
  for (int d = 0; d < dim(); ++d) is_node &= q[d] % H == 0;
  if (is_node) {
    const std::uint64_t id = node_id(q, leaf);
    if (id == kNone) throw InvalidState("mesh: coarsest containing leaf has a hanging node");
    acc.emplace_back(id, scale);
    return;
  }
  const int n = params_.points_per_octant;
  const std::int64_t n1 = n - 1;
  std::array<LagrangeStencil<4>, 3> st;
  Lattice a{0, 0, 0};
  for (int d = 0; d < 3; ++d) {
    if (d >= dim()) {
      st[d] = lagrange_stencil<4>(0, 1, 0.0);
      continue;
    }
    a[d] = std::int64_t(tree_[leaf].anchor[d]) * n1;
    const std::int64_t off = q[d] - a[d];
    if (off % H == 0) {
      st[d] = lagrange_stencil<4>(int(off / H), 1, double(off / H));
    } else {
      const double x = double(off) / double(H);
      const int count = std::min(4, n);
      const int first = std::clamp(int(std::floor(x)) - 1, 0, n - count);
      st[d] = lagrange_stencil<4>(first, count, x);
    }
  }
  for (int c = 0; c < st[2].count; ++c)
    for (int bb = 0; bb < st[1].count; ++bb)
      for (int aa = 0; aa < st[0].count; ++aa) {
        const double w = st[0].weight[aa] * st[1].weight[bb] * st[2].weight[c];
        if (w == 0.0) continue;
        const Lattice qq{a[0] + (st[0].first + aa) * H, a[1] + (st[1].first + bb) * H,
                         dim() == 3 ? a[2] + (st[2].first + c) * H : 0};
        resolve(qq, scale * w, acc, depth + 1);
      }
}

std::vector<std::pair<std::uint64_t, double>> Mesh::interpolation_weights(const Lattice& q) const {
  for (int d = 0; d < dim(); ++d)
    if (q[d] < 0 || q[d] > extent_) throw InvalidInput("interpolation_weights: point outside domain");
  std::vector<std::pair<std::uint64_t, double>> acc;
  resolve(q, 1.0, acc, 0);
  std::sort(acc.begin(), acc.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<std::pair<std::uint64_t, double>> out;
  for (const auto& e : acc) {
    if (!out.empty() && out.back().first == e.first) {
      out.back().second += e.second;
    } else {
      out.push_back(e);
    }
  }
  return out;
}

void Mesh::build_plans() {
  const int D = dim();
  const int R = ranks();
  layouts_.assign(R, {});
  // zip ids are assigned in block order and blocks are rank-contiguous
  for (int r = 0; r < R; ++r) layouts_[r].zip_begin = layouts_[r].zip_end = ~std::size_t{0};
  {
    std::size_t z = 0;
    for (int r = 0; r < R; ++r) {
      layouts_[r].zip_begin = z;
      while (z < num_zip() && blocks_[zip_owner_block_[z]].owner_rank == r) ++z;
      layouts_[r].zip_end = z;
    }
    if (z != num_zip()) throw InvalidState("mesh: zip numbering is not rank-contiguous");
  }

  plans_.assign(blocks_.size(), {});
  std::vector<std::unordered_map<std::uint64_t, std::uint32_t>> src_index(blocks_.size());
  parallel_for(blocks_.size(), 1, [&](std::size_t b, int) {
    UnzipPlan& plan = plans_[b];
    auto& index = src_index[b];
    auto source = [&](std::uint64_t z) {
      auto [it, fresh] = index.emplace(z, std::uint32_t(plan.source_global.size()));
      if (fresh) plan.source_global.push_back(z);
      return it->second;
    };
    const int N = blocks_[b].interior_dims;
    const int P = blocks_[b].pad;
    const int M = N + 2 * P;
    const std::int64_t h = block_spacing(b);
    const Lattice o = block_origin(b);
    const int mz = D == 3 ? M : 1;
    std::vector<std::uint32_t> foreign_point, foreign_source;
    std::size_t pt = 0;
    for (int k = 0; k < mz; ++k)
      for (int j = 0; j < M; ++j)
        for (int i = 0; i < M; ++i, ++pt) {
          const std::array<int, 3> pad_idx{i, j, k};
          Lattice q{0, 0, 0};
          bool inside_block = true;
          bool inside_domain = true;
          std::size_t interior = 0;
          for (int d = D - 1; d >= 0; --d) {
            const int c = pad_idx[d] - P;
            q[d] = o[d] + c * h;
            inside_block &= c >= 0 && c < N;
            inside_domain &= q[d] >= 0 && q[d] <= extent_;
            interior = interior * std::size_t(N) + std::size_t(std::clamp(c, 0, N - 1));
          }
          if (!inside_domain) {
            plan.outside_point.push_back(std::uint32_t(pt));
            continue;
          }
          if (inside_block && block_nodes_[b][interior] != kNone) {
            const std::uint64_t z = block_nodes_[b][interior];
            if (zip_owner_block_[z] == b) {
              plan.copy_point.push_back(std::uint32_t(pt));
              plan.copy_source.push_back(source(z));
            } else {
              foreign_point.push_back(std::uint32_t(pt));
              foreign_source.push_back(source(z));
            }
            continue;
          }
          const auto w = interpolation_weights(q);
          if (w.size() == 1 && w[0].second == 1.0) {
            foreign_point.push_back(std::uint32_t(pt));
            foreign_source.push_back(source(w[0].first));
            continue;
          }
          if (plan.interp_begin.empty()) plan.interp_begin.push_back(0);
          plan.interp_point.push_back(std::uint32_t(pt));
          for (const auto& [z, wt] : w) {
            plan.interp_source.push_back(source(z));
            plan.interp_weight.push_back(wt);
          }
          plan.interp_begin.push_back(std::uint32_t(plan.interp_source.size()));
        }
    if (plan.interp_begin.empty()) plan.interp_begin.push_back(0);
    plan.own_copies = plan.copy_point.size();
    plan.copy_point.insert(plan.copy_point.end(), foreign_point.begin(), foreign_point.end());
    plan.copy_source.insert(plan.copy_source.end(), foreign_source.begin(), foreign_source.end());
  });

  // ghosts per rank in plan order: (owner rank, owner leaf, node)
  ghost_index_.assign(R, {});
  for (int r = 0; r < R; ++r) {
    std::vector<std::uint64_t> g;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      if (blocks_[b].owner_rank != r) continue;
      for (std::uint64_t z : plans_[b].source_global)
        if (z < layouts_[r].zip_begin || z >= layouts_[r].zip_end) g.push_back(z);
    }
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    std::stable_sort(g.begin(), g.end(), [&](std::uint64_t x, std::uint64_t y) {
      const int rx = blocks_[zip_owner_block_[x]].owner_rank;
      const int ry = blocks_[zip_owner_block_[y]].owner_rank;
      if (rx != ry) return rx < ry;
      return zip_owner_leaf_[x] < zip_owner_leaf_[y];
    });
    for (std::size_t s = 0; s < g.size(); ++s)
      ghost_index_[r].emplace(g[s], std::uint32_t(layouts_[r].owned() + s));
    layouts_[r].ghosts = std::move(g);
  }

  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    UnzipPlan& plan = plans_[b];
    const int r = blocks_[b].owner_rank;
    std::unordered_map<std::uint32_t, std::uint32_t> slot;
    plan.source_local.resize(plan.source_global.size());
    plan.source_owner.resize(plan.source_global.size());
    for (std::size_t s = 0; s < plan.source_global.size(); ++s) {
      const std::uint64_t z = plan.source_global[s];
      plan.source_local[s] = local_index(r, z);
      const std::uint32_t ob = zip_owner_block_[z];
      auto [it, fresh] = slot.emplace(ob, std::uint32_t(plan.owner_blocks.size()));
      if (fresh) plan.owner_blocks.push_back(ob);
      plan.source_owner[s] = it->second;
    }
    const auto& nodes = block_nodes_[b];
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i] != kNone && zip_owner_block_[nodes[i]] == b) {
        plan.owned_interior.push_back(std::uint32_t(i));
        plan.owned_local.push_back(std::uint32_t(nodes[i] - layouts_[r].zip_begin));
      }
    }
  }
}

std::uint32_t Mesh::local_index(int r, std::uint64_t z) const {
  const RankLayout& lay = layouts_[r];
  if (z >= lay.zip_begin && z < lay.zip_end) return std::uint32_t(z - lay.zip_begin);
  auto it = ghost_index_[r].find(z);
  if (it == ghost_index_[r].end()) {
    throw InvalidInput("local_index: node " + std::to_string(z) + " is not visible on rank " +
                       std::to_string(r));
  }
  return it->second;
}

std::size_t Mesh::padded_index_of_interior(std::size_t b, std::size_t interior) const {
  const std::size_t N = std::size_t(blocks_[b].interior_dims);
  const std::size_t P = std::size_t(blocks_[b].pad);
  const std::size_t M = N + 2 * P;
  std::size_t out = 0;
  std::size_t stride = 1;
  for (int d = 0; d < dim(); ++d) {
    out += (interior % N + P) * stride;
    interior /= N;
    stride *= M;
  }
  return out;
}

void Mesh::sample(ZipField& f, const std::function<void(const Point&, double*)>& fn) const {
  if (f.nodes != num_zip()) throw InvalidInput("sample: field size does not match the mesh");
  std::vector<double> vals(std::size_t(f.nvar));
  for (std::size_t z = 0; z < num_zip(); ++z) {
    fn(zip_coord(z), vals.data());
    for (int v = 0; v < f.nvar; ++v) f.at(v, z) = vals[v];
  }
}

std::vector<LocalField> Mesh::scatter(const ZipField& f) const {
  if (f.nodes != num_zip()) throw InvalidInput("scatter: field size does not match the mesh");
  std::vector<LocalField> out;
  for (int r = 0; r < ranks(); ++r) {
    const RankLayout& lay = layouts_[r];
    LocalField lf(f.nvar, lay.local_size());
    for (int v = 0; v < f.nvar; ++v)
      std::copy(f.values.begin() + std::ptrdiff_t(v * f.nodes + lay.zip_begin),
                f.values.begin() + std::ptrdiff_t(v * f.nodes + lay.zip_end), lf.var(v));
    out.push_back(std::move(lf));
  }
  return out;
}

ZipField Mesh::gather(const std::vector<LocalField>& local) const {
  if (int(local.size()) != ranks()) throw InvalidInput("gather: one local field per rank");
  ZipField f(local.front().nvar, num_zip());
  for (int r = 0; r < ranks(); ++r) {
    const RankLayout& lay = layouts_[r];
    for (int v = 0; v < f.nvar; ++v)
      std::copy(local[r].var(v), local[r].var(v) + lay.owned(),
                f.values.begin() + std::ptrdiff_t(v * f.nodes + lay.zip_begin));
  }
  return f;
}

ExchangeProgram Mesh::program_for(const std::vector<SyncEntry>& entries) const {
  std::map<std::pair<int, int>, std::vector<std::uint64_t>> by_pair;
  for (const auto& e : entries) {
    if (!e.remote()) continue;
    auto& v = by_pair[{e.src_rank, e.dst_rank}];
    v.insert(v.end(), e.nodes.begin(), e.nodes.end());
  }
  ExchangeProgram prog;
  prog.plan.ranks = ranks();
  for (auto& [key, nodes] : by_pair) {
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    // same order as the ghost slots: owner leaf, then node
    std::stable_sort(nodes.begin(), nodes.end(), [&](std::uint64_t x, std::uint64_t y) {
      return zip_owner_leaf_[x] < zip_owner_leaf_[y];
    });
    RankPair rp{key.first, key.second, {}};
    PackedPair pp{key.first, key.second, {}, {}};
    for (std::uint64_t z : nodes) {
      if (rp.entries.empty() || rp.entries.back().owner_leaf != zip_owner_leaf_[z]) {
        rp.entries.push_back(ExchangeEntry{zip_owner_leaf_[z], {}});
      }
      rp.entries.back().nodes.push_back(z);
      pp.send_local.push_back(std::uint32_t(z - layouts_[key.first].zip_begin));
      pp.recv_local.push_back(local_index(key.second, z));
    }
    prog.plan.pairs.push_back(std::move(rp));
    prog.pairs.push_back(std::move(pp));
  }
  return prog;
}

void Mesh::exchange_fields(const ExchangeProgram& prog,
                           const std::vector<std::vector<LocalField*>>& fields, int threads) const {
  if (prog.pairs.empty()) return;
  if (int(fields.size()) != ranks()) throw InvalidInput("exchange_fields: one field list per rank");
  std::size_t per_node = 0;
  for (const LocalField* f : fields.front()) per_node += std::size_t(f->nvar);
  const std::size_t bytes_per_node = per_node * sizeof(double);
  std::vector<Post> posts(prog.pairs.size());
  parallel_for(prog.pairs.size(), threads, [&](std::size_t p, int) {
    const PackedPair& pp = prog.pairs[p];
    Post& post = posts[p];
    post.from = pp.src;
    post.to = pp.dst;
    post.bytes.resize(pp.send_local.size() * bytes_per_node);
    std::size_t off = 0;
    for (std::uint32_t li : pp.send_local)
      for (const LocalField* f : fields[pp.src])
        for (int v = 0; v < f->nvar; ++v) {
          const double x = f->var(v)[li];
          std::memcpy(post.bytes.data() + off, &x, sizeof(double));
          off += sizeof(double);
        }
  });
  auto inbox = exchange(prog.plan, std::move(posts), bytes_per_node, threads);
  parallel_for(std::size_t(ranks()), threads, [&](std::size_t r, int) {
    for (const Post& post : inbox[r]) {
      std::size_t p = 0;
      while (prog.pairs[p].src != post.from || prog.pairs[p].dst != post.to) ++p;
      const PackedPair& pp = prog.pairs[p];
      std::size_t off = 0;
      for (std::uint32_t li : pp.recv_local)
        for (LocalField* f : fields[r])
          for (int v = 0; v < f->nvar; ++v) {
            double x;
            std::memcpy(&x, post.bytes.data() + off, sizeof(double));
            f->var(v)[li] = x;
            off += sizeof(double);
          }
    }
  });
}

void Mesh::exchange_ghosts(std::vector<LocalField>& local, int threads) const {
  std::vector<std::vector<LocalField*>> fields(local.size());
  for (std::size_t r = 0; r < local.size(); ++r) fields[r] = {&local[r]};
  exchange_fields(full_, fields, threads);
}

void Mesh::fill_padded(std::size_t b, const double* src, double* out) const {
  const UnzipPlan& plan = plans_[b];
  for (std::uint32_t p : plan.outside_point) out[p] = 0.0;
  for (std::size_t c = 0; c < plan.copy_point.size(); ++c) out[plan.copy_point[c]] = src[plan.copy_source[c]];
  for (std::size_t i = 0; i < plan.interp_point.size(); ++i) {
    double s = 0.0;
    for (std::uint32_t e = plan.interp_begin[i]; e < plan.interp_begin[i + 1]; ++e) {
      s += plan.interp_weight[e] * src[plan.interp_source[e]];
    }
    out[plan.interp_point[i]] = s;
  }
}

void Mesh::unzip_block(std::size_t b, const LocalField& local, double* out) const {
  const UnzipPlan& plan = plans_[b];
  const std::size_t np = padded_points(b);
  std::vector<double> src(plan.source_local.size());
  for (int v = 0; v < local.nvar; ++v) {
    const double* lv = local.var(v);
    for (std::size_t s = 0; s < src.size(); ++s) src[s] = lv[plan.source_local[s]];
    fill_padded(b, src.data(), out + std::size_t(v) * np);
  }
}

std::vector<std::vector<double>> Mesh::unzip(const ZipField& f, int threads) const {
  auto local = scatter(f);
  exchange_ghosts(local, threads);
  std::vector<std::vector<double>> out(blocks_.size());
  parallel_for(blocks_.size(), threads, [&](std::size_t b, int) {
    out[b].assign(padded_points(b) * std::size_t(f.nvar), 0.0);
    unzip_block(b, local[std::size_t(blocks_[b].owner_rank)], out[b].data());
  });
  return out;
}

ZipField Mesh::zip(const std::vector<std::vector<double>>& unzipped, int nvar) const {
  if (unzipped.size() != blocks_.size()) throw InvalidInput("zip: one array per block");
  ZipField f(nvar, num_zip());
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const UnzipPlan& plan = plans_[b];
    const std::size_t np = padded_points(b);
    if (unzipped[b].size() != np * std::size_t(nvar)) throw InvalidInput("zip: block array size");
    const std::size_t base = layouts_[blocks_[b].owner_rank].zip_begin;
    for (std::size_t i = 0; i < plan.owned_interior.size(); ++i) {
      const std::size_t p = padded_index_of_interior(b, plan.owned_interior[i]);
      for (int v = 0; v < nvar; ++v) f.at(v, base + plan.owned_local[i]) = unzipped[b][v * np + p];
    }
  }
  return f;
}

SyncMaps build_sync_maps(const Mesh& mesh) {
  SyncMaps maps;
  maps.l_min = mesh.min_block_level();
  maps.l_max = mesh.max_block_level();
  const auto& blocks = mesh.blocks();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const UnzipPlan& plan = mesh.plan(b);
    std::vector<std::vector<std::uint64_t>> per_owner(plan.owner_blocks.size());
    for (std::size_t s = 0; s < plan.source_global.size(); ++s)
      per_owner[plan.source_owner[s]].push_back(plan.source_global[s]);
    for (std::size_t o = 0; o < plan.owner_blocks.size(); ++o) {
      const std::uint32_t sender = plan.owner_blocks[o];
      if (sender == b) continue;
      SyncEntry e;
      e.sender = sender;
      e.receiver = std::uint32_t(b);
      e.src_rank = blocks[sender].owner_rank;
      e.dst_rank = blocks[b].owner_rank;
      e.nodes = std::move(per_owner[o]);
      std::sort(e.nodes.begin(), e.nodes.end());
      maps.full.push_back(std::move(e));
    }
  }
  for (int m = maps.l_min; m <= maps.l_max; ++m) {
    std::vector<char> sel(blocks.size());
    for (std::size_t b = 0; b < blocks.size(); ++b) sel[b] = blocks[b].leaf_level >= m;
    maps.partial.push_back(select_entries(maps, sel));
  }
  return maps;
}

std::vector<std::uint32_t> select_entries(const SyncMaps& maps,
                                          const std::vector<char>& block_selected) {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < maps.full.size(); ++i) {
    const SyncEntry& e = maps.full[i];
    if (block_selected.at(e.sender) || block_selected.at(e.receiver)) out.push_back(std::uint32_t(i));
  }
  return out;
}

void write_block_vtk(std::ostream& os, const Mesh& mesh, std::size_t b,
                     const std::vector<double>& padded, int nvar,
                     const std::vector<std::string>& names) {
  const BlockGeometry g = mesh.geometry(b);
  const int nz = g.dim == 3 ? g.n : 1;
  const std::size_t np = g.padded_size();
  os << "# vtk DataFile Version 3.0\nblock " << b << " level " << mesh.blocks()[b].leaf_level
     << "\nASCII\nDATASET RECTILINEAR_GRID\nDIMENSIONS " << g.n << ' ' << g.n << ' ' << nz << '\n';
  const char* axes[3] = {"X", "Y", "Z"};
  for (int d = 0; d < 3; ++d) {
    const int cnt = d < g.dim ? g.n : 1;
    os << axes[d] << "_COORDINATES " << cnt << " double\n";
    for (int i = 0; i < cnt; ++i) os << (d < g.dim ? g.origin[d] + i * g.h : 0.0) << (i + 1 < cnt ? ' ' : '\n');
  }
  os << "POINT_DATA " << g.interior_size() << '\n';
  for (int v = 0; v < nvar; ++v) {
    os << "SCALARS " << (v < int(names.size()) ? names[v] : "var" + std::to_string(v))
       << " double 1\nLOOKUP_TABLE default\n";
    for (std::size_t i = 0; i < g.interior_size(); ++i) {
      os << padded[v * np + mesh.padded_index_of_interior(b, i)] << '\n';
    }
  }
}

void write_field_csv(std::ostream& os, const Mesh& mesh,
                     const std::vector<std::vector<double>>& unzipped, int nvar, int v) {
  if (v < 0 || v >= nvar) throw InvalidInput("write_field_csv: variable out of range");
  const int D = mesh.dim();
  os << (D == 3 ? "block_id,i,j,k,value\n" : "block_id,i,j,value\n");
  os.precision(17);
  for (std::size_t b = 0; b < mesh.num_blocks(); ++b) {
    const std::size_t N = std::size_t(mesh.blocks()[b].interior_dims);
    const std::size_t np = mesh.padded_points(b);
    for (std::size_t i = 0; i < mesh.interior_points(b); ++i) {
      os << b << ',' << i % N << ',' << (i / N) % N;
      if (D == 3) os << ',' << i / (N * N);
      os << ',' << unzipped[b][v * np + mesh.padded_index_of_interior(b, i)] << '\n';
    }
  }
}

}  // namespace octlts
