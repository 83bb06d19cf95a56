#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "octlts/geometry.hpp"
#include "octlts/octree.hpp"
#include "octlts/partition.hpp"

namespace octlts {

struct MeshParams {
  int points_per_octant = 7;
  int pad = 2;
  void validate() const;
};

// Uniform sub-octree treated as one structured patch.
struct Block {
  OctKey root;
  int leaf_level = 0;
  int interior_dims = 0;  // points per axis
  int pad = 0;
  int owner_rank = 0;
  std::size_t first_leaf = 0;  // leaf range [first_leaf, last_leaf)
  std::size_t last_leaf = 0;

  int padded_dims() const { return interior_dims + 2 * pad; }
};

// Maximal uniform blocks in SFC order. With a partition, blocks never straddle
// a rank boundary.
std::vector<Block> decompose_blocks(const LinearOctree& tree, const MeshParams& params = {},
                                    const PartitionMap* pmap = nullptr);

// Integer lattice: finest node spacing is 1, so the domain is [0, 2^L (n-1)]^D.
using Lattice = std::array<std::int64_t, 3>;

// What a right-hand side needs to know about one block.
struct BlockGeometry {
  int dim = 3;
  int n = 0;    // interior points per axis
  int pad = 0;  // padded array has n + 2 pad points per axis
  double h = 0.0;
  Point origin{0.0, 0.0, 0.0};  // coordinate of interior point 0
  std::array<bool, 3> lo_face{false, false, false};
  std::array<bool, 3> hi_face{false, false, false};
  double r_eps = 0.0;  // finest spacing in the mesh

  std::size_t padded_size() const;
  std::size_t interior_size() const;
  Point coord(int i, int j, int k) const {  // interior indices
    return {origin[0] + i * h, origin[1] + j * h, dim == 3 ? origin[2] + k * h : 0.0};
  }
};

// Shared-node field: one value per zip node per variable, stored var-major.
struct ZipField {
  int nvar = 1;
  std::size_t nodes = 0;
  std::vector<double> values;

  ZipField() = default;
  ZipField(int nv, std::size_t n) : nvar(nv), nodes(n), values(std::size_t(nv) * n, 0.0) {}
  double& at(int v, std::size_t i) { return values[std::size_t(v) * nodes + i]; }
  double at(int v, std::size_t i) const { return values[std::size_t(v) * nodes + i]; }
};

// Per-block recipe for filling the padded array from rank-local zip storage.
struct UnzipPlan {
  std::vector<std::uint32_t> owner_blocks;  // distinct blocks owning the sources
  std::vector<std::uint64_t> source_global;
  std::vector<std::uint32_t> source_local;  // rank-local index (owned, then ghosts)
  std::vector<std::uint32_t> source_owner;  // index into owner_blocks

  // Plain copies; the first `own_copies` read nodes owned by this block.
  std::vector<std::uint32_t> copy_point;
  std::vector<std::uint32_t> copy_source;
  std::size_t own_copies = 0;

  // Interpolated points (hanging or in a neighbor of another level).
  std::vector<std::uint32_t> interp_point;
  std::vector<std::uint32_t> interp_begin;  // size interp_point.size() + 1
  std::vector<std::uint32_t> interp_source;
  std::vector<double> interp_weight;

  std::vector<std::uint32_t> outside_point;  // pad points outside the domain, never read

  // Interior point -> rank-local zip index for the nodes this block owns.
  std::vector<std::uint32_t> owned_interior;
  std::vector<std::uint32_t> owned_local;
};

struct RankLayout {
  std::size_t zip_begin = 0;
  std::size_t zip_end = 0;
  std::vector<std::uint64_t> ghosts;  // global zip index per ghost slot, plan order
  std::size_t owned() const { return zip_end - zip_begin; }
  std::size_t local_size() const { return owned() + ghosts.size(); }
};

// Rank-local storage: owned zip values followed by ghost copies, var-major.
struct LocalField {
  int nvar = 1;
  std::size_t size = 0;
  std::vector<double> values;

  LocalField() = default;
  LocalField(int nv, std::size_t n) : nvar(nv), size(n), values(std::size_t(nv) * n, 0.0) {}
  double* var(int v) { return values.data() + std::size_t(v) * size; }
  const double* var(int v) const { return values.data() + std::size_t(v) * size; }
};

// Index lists realizing one rank pair of an exchange.
struct PackedPair {
  int src = 0;
  int dst = 0;
  std::vector<std::uint32_t> send_local;
  std::vector<std::uint32_t> recv_local;
};

// An exchange plan together with the local indices that realize it; pairs are
// aligned with plan.pairs.
struct ExchangeProgram {
  ExchangePlan plan;
  std::vector<PackedPair> pairs;
  std::size_t nodes() const { return plan.total_nodes(); }
};

// Block-to-block data dependency: nodes owned by `sender` read by `receiver`.
struct SyncEntry {
  std::uint32_t sender = 0;
  std::uint32_t receiver = 0;
  int src_rank = 0;
  int dst_rank = 0;
  std::vector<std::uint64_t> nodes;
  bool remote() const { return src_rank != dst_rank; }
};

struct SyncMaps {
  std::vector<SyncEntry> full;
  int l_min = 0;
  int l_max = 0;
  // partial[m - l_min]: entries touching a block with leaf level >= m.
  std::vector<std::vector<std::uint32_t>> partial;

  const std::vector<std::uint32_t>& for_min_level(int m) const;
};

class Mesh {
 public:
  static constexpr std::uint64_t kNone = ~std::uint64_t{0};

  explicit Mesh(LinearOctree tree, MeshParams params = {},
                std::optional<PartitionMap> pmap = std::nullopt, Domain domain = {});

  const LinearOctree& tree() const { return tree_; }
  const PartitionMap& partition() const { return pmap_; }
  const MeshParams& params() const { return params_; }
  const Domain& domain() const { return domain_; }
  int dim() const { return tree_.dim(); }
  int max_depth() const { return tree_.max_depth(); }
  int ranks() const { return pmap_.ranks(); }

  const std::vector<Block>& blocks() const { return blocks_; }
  std::size_t num_blocks() const { return blocks_.size(); }
  std::uint32_t block_of_leaf(std::size_t leaf) const { return leaf_block_[leaf]; }
  int min_block_level() const { return lmin_; }
  int max_block_level() const { return lmax_; }
  std::size_t interior_points(std::size_t b) const;
  std::size_t padded_points(std::size_t b) const;
  Lattice block_origin(std::size_t b) const;
  std::int64_t block_spacing(std::size_t b) const;  // lattice units
  BlockGeometry geometry(std::size_t b) const;
  // Zip index of each interior point of block b, kNone for hanging points.
  const std::vector<std::uint64_t>& block_nodes(std::size_t b) const { return block_nodes_[b]; }
  const UnzipPlan& plan(std::size_t b) const { return plans_[b]; }

  std::size_t num_zip() const { return zip_lattice_.size(); }
  Lattice zip_lattice(std::size_t z) const;
  Point zip_coord(std::size_t z) const { return lattice_coord(zip_lattice(z)); }
  std::uint32_t zip_owner_block(std::size_t z) const { return zip_owner_block_[z]; }
  std::uint32_t zip_owner_leaf(std::size_t z) const { return zip_owner_leaf_[z]; }

  std::int64_t lattice_extent() const { return extent_; }
  double lattice_unit() const { return domain_.width() / double(extent_); }
  Point lattice_coord(const Lattice& q) const;
  double finest_spacing() const;

  const RankLayout& rank(int r) const { return layouts_[r]; }
  const ExchangePlan& exchange_plan() const { return plan_; }
  // Ghost slot (rank-local index) of global node `z` on rank r.
  std::uint32_t local_index(int r, std::uint64_t z) const;

  ZipField make_zip(int nvar) const { return ZipField(nvar, num_zip()); }
  void sample(ZipField& f, const std::function<void(const Point&, double*)>& fn) const;

  std::vector<LocalField> scatter(const ZipField& f) const;  // ghosts left at 0
  ZipField gather(const std::vector<LocalField>& local) const;
  const ExchangeProgram& full_program() const { return full_; }
  // Program covering the remote nodes of the given entries.
  ExchangeProgram program_for(const std::vector<SyncEntry>& entries) const;
  // Full ghost exchange through the partition module's exchange.
  void exchange_ghosts(std::vector<LocalField>& local, int threads = 1) const;
  // fields[r] lists the fields of rank r; all ranks list the same shapes.
  void exchange_fields(const ExchangeProgram& prog,
                       const std::vector<std::vector<LocalField*>>& fields, int threads = 1) const;

  // Fills nvar padded arrays for block b (var-major) from its rank's local field.
  void unzip_block(std::size_t b, const LocalField& local, double* out) const;
  // One variable: out[point] from values given per plan source.
  void fill_padded(std::size_t b, const double* source_values, double* out) const;
  std::size_t padded_index_of_interior(std::size_t b, std::size_t interior) const;
  // Padded arrays per block; exchanges ghosts first.
  std::vector<std::vector<double>> unzip(const ZipField& f, int threads = 1) const;
  // Owner's interior value for every zip node.
  ZipField zip(const std::vector<std::vector<double>>& unzipped, int nvar) const;

  // Weights over zip nodes reproducing the value at lattice point q.
  std::vector<std::pair<std::uint64_t, double>> interpolation_weights(const Lattice& q) const;

 private:
  void build_blocks(const std::optional<PartitionMap>& pmap);
  void build_zip();
  void build_plans();
  std::optional<std::size_t> leaf_of_cell(const Lattice& cell) const;
  void containing_leaves(const Lattice& q, std::vector<std::size_t>& out) const;
  std::uint64_t node_id(const Lattice& q, std::size_t leaf) const;
  void resolve(const Lattice& q, double scale, std::vector<std::pair<std::uint64_t, double>>& acc,
               int depth) const;

  LinearOctree tree_;
  MeshParams params_;
  PartitionMap pmap_;
  Domain domain_;
  std::int64_t extent_ = 0;
  std::vector<Block> blocks_;
  std::vector<std::uint32_t> leaf_block_;
  int lmin_ = 0;
  int lmax_ = 0;
  std::vector<std::vector<std::uint64_t>> block_nodes_;
  std::vector<std::uint64_t> zip_lattice_;  // packed coordinates
  std::vector<std::uint32_t> zip_owner_block_;
  std::vector<std::uint32_t> zip_owner_leaf_;
  std::vector<UnzipPlan> plans_;
  std::vector<RankLayout> layouts_;
  std::vector<std::unordered_map<std::uint64_t, std::uint32_t>> ghost_index_;
  ExchangePlan plan_;
  ExchangeProgram full_;
};

SyncMaps build_sync_maps(const Mesh& mesh);
// Entries of the full map whose sender or receiver is selected.
std::vector<std::uint32_t> select_entries(const SyncMaps& maps,
                                          const std::vector<char>& block_selected);

// Legacy-VTK ASCII rectilinear grid of one block's interior, one scalar per variable.
void write_block_vtk(std::ostream& os, const Mesh& mesh, std::size_t b,
                     const std::vector<double>& padded, int nvar,
                     const std::vector<std::string>& names);
// CSV `block_id,i,j[,k],value` of variable v over block interiors.
void write_field_csv(std::ostream& os, const Mesh& mesh,
                     const std::vector<std::vector<double>>& unzipped, int nvar, int v);

}  // namespace octlts
