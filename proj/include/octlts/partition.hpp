#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "octlts/errors.hpp"
#include "octlts/octree.hpp"

namespace octlts {

enum class StepMode { GTS, LTS };

// GTS: 1. LTS: 2^(level - l_min), the number of steps a leaf takes per coarse round.
double octant_weight(const OctKey& key, int l_min, StepMode mode);
std::vector<double> octant_weights(const LinearOctree& tree, StepMode mode);

struct PartitionMap {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;  // [first, last) per rank
  std::vector<double> weights;
  std::vector<double> rank_weights;

  int ranks() const { return int(ranges.size()); }
  int rank_of(std::size_t leaf) const;
  bool has_empty_rank() const;
  double total_weight() const;
  double max_weight() const;
  void validate(std::size_t leaf_count) const;
};

// Greedy prefix cut: leaf i goes to rank min(R-1, floor(R * prefix_before(i) / W)).
PartitionMap weighted_partition(const LinearOctree& tree, const std::vector<double>& weights,
                                int ranks);
PartitionMap single_rank_partition(const LinearOctree& tree);

// Nodes owned by `owner_leaf` on the sending rank, in the order they are packed.
struct ExchangeEntry {
  std::uint32_t owner_leaf = 0;
  std::vector<std::uint64_t> nodes;  // global zip indices
};

struct RankPair {
  int src = 0;
  int dst = 0;
  std::vector<ExchangeEntry> entries;
  std::size_t node_count() const;
};

struct ExchangePlan {
  int ranks = 1;
  std::vector<RankPair> pairs;  // sorted by (src, dst)

  bool empty() const { return pairs.empty(); }
  const RankPair* find(int src, int dst) const;
  std::size_t total_nodes() const;
};

class Mesh;
ExchangePlan build_exchange_plan(const LinearOctree& tree, const PartitionMap& pmap,
                                 const Mesh& mesh);

using Buffer = std::vector<std::uint8_t>;

struct Post {
  int from = 0;
  int to = 0;
  Buffer bytes;
};

// Delivers posted buffers. Every pair in the plan must be posted exactly once
// with node_count * bytes_per_node bytes; anything else raises ProtocolError
// for that pair. Result[r] holds the buffers received by rank r in plan order.
std::vector<std::vector<Post>> exchange(const ExchangePlan& plan, std::vector<Post> posts,
                                        std::size_t bytes_per_node, int threads = 1);

}  // namespace octlts
