#include "octlts/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "octlts/mesh.hpp"
#include "octlts/parallel.hpp"

namespace octlts {

double octant_weight(const OctKey& key, int l_min, StepMode mode) {
  if (key.level < l_min) {
    throw InvalidInput("octant_weight: level " + std::to_string(key.level) + " below l_min " +
                       std::to_string(l_min));
  }
  if (mode == StepMode::GTS) return 1.0;
  return std::ldexp(1.0, key.level - l_min);
}

std::vector<double> octant_weights(const LinearOctree& tree, StepMode mode) {
  const int lmin = tree.min_level();
  std::vector<double> w(tree.size());
  for (std::size_t i = 0; i < tree.size(); ++i) w[i] = octant_weight(tree[i], lmin, mode);
  return w;
}

int PartitionMap::rank_of(std::size_t leaf) const {
  auto it = std::upper_bound(ranges.begin(), ranges.end(), leaf,
                             [](std::size_t v, const auto& r) { return v < r.second; });
  if (it == ranges.end()) throw InvalidInput("rank_of: leaf index out of range");
  // skip empty ranges that end at the same index
  while (it->first == it->second) ++it;
  return int(it - ranges.begin());
}

bool PartitionMap::has_empty_rank() const {
  return std::any_of(ranges.begin(), ranges.end(),
                     [](const auto& r) { return r.first == r.second; });
}

double PartitionMap::total_weight() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

double PartitionMap::max_weight() const {
  return weights.empty() ? 0.0 : *std::max_element(weights.begin(), weights.end());
}

void PartitionMap::validate(std::size_t leaf_count) const {
  if (ranges.empty()) throw InvalidInput("partition: no ranks");
  if (weights.size() != leaf_count) throw InvalidInput("partition: weight count != leaf count");
  std::size_t expect = 0;
  for (const auto& r : ranges) {
    if (r.first != expect || r.second < r.first) throw InvalidInput("partition: ranges not contiguous");
    expect = r.second;
  }
  if (expect != leaf_count) throw InvalidInput("partition: ranges do not cover all leaves");
  if (rank_weights.size() != ranges.size()) throw InvalidInput("partition: rank weight count");
}

PartitionMap weighted_partition(const LinearOctree& tree, const std::vector<double>& weights,
                                int ranks) {
  if (ranks < 1) throw InvalidInput("weighted_partition: rank count must be >= 1");
  if (weights.size() != tree.size()) throw InvalidInput("weighted_partition: one weight per leaf");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw InvalidInput("weighted_partition: weights must be positive");
    total += w;
  }
  PartitionMap pm;
  pm.weights = weights;
  pm.ranges.assign(ranks, {0, 0});
  pm.rank_weights.assign(ranks, 0.0);
  std::vector<int> owner(tree.size());
  double prefix = 0.0;
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const int r = std::min(ranks - 1, int(std::floor(double(ranks) * prefix / total)));
    owner[i] = r;
    prefix += weights[i];
  }
  std::size_t i = 0;
  for (int r = 0; r < ranks; ++r) {
    pm.ranges[r].first = i;
    while (i < tree.size() && owner[i] == r) pm.rank_weights[r] += weights[i++];
    pm.ranges[r].second = i;
  }
  return pm;
}

PartitionMap single_rank_partition(const LinearOctree& tree) {
  return weighted_partition(tree, std::vector<double>(tree.size(), 1.0), 1);
}

std::size_t RankPair::node_count() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.nodes.size();
  return n;
}

const RankPair* ExchangePlan::find(int src, int dst) const {
  auto it = std::lower_bound(pairs.begin(), pairs.end(), std::make_pair(src, dst),
                             [](const RankPair& p, const std::pair<int, int>& k) {
                               return std::make_pair(p.src, p.dst) < k;
                             });
  if (it == pairs.end() || it->src != src || it->dst != dst) return nullptr;
  return &*it;
}

std::size_t ExchangePlan::total_nodes() const {
  std::size_t n = 0;
  for (const auto& p : pairs) n += p.node_count();
  return n;
}

ExchangePlan build_exchange_plan(const LinearOctree& tree, const PartitionMap& pmap,
                                 const Mesh& mesh) {
  if (tree.size() != mesh.tree().size() || pmap.ranges != mesh.partition().ranges) {
    throw InvalidInput("build_exchange_plan: mesh was built for a different tree or partition");
  }
  ExchangePlan plan;
  plan.ranks = pmap.ranks();
  for (int dst = 0; dst < plan.ranks; ++dst) {
    const auto& ghosts = mesh.rank(dst).ghosts;
    // ghosts are already sorted by (owner rank, owner leaf, node)
    std::size_t i = 0;
    while (i < ghosts.size()) {
      const std::uint32_t leaf = mesh.zip_owner_leaf(ghosts[i]);
      const int src = mesh.blocks()[mesh.zip_owner_block(ghosts[i])].owner_rank;
      RankPair* pair = nullptr;
      for (auto& p : plan.pairs)
        if (p.src == src && p.dst == dst) pair = &p;
      if (!pair) {
        plan.pairs.push_back(RankPair{src, dst, {}});
        pair = &plan.pairs.back();
      }
      ExchangeEntry e;
      e.owner_leaf = leaf;
      while (i < ghosts.size() && mesh.zip_owner_leaf(ghosts[i]) == leaf) e.nodes.push_back(ghosts[i++]);
      pair->entries.push_back(std::move(e));
    }
  }
  std::sort(plan.pairs.begin(), plan.pairs.end(), [](const RankPair& a, const RankPair& b) {
    return std::make_pair(a.src, a.dst) < std::make_pair(b.src, b.dst);
  });
  return plan;
}

std::vector<std::vector<Post>> exchange(const ExchangePlan& plan, std::vector<Post> posts,
                                        std::size_t bytes_per_node, int threads) {
  std::map<std::pair<int, int>, Post*> posted;
  for (auto& p : posts) {
    if (p.from < 0 || p.from >= plan.ranks || p.to < 0 || p.to >= plan.ranks) {
      throw ProtocolError(p.from, p.to, "rank out of range");
    }
    const RankPair* pair = plan.find(p.from, p.to);
    if (!pair) throw ProtocolError(p.from, p.to, "post not prescribed by the plan");
    if (!posted.emplace(std::make_pair(p.from, p.to), &p).second) {
      throw ProtocolError(p.from, p.to, "duplicate post");
    }
    const std::size_t expect = pair->node_count() * bytes_per_node;
    if (p.bytes.size() != expect) {
      throw ProtocolError(p.from, p.to,
                          (p.bytes.size() > expect ? "oversized post: " : "short post: ") +
                              std::to_string(p.bytes.size()) + " bytes, expected " +
                              std::to_string(expect));
    }
  }
  for (const auto& pair : plan.pairs) {
    if (!posted.count({pair.src, pair.dst})) throw ProtocolError(pair.src, pair.dst, "missing post");
  }
  std::vector<std::vector<Post>> inbox(plan.ranks);
  parallel_for(std::size_t(plan.ranks), threads, [&](std::size_t dst, int) {
    for (const auto& pair : plan.pairs) {
      if (pair.dst != int(dst)) continue;
      Post* p = posted.at({pair.src, pair.dst});
      inbox[dst].push_back(Post{p->from, p->to, std::move(p->bytes)});
    }
  });
  return inbox;
}

}  // namespace octlts
