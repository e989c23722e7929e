#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gcnrn/common.hpp"
#include "gcnrn/graph.hpp"

namespace gcnrn {

/// One Graclus matching step.
struct Coarsening {
  WeightedGraph coarse;
  /// cluster_of[v] = coarse node owning fine node v.
  std::vector<index_t> cluster_of;
};

/// Greedy normalized-cut matching: nodes are visited in a seeded random
/// order and each unmatched node is paired with the unmatched neighbor
/// maximizing w_ij (1/d_i + 1/d_j), ties going to the smallest neighbor id.
/// Coarse nodes are numbered in creation order; coarse edge weights are the
/// sums of the fine edges crossing between the two clusters.
Coarsening graclus_coarsen(const WeightedGraph& graph, std::uint64_t seed);

inline constexpr index_t kFakeNode = -1;

/// Repeated Graclus coarsening plus the padded node orderings that let
/// pooling read fixed blocks of two.
///
/// Level 0 is the input graph. order(l) lists, for every slot of the padded
/// level-l layout, the level-l node placed there or kFakeNode. Slots 2b and
/// 2b+1 of level l are the children of slot b of level l+1. The coarsest
/// level carries no fake slots.
class CoarseningHierarchy {
 public:
  CoarseningHierarchy(const WeightedGraph& graph, int num_levels, std::uint64_t seed);

  int num_levels() const { return static_cast<int>(cluster_of_.size()); }
  const WeightedGraph& graph(int level) const { return graphs_[static_cast<std::size_t>(level)]; }
  /// Maps level-l nodes to level-(l+1) nodes, l in [0, num_levels).
  std::span<const index_t> cluster_of(int level) const { return cluster_of_[static_cast<std::size_t>(level)]; }
  std::span<const index_t> order(int level) const { return orders_[static_cast<std::size_t>(level)]; }
  /// Level-0 padded order.
  std::span<const index_t> padded_order() const { return order(0); }
  index_t padded_size(int level) const { return static_cast<index_t>(orders_[static_cast<std::size_t>(level)].size()); }
  /// 1 for fake slots, 0 for real ones, in padded order.
  const std::vector<std::uint8_t>& fake_mask(int level) const { return masks_[static_cast<std::size_t>(level)]; }
  /// Level-l graph relabelled to padded slots; fake slots are isolated vertices.
  const WeightedGraph& padded_graph(int level) const { return padded_graphs_[static_cast<std::size_t>(level)]; }
  /// Composite map from level-0 node to its coarsest-level node.
  index_t coarsest_node_of(index_t node) const;

 private:
  std::vector<WeightedGraph> graphs_;
  std::vector<std::vector<index_t>> cluster_of_;
  std::vector<std::vector<index_t>> orders_;
  std::vector<std::vector<std::uint8_t>> masks_;
  std::vector<WeightedGraph> padded_graphs_;
};

CoarseningHierarchy build_coarsening_hierarchy(const WeightedGraph& graph, int num_levels, std::uint64_t seed);

/// Reorders the columns of a P x n sample matrix into the padded level-0
/// layout, writing 0 into fake slots.
Matrix lift_signal(const Matrix& samples, const CoarseningHierarchy& hierarchy);

}  // namespace gcnrn
