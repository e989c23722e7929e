#include "gcnrn/coarsening.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "gcnrn/rng.hpp"

namespace gcnrn {

Coarsening graclus_coarsen(const WeightedGraph& graph, std::uint64_t seed) {
  const index_t n = graph.num_nodes();
  std::vector<index_t> visit(static_cast<std::size_t>(n));
  std::iota(visit.begin(), visit.end(), index_t{0});
  SeededRng rng(seed);
  rng.shuffle(visit);

  std::vector<index_t> cluster(static_cast<std::size_t>(n), -1);
  index_t next_cluster = 0;
  for (const index_t v : visit) {
    if (cluster[static_cast<std::size_t>(v)] >= 0) continue;
    index_t best = -1;
    double best_score = 0.0;
    for (const auto& nb : graph.neighbors(v)) {
      if (cluster[static_cast<std::size_t>(nb.node)] >= 0) continue;
      const double score = nb.weight * (1.0 / graph.degree(v) + 1.0 / graph.degree(nb.node));
      // Neighbors arrive sorted by id, so strict > keeps the smallest id on ties.
      if (best < 0 || score > best_score) {
        best = nb.node;
        best_score = score;
      }
    }
    cluster[static_cast<std::size_t>(v)] = next_cluster;
    if (best >= 0) cluster[static_cast<std::size_t>(best)] = next_cluster;
    ++next_cluster;
  }

  std::map<std::pair<index_t, index_t>, double> merged;
  for (const auto& e : graph.edges()) {
    const index_t a = cluster[static_cast<std::size_t>(e.i)];
    const index_t b = cluster[static_cast<std::size_t>(e.j)];
    if (a == b) continue;
    merged[{std::min(a, b), std::max(a, b)}] += e.weight;
  }
  std::vector<Edge> edges;
  edges.reserve(merged.size());
  for (const auto& [pair, w] : merged) edges.push_back({pair.first, pair.second, w});
  return {WeightedGraph(next_cluster, std::move(edges)), std::move(cluster)};
}

CoarseningHierarchy::CoarseningHierarchy(const WeightedGraph& graph, int num_levels, std::uint64_t seed) {
  if (num_levels < 1) throw InvalidGraph("coarsening hierarchy needs at least one level");
  graphs_.push_back(graph);
  SeededRng seeds(seed);
  for (int level = 0; level < num_levels; ++level) {
    auto step = graclus_coarsen(graphs_.back(), seeds.next_u64());
    cluster_of_.push_back(std::move(step.cluster_of));
    graphs_.push_back(std::move(step.coarse));
  }

  const auto levels = static_cast<std::size_t>(num_levels);
  orders_.resize(levels + 1);
  orders_[levels].resize(static_cast<std::size_t>(graphs_[levels].num_nodes()));
  std::iota(orders_[levels].begin(), orders_[levels].end(), index_t{0});
  for (std::size_t level = levels; level-- > 0;) {
    std::vector<std::vector<index_t>> children(static_cast<std::size_t>(graphs_[level + 1].num_nodes()));
    const auto& map = cluster_of_[level];
    for (std::size_t v = 0; v < map.size(); ++v) {
      children[static_cast<std::size_t>(map[v])].push_back(static_cast<index_t>(v));
    }
    auto& fine = orders_[level];
    fine.reserve(orders_[level + 1].size() * 2);
    for (const index_t parent : orders_[level + 1]) {
      if (parent == kFakeNode) {
        fine.push_back(kFakeNode);
        fine.push_back(kFakeNode);
        continue;
      }
      const auto& kids = children[static_cast<std::size_t>(parent)];
      fine.push_back(kids[0]);
      fine.push_back(kids.size() > 1 ? kids[1] : kFakeNode);
    }
  }

  masks_.resize(levels + 1);
  padded_graphs_.reserve(levels + 1);
  for (std::size_t level = 0; level <= levels; ++level) {
    const auto& order = orders_[level];
    std::vector<index_t> slot_of(static_cast<std::size_t>(graphs_[level].num_nodes()), -1);
    masks_[level].assign(order.size(), 0);
    for (std::size_t s = 0; s < order.size(); ++s) {
      if (order[s] == kFakeNode) {
        masks_[level][s] = 1;
      } else {
        slot_of[static_cast<std::size_t>(order[s])] = static_cast<index_t>(s);
      }
    }
    std::vector<Edge> edges;
    edges.reserve(graphs_[level].num_edges());
    for (const auto& e : graphs_[level].edges()) {
      edges.push_back({slot_of[static_cast<std::size_t>(e.i)], slot_of[static_cast<std::size_t>(e.j)], e.weight});
    }
    padded_graphs_.emplace_back(static_cast<index_t>(order.size()), std::move(edges));
  }
}

index_t CoarseningHierarchy::coarsest_node_of(index_t node) const {
  for (const auto& map : cluster_of_) node = map[static_cast<std::size_t>(node)];
  return node;
}

CoarseningHierarchy build_coarsening_hierarchy(const WeightedGraph& graph, int num_levels, std::uint64_t seed) {
  return CoarseningHierarchy(graph, num_levels, seed);
}

Matrix lift_signal(const Matrix& samples, const CoarseningHierarchy& hierarchy) {
  const index_t n = hierarchy.graph(0).num_nodes();
  if (samples.cols() != n) {
    throw DimensionMismatch("signal has " + std::to_string(samples.cols()) + " columns, graph has " +
                            std::to_string(n) + " vertices");
  }
  const auto order = hierarchy.padded_order();
  Matrix out = Matrix::Zero(samples.rows(), static_cast<index_t>(order.size()));
  for (std::size_t s = 0; s < order.size(); ++s) {
    if (order[s] != kFakeNode) out.col(static_cast<index_t>(s)) = samples.col(order[s]);
  }
  return out;
}

}  // namespace gcnrn
