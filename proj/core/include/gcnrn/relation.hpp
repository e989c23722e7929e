#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gcnrn/coarsening.hpp"
#include "gcnrn/layers.hpp"

namespace gcnrn {

/// Object pairs chosen for the relation head, heaviest first.
struct EdgeSelection {
  std::vector<std::pair<index_t, index_t>> pairs;
  std::vector<double> weights;

  std::size_t size() const { return pairs.size(); }
};

/// Maps every edge through `object_of` (original node -> object id), merges
/// edges landing on the same unordered object pair by summing their weights,
/// drops pairs inside one object, and keeps the `kappa` heaviest pairs
/// (ties by lexicographic (i, j), i < j). Throws NoEdges if nothing remains.
EdgeSelection select_top_k_edges(const WeightedGraph& graph, std::span<const index_t> object_of, index_t kappa);

/// Objects are the coarsest-level nodes of the hierarchy.
EdgeSelection select_top_k_edges(const WeightedGraph& graph, const CoarseningHierarchy& hierarchy, index_t kappa);

/// Relation head with one MLP and one attention scalar per selected pair:
///   RN(O) = sum_q epsilon_q * g_q(o_i ++ o_j),  (i, j) = pairs[q].
///
/// Every g_q maps the 2m-wide concatenation through ReLU hidden layers to a
/// linear output of width `classes`. Layer l of all pairs lives in one
/// parameter bank of shape kappa x in_l x out_l.
class RelationHead {
 public:
  RelationHead(std::string name, EdgeSelection selection, index_t num_objects, index_t object_dim,
               std::vector<index_t> hidden, index_t classes);

  /// Glorot-uniform weights, zero biases, epsilon = 1/kappa.
  void init(SeededRng& rng);
  /// objects: num_objects x P x m. Returns P x classes.
  Matrix forward(const NodeTensor& objects);
  NodeTensor backward(const Matrix& grad_out);
  ParamRefs params();

  const EdgeSelection& selection() const { return selection_; }
  index_t num_pairs() const { return static_cast<index_t>(selection_.size()); }
  index_t num_layers() const { return static_cast<index_t>(weights.size()); }
  /// g_q output from the most recent forward pass (P x classes).
  const Matrix& pair_output(index_t q) const { return outputs_[static_cast<std::size_t>(q)]; }
  /// Weight block of pair q in layer l (in_l x out_l).
  auto weight_block(index_t layer, index_t q) {
    auto& w = weights[static_cast<std::size_t>(layer)];
    const index_t rows = w.shape[1];
    return w.value.middleRows(q * rows, rows);
  }

  ParamTensor epsilon;                 ///< 1 x kappa
  std::vector<ParamTensor> weights;    ///< per layer: kappa x in x out
  std::vector<ParamTensor> biases;     ///< per layer: kappa x out

 private:
  std::string name_;
  EdgeSelection selection_;
  index_t num_objects_;
  index_t object_dim_;
  index_t classes_;
  index_t samples_ = 0;
  std::vector<Matrix> embeddings_;
  // Per pair: post-activation inputs of layers 1..L-1 and their ReLU masks.
  std::vector<std::vector<Matrix>> layer_inputs_;
  std::vector<std::vector<Matrix>> layer_masks_;
  std::vector<Matrix> outputs_;
};

/// Shared-g relation network over all ordered pairs i != j:
///   RN(O) = f(sum_{i != j} g(o_i ++ o_j)).
/// Used as the ablation head in place of the per-pair attention head.
class VanillaRelationNetwork {
 public:
  VanillaRelationNetwork(std::string name, index_t object_dim, std::vector<index_t> g_hidden, index_t g_out,
                         std::vector<index_t> f_hidden, index_t classes, index_t max_pairs = 4096);

  void init(SeededRng& rng);
  /// Throws PairBudgetExceeded if n(n-1) exceeds max_pairs.
  Matrix forward(const NodeTensor& objects);
  NodeTensor backward(const Matrix& grad_out);
  ParamRefs params();

  Mlp& g() { return g_; }
  Mlp& f() { return f_; }

 private:
  Mlp g_;
  Mlp f_;
  index_t object_dim_;
  index_t max_pairs_;
  index_t num_objects_ = 0;
  index_t samples_ = 0;
};

}  // namespace gcnrn
