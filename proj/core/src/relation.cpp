#include "gcnrn/relation.hpp"

#include <algorithm>
#include <map>

#include "gcnrn/rng.hpp"

namespace gcnrn {

EdgeSelection select_top_k_edges(const WeightedGraph& graph, std::span<const index_t> object_of, index_t kappa) {
  if (kappa < 1) throw NoEdges("kappa must be >= 1");
  if (static_cast<index_t>(object_of.size()) != graph.num_nodes()) {
    throw DimensionMismatch("object map length differs from vertex count");
  }
  std::map<std::pair<index_t, index_t>, double> merged;
  for (const auto& e : graph.edges()) {
    const index_t a = object_of[static_cast<std::size_t>(e.i)];
    const index_t b = object_of[static_cast<std::size_t>(e.j)];
    if (a == b) continue;
    merged[{std::min(a, b), std::max(a, b)}] += e.weight;
  }
  if (merged.empty()) throw NoEdges("no edge connects two distinct objects");

  std::vector<std::pair<std::pair<index_t, index_t>, double>> ranked(merged.begin(), merged.end());
  // merged is ordered by pair, so a stable sort on weight keeps (i, j) order on ties.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& x, const auto& y) { return x.second > y.second; });
  const auto keep = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(kappa));
  EdgeSelection out;
  for (std::size_t q = 0; q < keep; ++q) {
    out.pairs.push_back(ranked[q].first);
    out.weights.push_back(ranked[q].second);
  }
  return out;
}

EdgeSelection select_top_k_edges(const WeightedGraph& graph, const CoarseningHierarchy& hierarchy, index_t kappa) {
  std::vector<index_t> object_of(static_cast<std::size_t>(graph.num_nodes()));
  for (index_t v = 0; v < graph.num_nodes(); ++v) object_of[static_cast<std::size_t>(v)] = hierarchy.coarsest_node_of(v);
  return select_top_k_edges(graph, object_of, kappa);
}

// ---------------------------------------------------------------------------

RelationHead::RelationHead(std::string name, EdgeSelection selection, index_t num_objects, index_t object_dim,
                           std::vector<index_t> hidden, index_t classes)
    : epsilon(name + ".epsilon", {static_cast<index_t>(selection.size())}),
      name_(std::move(name)),
      selection_(std::move(selection)),
      num_objects_(num_objects),
      object_dim_(object_dim),
      classes_(classes) {
  for (const auto& [i, j] : selection_.pairs) {
    if (i < 0 || j < 0 || i >= num_objects || j >= num_objects) {
      throw PairIndexOutOfRange("pair (" + std::to_string(i) + ", " + std::to_string(j) + ") with " +
                                std::to_string(num_objects) + " objects");
    }
  }
  const index_t kappa = num_pairs();
  std::vector<index_t> widths{2 * object_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(classes);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::string prefix = name_ + ".g.l" + std::to_string(l);
    weights.emplace_back(prefix + ".weight", std::vector<index_t>{kappa, widths[l], widths[l + 1]});
    biases.emplace_back(prefix + ".bias", std::vector<index_t>{kappa, widths[l + 1]});
  }
}

void RelationHead::init(SeededRng& rng) {
  epsilon.value.setConstant(1.0 / static_cast<double>(num_pairs()));
  for (auto& w : weights) w.init_uniform(rng, w.shape[1], w.shape[2]);
  for (auto& b : biases) b.value.setZero();
}

Matrix RelationHead::forward(const NodeTensor& objects) {
  if (objects.channels != object_dim_) throw DimensionMismatch(name_ + ": object width mismatch");
  for (const auto& [i, j] : selection_.pairs) {
    if (i >= objects.nodes || j >= objects.nodes) {
      throw PairIndexOutOfRange(name_ + ": pair (" + std::to_string(i) + ", " + std::to_string(j) +
                                ") beyond " + std::to_string(objects.nodes) + " objects");
    }
  }
  samples_ = objects.samples;
  embeddings_.assign(static_cast<std::size_t>(objects.nodes), Matrix());
  for (const auto& [i, j] : selection_.pairs) {
    for (const index_t v : {i, j}) {
      auto& e = embeddings_[static_cast<std::size_t>(v)];
      if (e.size() == 0) e = objects.node_embedding(v);
    }
  }

  const index_t kappa = num_pairs();
  const auto layers = static_cast<std::size_t>(num_layers());
  layer_inputs_.resize(static_cast<std::size_t>(kappa));
  layer_masks_.resize(static_cast<std::size_t>(kappa));
  outputs_.resize(static_cast<std::size_t>(kappa));
  Matrix out = Matrix::Zero(samples_, classes_);
  for (index_t q = 0; q < kappa; ++q) {
    const auto uq = static_cast<std::size_t>(q);
    const auto [i, j] = selection_.pairs[uq];
    auto& inputs = layer_inputs_[uq];
    auto& masks = layer_masks_[uq];
    inputs.resize(layers);
    masks.resize(layers);
    const auto w0 = weight_block(0, q);
    Matrix h = embeddings_[static_cast<std::size_t>(i)] * w0.topRows(object_dim_);
    h.noalias() += embeddings_[static_cast<std::size_t>(j)] * w0.bottomRows(object_dim_);
    h.rowwise() += biases[0].value.row(q);
    for (std::size_t l = 1; l < layers; ++l) {
      masks[l - 1] = (h.array() > 0.0).cast<double>().matrix();
      inputs[l] = h.cwiseMax(0.0);
      h = inputs[l] * weight_block(static_cast<index_t>(l), q);
      h.rowwise() += biases[l].value.row(q);
    }
    out.noalias() += epsilon.value(0, q) * h;
    outputs_[uq] = std::move(h);
  }
  return out;
}

NodeTensor RelationHead::backward(const Matrix& grad_out) {
  if (grad_out.rows() != samples_ || grad_out.cols() != classes_) {
    throw DimensionMismatch(name_ + ": backward shape mismatch");
  }
  std::vector<Matrix> dembed(embeddings_.size());
  const auto layers = static_cast<std::size_t>(num_layers());
  for (index_t q = 0; q < num_pairs(); ++q) {
    const auto uq = static_cast<std::size_t>(q);
    const auto [i, j] = selection_.pairs[uq];
    epsilon.grad(0, q) += grad_out.cwiseProduct(outputs_[uq]).sum();
    Matrix g = epsilon.value(0, q) * grad_out;
    for (std::size_t l = layers; l-- > 1;) {
      const auto& input = layer_inputs_[uq][l];
      const auto rows = weights[l].shape[1];
      weights[l].grad.middleRows(q * rows, rows).noalias() += input.transpose() * g;
      biases[l].grad.row(q) += g.colwise().sum();
      g = (g * weight_block(static_cast<index_t>(l), q).transpose()).cwiseProduct(layer_masks_[uq][l - 1]);
    }
    const auto rows0 = weights[0].shape[1];
    auto wgrad = weights[0].grad.middleRows(q * rows0, rows0);
    const auto& ei = embeddings_[static_cast<std::size_t>(i)];
    const auto& ej = embeddings_[static_cast<std::size_t>(j)];
    wgrad.topRows(object_dim_).noalias() += ei.transpose() * g;
    wgrad.bottomRows(object_dim_).noalias() += ej.transpose() * g;
    biases[0].grad.row(q) += g.colwise().sum();
    const auto w0 = weight_block(0, q);
    for (const auto& [v, half] : {std::pair{i, 0}, std::pair{j, 1}}) {
      auto& d = dembed[static_cast<std::size_t>(v)];
      if (d.size() == 0) d = Matrix::Zero(samples_, object_dim_);
      d.noalias() += g * w0.middleRows(half * object_dim_, object_dim_).transpose();
    }
  }

  NodeTensor dobjects(static_cast<index_t>(embeddings_.size()), samples_, object_dim_);
  for (std::size_t v = 0; v < dembed.size(); ++v) {
    if (dembed[v].size() == 0) continue;
    for (index_t f = 0; f < object_dim_; ++f) {
      dobjects.data.row(static_cast<index_t>(v)).segment(f * samples_, samples_) = dembed[v].col(f).transpose();
    }
  }
  return dobjects;
}

ParamRefs RelationHead::params() {
  ParamRefs out{&epsilon};
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
  return out;
}

// ---------------------------------------------------------------------------

VanillaRelationNetwork::VanillaRelationNetwork(std::string name, index_t object_dim, std::vector<index_t> g_hidden,
                                               index_t g_out, std::vector<index_t> f_hidden, index_t classes,
                                               index_t max_pairs)
    : g_(name + ".g", 2 * object_dim, std::move(g_hidden), g_out),
      f_(name + ".f", g_out, std::move(f_hidden), classes),
      object_dim_(object_dim),
      max_pairs_(max_pairs) {}

void VanillaRelationNetwork::init(SeededRng& rng) {
  g_.init(rng);
  f_.init(rng);
}

Matrix VanillaRelationNetwork::forward(const NodeTensor& objects) {
  if (objects.channels != object_dim_) throw DimensionMismatch("vanilla RN: object width mismatch");
  const index_t n = objects.nodes;
  const index_t pairs = n * (n - 1);
  if (pairs > max_pairs_) {
    throw PairBudgetExceeded(std::to_string(pairs) + " ordered pairs exceed the budget of " +
                             std::to_string(max_pairs_));
  }
  num_objects_ = n;
  samples_ = objects.samples;
  const index_t p_count = samples_;
  std::vector<Matrix> embed(static_cast<std::size_t>(n));
  for (index_t v = 0; v < n; ++v) embed[static_cast<std::size_t>(v)] = objects.node_embedding(v);

  Matrix z(pairs * p_count, 2 * object_dim_);
  index_t q = 0;
  for (index_t i = 0; i < n; ++i) {
    for (index_t j = 0; j < n; ++j) {
      if (i == j) continue;
      z.block(q * p_count, 0, p_count, object_dim_) = embed[static_cast<std::size_t>(i)];
      z.block(q * p_count, object_dim_, p_count, object_dim_) = embed[static_cast<std::size_t>(j)];
      ++q;
    }
  }
  const Matrix g_out = g_.forward(z);
  Matrix pooled = Matrix::Zero(p_count, g_out.cols());
  for (index_t k = 0; k < pairs; ++k) pooled += g_out.middleRows(k * p_count, p_count);
  return f_.forward(pooled);
}

NodeTensor VanillaRelationNetwork::backward(const Matrix& grad_out) {
  const Matrix dpooled = f_.backward(grad_out);
  const index_t n = num_objects_;
  const index_t pairs = n * (n - 1);
  const index_t p_count = samples_;
  Matrix dg(pairs * p_count, dpooled.cols());
  for (index_t k = 0; k < pairs; ++k) dg.middleRows(k * p_count, p_count) = dpooled;
  const Matrix dz = g_.backward(dg);

  std::vector<Matrix> dembed(static_cast<std::size_t>(n), Matrix::Zero(p_count, object_dim_));
  index_t q = 0;
  for (index_t i = 0; i < n; ++i) {
    for (index_t j = 0; j < n; ++j) {
      if (i == j) continue;
      dembed[static_cast<std::size_t>(i)] += dz.block(q * p_count, 0, p_count, object_dim_);
      dembed[static_cast<std::size_t>(j)] += dz.block(q * p_count, object_dim_, p_count, object_dim_);
      ++q;
    }
  }
  NodeTensor dobjects(n, p_count, object_dim_);
  for (index_t v = 0; v < n; ++v) {
    for (index_t f = 0; f < object_dim_; ++f) {
      dobjects.data.row(v).segment(f * p_count, p_count) = dembed[static_cast<std::size_t>(v)].col(f).transpose();
    }
  }
  return dobjects;
}

ParamRefs VanillaRelationNetwork::params() {
  ParamRefs out = g_.params();
  for (auto* p : f_.params()) out.push_back(p);
  return out;
}

}  // namespace gcnrn
