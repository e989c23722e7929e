#include "gcnrn/model.hpp"

#include <nlohmann/json.hpp>

#include "gcnrn/rng.hpp"

namespace gcnrn {

std::string to_string(RelationKind kind) {
  switch (kind) {
    case RelationKind::kNone: return "none";
    case RelationKind::kModified: return "modified";
    case RelationKind::kVanilla: return "vanilla";
  }
  return "none";
}

RelationKind relation_kind_from_string(const std::string& name) {
  if (name == "none") return RelationKind::kNone;
  if (name == "modified") return RelationKind::kModified;
  if (name == "vanilla") return RelationKind::kVanilla;
  throw ConfigError("unknown relation kind '" + name + "' (expected none, modified or vanilla)");
}

ModelConfig ModelConfig::synthetic_preset() {
  ModelConfig c;
  c.kappa = 200;
  c.g_hidden = {128};
  return c;
}

ModelConfig ModelConfig::real_data_preset() {
  ModelConfig c;
  c.kappa = 1000;
  c.g_hidden = {128, 128};
  return c;
}

void ModelConfig::validate() const {
  if (conv_filters.empty()) throw ConfigError("at least one graph convolution layer is required");
  if (conv_filters.size() != cheb_order.size()) {
    throw ConfigError("conv_filters and cheb_order must have the same length");
  }
  for (auto f : conv_filters) {
    if (f < 1) throw ConfigError("filter counts must be >= 1");
  }
  for (auto k : cheb_order) {
    if (k < 1) throw ConfigError("Chebyshev orders must be >= 1");
  }
  if (pool_size != 2) throw ConfigError("only pooling size 2 is supported");
  for (auto h : fc_hidden) {
    if (h < 1) throw ConfigError("fc hidden sizes must be >= 1");
  }
  if (kappa < 1) throw ConfigError("kappa must be >= 1");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2 (batch normalization)");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(adam.learning_rate >= 0.0)) throw ConfigError("learning rate must be >= 0");
  if (!(bn_momentum >= 0.0 && bn_momentum <= 1.0)) throw ConfigError("bn_momentum must be in [0, 1]");
  if (precision != "float64") throw ConfigError("precision '" + precision + "' unsupported (only float64)");
}

// ---------------------------------------------------------------------------

namespace {

struct ConvBlock {
  std::vector<std::uint8_t> fake_mask;
  ChebConv conv;
  BatchNorm bn;
  Relu relu;
  AvgPool2 pool;
};

}  // namespace

struct HybridModel::Impl {
  CoarseningHierarchy hierarchy;
  BatchNorm input_bn;
  std::vector<ConvBlock> blocks;
  Mlp fc;
  std::optional<RelationHead> head;
  std::optional<VanillaRelationNetwork> vanilla;
  index_t out_nodes = 0;
  index_t out_channels = 0;
  index_t batch = 0;

  Impl(CoarseningHierarchy h, const ModelConfig& c, int classes)
      : hierarchy(std::move(h)),
        input_bn("input_bn", hierarchy.padded_size(0), c.bn_momentum, c.bn_epsilon),
        fc("fc",
           hierarchy.padded_size(static_cast<int>(c.conv_filters.size())) * c.conv_filters.back(),
           c.fc_hidden, classes) {}
};

HybridModel::HybridModel(const WeightedGraph& graph, int num_classes, const ModelConfig& config)
    : config_(config), num_classes_(num_classes) {
  config_.validate();
  if (num_classes < 2) throw ConfigError("need at least 2 classes");
  const SeededRng root(config_.seed);
  const int levels = static_cast<int>(config_.conv_filters.size());
  impl_ = std::make_unique<Impl>(CoarseningHierarchy(graph, levels, root.derive(11).next_u64()), config_,
                                 num_classes);
  auto& m = *impl_;

  index_t channels = 1;
  for (int l = 0; l < levels; ++l) {
    const auto ul = static_cast<std::size_t>(l);
    const Laplacian laplacian(m.hierarchy.padded_graph(l));
    const index_t nodes = m.hierarchy.padded_size(l);
    const std::string name = "conv" + std::to_string(l + 1);
    m.blocks.push_back(ConvBlock{
        m.hierarchy.fake_mask(l),
        ChebConv(name, laplacian, config_.cheb_order[ul], channels, config_.conv_filters[ul], config_.conv_bias),
        BatchNorm(name + ".bn", nodes * config_.conv_filters[ul], config_.bn_momentum, config_.bn_epsilon),
        Relu{},
        AvgPool2(m.hierarchy.fake_mask(l)),
    });
    channels = config_.conv_filters[ul];
  }
  m.out_nodes = m.hierarchy.padded_size(levels);
  m.out_channels = channels;

  if (config_.relation == RelationKind::kModified) {
    m.head.emplace("rn", select_top_k_edges(graph, m.hierarchy, config_.kappa), m.out_nodes, m.out_channels,
                   config_.g_hidden, num_classes);
  } else if (config_.relation == RelationKind::kVanilla) {
    m.vanilla.emplace("vrn", m.out_channels, config_.vanilla_g_hidden, config_.vanilla_g_out,
                      config_.vanilla_f_hidden, num_classes, config_.vanilla_max_pairs);
  }

  SeededRng init = root.derive(12);
  for (auto& b : m.blocks) b.conv.init(init);
  m.fc.init(init);
  if (m.head) m.head->init(init);
  if (m.vanilla) m.vanilla->init(init);
}

HybridModel::HybridModel(HybridModel&&) noexcept = default;
HybridModel& HybridModel::operator=(HybridModel&&) noexcept = default;
HybridModel::~HybridModel() = default;

HybridModel::Output HybridModel::forward(const Matrix& x, Mode mode) {
  auto& m = *impl_;
  NodeTensor t = NodeTensor::from_samples(lift_signal(x, m.hierarchy));
  m.batch = x.rows();
  t = m.input_bn.forward(t, mode);
  for (auto& b : m.blocks) {
    zero_fake_nodes(t, b.fake_mask);
    t = b.conv.forward(t);
    t = b.bn.forward(t, mode);
    t = b.relu.forward(t);
    t = b.pool.forward(t);
  }
  Output out;
  out.h_logits = m.fc.forward(t.flatten());
  if (m.head) {
    out.rn_logits = m.head->forward(t);
  } else if (m.vanilla) {
    out.rn_logits = m.vanilla->forward(t);
  } else {
    out.rn_logits = Matrix::Zero(out.h_logits.rows(), out.h_logits.cols());
  }
  out.logits = out.h_logits + out.rn_logits;
  out.features = std::move(t);
  return out;
}

void HybridModel::backward(const Matrix& grad_logits) {
  auto& m = *impl_;
  NodeTensor g = NodeTensor::unflatten(m.fc.backward(grad_logits), m.out_nodes, m.out_channels);
  if (m.head) g.data += m.head->backward(grad_logits).data;
  if (m.vanilla) g.data += m.vanilla->backward(grad_logits).data;
  for (auto it = m.blocks.rbegin(); it != m.blocks.rend(); ++it) {
    g = it->pool.backward(g);
    g = it->relu.backward(g);
    g = it->bn.backward(g);
    g = it->conv.backward(g);
    zero_fake_nodes(g, it->fake_mask);
  }
  m.input_bn.backward(g);
}

Matrix HybridModel::predict_proba(const Matrix& x) { return softmax(forward(x, Mode::kInfer).logits); }

std::vector<int> HybridModel::predict(const Matrix& x) {
  const Matrix logits = forward(x, Mode::kInfer).logits;
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (index_t r = 0; r < logits.rows(); ++r) {
    index_t best = 0;
    logits.row(r).maxCoeff(&best);
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

ParamRefs HybridModel::params() {
  auto& m = *impl_;
  ParamRefs out = m.input_bn.params();
  for (auto& b : m.blocks) {
    for (auto* p : b.conv.params()) out.push_back(p);
    for (auto* p : b.bn.params()) out.push_back(p);
  }
  for (auto* p : m.fc.params()) out.push_back(p);
  if (m.head) {
    for (auto* p : m.head->params()) out.push_back(p);
  }
  if (m.vanilla) {
    for (auto* p : m.vanilla->params()) out.push_back(p);
  }
  return out;
}

std::vector<BufferRef> HybridModel::buffers() {
  auto& m = *impl_;
  std::vector<BufferRef> out = m.input_bn.buffers();
  for (auto& b : m.blocks) {
    for (const auto& buf : b.bn.buffers()) out.push_back(buf);
  }
  return out;
}

index_t HybridModel::input_nodes() const { return impl_->hierarchy.graph(0).num_nodes(); }
const CoarseningHierarchy& HybridModel::hierarchy() const { return impl_->hierarchy; }
const EdgeSelection* HybridModel::selection() const { return impl_->head ? &impl_->head->selection() : nullptr; }
RelationHead* HybridModel::relation_head() { return impl_->head ? &*impl_->head : nullptr; }
VanillaRelationNetwork* HybridModel::vanilla_head() { return impl_->vanilla ? &*impl_->vanilla : nullptr; }
index_t HybridModel::feature_nodes() const { return impl_->out_nodes; }
index_t HybridModel::feature_channels() const { return impl_->out_channels; }

void HybridModel::save(const std::string& path, const std::string& meta_json) {
  const auto ps = params();
  save_checkpoint(path, ps, buffers(), meta_json);
}

std::string HybridModel::load(const std::string& path) {
  const auto ps = params();
  return load_checkpoint(path, ps, buffers());
}

HOutput h_forward(HybridModel& model, const Matrix& x, Mode mode) {
  auto out = model.forward(x, mode);
  return {std::move(out.h_logits), std::move(out.features)};
}

Matrix hybrid_forward(HybridModel& model, const Matrix& x) { return model.predict_proba(x); }

}  // namespace gcnrn
