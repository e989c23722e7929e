#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gcnrn/coarsening.hpp"
#include "gcnrn/layers.hpp"
#include "gcnrn/param.hpp"
#include "gcnrn/relation.hpp"

namespace gcnrn {

/// Which relation term is added to the graph-convolution logits.
enum class RelationKind {
  kNone,      ///< graph convolution only
  kModified,  ///< per-pair MLPs with attention over top-kappa edges
  kVanilla,   ///< shared g over all object pairs followed by f
};

std::string to_string(RelationKind kind);
RelationKind relation_kind_from_string(const std::string& name);

struct ModelConfig {
  // Graph convolution layers; one Graclus level and one pooling (size 2) each.
  std::vector<index_t> conv_filters{32, 32};
  std::vector<int> cheb_order{10, 2};
  int pool_size = 2;
  bool conv_bias = true;
  double bn_momentum = 0.9;
  double bn_epsilon = 1e-5;
  std::vector<index_t> fc_hidden{1024, 512};

  RelationKind relation = RelationKind::kModified;
  index_t kappa = 200;
  std::vector<index_t> g_hidden{128};
  std::vector<index_t> vanilla_g_hidden{128};
  index_t vanilla_g_out = 128;
  std::vector<index_t> vanilla_f_hidden{256};
  index_t vanilla_max_pairs = 4096;

  AdamConfig adam;
  int epochs = 200;
  index_t batch_size = 64;
  std::uint64_t seed = 1;
  std::string precision = "float64";

  /// kappa 200, one hidden layer of 128 in every g.
  static ModelConfig synthetic_preset();
  /// kappa 1000, two hidden layers of 128 in every g.
  static ModelConfig real_data_preset();

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

/// The graph-convolution pipeline h plus an optional relation head.
///
///   x -> lift to padded order -> batch norm
///     -> [zero fakes -> ChebConv -> batch norm -> ReLU -> avg pool] per layer
///     -> flatten -> FC (ReLU) ... -> linear C          = h logits
///   last pooled feature map (objects) -> relation head = RN logits
///   logits = h logits + RN logits
///
/// forward() caches activations for one subsequent backward() call.
class HybridModel {
 public:
  HybridModel(const WeightedGraph& graph, int num_classes, const ModelConfig& config);
  HybridModel(const HybridModel&) = delete;
  HybridModel& operator=(const HybridModel&) = delete;
  HybridModel(HybridModel&&) noexcept;
  HybridModel& operator=(HybridModel&&) noexcept;
  ~HybridModel();

  struct Output {
    Matrix logits;       ///< h + RN
    Matrix h_logits;
    Matrix rn_logits;    ///< zero when the model has no relation head
    NodeTensor features; ///< last pooled feature map, coarse nodes x P x filters
  };

  /// x is samples x graph vertices.
  Output forward(const Matrix& x, Mode mode);
  /// Accumulates parameter gradients from d(loss)/d(logits).
  void backward(const Matrix& grad_logits);

  Matrix predict_proba(const Matrix& x);
  std::vector<int> predict(const Matrix& x);

  ParamRefs params();
  std::vector<BufferRef> buffers();

  const ModelConfig& config() const { return config_; }
  int num_classes() const { return num_classes_; }
  index_t input_nodes() const;
  const CoarseningHierarchy& hierarchy() const;
  /// Selection used by the modified head; null for other relation kinds.
  const EdgeSelection* selection() const;
  RelationHead* relation_head();
  VanillaRelationNetwork* vanilla_head();
  index_t feature_nodes() const;
  index_t feature_channels() const;

  void save(const std::string& path, const std::string& meta_json = "{}");
  /// Returns the stored meta JSON.
  std::string load(const std::string& path);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  ModelConfig config_;
  int num_classes_;
};

/// Logits of h and the last feature map (objects for the relation head).
struct HOutput {
  Matrix logits;
  NodeTensor features;
};
HOutput h_forward(HybridModel& model, const Matrix& x, Mode mode = Mode::kInfer);

/// softmax(h(x) + RN(objects)), infer mode.
Matrix hybrid_forward(HybridModel& model, const Matrix& x);

}  // namespace gcnrn
