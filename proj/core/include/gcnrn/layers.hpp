#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gcnrn/common.hpp"
#include "gcnrn/graph.hpp"
#include "gcnrn/param.hpp"

namespace gcnrn {

enum class Mode { kTrain, kInfer };

/// Activations living on graph nodes, shape nodes x samples x channels.
///
/// Element (i, p, f) is stored at data(i, f * samples + p): the node index is
/// fastest, so `data` is directly the right-hand side of a sparse
/// Laplacian product, and by_channel() views the same memory as a
/// (nodes * samples) x channels matrix for channel mixing.
struct NodeTensor {
  index_t nodes = 0;
  index_t samples = 0;
  index_t channels = 0;
  Matrix data;

  NodeTensor() = default;
  NodeTensor(index_t nodes_, index_t samples_, index_t channels_);

  double& at(index_t i, index_t p, index_t f) { return data(i, f * samples + p); }
  double at(index_t i, index_t p, index_t f) const { return data(i, f * samples + p); }
  Eigen::Map<Matrix> by_channel() { return {data.data(), nodes * samples, channels}; }
  Eigen::Map<const Matrix> by_channel() const { return {data.data(), nodes * samples, channels}; }

  /// P x n sample matrix to an n x P x 1 tensor.
  static NodeTensor from_samples(const Matrix& samples);
  /// P x (channels * nodes) with feature index f * nodes + i.
  Matrix flatten() const;
  static NodeTensor unflatten(const Matrix& flat, index_t nodes, index_t channels);
  /// Features x samples, feature index f * nodes + i.
  Matrix features_by_sample() const;
  static NodeTensor from_features_by_sample(const Matrix& m, index_t nodes, index_t channels);
  /// P x channels matrix of one node's embeddings.
  Matrix node_embedding(index_t node) const;
};

/// Zeroes every fake node row (mask value 1), for all samples and channels.
void zero_fake_nodes(NodeTensor& x, std::span<const std::uint8_t> fake_mask);

/// Chebyshev spectral graph convolution y = sum_k T_k(L~) x Theta_k (+ bias).
///
/// Forward keeps the recurrence terms T_k(L~) x; backward runs the same
/// recurrence in reverse (L~ is symmetric) to obtain dL/dx, and contracts the
/// cached terms with the output gradient for dL/dTheta_k. Only sparse
/// products with L~ are used.
class ChebConv {
 public:
  /// Throws ZeroOperator if the Laplacian has no edges.
  ChebConv(std::string name, const Laplacian& laplacian, int order, index_t in_channels,
           index_t out_channels, bool use_bias = true);

  void init(SeededRng& rng);
  NodeTensor forward(const NodeTensor& x);
  NodeTensor backward(const NodeTensor& grad_out);
  ParamRefs params();

  int order() const { return order_; }
  index_t in_channels() const { return in_channels_; }
  index_t out_channels() const { return out_channels_; }
  index_t nodes() const { return static_cast<index_t>(rescaled_.rows()); }

  ParamTensor theta;  ///< K x F_in x F_out; rows [k*F_in, (k+1)*F_in) hold Theta_k.
  ParamTensor bias;   ///< 1 x F_out.

 private:
  SparseMatrix rescaled_;
  int order_;
  index_t in_channels_;
  index_t out_channels_;
  bool use_bias_;
  index_t samples_ = 0;
  std::vector<Matrix> terms_;
};

/// Batch normalization over features, statistics taken across samples.
///
/// Train mode normalizes with the batch mean and biased variance and folds
/// them into the running statistics as running = momentum * running +
/// (1 - momentum) * batch (the variance term uses the unbiased estimate).
/// Infer mode uses the running statistics only.
class BatchNorm {
 public:
  BatchNorm(std::string name, index_t features, double momentum = 0.9, double epsilon = 1e-5);

  /// x is features x samples. Train mode needs at least two samples.
  Matrix forward(const Matrix& x, Mode mode);
  Matrix backward(const Matrix& grad_out);
  /// Per (node, channel) feature; features = nodes * channels.
  NodeTensor forward(const NodeTensor& x, Mode mode);
  NodeTensor backward(const NodeTensor& grad_out);

  ParamRefs params() { return {&gamma, &beta}; }
  std::vector<BufferRef> buffers();

  ParamTensor gamma;  ///< 1 x features
  ParamTensor beta;   ///< 1 x features
  Vector running_mean;
  Vector running_var;

 private:
  std::string name_;
  double momentum_;
  double epsilon_;
  Mode mode_ = Mode::kTrain;
  Matrix normalized_;
  Vector inv_std_;
  index_t nodes_ = 0;
  index_t channels_ = 0;
};

class Relu {
 public:
  Matrix forward(const Matrix& x);
  Matrix backward(const Matrix& grad_out) const;
  NodeTensor forward(const NodeTensor& x);
  NodeTensor backward(const NodeTensor& grad_out) const;

 private:
  Matrix active_;
};

/// Average pooling over consecutive node pairs (2b, 2b+1). Fake nodes are
/// excluded from the divisor; a block with no real node outputs 0.
class AvgPool2 {
 public:
  explicit AvgPool2(std::vector<std::uint8_t> fake_mask);
  NodeTensor forward(const NodeTensor& x) const;
  NodeTensor backward(const NodeTensor& grad_out) const;

 private:
  std::vector<std::uint8_t> fake_mask_;
  std::vector<double> block_scale_;
};

enum class Activation { kNone, kRelu };

/// y = x W + b with optional ReLU; x is samples x in.
class Dense {
 public:
  Dense(std::string name, index_t in, index_t out, Activation activation = Activation::kNone);

  void init(SeededRng& rng);
  Matrix forward(const Matrix& x);
  Matrix backward(const Matrix& grad_out);
  ParamRefs params() { return {&weight, &bias}; }

  index_t in() const { return weight.value.rows(); }
  index_t out() const { return weight.value.cols(); }

  ParamTensor weight;  ///< in x out
  ParamTensor bias;    ///< 1 x out

 private:
  Activation activation_;
  Matrix input_;
  Matrix active_;
};

/// Stack of Dense layers: ReLU on every hidden layer, linear output.
class Mlp {
 public:
  Mlp(std::string name, index_t in, std::vector<index_t> hidden, index_t out);

  void init(SeededRng& rng);
  Matrix forward(const Matrix& x);
  Matrix backward(const Matrix& grad_out);
  ParamRefs params();

  index_t in() const { return layers_.front().in(); }
  index_t out() const { return layers_.back().out(); }
  std::vector<Dense>& layers() { return layers_; }

 private:
  std::vector<Dense> layers_;
};

struct SoftmaxCrossEntropy {
  double loss = 0.0;
  Matrix grad;  ///< d(mean loss)/d(logits)
};

/// Row-wise softmax computed with the log-sum-exp shift.
Matrix softmax(const Matrix& logits);

/// Mean cross-entropy of softmax(logits) against integer labels in [0, C).
SoftmaxCrossEntropy softmax_cross_entropy(const Matrix& logits, std::span<const int> labels);

}  // namespace gcnrn
