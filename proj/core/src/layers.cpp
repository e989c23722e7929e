#include "gcnrn/layers.hpp"

#include <cmath>

#include "gcnrn/rng.hpp"

namespace gcnrn {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionMismatch(what);
}

}  // namespace

NodeTensor::NodeTensor(index_t nodes_, index_t samples_, index_t channels_)
    : nodes(nodes_), samples(samples_), channels(channels_), data(Matrix::Zero(nodes_, samples_ * channels_)) {}

NodeTensor NodeTensor::from_samples(const Matrix& samples) {
  NodeTensor out(samples.cols(), samples.rows(), 1);
  out.data = samples.transpose();
  return out;
}

Matrix NodeTensor::flatten() const {
  Matrix out(samples, channels * nodes);
  for (index_t f = 0; f < channels; ++f) {
    out.middleCols(f * nodes, nodes) = data.middleCols(f * samples, samples).transpose();
  }
  return out;
}

NodeTensor NodeTensor::unflatten(const Matrix& flat, index_t nodes, index_t channels) {
  require(flat.cols() == nodes * channels, "unflatten: column count is not nodes * channels");
  NodeTensor out(nodes, flat.rows(), channels);
  for (index_t f = 0; f < channels; ++f) {
    out.data.middleCols(f * out.samples, out.samples) = flat.middleCols(f * nodes, nodes).transpose();
  }
  return out;
}

Matrix NodeTensor::features_by_sample() const {
  Matrix out(nodes * channels, samples);
  for (index_t f = 0; f < channels; ++f) {
    out.middleRows(f * nodes, nodes) = data.middleCols(f * samples, samples);
  }
  return out;
}

NodeTensor NodeTensor::from_features_by_sample(const Matrix& m, index_t nodes, index_t channels) {
  require(m.rows() == nodes * channels, "feature matrix row count is not nodes * channels");
  NodeTensor out(nodes, m.cols(), channels);
  for (index_t f = 0; f < channels; ++f) {
    out.data.middleCols(f * out.samples, out.samples) = m.middleRows(f * nodes, nodes);
  }
  return out;
}

Matrix NodeTensor::node_embedding(index_t node) const {
  Matrix out(samples, channels);
  for (index_t f = 0; f < channels; ++f) {
    out.col(f) = data.row(node).segment(f * samples, samples).transpose();
  }
  return out;
}

void zero_fake_nodes(NodeTensor& x, std::span<const std::uint8_t> fake_mask) {
  require(static_cast<index_t>(fake_mask.size()) == x.nodes, "fake mask length differs from node count");
  for (index_t i = 0; i < x.nodes; ++i) {
    if (fake_mask[static_cast<std::size_t>(i)]) x.data.row(i).setZero();
  }
}

// ---------------------------------------------------------------------------

ChebConv::ChebConv(std::string name, const Laplacian& laplacian, int order, index_t in_channels,
                   index_t out_channels, bool use_bias)
    : theta(name + ".theta", {order, in_channels, out_channels}),
      bias(name + ".bias", {out_channels}),
      rescaled_(laplacian.rescaled()),
      order_(order),
      in_channels_(in_channels),
      out_channels_(out_channels),
      use_bias_(use_bias) {
  if (order < 1) throw DimensionMismatch("Chebyshev order must be >= 1");
}

void ChebConv::init(SeededRng& rng) {
  theta.init_uniform(rng, order_ * in_channels_, out_channels_);
  bias.value.setZero();
}

NodeTensor ChebConv::forward(const NodeTensor& x) {
  require(x.nodes == nodes(), theta.name + ": input has " + std::to_string(x.nodes) +
                                  " nodes, Laplacian dimension is " + std::to_string(nodes()));
  require(x.channels == in_channels_, "ChebConv input channel count mismatch");
  samples_ = x.samples;
  const index_t rows = x.nodes * x.samples;
  terms_.resize(static_cast<std::size_t>(order_));
  terms_[0] = x.data;
  if (order_ > 1) terms_[1] = rescaled_ * terms_[0];
  for (int k = 2; k < order_; ++k) {
    terms_[static_cast<std::size_t>(k)] = 2.0 * (rescaled_ * terms_[static_cast<std::size_t>(k - 1)]);
    terms_[static_cast<std::size_t>(k)] -= terms_[static_cast<std::size_t>(k - 2)];
  }

  NodeTensor out(x.nodes, x.samples, out_channels_);
  auto y = out.by_channel();
  for (int k = 0; k < order_; ++k) {
    Eigen::Map<const Matrix> term(terms_[static_cast<std::size_t>(k)].data(), rows, in_channels_);
    y.noalias() += term * theta.value.middleRows(k * in_channels_, in_channels_);
  }
  if (use_bias_) y.rowwise() += bias.value.row(0);
  return out;
}

NodeTensor ChebConv::backward(const NodeTensor& grad_out) {
  require(grad_out.channels == out_channels_ && grad_out.samples == samples_ && grad_out.nodes == nodes(),
          "ChebConv backward shape mismatch");
  const index_t rows = grad_out.nodes * grad_out.samples;
  const auto g = grad_out.by_channel();
  std::vector<Matrix> dterms(static_cast<std::size_t>(order_));
  for (int k = 0; k < order_; ++k) {
    Eigen::Map<const Matrix> term(terms_[static_cast<std::size_t>(k)].data(), rows, in_channels_);
    const auto block = theta.value.middleRows(k * in_channels_, in_channels_);
    theta.grad.middleRows(k * in_channels_, in_channels_).noalias() += term.transpose() * g;
    Matrix d(grad_out.nodes, grad_out.samples * in_channels_);
    Eigen::Map<Matrix>(d.data(), rows, in_channels_).noalias() = g * block.transpose();
    dterms[static_cast<std::size_t>(k)] = std::move(d);
  }
  if (use_bias_) bias.grad.row(0) += g.colwise().sum();

  for (int k = order_ - 1; k >= 2; --k) {
    const auto& dk = dterms[static_cast<std::size_t>(k)];
    dterms[static_cast<std::size_t>(k - 1)].noalias() += 2.0 * (rescaled_ * dk);
    dterms[static_cast<std::size_t>(k - 2)] -= dk;
  }
  if (order_ > 1) dterms[0].noalias() += rescaled_ * dterms[1];

  NodeTensor dx(grad_out.nodes, grad_out.samples, in_channels_);
  dx.data = std::move(dterms[0]);
  return dx;
}

ParamRefs ChebConv::params() {
  if (use_bias_) return {&theta, &bias};
  return {&theta};
}

// ---------------------------------------------------------------------------

BatchNorm::BatchNorm(std::string name, index_t features, double momentum, double epsilon)
    : gamma(name + ".gamma", {features}),
      beta(name + ".beta", {features}),
      running_mean(Vector::Zero(features)),
      running_var(Vector::Ones(features)),
      name_(std::move(name)),
      momentum_(momentum),
      epsilon_(epsilon) {
  gamma.value.setOnes();
}

std::vector<BufferRef> BatchNorm::buffers() {
  return {{name_ + ".running_mean", &running_mean}, {name_ + ".running_var", &running_var}};
}

Matrix BatchNorm::forward(const Matrix& x, Mode mode) {
  require(x.rows() == gamma.value.cols(), name_ + ": feature count mismatch");
  mode_ = mode;
  const index_t count = x.cols();
  if (mode == Mode::kTrain) {
    if (count < 2) throw BatchTooSmall(name_ + ": train mode needs at least 2 samples, got " + std::to_string(count));
    const Vector mean = x.rowwise().mean();
    Matrix centered = x.colwise() - mean;
    const Vector var = centered.cwiseAbs2().rowwise().mean();
    inv_std_ = (var.array() + epsilon_).rsqrt();
    normalized_ = inv_std_.asDiagonal() * centered;
    running_mean = momentum_ * running_mean + (1.0 - momentum_) * mean;
    const double unbiased = static_cast<double>(count) / static_cast<double>(count - 1);
    running_var = momentum_ * running_var + (1.0 - momentum_) * unbiased * var;
  } else {
    inv_std_ = (running_var.array() + epsilon_).rsqrt();
    normalized_ = inv_std_.asDiagonal() * (x.colwise() - running_mean);
  }
  Matrix y = gamma.value.row(0).transpose().asDiagonal() * normalized_;
  y.colwise() += beta.value.row(0).transpose();
  return y;
}

Matrix BatchNorm::backward(const Matrix& grad_out) {
  require(grad_out.rows() == normalized_.rows() && grad_out.cols() == normalized_.cols(),
          name_ + ": backward shape mismatch");
  gamma.grad.row(0) += grad_out.cwiseProduct(normalized_).rowwise().sum().transpose();
  beta.grad.row(0) += grad_out.rowwise().sum().transpose();
  const Matrix dnorm = gamma.value.row(0).transpose().asDiagonal() * grad_out;
  if (mode_ == Mode::kInfer) return inv_std_.asDiagonal() * dnorm;
  const double count = static_cast<double>(grad_out.cols());
  const Vector sum_d = dnorm.rowwise().sum();
  const Vector sum_dx = dnorm.cwiseProduct(normalized_).rowwise().sum();
  Matrix dx = count * dnorm;
  dx.colwise() -= sum_d;
  dx -= sum_dx.asDiagonal() * normalized_;
  return (inv_std_ / count).asDiagonal() * dx;
}

NodeTensor BatchNorm::forward(const NodeTensor& x, Mode mode) {
  nodes_ = x.nodes;
  channels_ = x.channels;
  return NodeTensor::from_features_by_sample(forward(x.features_by_sample(), mode), x.nodes, x.channels);
}

NodeTensor BatchNorm::backward(const NodeTensor& grad_out) {
  require(grad_out.nodes == nodes_ && grad_out.channels == channels_, name_ + ": backward shape mismatch");
  return NodeTensor::from_features_by_sample(backward(grad_out.features_by_sample()), nodes_, channels_);
}

// ---------------------------------------------------------------------------

Matrix Relu::forward(const Matrix& x) {
  active_ = (x.array() > 0.0).cast<double>().matrix();
  return x.cwiseMax(0.0);
}

Matrix Relu::backward(const Matrix& grad_out) const {
  require(grad_out.rows() == active_.rows() && grad_out.cols() == active_.cols(), "ReLU backward shape mismatch");
  return grad_out.cwiseProduct(active_);
}

NodeTensor Relu::forward(const NodeTensor& x) {
  NodeTensor out(x.nodes, x.samples, x.channels);
  out.data = forward(x.data);
  return out;
}

NodeTensor Relu::backward(const NodeTensor& grad_out) const {
  NodeTensor out(grad_out.nodes, grad_out.samples, grad_out.channels);
  out.data = backward(grad_out.data);
  return out;
}

// ---------------------------------------------------------------------------

AvgPool2::AvgPool2(std::vector<std::uint8_t> fake_mask) : fake_mask_(std::move(fake_mask)) {
  require(fake_mask_.size() % 2 == 0, "pooling needs an even padded node count");
  block_scale_.resize(fake_mask_.size() / 2);
  for (std::size_t b = 0; b < block_scale_.size(); ++b) {
    const int real = (fake_mask_[2 * b] ? 0 : 1) + (fake_mask_[2 * b + 1] ? 0 : 1);
    block_scale_[b] = real == 0 ? 0.0 : 1.0 / real;
  }
}

NodeTensor AvgPool2::forward(const NodeTensor& x) const {
  require(x.nodes == static_cast<index_t>(fake_mask_.size()), "pooling input node count differs from mask length");
  NodeTensor out(x.nodes / 2, x.samples, x.channels);
  for (index_t b = 0; b < out.nodes; ++b) {
    const auto ub = static_cast<std::size_t>(b);
    if (!fake_mask_[2 * ub]) out.data.row(b) += x.data.row(2 * b);
    if (!fake_mask_[2 * ub + 1]) out.data.row(b) += x.data.row(2 * b + 1);
    out.data.row(b) *= block_scale_[ub];
  }
  return out;
}

NodeTensor AvgPool2::backward(const NodeTensor& grad_out) const {
  require(grad_out.nodes * 2 == static_cast<index_t>(fake_mask_.size()), "pooling gradient node count mismatch");
  NodeTensor dx(grad_out.nodes * 2, grad_out.samples, grad_out.channels);
  for (index_t b = 0; b < grad_out.nodes; ++b) {
    const auto ub = static_cast<std::size_t>(b);
    if (!fake_mask_[2 * ub]) dx.data.row(2 * b) = block_scale_[ub] * grad_out.data.row(b);
    if (!fake_mask_[2 * ub + 1]) dx.data.row(2 * b + 1) = block_scale_[ub] * grad_out.data.row(b);
  }
  return dx;
}

// ---------------------------------------------------------------------------

Dense::Dense(std::string name, index_t in, index_t out, Activation activation)
    : weight(name + ".weight", {in, out}), bias(name + ".bias", {out}), activation_(activation) {}

void Dense::init(SeededRng& rng) {
  weight.init_uniform(rng, in(), out());
  bias.value.setZero();
}

Matrix Dense::forward(const Matrix& x) {
  require(x.cols() == in(), weight.name + ": expected " + std::to_string(in()) + " input columns, got " +
                                std::to_string(x.cols()));
  input_ = x;
  Matrix y = x * weight.value;
  y.rowwise() += bias.value.row(0);
  if (activation_ == Activation::kRelu) {
    active_ = (y.array() > 0.0).cast<double>().matrix();
    y = y.cwiseMax(0.0);
  }
  return y;
}

Matrix Dense::backward(const Matrix& grad_out) {
  require(grad_out.rows() == input_.rows() && grad_out.cols() == out(), weight.name + ": backward shape mismatch");
  const Matrix g = activation_ == Activation::kRelu ? Matrix(grad_out.cwiseProduct(active_)) : grad_out;
  weight.grad.noalias() += input_.transpose() * g;
  bias.grad.row(0) += g.colwise().sum();
  return g * weight.value.transpose();
}

Mlp::Mlp(std::string name, index_t in, std::vector<index_t> hidden, index_t out) {
  index_t width = in;
  for (std::size_t l = 0; l < hidden.size(); ++l) {
    layers_.emplace_back(name + ".l" + std::to_string(l), width, hidden[l], Activation::kRelu);
    width = hidden[l];
  }
  layers_.emplace_back(name + ".l" + std::to_string(hidden.size()), width, out, Activation::kNone);
}

void Mlp::init(SeededRng& rng) {
  for (auto& layer : layers_) layer.init(rng);
}

Matrix Mlp::forward(const Matrix& x) {
  Matrix h = x;
  for (auto& layer : layers_) h = layer.forward(h);
  return h;
}

Matrix Mlp::backward(const Matrix& grad_out) {
  Matrix g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = it->backward(g);
  return g;
}

ParamRefs Mlp::params() {
  ParamRefs out;
  for (auto& layer : layers_) {
    for (auto* p : layer.params()) out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------

Matrix softmax(const Matrix& logits) {
  Matrix out = logits.colwise() - logits.rowwise().maxCoeff();
  out = out.array().exp().matrix();
  const Vector sums = out.rowwise().sum();
  return sums.cwiseInverse().asDiagonal() * out;
}

SoftmaxCrossEntropy softmax_cross_entropy(const Matrix& logits, std::span<const int> labels) {
  require(static_cast<index_t>(labels.size()) == logits.rows(), "label count differs from logit rows");
  const index_t classes = logits.cols();
  const Vector row_max = logits.rowwise().maxCoeff();
  const Matrix shifted = logits.colwise() - row_max;
  const Vector log_norm = shifted.array().exp().rowwise().sum().log().matrix();
  SoftmaxCrossEntropy out;
  out.grad = (shifted.colwise() - log_norm).array().exp().matrix();
  const double count = static_cast<double>(logits.rows());
  for (index_t p = 0; p < logits.rows(); ++p) {
    const int label = labels[static_cast<std::size_t>(p)];
    if (label < 0 || label >= classes) {
      throw LabelOutOfRange("label " + std::to_string(label) + " at row " + std::to_string(p) + " outside [0, " +
                            std::to_string(classes) + ")");
    }
    out.loss -= shifted(p, label) - log_norm[p];
    out.grad(p, label) -= 1.0;
  }
  out.loss /= count;
  out.grad /= count;
  return out;
}

}  // namespace gcnrn
