#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gcnrn/common.hpp"

namespace gcnrn {

class SeededRng;

/// Trainable array with its accumulated gradient.
///
/// `shape` is the logical shape; `value` stores it as a matrix whose rows are
/// the product of all but the last dimension (a K x F_in x F_out filter bank is
/// a (K*F_in) x F_out matrix).
struct ParamTensor {
  std::string name;
  std::vector<index_t> shape;
  Matrix value;
  Matrix grad;

  ParamTensor() = default;
  ParamTensor(std::string name, std::vector<index_t> shape);

  index_t size() const { return value.size(); }
  void zero_grad() { grad.setZero(); }
  /// Glorot-style uniform fill in +-sqrt(6 / (fan_in + fan_out)).
  void init_uniform(SeededRng& rng, index_t fan_in, index_t fan_out);
};

/// Non-owning list of parameters, as handed to optimizers and checkpoints.
using ParamRefs = std::vector<ParamTensor*>;

/// Trainable buffer that is not optimized (batch-norm running statistics).
struct BufferRef {
  std::string name;
  Vector* value = nullptr;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam moments for one parameter.
struct AdamState {
  Matrix m;
  Matrix v;
  std::int64_t t = 0;
};

/// Bias-corrected Adam update of one parameter; the gradient is zeroed
/// afterwards. Throws NonFiniteGradient if any gradient entry is NaN or Inf.
void adam_step(const AdamConfig& config, AdamState& state, ParamTensor& param);

class AdamOptimizer {
 public:
  AdamOptimizer(ParamRefs params, AdamConfig config);
  void step();
  void zero_grad();
  const AdamConfig& config() const { return config_; }

 private:
  ParamRefs params_;
  std::vector<AdamState> states_;
  AdamConfig config_;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_param;
  index_t worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Compares each parameter's stored `grad` with a central finite difference
/// of `loss`, perturbing one coordinate at a time by +-step. Relative error
/// uses the denominator max(|analytic|, |numeric|, 1e-8).
GradCheckResult grad_check(const std::function<double()>& loss, std::span<ParamTensor* const> params,
                           double step = 1e-5);

/// JSON checkpoint: {"format": "gcnrn-checkpoint", "version": 1,
/// "params": {name: {"shape": [...], "values": [...]}}, "buffers": {...},
/// "meta": {...}}. Values are written with round-trip precision.
void save_checkpoint(const std::string& path, std::span<ParamTensor* const> params,
                     std::span<const BufferRef> buffers, const std::string& meta_json = "{}");
/// Loads into existing tensors by name, checking shapes. Returns the meta JSON text.
std::string load_checkpoint(const std::string& path, std::span<ParamTensor* const> params,
                            std::span<const BufferRef> buffers);

}  // namespace gcnrn
