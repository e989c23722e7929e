#include "gcnrn/param.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "gcnrn/rng.hpp"

namespace gcnrn {

using nlohmann::json;

ParamTensor::ParamTensor(std::string name_, std::vector<index_t> shape_)
    : name(std::move(name_)), shape(std::move(shape_)) {
  if (shape.empty()) throw DimensionMismatch("parameter '" + name + "' has empty shape");
  const index_t cols = shape.back();
  const index_t rows =
      std::accumulate(shape.begin(), shape.end() - 1, index_t{1}, std::multiplies<>());
  value = Matrix::Zero(rows, cols);
  grad = Matrix::Zero(rows, cols);
}

void ParamTensor::init_uniform(SeededRng& rng, index_t fan_in, index_t fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (index_t c = 0; c < value.cols(); ++c) {
    for (index_t r = 0; r < value.rows(); ++r) value(r, c) = rng.uniform(-limit, limit);
  }
}

void adam_step(const AdamConfig& config, AdamState& state, ParamTensor& param) {
  if (!param.grad.allFinite()) throw NonFiniteGradient("parameter '" + param.name + "'");
  if (state.m.size() == 0) {
    state.m = Matrix::Zero(param.value.rows(), param.value.cols());
    state.v = Matrix::Zero(param.value.rows(), param.value.cols());
  }
  ++state.t;
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  const double step = config.learning_rate / (1.0 - std::pow(b1, static_cast<double>(state.t)));
  const double v_scale = 1.0 / (1.0 - std::pow(b2, static_cast<double>(state.t)));
  const double eps = config.epsilon;
  double* m = state.m.data();
  double* v = state.v.data();
  double* w = param.value.data();
  double* g = param.grad.data();
  const index_t size = param.value.size();
  for (index_t k = 0; k < size; ++k) {
    const double gk = g[k];
    m[k] = b1 * m[k] + (1.0 - b1) * gk;
    v[k] = b2 * v[k] + (1.0 - b2) * gk * gk;
    w[k] -= step * m[k] / (std::sqrt(v[k] * v_scale) + eps);
    g[k] = 0.0;
  }
}

AdamOptimizer::AdamOptimizer(ParamRefs params, AdamConfig config)
    : params_(std::move(params)), states_(params_.size()), config_(config) {}

void AdamOptimizer::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) adam_step(config_, states_[i], *params_[i]);
}

void AdamOptimizer::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

GradCheckResult grad_check(const std::function<double()>& loss, std::span<ParamTensor* const> params,
                           double step) {
  GradCheckResult result;
  for (auto* p : params) {
    for (index_t k = 0; k < p->value.size(); ++k) {
      double& x = p->value.data()[k];
      const double saved = x;
      x = saved + step;
      const double up = loss();
      x = saved - step;
      const double down = loss();
      x = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = p->grad.data()[k];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      const double err = std::abs(analytic - numeric) / denom;
      if (result.worst_index < 0 || err > result.max_relative_error) {
        result = {err, p->name, k, analytic, numeric};
      }
    }
  }
  return result;
}

namespace {

json shape_json(const std::vector<index_t>& shape) {
  json out = json::array();
  for (auto d : shape) out.push_back(d);
  return out;
}

}  // namespace

void save_checkpoint(const std::string& path, std::span<ParamTensor* const> params,
                     std::span<const BufferRef> buffers, const std::string& meta_json) {
  json doc;
  doc["format"] = "gcnrn-checkpoint";
  doc["version"] = 1;
  json& ps = doc["params"] = json::object();
  for (const auto* p : params) {
    json values = json::array();
    // Row-major over the logical shape.
    for (index_t r = 0; r < p->value.rows(); ++r) {
      for (index_t c = 0; c < p->value.cols(); ++c) values.push_back(p->value(r, c));
    }
    ps[p->name] = {{"shape", shape_json(p->shape)}, {"values", std::move(values)}};
  }
  json& bs = doc["buffers"] = json::object();
  for (const auto& b : buffers) {
    json values = json::array();
    for (index_t i = 0; i < b.value->size(); ++i) values.push_back((*b.value)[i]);
    bs[b.name] = {{"shape", json::array({b.value->size()})}, {"values", std::move(values)}};
  }
  doc["meta"] = json::parse(meta_json);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  out << doc.dump(1) << '\n';
}

std::string load_checkpoint(const std::string& path, std::span<ParamTensor* const> params,
                            std::span<const BufferRef> buffers) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("checkpoint '" + path + "': " + e.what());
  }
  if (doc.value("format", "") != "gcnrn-checkpoint") throw ParseError("'" + path + "' is not a checkpoint");
  const auto& ps = doc.at("params");
  for (auto* p : params) {
    if (!ps.contains(p->name)) throw ParseError("checkpoint lacks parameter '" + p->name + "'");
    const auto& entry = ps.at(p->name);
    if (entry.at("shape").get<std::vector<index_t>>() != p->shape) {
      throw DimensionMismatch("checkpoint shape mismatch for '" + p->name + "'");
    }
    const auto& values = entry.at("values");
    if (static_cast<index_t>(values.size()) != p->value.size()) {
      throw DimensionMismatch("checkpoint value count mismatch for '" + p->name + "'");
    }
    std::size_t k = 0;
    for (index_t r = 0; r < p->value.rows(); ++r) {
      for (index_t c = 0; c < p->value.cols(); ++c) p->value(r, c) = values[k++].get<double>();
    }
    p->zero_grad();
  }
  const auto& bs = doc.at("buffers");
  for (const auto& b : buffers) {
    if (!bs.contains(b.name)) throw ParseError("checkpoint lacks buffer '" + b.name + "'");
    const auto& values = bs.at(b.name).at("values");
    if (static_cast<index_t>(values.size()) != b.value->size()) {
      throw DimensionMismatch("checkpoint value count mismatch for buffer '" + b.name + "'");
    }
    for (index_t i = 0; i < b.value->size(); ++i) (*b.value)[i] = values[static_cast<std::size_t>(i)].get<double>();
  }
  return doc.value("meta", json::object()).dump();
}

}  // namespace gcnrn
