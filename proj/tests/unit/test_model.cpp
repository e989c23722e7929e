#include <doctest.h>

#include <map>

#include "gcnrn/data.hpp"
#include "gcnrn/model.hpp"
#include "helpers.hpp"

using namespace gcnrn;
using testutil::random_matrix;

namespace {

ModelConfig tiny_config(RelationKind relation = RelationKind::kModified) {
  ModelConfig c;
  c.conv_filters = {4, 4};
  c.cheb_order = {3, 2};
  c.fc_hidden = {8};
  c.kappa = 6;
  c.g_hidden = {5};
  c.vanilla_g_hidden = {5};
  c.vanilla_g_out = 4;
  c.vanilla_f_hidden = {6};
  c.relation = relation;
  c.seed = 3;
  return c;
}

SyntheticData tiny_data(index_t n = 10, std::uint64_t seed = 2) {
  SyntheticSpec spec;
  spec.n = n;
  spec.avg_degree = 4;
  spec.samples_per_class = 6;
  spec.seed = seed;
  return gen_synthetic(spec);
}

std::map<std::string, ParamTensor*> by_name(HybridModel& model) {
  std::map<std::string, ParamTensor*> out;
  for (auto* p : model.params()) out[p->name] = p;
  return out;
}

std::map<std::string, Vector*> buffers_by_name(HybridModel& model) {
  std::map<std::string, Vector*> out;
  for (auto& b : model.buffers()) out[b.name] = b.value;
  return out;
}

// Every parameter and buffer set to random values so no term is trivially zero.
void randomize(HybridModel& model, SeededRng& rng) {
  for (auto* p : model.params()) p->value = random_matrix(p->value.rows(), p->value.cols(), rng) * 0.5;
  for (auto& b : model.buffers()) {
    *b.value = random_matrix(b.value->size(), 1, rng);
    if (b.name.find("running_var") != std::string::npos) *b.value = b.value->cwiseAbs().array() + 0.5;
  }
}

// Infer-mode logits rebuilt from dense matrices and the named parameters.
Matrix reference_logits(HybridModel& model, const Matrix& x) {
  const auto params = by_name(model);
  const auto buffers = buffers_by_name(model);
  const auto& h = model.hierarchy();
  const index_t samples = x.rows();

  auto batch_norm = [&](const std::string& name, const Matrix& features) {
    const Vector& mean = *buffers.at(name + ".running_mean");
    const Vector& var = *buffers.at(name + ".running_var");
    const auto& gamma = params.at(name + ".gamma")->value;
    const auto& beta = params.at(name + ".beta")->value;
    Matrix out(features.rows(), features.cols());
    for (index_t f = 0; f < features.rows(); ++f) {
      for (index_t p = 0; p < features.cols(); ++p) {
        out(f, p) = gamma(0, f) * (features(f, p) - mean[f]) / std::sqrt(var[f] + 1e-5) + beta(0, f);
      }
    }
    return out;
  };

  // Per-channel signals: channels[f] is nodes x samples.
  index_t nodes = h.padded_size(0);
  std::vector<Matrix> channels(1, Matrix::Zero(nodes, samples));
  for (index_t s = 0; s < nodes; ++s) {
    const auto v = h.padded_order()[static_cast<std::size_t>(s)];
    if (v != kFakeNode) channels[0].row(s) = x.col(v).transpose();
  }
  channels[0] = batch_norm("input_bn", channels[0]);

  const auto& config = model.config();
  for (std::size_t l = 0; l < config.conv_filters.size(); ++l) {
    const auto& mask = h.fake_mask(static_cast<int>(l));
    for (auto& c : channels) {
      for (index_t s = 0; s < nodes; ++s) {
        if (mask[static_cast<std::size_t>(s)]) c.row(s).setZero();
      }
    }
    const Laplacian lap(h.padded_graph(static_cast<int>(l)));
    const Matrix scaled = 2.0 * lap.dense() / lap.lambda_max() - Matrix::Identity(nodes, nodes);
    const std::string name = "conv" + std::to_string(l + 1);
    const auto& theta = params.at(name + ".theta")->value;
    const auto& bias = params.at(name + ".bias")->value;
    const int order = config.cheb_order[l];
    const auto fin = static_cast<index_t>(channels.size());
    const index_t fout = config.conv_filters[l];
    std::vector<Matrix> out(static_cast<std::size_t>(fout), Matrix::Zero(nodes, samples));
    for (index_t i = 0; i < fin; ++i) {
      std::vector<Matrix> t{channels[static_cast<std::size_t>(i)]};
      if (order > 1) t.push_back(scaled * t[0]);
      for (int k = 2; k < order; ++k) t.push_back(2.0 * scaled * t[static_cast<std::size_t>(k - 1)] - t[static_cast<std::size_t>(k - 2)]);
      for (index_t o = 0; o < fout; ++o) {
        for (int k = 0; k < order; ++k) out[static_cast<std::size_t>(o)] += theta(k * fin + i, o) * t[static_cast<std::size_t>(k)];
      }
    }
    Matrix stacked(nodes * fout, samples);
    for (index_t o = 0; o < fout; ++o) {
      out[static_cast<std::size_t>(o)].array() += bias(0, o);
      stacked.middleRows(o * nodes, nodes) = out[static_cast<std::size_t>(o)];
    }
    stacked = batch_norm(name + ".bn", stacked).cwiseMax(0.0);
    const index_t half = nodes / 2;
    channels.assign(static_cast<std::size_t>(fout), Matrix::Zero(half, samples));
    for (index_t o = 0; o < fout; ++o) {
      for (index_t b = 0; b < half; ++b) {
        int real = 0;
        for (index_t c = 2 * b; c < 2 * b + 2; ++c) {
          if (!mask[static_cast<std::size_t>(c)]) {
            channels[static_cast<std::size_t>(o)].row(b) += stacked.row(o * nodes + c);
            ++real;
          }
        }
        if (real > 0) channels[static_cast<std::size_t>(o)].row(b) /= real;
      }
    }
    nodes = half;
  }

  const auto fcount = static_cast<index_t>(channels.size());
  Matrix flat(samples, fcount * nodes);
  for (index_t f = 0; f < fcount; ++f) flat.middleCols(f * nodes, nodes) = channels[static_cast<std::size_t>(f)].transpose();
  Matrix act = flat;
  const std::size_t fc_layers = config.fc_hidden.size() + 1;
  for (std::size_t l = 0; l < fc_layers; ++l) {
    const std::string name = "fc.l" + std::to_string(l);
    act = act * params.at(name + ".weight")->value;
    act.rowwise() += params.at(name + ".bias")->value.row(0);
    if (l + 1 < fc_layers) act = act.cwiseMax(0.0);
  }

  if (config.relation == RelationKind::kModified) {
    const auto* sel = model.selection();
    const auto& eps = params.at("rn.epsilon")->value;
    const std::size_t g_layers = config.g_hidden.size() + 1;
    for (std::size_t q = 0; q < sel->size(); ++q) {
      const auto [i, j] = sel->pairs[q];
      Matrix z(samples, 2 * fcount);
      for (index_t f = 0; f < fcount; ++f) {
        z.col(f) = channels[static_cast<std::size_t>(f)].row(i).transpose();
        z.col(fcount + f) = channels[static_cast<std::size_t>(f)].row(j).transpose();
      }
      for (std::size_t l = 0; l < g_layers; ++l) {
        const std::string name = "rn.g.l" + std::to_string(l);
        const auto* w = params.at(name + ".weight");
        const index_t rows = w->shape[1];
        z = z * w->value.middleRows(static_cast<index_t>(q) * rows, rows);
        z.rowwise() += params.at(name + ".bias")->value.row(static_cast<index_t>(q));
        if (l + 1 < g_layers) z = z.cwiseMax(0.0);
      }
      act += eps(0, static_cast<index_t>(q)) * z;
    }
  }
  return act;
}

double model_loss(HybridModel& model, const Matrix& x, const std::vector<int>& y) {
  return softmax_cross_entropy(model.forward(x, Mode::kTrain).logits, y).loss;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("config defaults and validation") {
    const ModelConfig c;
    CHECK(c.conv_filters == std::vector<index_t>{32, 32});
    CHECK(c.cheb_order == std::vector<int>{10, 2});
    CHECK(c.fc_hidden == std::vector<index_t>{1024, 512});
    CHECK(c.batch_size == 64);
    CHECK(c.epochs == 200);
    CHECK(c.adam.learning_rate == 1e-3);
    CHECK(ModelConfig::synthetic_preset().kappa == 200);
    CHECK(ModelConfig::real_data_preset().kappa == 1000);
    CHECK(ModelConfig::real_data_preset().g_hidden == std::vector<index_t>{128, 128});
    ModelConfig bad = c;
    bad.cheb_order = {10};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.precision = "float16";
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK(relation_kind_from_string(to_string(RelationKind::kVanilla)) == RelationKind::kVanilla);
    CHECK_THROWS_AS(relation_kind_from_string("lstm"), ConfigError);
  }

  TEST_CASE("feature map shape follows the hierarchy") {
    SyntheticSpec spec;
    spec.n = 100;
    spec.samples_per_class = 4;
    const auto data = gen_synthetic(spec);
    HybridModel model(data.graph, 2, ModelConfig::synthetic_preset());
    const auto& h = model.hierarchy();
    CHECK(h.padded_size(0) == 4 * h.padded_size(2));
    CHECK(h.padded_size(2) >= 25);
    const auto out = model.forward(data.dataset.x, Mode::kInfer);
    CHECK(out.features.nodes == h.padded_size(2));
    CHECK(out.features.samples == 8);
    CHECK(out.features.channels == 32);
    CHECK(out.logits.rows() == 8);
    CHECK(out.logits.cols() == 2);
  }

  TEST_CASE("zero input gives uniform probabilities") {
    const auto data = tiny_data();
    HybridModel model(data.graph, 3, tiny_config());
    const Matrix p = hybrid_forward(model, Matrix::Zero(4, 10));
    CHECK((p.array() - 1.0 / 3.0).abs().maxCoeff() < 1e-15);
  }

  TEST_CASE("fused logits are h plus the relation term") {
    const auto data = tiny_data();
    SeededRng rng(11);
    for (auto kind : {RelationKind::kModified, RelationKind::kVanilla, RelationKind::kNone}) {
      HybridModel model(data.graph, 2, tiny_config(kind));
      randomize(model, rng);
      const auto out = model.forward(data.dataset.x, Mode::kInfer);
      CHECK((out.logits - (out.h_logits + out.rn_logits)).cwiseAbs().maxCoeff() <= 1e-12);
      if (kind == RelationKind::kNone) CHECK(out.rn_logits.isZero());
      const auto h = h_forward(model, data.dataset.x);
      CHECK(h.logits == out.h_logits);
      const Matrix p = hybrid_forward(model, data.dataset.x);
      CHECK((p.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
    }
  }

  TEST_CASE("zero attention reduces to h") {
    const auto data = tiny_data();
    SeededRng rng(12);
    HybridModel model(data.graph, 2, tiny_config());
    randomize(model, rng);
    model.relation_head()->epsilon.value.setZero();
    const Matrix p = hybrid_forward(model, data.dataset.x);
    const Matrix ph = softmax(h_forward(model, data.dataset.x).logits);
    CHECK((p - ph).cwiseAbs().maxCoeff() <= 1e-15);
  }

  TEST_CASE("forward matches an independently composed reference") {
    SeededRng rng(13);
    for (std::uint64_t seed : {2, 5, 9}) {
      const auto data = tiny_data(11, seed);
      HybridModel model(data.graph, 3, tiny_config());
      randomize(model, rng);
      const Matrix x = random_matrix(5, 11, rng);
      const Matrix got = model.forward(x, Mode::kInfer).logits;
      CHECK((got - reference_logits(model, x)).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  TEST_CASE("full model gradient check in train mode") {
    SeededRng rng(14);
    const auto data = tiny_data();
    const Matrix x = data.dataset.x.topRows(6);
    const std::vector<int> y(data.dataset.y.begin(), data.dataset.y.begin() + 6);
    for (auto kind : {RelationKind::kModified, RelationKind::kVanilla, RelationKind::kNone}) {
      HybridModel model(data.graph, 2, tiny_config(kind));
      ParamRefs checked;
      std::vector<ParamTensor*> shift_only;
      for (auto* p : model.params()) {
        p->value += random_matrix(p->value.rows(), p->value.cols(), rng) * 0.1;
        // Batch statistics cancel any shift that is constant across samples.
        const bool conv_bias = p->name.rfind("conv", 0) == 0 && p->name.ends_with(".bias") &&
                               p->name.find(".bn.") == std::string::npos;
        (p->name == "input_bn.beta" || conv_bias ? shift_only : checked).push_back(p);
      }
      REQUIRE(shift_only.size() == 3);
      const auto out = model.forward(x, Mode::kTrain);
      model.backward(softmax_cross_entropy(out.logits, y).grad);
      for (auto* p : shift_only) CHECK(p->grad.cwiseAbs().maxCoeff() < 1e-12);
      const auto result = grad_check([&] { return model_loss(model, x, y); }, checked);
      INFO("relation ", to_string(kind), " worst ", result.worst_param, "[", result.worst_index, "] ", result.analytic,
           " vs ", result.numeric);
      CHECK(result.max_relative_error < 1e-4);
    }
  }

  TEST_CASE("full model gradient check in infer mode") {
    SeededRng rng(15);
    const auto data = tiny_data();
    const Matrix x = data.dataset.x.topRows(6);
    const std::vector<int> y(data.dataset.y.begin(), data.dataset.y.begin() + 6);
    for (auto kind : {RelationKind::kModified, RelationKind::kVanilla, RelationKind::kNone}) {
      HybridModel model(data.graph, 2, tiny_config(kind));
      auto params = model.params();
      for (auto* p : params) p->value += random_matrix(p->value.rows(), p->value.cols(), rng) * 0.1;
      for (auto& b : model.buffers()) {
        *b.value = random_matrix(b.value->size(), 1, rng);
        if (b.name.ends_with("running_var")) *b.value = b.value->cwiseAbs().array() + 0.5;
      }
      auto loss = [&] { return softmax_cross_entropy(model.forward(x, Mode::kInfer).logits, y).loss; };
      model.backward(softmax_cross_entropy(model.forward(x, Mode::kInfer).logits, y).grad);
      const auto result = grad_check(loss, params);
      INFO("relation ", to_string(kind), " worst ", result.worst_param, "[", result.worst_index, "] ", result.analytic,
           " vs ", result.numeric);
      CHECK(result.max_relative_error < 1e-4);
    }
  }

  TEST_CASE("checkpoint save and load restore predictions") {
    const auto data = tiny_data();
    SeededRng rng(15);
    HybridModel a(data.graph, 2, tiny_config());
    randomize(a, rng);
    const auto path = std::string(GCNRN_TEST_TMP) + "/model_ckpt.json";
    a.save(path, R"({"note": "x"})");
    HybridModel b(data.graph, 2, tiny_config());
    CHECK(nlohmann::json::parse(b.load(path))["note"] == "x");
    CHECK(a.forward(data.dataset.x, Mode::kInfer).logits == b.forward(data.dataset.x, Mode::kInfer).logits);
  }

  TEST_CASE("model rejects wrong input width") {
    const auto data = tiny_data();
    HybridModel model(data.graph, 2, tiny_config());
    CHECK_THROWS_AS(model.forward(Matrix::Zero(2, 9), Mode::kInfer), DimensionMismatch);
  }
}
