#include <doctest.h>

#include "gcnrn/layers.hpp"
#include "helpers.hpp"

using namespace gcnrn;
using testutil::path_graph;
using testutil::random_graph;
using testutil::random_matrix;

namespace {

// Loss sum(out .* weights), so d(loss)/d(out) = weights.
double weighted_sum(const Matrix& out, const Matrix& weights) { return out.cwiseProduct(weights).sum(); }

}  // namespace

TEST_SUITE("layers") {
  TEST_CASE("node tensor layouts round trip") {
    SeededRng rng(1);
    NodeTensor t(5, 3, 4);
    t.data = random_matrix(5, 12, rng);
    CHECK(t.at(2, 1, 3) == t.data(2, 3 * 3 + 1));
    const Matrix flat = t.flatten();
    CHECK(flat(1, 3 * 5 + 2) == t.at(2, 1, 3));
    CHECK(NodeTensor::unflatten(flat, 5, 4).data == t.data);
    const Matrix fbs = t.features_by_sample();
    CHECK(fbs(3 * 5 + 2, 1) == t.at(2, 1, 3));
    CHECK(NodeTensor::from_features_by_sample(fbs, 5, 4).data == t.data);
    const Matrix emb = t.node_embedding(2);
    CHECK(emb(1, 3) == t.at(2, 1, 3));
    CHECK(t.by_channel()(2 + 5 * 1, 3) == t.at(2, 1, 3));
  }

  TEST_CASE("cheb_conv order 1 with unit theta is the identity") {
    const Laplacian lap(random_graph(6, 0.5, 2));
    ChebConv conv("c", lap, 1, 1, 1, false);
    conv.theta.value(0, 0) = 1.0;
    SeededRng rng(3);
    NodeTensor x(6, 2, 1);
    x.data = random_matrix(6, 2, rng);
    CHECK(conv.forward(x).data == x.data);
  }

  TEST_CASE("cheb_conv P2 example") {
    const Laplacian lap(path_graph(2));
    ChebConv conv("c", lap, 2, 1, 1, false);
    conv.theta.value << 0.0, 1.0;
    NodeTensor x(2, 1, 1);
    x.data << 1, 0;
    const auto y = conv.forward(x);
    CHECK(y.data(0, 0) == doctest::Approx(0.0));
    CHECK(y.data(1, 0) == doctest::Approx(-1.0));
  }

  TEST_CASE("cheb_conv mixes channels per order") {
    const Laplacian lap(random_graph(7, 0.4, 8));
    SeededRng rng(4);
    ChebConv conv("c", lap, 3, 2, 3, true);
    conv.init(rng);
    conv.bias.value << 0.1, -0.2, 0.3;
    NodeTensor x(7, 2, 2);
    x.data = random_matrix(7, 4, rng);
    const auto y = conv.forward(x);
    // Oracle per (sample, in, out) channel through the dense eigenbasis.
    for (index_t p = 0; p < 2; ++p) {
      for (index_t o = 0; o < 3; ++o) {
        Vector expected = Vector::Constant(7, conv.bias.value(0, o));
        for (index_t i = 0; i < 2; ++i) {
          std::vector<double> coeffs;
          for (int k = 0; k < 3; ++k) coeffs.push_back(conv.theta.value(k * 2 + i, o));
          Vector signal(7);
          for (index_t v = 0; v < 7; ++v) signal[v] = x.at(v, p, i);
          expected += spectral_filter_oracle(lap, signal, coeffs);
        }
        for (index_t v = 0; v < 7; ++v) CHECK(y.at(v, p, o) == doctest::Approx(expected[v]).epsilon(1e-10));
      }
    }
  }

  TEST_CASE("cheb_conv is linear in x and theta") {
    const Laplacian lap(random_graph(9, 0.3, 5));
    SeededRng rng(6);
    ChebConv conv("c", lap, 4, 1, 1, false);
    conv.init(rng);
    NodeTensor a(9, 1, 1), b(9, 1, 1), ab(9, 1, 1);
    a.data = random_matrix(9, 1, rng);
    b.data = random_matrix(9, 1, rng);
    ab.data = 2.0 * a.data - 0.5 * b.data;
    const Matrix lhs = conv.forward(ab).data;
    const Matrix rhs = 2.0 * conv.forward(a).data - 0.5 * conv.forward(b).data;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);

    const Matrix t1 = conv.theta.value;
    const Matrix y1 = conv.forward(a).data;
    const Matrix t2 = random_matrix(4, 1, rng);
    conv.theta.value = t2;
    const Matrix y2 = conv.forward(a).data;
    conv.theta.value = t1 + 3.0 * t2;
    CHECK((conv.forward(a).data - (y1 + 3.0 * y2)).cwiseAbs().maxCoeff() < 1e-10);
  }

  TEST_CASE("cheb_conv rejects edgeless graphs and wrong shapes") {
    CHECK_THROWS_AS(ChebConv("c", Laplacian(WeightedGraph(3, {})), 2, 1, 1), ZeroOperator);
    ChebConv conv("c", Laplacian(path_graph(3)), 2, 1, 1);
    CHECK_THROWS_AS(conv.forward(NodeTensor(4, 1, 1)), DimensionMismatch);
    CHECK_THROWS_AS(conv.forward(NodeTensor(3, 1, 2)), DimensionMismatch);
  }

  TEST_CASE("cheb_conv gradients") {
    const Laplacian lap(random_graph(6, 0.5, 12));
    SeededRng rng(13);
    ChebConv conv("c", lap, 3, 2, 3);
    conv.init(rng);
    conv.bias.value = random_matrix(1, 3, rng);
    ParamTensor x("x", {6, 4 * 2});
    x.value = random_matrix(6, 8, rng);
    const Matrix weights = random_matrix(6, 4 * 3, rng);
    auto run = [&] {
      NodeTensor in(6, 4, 2);
      in.data = x.value;
      return conv.forward(in);
    };
    run();
    NodeTensor g(6, 4, 3);
    g.data = weights;
    x.grad = conv.backward(g).data;
    ParamTensor* params[] = {&conv.theta, &conv.bias, &x};
    const auto result = grad_check([&] { return weighted_sum(run().data, weights); }, params);
    CHECK(result.max_relative_error < 1e-6);
  }

  TEST_CASE("batch norm examples") {
    BatchNorm bn("bn", 2);
    Matrix x(2, 2);
    x << -1, 1, -1, 1;
    const Matrix y = bn.forward(x, Mode::kTrain);
    const double c = 1.0 / std::sqrt(1.0 + 1e-5);
    CHECK(y(0, 0) == doctest::Approx(-c));
    CHECK(y(1, 1) == doctest::Approx(c));

    BatchNorm shifted("bn", 1);
    shifted.gamma.value(0, 0) = 2.0;
    shifted.beta.value(0, 0) = 3.0;
    const Matrix constant = Matrix::Constant(1, 5, 7.0);
    CHECK((shifted.forward(constant, Mode::kTrain).array() == 3.0).all());

    CHECK_THROWS_AS(bn.forward(Matrix::Zero(2, 1), Mode::kTrain), BatchTooSmall);
    CHECK_NOTHROW(bn.forward(Matrix::Zero(2, 1), Mode::kInfer));
  }

  TEST_CASE("batch norm normalizes a random batch") {
    SeededRng rng(21);
    BatchNorm bn("bn", 4);
    bn.beta.value << 0.5, -1.0, 0.0, 2.0;
    const Matrix x = (random_matrix(4, 32, rng) * 3.0).array() + 5.0;
    const Matrix y = bn.forward(x, Mode::kTrain);
    for (index_t f = 0; f < 4; ++f) {
      const double mean = y.row(f).mean();
      CHECK(std::abs(mean - bn.beta.value(0, f)) < 1e-6);
      const double var = (y.row(f).array() - mean).square().mean();
      CHECK(std::abs(var - 1.0) < 1e-5);
    }
  }

  TEST_CASE("batch norm running statistics") {
    BatchNorm bn("bn", 1, 0.9);
    Matrix x(1, 4);
    x << 1, 2, 3, 4;
    bn.forward(x, Mode::kTrain);
    CHECK(bn.running_mean[0] == doctest::Approx(0.1 * 2.5));
    CHECK(bn.running_var[0] == doctest::Approx(0.9 + 0.1 * (5.0 / 3.0)));
    const Matrix y = bn.forward(x, Mode::kInfer);
    CHECK(y(0, 0) == doctest::Approx((1.0 - 0.25) / std::sqrt(bn.running_var[0] + 1e-5)));
  }

  TEST_CASE("batch norm gradients in both modes") {
    SeededRng rng(31);
    for (Mode mode : {Mode::kTrain, Mode::kInfer}) {
      BatchNorm bn("bn", 3);
      bn.gamma.value = random_matrix(1, 3, rng);
      bn.beta.value = random_matrix(1, 3, rng);
      bn.running_mean = random_matrix(3, 1, rng);
      bn.running_var = random_matrix(3, 1, rng).cwiseAbs();
      ParamTensor x("x", {3, 6});
      x.value = random_matrix(3, 6, rng);
      const Matrix weights = random_matrix(3, 6, rng);
      bn.forward(x.value, mode);
      x.grad = bn.backward(weights);
      ParamTensor* params[] = {&bn.gamma, &bn.beta, &x};
      const auto result = grad_check([&] { return weighted_sum(bn.forward(x.value, mode), weights); }, params);
      CHECK(result.max_relative_error < 1e-6);
    }
  }

  TEST_CASE("relu forward and backward") {
    Relu relu;
    Matrix x(1, 3);
    x << -1, 2, 0.5;
    const Matrix y = relu.forward(x);
    CHECK(y(0, 0) == 0.0);
    CHECK(y(0, 1) == 2.0);
    const Matrix g = relu.backward(Matrix::Ones(1, 3));
    CHECK(g(0, 0) == 0.0);
    CHECK(g(0, 2) == 1.0);
  }

  TEST_CASE("average pooling gradients") {
    SeededRng rng(41);
    const AvgPool2 pool(std::vector<std::uint8_t>{0, 0, 0, 1, 1, 1});
    ParamTensor x("x", {6, 2});
    x.value = random_matrix(6, 2, rng);
    const Matrix weights = random_matrix(3, 2, rng);
    auto run = [&] {
      NodeTensor in(6, 2, 1);
      in.data = x.value;
      return pool.forward(in);
    };
    CHECK(run().data.row(2).isZero());
    NodeTensor g(3, 2, 1);
    g.data = weights;
    x.grad = pool.backward(g).data;
    CHECK(x.grad.row(3).isZero());
    ParamTensor* params[] = {&x};
    CHECK(grad_check([&] { return weighted_sum(run().data, weights); }, params).max_relative_error < 1e-6);
  }

  TEST_CASE("dense examples and gradients") {
    Dense identity("d", 2, 2, Activation::kRelu);
    identity.weight.value.setIdentity();
    Matrix x(1, 2);
    x << -1, 2;
    const Matrix y = identity.forward(x);
    CHECK(y(0, 0) == 0.0);
    CHECK(y(0, 1) == 2.0);
    Dense linear("d", 2, 2);
    linear.weight.value.setIdentity();
    CHECK(linear.forward(x) == x);
    CHECK_THROWS_AS(linear.forward(Matrix::Zero(1, 3)), DimensionMismatch);

    SeededRng rng(51);
    for (Activation act : {Activation::kNone, Activation::kRelu}) {
      Dense d("d", 5, 4, act);
      d.init(rng);
      d.bias.value = random_matrix(1, 4, rng);
      ParamTensor in("x", {3, 5});
      in.value = random_matrix(3, 5, rng);
      const Matrix weights = random_matrix(3, 4, rng);
      d.forward(in.value);
      in.grad = d.backward(weights);
      ParamTensor* params[] = {&d.weight, &d.bias, &in};
      CHECK(grad_check([&] { return weighted_sum(d.forward(in.value), weights); }, params).max_relative_error < 1e-6);
    }
  }

  TEST_CASE("mlp gradients") {
    SeededRng rng(61);
    Mlp mlp("m", 4, {6, 5}, 3);
    mlp.init(rng);
    ParamTensor in("x", {3, 4});
    in.value = random_matrix(3, 4, rng);
    const Matrix weights = random_matrix(3, 3, rng);
    mlp.forward(in.value);
    in.grad = mlp.backward(weights);
    auto params = mlp.params();
    params.push_back(&in);
    CHECK(grad_check([&] { return weighted_sum(mlp.forward(in.value), weights); }, params).max_relative_error < 1e-6);
  }

  TEST_CASE("softmax cross entropy") {
    const auto uniform = softmax_cross_entropy(Matrix::Zero(3, 4), std::vector<int>{0, 1, 3});
    CHECK(uniform.loss == doctest::Approx(std::log(4.0)));

    Matrix confident(1, 2);
    confident << 800.0, -800.0;
    const auto sharp = softmax_cross_entropy(confident, std::vector<int>{0});
    CHECK(sharp.loss < 1e-300);
    CHECK(std::isfinite(sharp.loss));

    CHECK_THROWS_AS(softmax_cross_entropy(Matrix::Zero(1, 2), std::vector<int>{2}), LabelOutOfRange);
    CHECK_THROWS_AS(softmax_cross_entropy(Matrix::Zero(1, 2), std::vector<int>{-1}), LabelOutOfRange);

    SeededRng rng(71);
    ParamTensor logits("z", {5, 3});
    logits.value = random_matrix(5, 3, rng);
    const std::vector<int> labels{0, 2, 1, 1, 0};
    logits.grad = softmax_cross_entropy(logits.value, labels).grad;
    ParamTensor* params[] = {&logits};
    const auto result =
        grad_check([&] { return softmax_cross_entropy(logits.value, labels).loss; }, params, 1e-4);
    CHECK(result.max_relative_error < 1e-8);

    const Matrix p = softmax(logits.value);
    CHECK((p.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  }
}
