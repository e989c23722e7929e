#include <doctest.h>

#include <sstream>

#include <Eigen/Eigenvalues>

#include "gcnrn/graph.hpp"
#include "gcnrn/layers.hpp"
#include "helpers.hpp"

using namespace gcnrn;
using testutil::path_graph;
using testutil::random_graph;

TEST_SUITE("graph_core") {
  TEST_CASE("weighted graph rejects invalid input") {
    CHECK_THROWS_AS(WeightedGraph(2, {{0, 2, 1.0}}), InvalidGraph);
    CHECK_THROWS_AS(WeightedGraph(2, {{1, 1, 1.0}}), InvalidGraph);
    CHECK_THROWS_AS(WeightedGraph(2, {{0, 1, 1.0}, {1, 0, 2.0}}), InvalidGraph);
    CHECK_THROWS_AS(WeightedGraph(2, {{0, 1, 0.0}}), InvalidGraph);
    CHECK_THROWS_AS(WeightedGraph(2, {{0, 1, std::nan("")}}), InvalidGraph);
  }

  TEST_CASE("adjacency is symmetric and sorted") {
    const WeightedGraph g(4, {{2, 0, 1.5}, {0, 1, 2.0}, {3, 2, 0.5}});
    CHECK(g.num_edges() == 3);
    const auto n0 = g.neighbors(0);
    REQUIRE(n0.size() == 2);
    CHECK(n0[0].node == 1);
    CHECK(n0[1].node == 2);
    CHECK(g.degree(2) == doctest::Approx(2.0));
    CHECK(g.total_weight() == doctest::Approx(4.0));
  }

  TEST_CASE("laplacian of a single edge") {
    const Laplacian lap(path_graph(2));
    Matrix expected(2, 2);
    expected << 1, -1, -1, 1;
    CHECK(lap.dense().isApprox(expected));
    CHECK(lap.lambda_max() == doctest::Approx(2.0).epsilon(1e-9));
  }

  TEST_CASE("edgeless laplacian is the zero operator") {
    const Laplacian lap(WeightedGraph(3, {}));
    CHECK(lap.is_zero());
    CHECK(lap.dense().isZero());
    CHECK_THROWS_AS(lap.lambda_max(), ZeroOperator);
    CHECK_THROWS_AS(lap.rescaled(), ZeroOperator);
  }

  TEST_CASE("weighted triangle degrees") {
    const Laplacian lap(WeightedGraph(3, {{0, 1, 1.0}, {1, 2, 2.0}, {0, 2, 3.0}}));
    const Matrix l = lap.dense();
    CHECK(l(0, 0) == 4.0);
    CHECK(l(1, 1) == 3.0);
    CHECK(l(2, 2) == 5.0);
    CHECK(l(0, 1) == -1.0);
    CHECK(l(1, 2) == -2.0);
    CHECK(l(0, 2) == -3.0);
    CHECK(l(2, 0) == -3.0);
  }

  TEST_CASE("complete graph K3 has lambda_max 3") {
    const Laplacian lap(WeightedGraph(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}}));
    CHECK(lap.lambda_max() == doctest::Approx(3.0).epsilon(1e-6));
  }

  TEST_CASE("power iteration matches dense eigensolve") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto g = random_graph(10 + static_cast<index_t>(seed) * 2, 0.3, seed);
      const Laplacian lap(g);
      const Matrix dense = lap.dense();
      CHECK((dense.rowwise().sum()).cwiseAbs().maxCoeff() < 1e-9);
      CHECK(dense.isApprox(dense.transpose()));
      Eigen::SelfAdjointEigenSolver<Matrix> solver(dense);
      CHECK(solver.eigenvalues().minCoeff() >= -1e-9);
      const double exact = solver.eigenvalues().maxCoeff();
      CHECK(std::abs(lap.lambda_max() - exact) / exact <= 1e-6);
    }
  }

  TEST_CASE("spectral basis is orthonormal and diagonalizes L") {
    const Laplacian lap(random_graph(9, 0.4, 3));
    const auto basis = spectral_basis(lap);
    const Matrix& u = basis.eigenvectors;
    CHECK((u.transpose() * u - Matrix::Identity(9, 9)).cwiseAbs().maxCoeff() < 1e-8);
    const Matrix residual = lap.dense() * u - u * basis.eigenvalues.asDiagonal();
    CHECK(residual.cwiseAbs().maxCoeff() < 1e-8);
    for (index_t i = 1; i < 9; ++i) CHECK(basis.eigenvalues[i] >= basis.eigenvalues[i - 1]);
  }

  TEST_CASE("chebyshev polynomials") {
    CHECK(chebyshev_t(0, 0.3) == 1.0);
    CHECK(chebyshev_t(1, 0.3) == 0.3);
    for (double x : {-1.0, -0.4, 0.0, 0.7, 1.0}) {
      for (int k = 0; k < 8; ++k) CHECK(chebyshev_t(k, x) == doctest::Approx(std::cos(k * std::acos(x))));
    }
  }

  TEST_CASE("spectral filter oracle examples") {
    const Laplacian p2(path_graph(2));
    Vector x(2);
    x << 1, 0;
    const double t1[] = {0.0, 1.0};
    const Vector y = spectral_filter_oracle(p2, x, t1);
    CHECK(y[0] == doctest::Approx(0.0));
    CHECK(y[1] == doctest::Approx(-1.0));

    const Laplacian lap(random_graph(7, 0.5, 11));
    SeededRng rng(4);
    const Vector s = testutil::random_matrix(7, 1, rng);
    const double identity[] = {1.0, 0.0, 0.0};
    CHECK((spectral_filter_oracle(lap, s, identity) - s).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(spectral_filter_oracle(lap, Vector::Zero(3), identity), DimensionMismatch);
  }

  TEST_CASE("chebyshev recurrence equals spectral filter on random graphs") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto g = random_graph(8, 0.4, seed);
      const Laplacian lap(g);
      ChebConv conv("c", lap, 4, 1, 1, false);
      SeededRng rng(seed + 100);
      std::vector<double> coeffs(4);
      for (int k = 0; k < 4; ++k) coeffs[static_cast<std::size_t>(k)] = conv.theta.value(k, 0) = rng.normal();
      const Vector x = testutil::random_matrix(8, 1, rng);
      NodeTensor in(8, 1, 1);
      in.data = x;
      const Vector y = conv.forward(in).data;
      CHECK((y - spectral_filter_oracle(lap, x, coeffs)).cwiseAbs().maxCoeff() < 1e-10);
    }
  }

  TEST_CASE("edge list parsing") {
    std::istringstream in(
        "# comment\n"
        "TP53\tMDM2\t0.9\n"
        "\n"
        "MDM2\tCDKN1A\t0.5\r\n"
        "MDM2\tTP53\t0.4\n"
        "BRCA1\tBRCA1\t1\n");
    const auto named = read_edge_list(in);
    REQUIRE(named.names.size() == 4);
    CHECK(named.names[0] == "TP53");
    CHECK(named.names[3] == "BRCA1");
    CHECK(named.graph.num_edges() == 2);
    CHECK(named.duplicate_edges == 1);
    CHECK(named.self_loops == 1);
    CHECK(named.graph.edges()[0].weight == 0.9);

    std::ostringstream out;
    write_edge_list(out, named.graph, named.names);
    std::istringstream back(out.str());
    const auto again = read_edge_list(back);
    CHECK(again.graph.num_edges() == 2);
    CHECK(again.graph.edges()[1].weight == 0.5);
  }

  TEST_CASE("edge list errors carry the line number") {
    std::istringstream bad_fields("a\tb\t1\na\tc\n");
    try {
      read_edge_list(bad_fields);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    std::istringstream bad_weight("a\tb\tx1\n");
    CHECK_THROWS_AS(read_edge_list(bad_weight), ParseError);
    std::istringstream negative("a\tb\t-1\n");
    CHECK_THROWS_AS(read_edge_list(negative), ParseError);
  }
}
