#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "gcnrn/common.hpp"

namespace gcnrn {

struct Edge {
  index_t i = 0;
  index_t j = 0;
  double weight = 0.0;
};

struct Neighbor {
  index_t node = 0;
  double weight = 0.0;
};

/// Undirected weighted graph without self-loops or parallel edges.
///
/// Edges are stored once with i < j; the adjacency structure exposes both
/// directions with neighbors sorted by index.
class WeightedGraph {
 public:
  WeightedGraph() = default;
  /// Throws InvalidGraph on out-of-range ids, self-loops, repeated pairs or
  /// non-positive/non-finite weights.
  WeightedGraph(index_t num_nodes, std::vector<Edge> edges);

  index_t num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return edges_.size(); }
  std::span<const Edge> edges() const { return edges_; }
  std::span<const Neighbor> neighbors(index_t node) const;
  /// Weighted degree sum_j A_ij.
  double degree(index_t node) const { return degree_[static_cast<std::size_t>(node)]; }
  double total_weight() const;

 private:
  index_t num_nodes_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> adjacency_;
  std::vector<double> degree_;
};

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, std::int64_t>;

/// Combinatorial Laplacian L = D - A with its largest eigenvalue.
///
/// lambda_max is estimated once at construction by power iteration; it is
/// absent when the operator is identically zero (edgeless graph).
class Laplacian {
 public:
  explicit Laplacian(const WeightedGraph& graph);

  index_t dim() const { return static_cast<index_t>(matrix_.rows()); }
  const SparseMatrix& matrix() const { return matrix_; }
  bool is_zero() const { return matrix_.nonZeros() == 0; }
  /// Throws ZeroOperator for the zero operator.
  double lambda_max() const;
  /// L~ = 2 L / lambda_max - I. Throws ZeroOperator for the zero operator.
  SparseMatrix rescaled() const;
  Matrix dense() const { return Matrix(matrix_); }

 private:
  SparseMatrix matrix_;
  std::optional<double> lambda_max_;
};

Laplacian build_laplacian(const WeightedGraph& graph);

struct PowerIterationOptions {
  double tolerance = 1e-9;
  int max_iterations = 10'000;
};

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration, stopping once the Rayleigh quotient moves by at most
/// `tolerance` between iterations.
double power_iteration_lambda_max(const SparseMatrix& matrix, PowerIterationOptions options = {});

double estimate_lambda_max(const Laplacian& laplacian);

/// Dense eigendecomposition L = U diag(lambda) U^T, eigenvalues ascending.
struct SpectralBasis {
  Matrix eigenvectors;
  Vector eigenvalues;
};

SpectralBasis spectral_basis(const Laplacian& laplacian);

/// Reference filter U g(Lambda) U^T x with g(l) = sum_k coeffs[k] T_k(2 l / lambda_max - 1),
/// evaluated on the dense eigenbasis. Limited to n <= 2000.
Vector spectral_filter_oracle(const Laplacian& laplacian, const Vector& signal,
                              std::span<const double> coeffs);

/// Chebyshev polynomial of the first kind, T_k(x), by the three-term recurrence.
double chebyshev_t(int order, double x);

/// Edge list with node names assigned dense ids in first-seen order.
struct NamedGraph {
  std::vector<std::string> names;
  WeightedGraph graph;
  /// Lines whose unordered pair repeated an earlier edge (first occurrence kept).
  std::size_t duplicate_edges = 0;
  std::size_t self_loops = 0;
};

/// Parses `<node_a>\t<node_b>\t<weight>` lines; `#` lines and blank lines are skipped.
/// Throws ParseError with the line number on malformed input.
NamedGraph read_edge_list(std::istream& in);
NamedGraph read_edge_list_file(const std::string& path);
void write_edge_list(std::ostream& out, const WeightedGraph& graph,
                     std::span<const std::string> names);

}  // namespace gcnrn
