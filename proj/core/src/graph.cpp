#include "gcnrn/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>
#include <utility>

#include <Eigen/Eigenvalues>

#include "gcnrn/rng.hpp"

namespace gcnrn {

WeightedGraph::WeightedGraph(index_t num_nodes, std::vector<Edge> edges)
    : num_nodes_(num_nodes), edges_(std::move(edges)) {
  if (num_nodes_ < 0) throw InvalidGraph("negative vertex count");
  const auto n = static_cast<std::size_t>(num_nodes_);
  std::set<std::pair<index_t, index_t>> seen;
  for (auto& e : edges_) {
    if (e.i < 0 || e.j < 0 || e.i >= num_nodes_ || e.j >= num_nodes_) {
      throw InvalidGraph("edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                         ") out of range for " + std::to_string(num_nodes_) + " vertices");
    }
    if (e.i == e.j) throw InvalidGraph("self-loop at vertex " + std::to_string(e.i));
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw InvalidGraph("edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                         ") has non-positive or non-finite weight");
    }
    if (e.i > e.j) std::swap(e.i, e.j);
    if (!seen.emplace(e.i, e.j).second) {
      throw InvalidGraph("repeated edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) + ")");
    }
  }

  std::vector<std::size_t> count(n, 0);
  for (const auto& e : edges_) {
    ++count[static_cast<std::size_t>(e.i)];
    ++count[static_cast<std::size_t>(e.j)];
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) offsets_[v + 1] = offsets_[v] + count[v];
  adjacency_.resize(offsets_[n]);
  degree_.assign(n, 0.0);
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const auto& e : edges_) {
    const auto a = static_cast<std::size_t>(e.i);
    const auto b = static_cast<std::size_t>(e.j);
    adjacency_[cursor[a]++] = {e.j, e.weight};
    adjacency_[cursor[b]++] = {e.i, e.weight};
    degree_[a] += e.weight;
    degree_[b] += e.weight;
  }
  for (std::size_t v = 0; v < n; ++v) {
    std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[v]),
              adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[v + 1]),
              [](const Neighbor& x, const Neighbor& y) { return x.node < y.node; });
  }
}

std::span<const Neighbor> WeightedGraph::neighbors(index_t node) const {
  const auto v = static_cast<std::size_t>(node);
  return {adjacency_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
}

double WeightedGraph::total_weight() const {
  // Extended precision keeps the total independent of edge order to ~1 ulp.
  long double total = 0.0L;
  for (const auto& e : edges_) total += static_cast<long double>(e.weight);
  return static_cast<double>(total);
}

Laplacian::Laplacian(const WeightedGraph& graph) {
  const index_t n = graph.num_nodes();
  std::vector<Eigen::Triplet<double, std::int64_t>> triplets;
  triplets.reserve(graph.num_edges() * 2 + static_cast<std::size_t>(n));
  for (index_t v = 0; v < n; ++v) {
    if (graph.degree(v) != 0.0) triplets.emplace_back(v, v, graph.degree(v));
  }
  for (const auto& e : graph.edges()) {
    triplets.emplace_back(e.i, e.j, -e.weight);
    triplets.emplace_back(e.j, e.i, -e.weight);
  }
  matrix_.resize(n, n);
  matrix_.setFromTriplets(triplets.begin(), triplets.end());
  matrix_.makeCompressed();
  if (!is_zero()) lambda_max_ = power_iteration_lambda_max(matrix_);
}

double Laplacian::lambda_max() const {
  if (!lambda_max_) throw ZeroOperator("Laplacian of an edgeless graph has no spectral scale");
  return *lambda_max_;
}

SparseMatrix Laplacian::rescaled() const {
  const double scale = 2.0 / lambda_max();
  SparseMatrix identity(dim(), dim());
  identity.setIdentity();
  SparseMatrix out = scale * matrix_ - identity;
  out.makeCompressed();
  return out;
}

Laplacian build_laplacian(const WeightedGraph& graph) { return Laplacian(graph); }

double power_iteration_lambda_max(const SparseMatrix& matrix, PowerIterationOptions options) {
  const index_t n = matrix.rows();
  if (n == 0 || matrix.nonZeros() == 0) throw ZeroOperator("power iteration on the zero operator");
  // Fixed pseudo-random start so the top eigenvector is not missed by symmetry.
  SeededRng rng(0x5eedULL);
  Vector v(n);
  for (index_t i = 0; i < n; ++i) v[i] = 0.5 + rng.uniform();
  v.normalize();
  Vector w = matrix * v;
  double quotient = v.dot(w);
  for (int it = 0; it < options.max_iterations; ++it) {
    const double norm = w.norm();
    if (norm == 0.0) throw ZeroOperator("power iteration collapsed to the null space");
    v = w / norm;
    w.noalias() = matrix * v;
    const double next = v.dot(w);
    const bool converged = std::abs(next - quotient) <= options.tolerance;
    quotient = next;
    if (converged) break;
  }
  return quotient;
}

double estimate_lambda_max(const Laplacian& laplacian) { return laplacian.lambda_max(); }

SpectralBasis spectral_basis(const Laplacian& laplacian) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(laplacian.dense());
  return {solver.eigenvectors(), solver.eigenvalues()};
}

double chebyshev_t(int order, double x) {
  if (order == 0) return 1.0;
  double prev = 1.0;
  double cur = x;
  for (int k = 2; k <= order; ++k) {
    const double next = 2.0 * x * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

Vector spectral_filter_oracle(const Laplacian& laplacian, const Vector& signal,
                              std::span<const double> coeffs) {
  if (signal.size() != laplacian.dim()) {
    throw DimensionMismatch("signal length " + std::to_string(signal.size()) +
                            " vs Laplacian dimension " + std::to_string(laplacian.dim()));
  }
  if (laplacian.dim() > 2000) throw DimensionMismatch("dense oracle limited to n <= 2000");
  const double lmax = laplacian.lambda_max();
  const auto basis = spectral_basis(laplacian);
  Vector response(basis.eigenvalues.size());
  for (index_t l = 0; l < response.size(); ++l) {
    const double scaled = 2.0 * basis.eigenvalues[l] / lmax - 1.0;
    double value = 0.0;
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
      value += coeffs[k] * chebyshev_t(static_cast<int>(k), scaled);
    }
    response[l] = value;
  }
  const Vector spectrum = basis.eigenvectors.transpose() * signal;
  return basis.eigenvectors * response.cwiseProduct(spectrum);
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    fields.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

}  // namespace

NamedGraph read_edge_list(std::istream& in) {
  NamedGraph out;
  std::unordered_map<std::string, index_t> ids;
  std::set<std::pair<index_t, index_t>> seen;
  std::vector<Edge> edges;
  auto id_of = [&](std::string_view name) {
    auto [it, inserted] = ids.emplace(std::string(name), static_cast<index_t>(out.names.size()));
    if (inserted) out.names.emplace_back(name);
    return it->second;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw ParseError("edge list line " + std::to_string(line_no) + ": expected 3 tab-separated fields, got " +
                       std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) {
      throw ParseError("edge list line " + std::to_string(line_no) + ": empty node name");
    }
    double weight = 0.0;
    const auto* first = fields[2].data();
    const auto* last = first + fields[2].size();
    const auto [ptr, ec] = std::from_chars(first, last, weight);
    if (ec != std::errc() || ptr != last) {
      throw ParseError("edge list line " + std::to_string(line_no) + ", column 3: invalid weight '" +
                       std::string(fields[2]) + "'");
    }
    if (!(weight > 0.0) || !std::isfinite(weight)) {
      throw ParseError("edge list line " + std::to_string(line_no) + ", column 3: weight must be positive and finite");
    }
    const index_t a = id_of(fields[0]);
    const index_t b = id_of(fields[1]);
    if (a == b) {
      ++out.self_loops;
      continue;
    }
    if (!seen.emplace(std::min(a, b), std::max(a, b)).second) {
      ++out.duplicate_edges;
      continue;
    }
    edges.push_back({a, b, weight});
  }
  out.graph = WeightedGraph(static_cast<index_t>(out.names.size()), std::move(edges));
  return out;
}

NamedGraph read_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list '" + path + "'");
  return read_edge_list(in);
}

void write_edge_list(std::ostream& out, const WeightedGraph& graph, std::span<const std::string> names) {
  if (static_cast<index_t>(names.size()) != graph.num_nodes()) {
    throw DimensionMismatch("name count does not match vertex count");
  }
  char buffer[64];
  for (const auto& e : graph.edges()) {
    const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), e.weight);
    out << names[static_cast<std::size_t>(e.i)] << '\t' << names[static_cast<std::size_t>(e.j)] << '\t'
        << std::string_view(buffer, static_cast<std::size_t>(end - buffer)) << '\n';
  }
}

}  // namespace gcnrn
