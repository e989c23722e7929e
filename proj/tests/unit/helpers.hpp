#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "gcnrn/graph.hpp"
#include "gcnrn/rng.hpp"

namespace testutil {

inline std::string fixture(const std::string& name) { return std::string(GCNRN_FIXTURE_DIR) + "/" + name; }

inline nlohmann::json load_json(const std::string& name) {
  std::ifstream in(fixture(name));
  return nlohmann::json::parse(in);
}

/// Erdos-Renyi graph with uniform(0.1, 2) weights, plus a path through all
/// nodes so it is connected.
inline gcnrn::WeightedGraph random_graph(gcnrn::index_t n, double p, std::uint64_t seed) {
  gcnrn::SeededRng rng(seed);
  std::vector<gcnrn::Edge> edges;
  for (gcnrn::index_t i = 0; i < n; ++i) {
    for (gcnrn::index_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || rng.bernoulli(p)) edges.push_back({i, j, rng.uniform(0.1, 2.0)});
    }
  }
  return gcnrn::WeightedGraph(n, std::move(edges));
}

inline gcnrn::WeightedGraph path_graph(gcnrn::index_t n) {
  std::vector<gcnrn::Edge> edges;
  for (gcnrn::index_t i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0});
  return gcnrn::WeightedGraph(n, std::move(edges));
}

inline gcnrn::Matrix random_matrix(gcnrn::index_t rows, gcnrn::index_t cols, gcnrn::SeededRng& rng) {
  gcnrn::Matrix m(rows, cols);
  for (gcnrn::index_t c = 0; c < cols; ++c) {
    for (gcnrn::index_t r = 0; r < rows; ++r) m(r, c) = rng.normal();
  }
  return m;
}

}  // namespace testutil
