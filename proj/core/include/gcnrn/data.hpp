#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gcnrn/analysis.hpp"
#include "gcnrn/common.hpp"
#include "gcnrn/graph.hpp"

namespace gcnrn {

class SeededRng;

/// Labelled samples over a fixed set of named features (graph vertices).
struct Dataset {
  Matrix x;                                  ///< samples x features
  std::vector<int> y;                        ///< class id per sample
  std::vector<std::string> sample_ids;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  std::optional<std::vector<SurvivalRecord>> survival;

  index_t num_samples() const { return x.rows(); }
  index_t num_features() const { return x.cols(); }
  int num_classes() const { return static_cast<int>(class_names.size()); }
  /// Throws DimensionMismatch / InvalidGraph-free checks on row, label and name counts.
  void validate() const;
  Dataset subset(const std::vector<index_t>& rows) const;
};

struct SyntheticSpec {
  index_t n = 100;
  index_t samples_per_class = 1000;
  double centroid_distance = 0.0;
  double avg_degree = 10.0;
  double entry_mean = 0.1;
  double entry_sd = 0.1;
  /// Probability that a class covariance drops an off-diagonal entry instead
  /// of drawing its sign (0 reproduces the pure sign-flip construction).
  double delete_probability = 0.0;
  /// Assign class ids in reverse (the first generated block gets label 1).
  bool swap_classes = false;
  std::uint64_t seed = 1;
};

struct PsdRepairReport {
  index_t clipped = 0;     ///< eigenvalues raised to the floor
  double max_clip = 0.0;   ///< largest amount an eigenvalue was raised by
  double min_eigenvalue_before = 0.0;
};

inline constexpr double kCovarianceFloor = 1e-6;

/// Symmetric eigendecomposition with eigenvalues below `floor` raised to it.
Matrix repair_psd(const Matrix& sym, PsdRepairReport* report = nullptr, double floor = kCovarianceFloor);

struct CovariancePair {
  Matrix template_cov;
  Matrix class_cov[2];
  PsdRepairReport repair[2];
};

/// Template covariance: unit diagonal; each unordered off-diagonal pair is
/// kept with probability avg_degree / (n - 1) and given a value drawn from
/// N(entry_mean, entry_sd), mirrored across the diagonal.
/// Throws DegreeInfeasible unless 0 <= avg_degree < n.
Matrix gen_template_covariance(const SyntheticSpec& spec, SeededRng& rng);

/// Per class, every nonzero off-diagonal pair gets one shared draw from
/// {-1, +1} (or is deleted with spec.delete_probability), followed by PSD repair.
CovariancePair derive_class_covariances(const Matrix& template_cov, SeededRng& rng, double delete_probability = 0.0);

/// Edge (i, j) of weight |sigma_ij| for each nonzero off-diagonal of the upper
/// triangle. Throws EmptyGraph if there is none.
WeightedGraph covariance_to_graph(const Matrix& cov);

/// Symmetric square root V diag(sqrt(lambda)) V^T of a PSD matrix.
Matrix symmetric_sqrt(const Matrix& cov);

struct SyntheticData {
  Dataset dataset;
  WeightedGraph graph;
  CovariancePair covariances;
  Vector mean[2];
};

/// Two-class multivariate normal data: class 0 centred at 0, class 1 at
/// d * u for a random unit vector u, with the sign-flipped covariances above.
/// The graph is derived from the template covariance.
SyntheticData gen_synthetic(const SyntheticSpec& spec);

struct IngestReport {
  std::vector<std::string> isolated_genes;      ///< expression genes absent from the edge list
  std::vector<std::string> dropped_edge_genes;  ///< edge-list genes absent from the expression matrix
  std::vector<std::string> dropped_samples;     ///< labelled samples without expression
  std::size_t dropped_edges = 0;
  std::vector<std::string> warnings;
};

struct LoadedData {
  Dataset dataset;
  WeightedGraph graph;
  IngestReport report;
};

/// Expression CSV (`sample_id,<gene>...`), labels CSV (`sample_id,label`),
/// edge TSV and optional survival CSV (`sample_id,time_days,event`).
/// The graph's vertices are the expression columns in file order.
LoadedData load_real_dataset(const std::string& expression_csv, const std::string& labels_csv,
                             const std::string& edges_tsv, const std::string& survival_csv = "");

/// Writes the same formats load_real_dataset reads.
void write_expression_csv(const std::string& path, const Dataset& data);
void write_labels_csv(const std::string& path, const Dataset& data);
void write_survival_csv(const std::string& path, const Dataset& data);

/// Comma-separated fields with double-quote escaping.
std::vector<std::string> split_csv_line(const std::string& line);

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

}  // namespace gcnrn
