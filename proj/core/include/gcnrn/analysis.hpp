#pragma once

#include <span>
#include <vector>

#include "gcnrn/common.hpp"

namespace gcnrn {

/// Counts indexed (true class, predicted class).
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int classes = 0);
  ConfusionMatrix(std::span<const int> truth, std::span<const int> predicted, int classes);

  int classes() const { return classes_; }
  void add(int truth, int predicted);
  std::int64_t count(int truth, int predicted) const;
  std::int64_t total() const;
  const std::vector<std::int64_t>& counts() const { return counts_; }

 private:
  int classes_;
  std::vector<std::int64_t> counts_;
};

struct ClassificationMetrics {
  double accuracy = 0.0;
  std::vector<double> f1;
  std::vector<std::int64_t> support;
  double f1_weighted = 0.0;
  double f1_macro = 0.0;
};

/// Accuracy plus per-class F1 with support-weighted and macro averages.
/// A class with no true and no predicted samples has F1 = 0 and still counts
/// toward the macro average. Throws DimensionMismatch on an empty matrix.
ClassificationMetrics classification_metrics(const ConfusionMatrix& cm);

/// Diagonal-covariance Gaussian naive Bayes with training-frequency priors.
class GaussianNaiveBayes {
 public:
  explicit GaussianNaiveBayes(double variance_floor = 1e-9) : variance_floor_(variance_floor) {}
  void fit(const Matrix& x, std::span<const int> labels, int classes);
  std::vector<int> predict(const Matrix& x) const;

 private:
  double variance_floor_;
  Matrix means_;
  Matrix variances_;
  Vector log_priors_;
};

/// Euclidean k-nearest-neighbour majority vote; ties go to the class of the
/// nearest neighbour among the tied classes. Neighbour ties in distance are
/// broken by lower training index.
std::vector<int> knn_predict(const Matrix& train, std::span<const int> labels, const Matrix& test, int k);

struct WardResult {
  std::vector<int> assignment;   ///< cluster id per point, numbered by first member
  std::vector<double> merge_costs;  ///< Ward distance of each merge, in order
};

/// Agglomerative clustering with Ward linkage (Lance-Williams recurrence on
/// squared Euclidean distances), stopped at `clusters` groups. Merge costs
/// are reported as sqrt of the Lance-Williams distance (scipy convention).
WardResult ward_cluster(const Matrix& points, int clusters);

struct SurvivalRecord {
  double time = 0.0;
  bool event = false;
};

struct KmCurve {
  std::vector<double> times;        ///< distinct event times, ascending
  std::vector<double> survival;     ///< S(t) just after each event time
  std::vector<std::int64_t> at_risk;
  std::vector<std::int64_t> events;

  /// Right-continuous step value S(t); 1 before the first event.
  double at(double t) const;
};

/// Kaplan-Meier product-limit estimate. Censored subjects leave the risk set
/// after their time; censoring tied with an event counts as at risk at it.
KmCurve km_estimate(std::span<const SurvivalRecord> records);

struct LogRankResult {
  double chi_square = 0.0;
  double p_value = 1.0;
  double observed_a = 0.0;
  double expected_a = 0.0;
  double variance = 0.0;
};

LogRankResult logrank_test(std::span<const SurvivalRecord> group_a, std::span<const SurvivalRecord> group_b);

/// Regularized upper incomplete gamma Q(a, x): series for x < a + 1,
/// Lentz continued fraction otherwise, both to relative accuracy 1e-15.
double regularized_gamma_q(double a, double x);

/// P(X > x) for X ~ chi-square with `dof` degrees of freedom.
double chi_square_sf(double x, double dof);

}  // namespace gcnrn
