#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gcnrn/analysis.hpp"
#include "gcnrn/data.hpp"
#include "gcnrn/model.hpp"

namespace gcnrn {

struct EpochRecord {
  int epoch = 0;              ///< 1-based
  double train_loss = 0.0;    ///< sample-weighted mean over the epoch's minibatches
  double val_accuracy = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  double peak_accuracy = 0.0;   ///< max of the per-epoch validation series
  double final_accuracy = 0.0;  ///< validation accuracy after the last epoch
  ConfusionMatrix final_confusion;
  ClassificationMetrics final_metrics;
  double wall_seconds = 0.0;    ///< informational; excluded from deterministic outputs
};

/// Minibatch Adam on softmax cross-entropy of the fused logits. Shuffling is
/// seeded from the model config; a trailing batch of one sample is merged
/// into the previous batch (batch norm needs two). Validation runs every
/// epoch in infer mode; with `validation` null the training set is scored.
/// Throws LabelOutOfRange / DimensionMismatch on inconsistent data.
TrainReport train(HybridModel& model, const Dataset& train_set, const Dataset* validation = nullptr);

/// Batched infer-mode predictions.
std::vector<int> predict_batched(HybridModel& model, const Matrix& x, index_t chunk = 512);

struct Split {
  std::vector<index_t> train;
  std::vector<index_t> validation;
};

/// Per class, round(fraction * count) samples (at least one, at most
/// count - 1) go to validation. Throws ClassTooSmall if a present class
/// has fewer than 2 samples. Index lists are sorted.
Split stratified_split(std::span<const int> labels, int classes, SeededRng& rng, double fraction = 0.1);

/// Split s of a Monte-Carlo run with master seed `seed`; identical for every
/// method so comparisons are paired.
Split cv_split(std::span<const int> labels, int classes, std::uint64_t seed, int split_index,
               double fraction = 0.1);

struct SplitResult {
  int split = 0;
  double peak_accuracy = 0.0;
  double final_accuracy = 0.0;
  double f1_weighted = 0.0;
  double f1_macro = 0.0;
  std::vector<EpochRecord> epochs;  ///< empty for non-iterative methods
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  ///< sample standard deviation; 0 for a single split
};

struct CvResult {
  std::vector<SplitResult> splits;
  MeanStd peak_accuracy;
  MeanStd final_accuracy;
  MeanStd f1_weighted;
  MeanStd f1_macro;
};

MeanStd mean_std(std::span<const double> values);
CvResult aggregate(std::vector<SplitResult> splits);

/// Runs `run_split(train, validation, split_index)` on each split.
/// Splits are independent; with workers > 1 they run on a thread pool and
/// results are stored by index, so output does not depend on scheduling.
using SplitRunner = std::function<SplitResult(const Dataset&, const Dataset&, int)>;
CvResult monte_carlo_cv(const Dataset& data, int splits, std::uint64_t seed, const SplitRunner& run_split,
                        int workers = 1);

/// Hybrid (or ablated) model CV; split s builds a fresh model whose seed is
/// derived from config.seed and s. The graph must match the dataset features.
CvResult model_cv(const Dataset& data, const WeightedGraph& graph, const ModelConfig& config, int splits,
                  int workers = 1);

enum class BaselineKind { kGaussianNb, kKnn };
BaselineKind baseline_kind_from_string(const std::string& name);
std::string to_string(BaselineKind kind);

/// GNB / kNN CV over the same splits model_cv uses for the same seed.
CvResult baseline_cv(const Dataset& data, BaselineKind kind, int splits, std::uint64_t seed, int knn_k = 5,
                     int workers = 1);

struct SweepPoint {
  index_t n = 0;
  double distance = 0.0;
};

struct SweepRow {
  SweepPoint point;
  std::string method;  ///< "hybrid", "gcnn", "gcnn_rn", "gnb", "knn"
  CvResult cv;
};

struct SweepOptions {
  std::vector<index_t> n_values{50, 100, 200, 400};
  std::vector<double> distances{0.0, 0.5, 1.0, 2.0};
  std::vector<std::string> methods{"hybrid", "gcnn", "gnb"};
  int splits = 20;
  int knn_k = 5;
  int workers = 1;
};

/// Grid over (n, d): one synthetic dataset per point (`base` with n and
/// centroid_distance replaced), then CV of every requested method on the
/// same splits. `progress` is called after each finished row.
std::vector<SweepRow> run_sweep(const SyntheticSpec& base, const ModelConfig& config, const SweepOptions& options,
                                const std::function<void(const SweepRow&)>& progress = {});

}  // namespace gcnrn
