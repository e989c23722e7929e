#include "gcnrn/training.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "gcnrn/rng.hpp"

namespace gcnrn {

namespace {

Matrix gather_rows(const Matrix& x, std::span<const index_t> rows) {
  Matrix out(static_cast<index_t>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<index_t>(r)) = x.row(rows[r]);
  return out;
}

void check_labels(const Dataset& d, int classes) {
  if (static_cast<index_t>(d.y.size()) != d.x.rows()) {
    throw DimensionMismatch("label count " + std::to_string(d.y.size()) + " != sample count " +
                            std::to_string(d.x.rows()));
  }
  for (int y : d.y) {
    if (y < 0 || y >= classes) {
      throw LabelOutOfRange("label " + std::to_string(y) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
}

}  // namespace

std::vector<int> predict_batched(HybridModel& model, const Matrix& x, index_t chunk) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (index_t start = 0; start < x.rows(); start += chunk) {
    const index_t len = std::min(chunk, x.rows() - start);
    const auto part = model.predict(x.middleRows(start, len));
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

TrainReport train(HybridModel& model, const Dataset& train_set, const Dataset* validation) {
  const auto started = std::chrono::steady_clock::now();
  const ModelConfig& config = model.config();
  const int classes = model.num_classes();
  check_labels(train_set, classes);
  const Dataset& val = validation ? *validation : train_set;
  check_labels(val, classes);
  if (train_set.x.cols() != model.input_nodes() || val.x.cols() != model.input_nodes()) {
    throw DimensionMismatch("dataset has " + std::to_string(train_set.x.cols()) + " features, model graph has " +
                            std::to_string(model.input_nodes()) + " vertices");
  }
  if (train_set.num_samples() < 2) throw BatchTooSmall("training needs at least 2 samples");

  AdamOptimizer optimizer(model.params(), config.adam);
  SeededRng shuffle_rng = SeededRng(config.seed).derive(13);
  std::vector<index_t> order(static_cast<std::size_t>(train_set.num_samples()));
  std::iota(order.begin(), order.end(), index_t{0});

  const auto n = static_cast<index_t>(order.size());
  const index_t batch = std::min(config.batch_size, n);
  TrainReport report;
  report.epochs.reserve(static_cast<std::size_t>(config.epochs));
  // adam_step clears each gradient after applying it.
  optimizer.zero_grad();
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (index_t start = 0; start < n;) {
      index_t len = std::min(batch, n - start);
      if (n - start - len == 1) ++len;
      const std::span<const index_t> rows(order.data() + start, static_cast<std::size_t>(len));
      const Matrix xb = gather_rows(train_set.x, rows);
      std::vector<int> yb(static_cast<std::size_t>(len));
      for (index_t r = 0; r < len; ++r) yb[static_cast<std::size_t>(r)] = train_set.y[static_cast<std::size_t>(rows[r])];

      const auto out = model.forward(xb, Mode::kTrain);
      const auto [loss, grad] = softmax_cross_entropy(out.logits, yb);
      model.backward(grad);
      optimizer.step();
      loss_sum += loss * static_cast<double>(len);
      start += len;
    }

    const auto predicted = predict_batched(model, val.x);
    const ConfusionMatrix cm(val.y, predicted, classes);
    const auto metrics = classification_metrics(cm);
    report.epochs.push_back({epoch, loss_sum / static_cast<double>(n), metrics.accuracy});
    report.peak_accuracy = std::max(report.peak_accuracy, metrics.accuracy);
    report.final_accuracy = metrics.accuracy;
    report.final_confusion = cm;
    report.final_metrics = metrics;
  }
  if (config.epochs == 0) {
    const auto predicted = predict_batched(model, val.x);
    report.final_confusion = ConfusionMatrix(val.y, predicted, classes);
    report.final_metrics = classification_metrics(report.final_confusion);
    report.final_accuracy = report.peak_accuracy = report.final_metrics.accuracy;
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

Split stratified_split(std::span<const int> labels, int classes, SeededRng& rng, double fraction) {
  std::vector<std::vector<index_t>> by_class(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= classes) throw LabelOutOfRange("label " + std::to_string(y) + " outside class range");
    by_class[static_cast<std::size_t>(y)].push_back(static_cast<index_t>(i));
  }
  Split split;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    const auto count = static_cast<index_t>(members.size());
    if (count < 2) {
      throw ClassTooSmall("class " + std::to_string(c) + " has " + std::to_string(count) +
                          " sample(s); stratified splitting needs at least 2");
    }
    auto held = static_cast<index_t>(std::llround(fraction * static_cast<double>(count)));
    held = std::clamp<index_t>(held, 1, count - 1);
    rng.shuffle(members);
    split.validation.insert(split.validation.end(), members.begin(), members.begin() + held);
    split.train.insert(split.train.end(), members.begin() + held, members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  return split;
}

Split cv_split(std::span<const int> labels, int classes, std::uint64_t seed, int split_index, double fraction) {
  SeededRng rng = SeededRng(seed).derive(0x51170000ULL + static_cast<std::uint64_t>(split_index));
  return stratified_split(labels, classes, rng, fraction);
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

CvResult aggregate(std::vector<SplitResult> splits) {
  CvResult out;
  std::vector<double> peak, fin, fw, fm;
  for (const auto& s : splits) {
    peak.push_back(s.peak_accuracy);
    fin.push_back(s.final_accuracy);
    fw.push_back(s.f1_weighted);
    fm.push_back(s.f1_macro);
  }
  out.peak_accuracy = mean_std(peak);
  out.final_accuracy = mean_std(fin);
  out.f1_weighted = mean_std(fw);
  out.f1_macro = mean_std(fm);
  out.splits = std::move(splits);
  return out;
}

CvResult monte_carlo_cv(const Dataset& data, int splits, std::uint64_t seed, const SplitRunner& run_split,
                        int workers) {
  if (splits < 1) throw ConfigError("splits must be >= 1");
  data.validate();
  const int classes = data.num_classes();
  // Splits are drawn up front so ClassTooSmall surfaces before any training.
  std::vector<Split> plan;
  plan.reserve(static_cast<std::size_t>(splits));
  for (int s = 0; s < splits; ++s) plan.push_back(cv_split(data.y, classes, seed, s));

  std::vector<SplitResult> results(static_cast<std::size_t>(splits));
  auto run_one = [&](int s) {
    const auto& sp = plan[static_cast<std::size_t>(s)];
    SplitResult r = run_split(data.subset(sp.train), data.subset(sp.validation), s);
    r.split = s;
    results[static_cast<std::size_t>(s)] = std::move(r);
  };

  workers = std::clamp(workers, 1, splits);
  if (workers == 1) {
    for (int s = 0; s < splits; ++s) run_one(s);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int s = next++; s < splits; s = next++) {
          try {
            run_one(s);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  return aggregate(std::move(results));
}

CvResult model_cv(const Dataset& data, const WeightedGraph& graph, const ModelConfig& config, int splits,
                  int workers) {
  const int classes = data.num_classes();
  auto runner = [&](const Dataset& tr, const Dataset& va, int s) {
    ModelConfig c = config;
    c.seed = SeededRng(config.seed).derive(0x30de1000ULL + static_cast<std::uint64_t>(s)).next_u64();
    HybridModel model(graph, classes, c);
    const TrainReport report = train(model, tr, &va);
    SplitResult r;
    r.peak_accuracy = report.peak_accuracy;
    r.final_accuracy = report.final_accuracy;
    r.f1_weighted = report.final_metrics.f1_weighted;
    r.f1_macro = report.final_metrics.f1_macro;
    r.epochs = report.epochs;
    return r;
  };
  return monte_carlo_cv(data, splits, config.seed, runner, workers);
}

BaselineKind baseline_kind_from_string(const std::string& name) {
  if (name == "gnb") return BaselineKind::kGaussianNb;
  if (name == "knn") return BaselineKind::kKnn;
  throw ConfigError("unknown baseline '" + name + "' (expected gnb or knn)");
}

std::string to_string(BaselineKind kind) { return kind == BaselineKind::kGaussianNb ? "gnb" : "knn"; }

CvResult baseline_cv(const Dataset& data, BaselineKind kind, int splits, std::uint64_t seed, int knn_k,
                     int workers) {
  const int classes = data.num_classes();
  auto runner = [&](const Dataset& tr, const Dataset& va, int) {
    std::vector<int> predicted;
    if (kind == BaselineKind::kGaussianNb) {
      GaussianNaiveBayes nb;
      nb.fit(tr.x, tr.y, classes);
      predicted = nb.predict(va.x);
    } else {
      predicted = knn_predict(tr.x, tr.y, va.x, knn_k);
    }
    const auto metrics = classification_metrics(ConfusionMatrix(va.y, predicted, classes));
    SplitResult r;
    r.peak_accuracy = r.final_accuracy = metrics.accuracy;
    r.f1_weighted = metrics.f1_weighted;
    r.f1_macro = metrics.f1_macro;
    return r;
  };
  return monte_carlo_cv(data, splits, seed, runner, workers);
}

std::vector<SweepRow> run_sweep(const SyntheticSpec& base, const ModelConfig& config, const SweepOptions& options,
                                const std::function<void(const SweepRow&)>& progress) {
  std::vector<SweepRow> rows;
  for (index_t n : options.n_values) {
    for (double d : options.distances) {
      SyntheticSpec spec = base;
      spec.n = n;
      spec.centroid_distance = d;
      const SyntheticData data = gen_synthetic(spec);
      for (const auto& method : options.methods) {
        SweepRow row{{n, d}, method, {}};
        if (method == "hybrid" || method == "gcnn" || method == "gcnn_rn") {
          ModelConfig c = config;
          c.relation = method == "hybrid" ? RelationKind::kModified
                       : method == "gcnn" ? RelationKind::kNone
                                          : RelationKind::kVanilla;
          row.cv = model_cv(data.dataset, data.graph, c, options.splits, options.workers);
        } else {
          row.cv = baseline_cv(data.dataset, baseline_kind_from_string(method), options.splits, config.seed,
                               options.knn_k, options.workers);
        }
        if (progress) progress(row);
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

}  // namespace gcnrn
