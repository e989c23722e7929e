#include "gcnrn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>

namespace gcnrn {

ConfusionMatrix::ConfusionMatrix(int classes)
    : classes_(classes), counts_(static_cast<std::size_t>(classes) * static_cast<std::size_t>(classes), 0) {}

ConfusionMatrix::ConfusionMatrix(std::span<const int> truth, std::span<const int> predicted, int classes)
    : ConfusionMatrix(classes) {
  if (truth.size() != predicted.size()) throw DimensionMismatch("truth and prediction lengths differ");
  for (std::size_t k = 0; k < truth.size(); ++k) add(truth[k], predicted[k]);
}

void ConfusionMatrix::add(int truth, int predicted) {
  if (truth < 0 || truth >= classes_ || predicted < 0 || predicted >= classes_) {
    throw LabelOutOfRange("class outside [0, " + std::to_string(classes_) + ")");
  }
  ++counts_[static_cast<std::size_t>(truth * classes_ + predicted)];
}

std::int64_t ConfusionMatrix::count(int truth, int predicted) const {
  return counts_[static_cast<std::size_t>(truth * classes_ + predicted)];
}

std::int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

ClassificationMetrics classification_metrics(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total <= 0) throw DimensionMismatch("confusion matrix is empty");
  const int c = cm.classes();
  ClassificationMetrics out;
  out.f1.assign(static_cast<std::size_t>(c), 0.0);
  out.support.assign(static_cast<std::size_t>(c), 0);
  std::int64_t correct = 0;
  for (int k = 0; k < c; ++k) {
    std::int64_t true_k = 0;
    std::int64_t pred_k = 0;
    for (int j = 0; j < c; ++j) {
      true_k += cm.count(k, j);
      pred_k += cm.count(j, k);
    }
    const auto tp = cm.count(k, k);
    correct += tp;
    out.support[static_cast<std::size_t>(k)] = true_k;
    // F1 = 2 tp / (2 tp + fp + fn) = 2 tp / (true_k + pred_k).
    if (true_k + pred_k > 0) {
      out.f1[static_cast<std::size_t>(k)] = 2.0 * static_cast<double>(tp) / static_cast<double>(true_k + pred_k);
    }
  }
  out.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  for (int k = 0; k < c; ++k) {
    out.f1_macro += out.f1[static_cast<std::size_t>(k)];
    out.f1_weighted += out.f1[static_cast<std::size_t>(k)] * static_cast<double>(out.support[static_cast<std::size_t>(k)]);
  }
  out.f1_macro /= c;
  out.f1_weighted /= static_cast<double>(total);
  return out;
}

// ---------------------------------------------------------------------------

void GaussianNaiveBayes::fit(const Matrix& x, std::span<const int> labels, int classes) {
  if (static_cast<index_t>(labels.size()) != x.rows()) throw DimensionMismatch("label count differs from rows");
  means_ = Matrix::Zero(classes, x.cols());
  variances_ = Matrix::Zero(classes, x.cols());
  Vector counts = Vector::Zero(classes);
  for (index_t r = 0; r < x.rows(); ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    if (y < 0 || y >= classes) throw LabelOutOfRange("training label " + std::to_string(y));
    means_.row(y) += x.row(r);
    counts[y] += 1.0;
  }
  for (int k = 0; k < classes; ++k) {
    if (counts[k] > 0) means_.row(k) /= counts[k];
  }
  for (index_t r = 0; r < x.rows(); ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    variances_.row(y) += (x.row(r) - means_.row(y)).cwiseAbs2();
  }
  log_priors_ = Vector::Constant(classes, -std::numeric_limits<double>::infinity());
  for (int k = 0; k < classes; ++k) {
    if (counts[k] > 0) {
      variances_.row(k) /= counts[k];
      log_priors_[k] = std::log(counts[k] / static_cast<double>(x.rows()));
    }
  }
  variances_ = variances_.cwiseMax(variance_floor_);
}

std::vector<int> GaussianNaiveBayes::predict(const Matrix& x) const {
  if (x.cols() != means_.cols()) throw DimensionMismatch("feature count differs from fitted model");
  const int classes = static_cast<int>(means_.rows());
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  const Vector log_norm = (2.0 * std::numbers::pi * variances_.array()).log().rowwise().sum().matrix() * -0.5;
  for (index_t r = 0; r < x.rows(); ++r) {
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < classes; ++k) {
      if (!std::isfinite(log_priors_[k])) continue;
      const double quad = ((x.row(r) - means_.row(k)).array().square() / variances_.row(k).array()).sum();
      const double score = log_priors_[k] + log_norm[k] - 0.5 * quad;
      if (score > best_score) {
        best_score = score;
        best = k;
      }
    }
    out[static_cast<std::size_t>(r)] = best;
  }
  return out;
}

std::vector<int> knn_predict(const Matrix& train, std::span<const int> labels, const Matrix& test, int k) {
  if (k < 1) throw DimensionMismatch("k must be >= 1");
  if (static_cast<index_t>(labels.size()) != train.rows()) throw DimensionMismatch("label count differs from rows");
  if (train.cols() != test.cols()) throw DimensionMismatch("train/test feature counts differ");
  const int max_label = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
  const auto kk = static_cast<std::size_t>(std::min<index_t>(k, train.rows()));
  std::vector<int> out(static_cast<std::size_t>(test.rows()));
  std::vector<std::pair<double, index_t>> dist(static_cast<std::size_t>(train.rows()));
  for (index_t t = 0; t < test.rows(); ++t) {
    for (index_t r = 0; r < train.rows(); ++r) {
      dist[static_cast<std::size_t>(r)] = {(train.row(r) - test.row(t)).squaredNorm(), r};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
    std::vector<int> votes(static_cast<std::size_t>(max_label) + 1, 0);
    for (std::size_t q = 0; q < kk; ++q) ++votes[static_cast<std::size_t>(labels[static_cast<std::size_t>(dist[q].second)])];
    const int top = *std::max_element(votes.begin(), votes.end());
    // Walk neighbours nearest-first; the first whose class has the top vote wins.
    for (std::size_t q = 0; q < kk; ++q) {
      const int y = labels[static_cast<std::size_t>(dist[q].second)];
      if (votes[static_cast<std::size_t>(y)] == top) {
        out[static_cast<std::size_t>(t)] = y;
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

WardResult ward_cluster(const Matrix& points, int clusters) {
  const index_t n = points.rows();
  if (clusters < 1 || clusters > n) throw DimensionMismatch("cluster count must be in [1, point count]");
  Matrix d(n, n);
  for (index_t i = 0; i < n; ++i) {
    for (index_t j = 0; j < n; ++j) d(i, j) = (points.row(i) - points.row(j)).squaredNorm();
  }
  std::vector<index_t> size(static_cast<std::size_t>(n), 1);
  std::vector<bool> active(static_cast<std::size_t>(n), true);
  std::vector<index_t> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), index_t{0});
  WardResult out;

  for (index_t remaining = n; remaining > clusters; --remaining) {
    index_t bi = -1;
    index_t bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (index_t i = 0; i < n; ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      for (index_t j = i + 1; j < n; ++j) {
        if (!active[static_cast<std::size_t>(j)]) continue;
        if (d(i, j) < best) {
          best = d(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    out.merge_costs.push_back(std::sqrt(best));
    const auto ni = static_cast<double>(size[static_cast<std::size_t>(bi)]);
    const auto nj = static_cast<double>(size[static_cast<std::size_t>(bj)]);
    for (index_t k = 0; k < n; ++k) {
      if (!active[static_cast<std::size_t>(k)] || k == bi || k == bj) continue;
      const auto nk = static_cast<double>(size[static_cast<std::size_t>(k)]);
      const double merged = ((ni + nk) * d(bi, k) + (nj + nk) * d(bj, k) - nk * d(bi, bj)) / (ni + nj + nk);
      d(bi, k) = merged;
      d(k, bi) = merged;
    }
    size[static_cast<std::size_t>(bi)] += size[static_cast<std::size_t>(bj)];
    active[static_cast<std::size_t>(bj)] = false;
    parent[static_cast<std::size_t>(bj)] = bi;
  }

  auto root = [&](index_t v) {
    while (parent[static_cast<std::size_t>(v)] != v) v = parent[static_cast<std::size_t>(v)];
    return v;
  };
  std::map<index_t, int> label_of_root;
  out.assignment.resize(static_cast<std::size_t>(n));
  for (index_t v = 0; v < n; ++v) {
    const index_t r = root(v);
    auto [it, inserted] = label_of_root.emplace(r, static_cast<int>(label_of_root.size()));
    out.assignment[static_cast<std::size_t>(v)] = it->second;
  }
  return out;
}

// ---------------------------------------------------------------------------

double KmCurve::at(double t) const {
  double s = 1.0;
  for (std::size_t k = 0; k < times.size() && times[k] <= t; ++k) s = survival[k];
  return s;
}

KmCurve km_estimate(std::span<const SurvivalRecord> records) {
  std::vector<SurvivalRecord> sorted(records.begin(), records.end());
  for (const auto& r : sorted) {
    if (!(r.time >= 0.0)) throw DimensionMismatch("survival times must be >= 0");
  }
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
  KmCurve curve;
  auto at_risk = static_cast<std::int64_t>(sorted.size());
  double s = 1.0;
  std::size_t k = 0;
  while (k < sorted.size()) {
    const double t = sorted[k].time;
    std::int64_t events = 0;
    std::int64_t leaving = 0;
    while (k < sorted.size() && sorted[k].time == t) {
      events += sorted[k].event ? 1 : 0;
      ++leaving;
      ++k;
    }
    if (events > 0) {
      s *= 1.0 - static_cast<double>(events) / static_cast<double>(at_risk);
      curve.times.push_back(t);
      curve.survival.push_back(s);
      curve.at_risk.push_back(at_risk);
      curve.events.push_back(events);
    }
    at_risk -= leaving;
  }
  return curve;
}

LogRankResult logrank_test(std::span<const SurvivalRecord> group_a, std::span<const SurvivalRecord> group_b) {
  if (group_a.empty() || group_b.empty()) throw DimensionMismatch("log-rank test needs two non-empty groups");
  struct Tagged {
    double time;
    bool event;
    bool in_a;
  };
  std::vector<Tagged> all;
  for (const auto& r : group_a) all.push_back({r.time, r.event, true});
  for (const auto& r : group_b) all.push_back({r.time, r.event, false});
  std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.time < y.time; });

  LogRankResult out;
  double n_a = static_cast<double>(group_a.size());
  double n_b = static_cast<double>(group_b.size());
  std::size_t k = 0;
  while (k < all.size()) {
    const double t = all[k].time;
    double d_a = 0.0;
    double d = 0.0;
    double leave_a = 0.0;
    double leave_b = 0.0;
    while (k < all.size() && all[k].time == t) {
      if (all[k].event) {
        d += 1.0;
        if (all[k].in_a) d_a += 1.0;
      }
      (all[k].in_a ? leave_a : leave_b) += 1.0;
      ++k;
    }
    const double n = n_a + n_b;
    if (d > 0.0) {
      out.observed_a += d_a;
      out.expected_a += d * n_a / n;
      if (n > 1.0) out.variance += d * (n_a / n) * (n_b / n) * (n - d) / (n - 1.0);
    }
    n_a -= leave_a;
    n_b -= leave_b;
  }
  if (out.variance > 0.0) {
    const double diff = out.observed_a - out.expected_a;
    out.chi_square = diff * diff / out.variance;
  }
  out.p_value = chi_square_sf(out.chi_square, 1.0);
  return out;
}

double regularized_gamma_q(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw DimensionMismatch("incomplete gamma needs a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
  constexpr double kEps = 1e-15;
  constexpr int kMaxIter = 10'000;
  if (x < a + 1.0) {
    // P(a, x) = e^{-x} x^a / Gamma(a+1) * sum_n x^n / ((a+1)...(a+n))
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < kMaxIter; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * kEps) break;
    }
    return 1.0 - sum * std::exp(log_prefix);
  }
  // Modified Lentz evaluation of the continued fraction for Q(a, x).
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(log_prefix) * h;
}

double chi_square_sf(double x, double dof) {
  if (x <= 0.0) return 1.0;
  return regularized_gamma_q(dof / 2.0, x / 2.0);
}

}  // namespace gcnrn
