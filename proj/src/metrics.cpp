#include "runperf/metrics.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "runperf/common.hpp"

namespace runperf {

RocCurve roc_curve(std::span<const double> scores, std::span<const int> positive) {
  if (scores.size() != positive.size()) throw Error("roc_curve: scores and labels differ in length");
  std::size_t n_pos = 0;
  for (int p : positive) n_pos += p != 0;
  const std::size_t n_neg = positive.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error("roc_curve: both classes must be present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (positive[order[i]] ? tp : fp) += 1;
    const bool last_of_score = i + 1 == order.size() || scores[order[i + 1]] != scores[order[i]];
    if (!last_of_score) continue;
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                            static_cast<double>(tp) / static_cast<double>(n_pos), scores[order[i]]});
  }
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
  }
  curve.auc = std::clamp(area, 0.0, 1.0);
  return curve;
}

MulticlassRoc roc_one_vs_rest(std::span<const double> proba, std::span<const int> labels, int categories) {
  const auto K = static_cast<std::size_t>(categories);
  if (proba.size() != labels.size() * K) throw Error("roc_one_vs_rest: probability matrix has the wrong size");
  MulticlassRoc out;
  std::vector<double> scores(labels.size());
  std::vector<int> positive(labels.size());
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      scores[i] = proba[i * K + k];
      positive[i] = labels[i] == static_cast<int>(k) + 1;
    }
    out.per_class.push_back(roc_curve(scores, positive));
    out.macro_auc += out.per_class.back().auc;
  }
  out.macro_auc /= static_cast<double>(K);
  return out;
}

void ConfusionMatrix::add(int truth, int predicted, long long count) {
  if (truth < 1 || truth > categories_ || predicted < 1 || predicted > categories_) {
    throw Error("confusion matrix: label out of range");
  }
  counts_[static_cast<std::size_t>(truth - 1) * categories_ + (predicted - 1)] += count;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.categories_ != categories_) throw Error("confusion matrix: category count mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

long long ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), 0LL); }

long long ConfusionMatrix::trace() const {
  long long t = 0;
  for (int k = 1; k <= categories_; ++k) t += at(k, k);
  return t;
}

double ConfusionMatrix::accuracy() const {
  const long long n = total();
  return n ? static_cast<double>(trace()) / static_cast<double>(n) : 0.0;
}

}  // namespace runperf
