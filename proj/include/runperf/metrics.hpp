#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace runperf {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // +inf for the first point
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

/// ROC over every distinct score (descending), starting at (0, 0) and ending
/// at (1, 1); area by the trapezoid rule. `positive` holds 0/1 flags.
RocCurve roc_curve(std::span<const double> scores, std::span<const int> positive);

struct MulticlassRoc {
  std::vector<RocCurve> per_class;  // one-vs-rest, class k = label k + 1
  double macro_auc = 0.0;
};

/// `proba` is row-major n x C, `labels` are 1-based.
MulticlassRoc roc_one_vs_rest(std::span<const double> proba, std::span<const int> labels, int categories);

/// C x C counts, rows are true classes, columns predicted; labels 1-based.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int categories = 2)
      : categories_(categories), counts_(static_cast<std::size_t>(categories) * categories, 0) {}

  void add(int truth, int predicted, long long count = 1);
  void merge(const ConfusionMatrix& other);
  long long at(int truth, int predicted) const {
    return counts_[static_cast<std::size_t>(truth - 1) * categories_ + (predicted - 1)];
  }
  int categories() const { return categories_; }
  long long total() const;
  long long trace() const;
  double accuracy() const;
  bool operator==(const ConfusionMatrix&) const = default;

 private:
  int categories_;
  std::vector<long long> counts_;
};

}  // namespace runperf
