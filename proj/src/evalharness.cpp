#include "runperf/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <omp.h>

#include "runperf/rng.hpp"

namespace runperf {

namespace {

enum SeedStream : std::uint64_t { kIterationStream = 0x17E2, kFoldModelStream = 0xC1 };

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(std::span<const double> v, double mean, bool sample) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(sample ? v.size() - 1 : v.size()));
}

}  // namespace

std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) throw Error("stratified_kfold: need at least 2 folds");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (const auto& [label, members] : by_class) {
    if (members.size() < static_cast<std::size_t>(k)) {
      throw Error("stratified_kfold: class " + std::to_string(label) + " has " + std::to_string(members.size()) +
                  " members, fewer than " + std::to_string(k) + " folds");
    }
  }
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  std::size_t deal = 0;
  for (auto& [label, members] : by_class) {
    rng.shuffle(std::span<std::size_t>(members));
    for (std::size_t idx : members) folds[deal++ % folds.size()].push_back(idx);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::uint64_t iteration_seed(std::uint64_t master_seed, int index) {
  return derive_seed(master_seed, kIterationStream, static_cast<std::uint64_t>(index));
}

IterationResult run_iteration(const DatasetSlice& data, const ProtocolConfig& config, int index) {
  IterationResult result;
  result.seed = iteration_seed(config.master_seed, index);
  result.confusion = ConfusionMatrix(data.categories);
  const auto labels = data.labels();
  const auto folds = stratified_kfold(labels, config.folds, result.seed);
  const auto K = static_cast<std::size_t>(data.categories);

  std::vector<char> in_test(labels.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::fill(in_test.begin(), in_test.end(), 0);
    for (std::size_t i : folds[f]) in_test[i] = 1;
    std::vector<std::size_t> train_rows;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!in_test[i]) train_rows.push_back(i);
    }
    ClassifierSpec spec = config.classifier;
    spec.set_seed(derive_seed(result.seed, kFoldModelStream, f));
    const TrainedModel model = train(spec, make_training_set(data, train_rows));

    std::size_t correct = 0;
    for (std::size_t i : folds[f]) {
      const auto proba = model.predict_proba(std::span<const float>(data.examples[i].x));
      const int predicted = static_cast<int>(std::max_element(proba.begin(), proba.end()) - proba.begin()) + 1;
      result.confusion.add(labels[i], predicted);
      correct += predicted == labels[i];
      result.truth.push_back(labels[i]);
      result.proba.insert(result.proba.end(), proba.begin(), proba.begin() + static_cast<std::ptrdiff_t>(K));
    }
    result.fold_accuracies.push_back(static_cast<double>(correct) / static_cast<double>(folds[f].size()));
  }
  result.accuracy = mean_of(result.fold_accuracies);
  return result;
}

EvalReport run_protocol(const DatasetSlice& data, const ProtocolConfig& config, Execution execution, int threads) {
  if (config.iterations < 1) throw Error("protocol: iterations must be at least 1");
  if (config.folds < 2) throw Error("protocol: folds must be at least 2");
  if (data.categories < 2) throw Error("protocol: need at least 2 categories");
  {
    // Fail early, before any work is scheduled.
    const auto labels = data.labels();
    (void)stratified_kfold(labels, config.folds, 0);
  }

  std::vector<IterationResult> results(static_cast<std::size_t>(config.iterations));
  if (execution == Execution::kSequential) {
    for (int i = 0; i < config.iterations; ++i) results[static_cast<std::size_t>(i)] = run_iteration(data, config, i);
  } else {
    ProtocolConfig inner = config;
    inner.classifier.boosted.parallel = false;  // iterations already occupy the team
    const int team = threads > 0 ? threads : omp_get_max_threads();
    std::string failure;
#pragma omp parallel for schedule(dynamic, 1) num_threads(team)
    for (int i = 0; i < config.iterations; ++i) {
      try {
        results[static_cast<std::size_t>(i)] = run_iteration(data, inner, i);
      } catch (const std::exception& e) {
#pragma omp critical(runperf_protocol_failure)
        if (failure.empty()) failure = e.what();
      }
    }
    if (!failure.empty()) throw Error(failure);
  }

  EvalReport report;
  report.config = config;
  report.categories = data.categories;
  report.examples = data.examples.size();
  report.confusion = ConfusionMatrix(data.categories);
  std::vector<double> all_folds;
  std::vector<int> truth;
  std::vector<double> proba;
  for (auto& r : results) {
    report.iteration_accuracies.push_back(r.accuracy);
    report.fold_accuracies.push_back(r.fold_accuracies);
    all_folds.insert(all_folds.end(), r.fold_accuracies.begin(), r.fold_accuracies.end());
    report.confusion.merge(r.confusion);
    report.iteration_confusion.push_back(r.confusion);
    truth.insert(truth.end(), r.truth.begin(), r.truth.end());
    proba.insert(proba.end(), r.proba.begin(), r.proba.end());
  }
  const auto& acc = report.iteration_accuracies;
  report.accuracy_min = *std::min_element(acc.begin(), acc.end());
  report.accuracy_max = *std::max_element(acc.begin(), acc.end());
  report.accuracy_mean = std::clamp(mean_of(acc), report.accuracy_min, report.accuracy_max);
  report.accuracy_std = std_of(acc, report.accuracy_mean, config.sample_std);
  report.fold_accuracy_std = std_of(all_folds, mean_of(all_folds), config.sample_std);

  std::size_t correct = 0;
  const auto K = static_cast<std::size_t>(data.categories);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto row = proba.begin() + static_cast<std::ptrdiff_t>(i * K);
    const auto predicted = static_cast<int>(std::max_element(row, row + static_cast<std::ptrdiff_t>(K)) - row) + 1;
    correct += predicted == truth[i];
  }
  report.pooled_accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());

  const std::set<int> present(truth.begin(), truth.end());
  if (present.size() == K) {
    if (K == 2) {
      std::vector<double> scores(truth.size());
      std::vector<int> positive(truth.size());
      for (std::size_t i = 0; i < truth.size(); ++i) {
        scores[i] = proba[i * 2 + 1];
        positive[i] = truth[i] == 2;
      }
      report.roc.push_back(roc_curve(scores, positive));
      report.auc = report.roc.front().auc;
    } else {
      auto multi = roc_one_vs_rest(proba, truth, data.categories);
      report.roc = std::move(multi.per_class);
      report.auc = multi.macro_auc;
    }
  }
  return report;
}

std::string format_cell(const AblationRow& row) {
  if (!row.mean || !row.std) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f \xC2\xB1 %.1f", 100.0 * *row.mean, 100.0 * *row.std);
  return buf;
}

std::vector<AblationRow> ablation_table(const std::map<AblationKey, std::optional<DatasetSlice>>& cells,
                                        const ProtocolConfig& config, Execution execution) {
  std::vector<AblationRow> rows;
  for (Task task : {Task::kCurrent, Task::kNext}) {
    for (int categories : {2, 3, 4}) {
      for (ContextMode mode : kAllContextModes) {
        AblationRow row;
        row.key = {task, categories, mode};
        const auto it = cells.find(row.key);
        if (it == cells.end() || !it->second) {
          row.error = "no dataset";
        } else {
          try {
            const EvalReport report = run_protocol(*it->second, config, execution);
            row.mean = report.accuracy_mean;
            row.std = report.accuracy_std;
          } catch (const Error& e) {
            row.error = e.what();
          }
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

}  // namespace runperf
