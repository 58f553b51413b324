#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "runperf/learners.hpp"
#include "runperf/metrics.hpp"
#include "runperf/perf.hpp"

namespace runperf {

/// Repeated stratified k-fold cross-validation settings.
struct ProtocolConfig {
  int iterations = 100;
  int folds = 4;
  std::uint64_t master_seed = 0;
  ClassifierSpec classifier;
  /// Sample (n-1) instead of population standard deviation.
  bool sample_std = false;
  /// Free-form descriptors echoed into the report (task, rp, mode, ...).
  std::map<std::string, std::string> tags;
};

enum class Execution { kSequential, kParallel };

/// Outcome of one cross-validation iteration.
struct IterationResult {
  std::uint64_t seed = 0;
  double accuracy = 0.0;  // mean of the fold accuracies
  std::vector<double> fold_accuracies;
  ConfusionMatrix confusion;
  std::vector<int> truth;      // test labels in evaluation order
  std::vector<double> proba;   // matching rows of class probabilities
};

struct EvalReport {
  ProtocolConfig config;
  int categories = 2;
  std::size_t examples = 0;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;       // across iterations
  double fold_accuracy_std = 0.0;  // across every fold of every iteration
  double accuracy_min = 0.0;
  double accuracy_max = 0.0;
  double pooled_accuracy = 0.0;
  std::vector<double> iteration_accuracies;
  std::vector<std::vector<double>> fold_accuracies;
  ConfusionMatrix confusion;
  std::vector<ConfusionMatrix> iteration_confusion;
  /// Binary: curve of the class-2 probability. Otherwise one-vs-rest curves.
  std::vector<RocCurve> roc;
  double auc = 0.0;
};

/// Test folds of a stratified k-fold split. Each class is shuffled with
/// `seed` and dealt round-robin, the deal continuing across classes, so
/// per-class and total fold sizes differ by at most one.
std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed);

/// Seed of iteration `index`, independent of evaluation order.
std::uint64_t iteration_seed(std::uint64_t master_seed, int index);

IterationResult run_iteration(const DatasetSlice& data, const ProtocolConfig& config, int index);

/// Runs `config.iterations` independent iterations (in parallel when asked;
/// `threads` <= 0 uses the OpenMP default) and aggregates them in iteration
/// order, so both execution modes produce identical reports.
EvalReport run_protocol(const DatasetSlice& data, const ProtocolConfig& config,
                        Execution execution = Execution::kParallel, int threads = 0);

struct AblationKey {
  Task task = Task::kCurrent;
  int categories = 2;
  ContextMode mode = ContextMode::kRaw;
  auto operator<=>(const AblationKey&) const = default;
};

struct AblationRow {
  AblationKey key;
  std::optional<double> mean;  // fraction in [0, 1]
  std::optional<double> std;
  std::string error;           // why the cell is missing
};

/// "83.7 ± 2.8" from fractions, or "n/a".
std::string format_cell(const AblationRow& row);

/// Evaluates every (task, C, mode) cell of the table in a fixed order:
/// tasks {current, next} x C {2, 3, 4} x modes {raw, bb, vibe}. Cells whose
/// dataset is missing or fails come back as n/a rows.
std::vector<AblationRow> ablation_table(const std::map<AblationKey, std::optional<DatasetSlice>>& cells,
                                        const ProtocolConfig& config, Execution execution = Execution::kParallel);

}  // namespace runperf
