#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "runperf/perf.hpp"
#include "runperf/split_search.hpp"

namespace runperf {

/// Features plus 0-based class indices.
struct TrainingSet {
  FeatureMatrix x;
  std::vector<int> y;
  int n_classes = 2;
};

/// Copies the selected examples (all when `rows` is empty); labels 1..C
/// become classes 0..C-1.
TrainingSet make_training_set(const DatasetSlice& slice, std::span<const std::size_t> rows = {});

enum class ModelKind { kBoosted, kDecisionTree, kRandomForest, kLogisticRegression, kLinearSvm };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

/// Softmax gradient boosting: one second-order regression tree per class
/// and round.
struct BoostedParams {
  int n_rounds = 200;
  int max_depth = 7;
  double learning_rate = 0.1;
  double l2 = 1.0;
  int min_samples_leaf = 1;
  double min_child_hessian = 0.0;
  double min_split_gain = 0.0;
  double feature_fraction = 1.0;
  std::uint64_t seed = 0;
  bool parallel = true;

  void validate() const;
};

struct TreeParams {
  int max_depth = 16;
  int min_samples_leaf = 1;
  std::uint64_t seed = 0;
};

struct ForestParams {
  int n_trees = 100;
  int max_depth = 16;
  int min_samples_leaf = 1;
  /// Fraction of features tried at each split; <= 0 means sqrt(d)/d.
  double max_features = 0.0;
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

struct LinearParams {
  int epochs = 300;
  double learning_rate = 0.1;
  double l2 = 1e-3;
  std::uint64_t seed = 0;
};

/// Classifier choice plus the hyperparameters of every kind.
struct ClassifierSpec {
  ModelKind kind = ModelKind::kBoosted;
  BoostedParams boosted;
  TreeParams tree;
  ForestParams forest;
  LinearParams linear;

  /// Re-seeds whichever parameter block `kind` uses.
  void set_seed(std::uint64_t seed);
};

struct BoostedModel {
  std::vector<std::vector<Tree>> rounds;  // rounds x classes, leaf values include the learning rate
  std::vector<double> training_loss;      // mean cross-entropy before round 1 and after every round
};

struct ForestModel {
  std::vector<Tree> trees;  // leaf values are class distributions
};

/// Linear scores over standardised features: score_k = w_k . z + b_k.
struct LinearModel {
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<std::vector<double>> weights;
  std::vector<double> bias;
};

class TrainedModel {
 public:
  using Payload = std::variant<BoostedModel, ForestModel, LinearModel>;

  TrainedModel(ModelKind kind, int n_classes, std::size_t n_features, Payload payload);

  ModelKind kind() const { return kind_; }
  int n_classes() const { return n_classes_; }
  std::size_t n_features() const { return n_features_; }
  const Payload& payload() const { return payload_; }

  /// Class probabilities, non-negative and summing to one.
  std::vector<double> predict_proba(std::span<const double> x) const;
  std::vector<double> predict_proba(std::span<const float> x) const;
  /// 1-based label of the most probable class; ties go to the lower label.
  int predict(std::span<const double> x) const;
  int predict(std::span<const float> x) const;

  /// Versioned JSON, stable across platforms.
  std::string serialize() const;
  static TrainedModel deserialize(std::string_view text);

 private:
  ModelKind kind_;
  int n_classes_;
  std::size_t n_features_;
  Payload payload_;
};

TrainedModel train_boosted(const TrainingSet& data, const BoostedParams& params);
TrainedModel train_baseline(ModelKind kind, const TrainingSet& data, const ClassifierSpec& spec);
TrainedModel train(const ClassifierSpec& spec, const TrainingSet& data);

double accuracy(const TrainedModel& model, const TrainingSet& data);
double cross_entropy(const TrainedModel& model, const TrainingSet& data);

}  // namespace runperf
