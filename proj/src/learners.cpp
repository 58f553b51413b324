#include "runperf/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "json.hpp"
#include "runperf/rng.hpp"

namespace runperf {

using nlohmann::json;

TrainingSet make_training_set(const DatasetSlice& slice, std::span<const std::size_t> rows) {
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all.resize(slice.examples.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    rows = all;
  }
  TrainingSet set;
  set.n_classes = slice.categories;
  const std::size_t dim = slice.examples.empty() ? 0 : slice.examples.front().x.size();
  set.x = FeatureMatrix(rows.size(), dim);
  set.y.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& e = slice.examples.at(rows[i]);
    if (e.x.size() != dim) throw Error("training set: inconsistent feature dimension");
    if (e.label < 1 || e.label > slice.categories) throw Error("training set: label out of range");
    for (std::size_t j = 0; j < dim; ++j) set.x(i, j) = e.x[j];
    set.y.push_back(e.label - 1);
  }
  return set;
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kBoosted: return "boosted";
    case ModelKind::kDecisionTree: return "decision_tree";
    case ModelKind::kRandomForest: return "random_forest";
    case ModelKind::kLogisticRegression: return "logistic_regression";
    case ModelKind::kLinearSvm: return "linear_svm";
  }
  return "boosted";
}

ModelKind parse_model_kind(std::string_view text) {
  for (auto kind : {ModelKind::kBoosted, ModelKind::kDecisionTree, ModelKind::kRandomForest,
                    ModelKind::kLogisticRegression, ModelKind::kLinearSvm}) {
    if (text == to_string(kind)) return kind;
  }
  if (text == "xgboost") return ModelKind::kBoosted;
  throw Error("unknown classifier kind '" + std::string(text) + "'");
}

void BoostedParams::validate() const {
  if (n_rounds < 1) throw Error("boosted params: n_rounds must be at least 1");
  if (max_depth < 1) throw Error("boosted params: max_depth must be at least 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw Error("boosted params: learning_rate must lie in (0, 1]");
  if (!(l2 >= 0.0)) throw Error("boosted params: l2 must be non-negative");
  if (min_samples_leaf < 1) throw Error("boosted params: min_samples_leaf must be at least 1");
  if (!(feature_fraction > 0.0 && feature_fraction <= 1.0)) {
    throw Error("boosted params: feature_fraction must lie in (0, 1]");
  }
}

void ClassifierSpec::set_seed(std::uint64_t seed) {
  boosted.seed = seed;
  tree.seed = seed;
  forest.seed = seed;
  linear.seed = seed;
}

namespace {

void check_trainable(const TrainingSet& data) {
  if (data.x.rows != data.y.size()) throw Error("training set: row and label counts differ");
  if (data.x.rows < 2) throw Error("training needs at least two examples");
  if (data.n_classes < 2) throw Error("training needs at least two classes");
  std::vector<char> present(static_cast<std::size_t>(data.n_classes), 0);
  for (int y : data.y) {
    if (y < 0 || y >= data.n_classes) throw Error("training set: class index out of range");
    present[static_cast<std::size_t>(y)] = 1;
  }
  if (std::count(present.begin(), present.end(), 1) < 2) throw Error("training data contains a single class");
}

void softmax_inplace(std::span<double> scores) {
  const double top = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double& s : scores) {
    s = std::exp(s - top);
    sum += s;
  }
  for (double& s : scores) s /= sum;
}

// ------------------------------------------------------------- gini trees

class GiniTreeBuilder {
 public:
  GiniTreeBuilder(const TrainingSet& data, int max_depth, int min_leaf, std::size_t features_per_split, Rng* rng)
      : data_(data), max_depth_(max_depth), min_leaf_(static_cast<std::size_t>(min_leaf)),
        features_per_split_(features_per_split), rng_(rng) {
    tree_.value_width = static_cast<std::size_t>(data.n_classes);
  }

  Tree build(std::vector<int> rows) {
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<int> rows, int depth) {
    const auto K = static_cast<std::size_t>(data_.n_classes);
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({-1, 0.0, -1, -1, depth});
    tree_.values.resize(tree_.nodes.size() * K, 0.0);

    std::vector<std::size_t> counts(K, 0);
    for (int r : rows) ++counts[static_cast<std::size_t>(data_.y[static_cast<std::size_t>(r)])];
    const std::size_t n = rows.size();
    const bool pure = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) <= 1;

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_impurity = 0.0;
    if (depth < max_depth_ && !pure && n >= 2 * min_leaf_) {
      double parent_sq = 0.0;
      for (auto c : counts) parent_sq += static_cast<double>(c) * static_cast<double>(c);
      const double parent_impurity = 1.0 - parent_sq / (static_cast<double>(n) * static_cast<double>(n));
      best_impurity = parent_impurity - 1e-12;
      for (int f : candidate_features()) {
        const auto fu = static_cast<std::size_t>(f);
        std::vector<int> sorted = rows;
        std::stable_sort(sorted.begin(), sorted.end(), [&](int a, int b) {
          return data_.x(static_cast<std::size_t>(a), fu) < data_.x(static_cast<std::size_t>(b), fu);
        });
        std::vector<std::size_t> left(K, 0);
        double left_sq = 0.0;
        double right_sq = parent_sq;
        for (std::size_t i = 0; i < n; ++i) {
          const double v = data_.x(static_cast<std::size_t>(sorted[i]), fu);
          if (i > 0) {
            const double last = data_.x(static_cast<std::size_t>(sorted[i - 1]), fu);
            if (v > last && i >= min_leaf_ && n - i >= min_leaf_) {
              const double nl = static_cast<double>(i);
              const double nr = static_cast<double>(n - i);
              const double impurity = (nl * (1.0 - left_sq / (nl * nl)) + nr * (1.0 - right_sq / (nr * nr))) /
                                      static_cast<double>(n);
              if (impurity < best_impurity) {
                best_impurity = impurity;
                best_feature = f;
                best_threshold = 0.5 * (last + v);
                if (!(best_threshold < v)) best_threshold = last;
              }
            }
          }
          const auto c = static_cast<std::size_t>(data_.y[static_cast<std::size_t>(sorted[i])]);
          const auto rc = static_cast<double>(counts[c] - left[c]);
          right_sq -= 2.0 * rc - 1.0;
          left_sq += 2.0 * static_cast<double>(left[c]) + 1.0;
          ++left[c];
        }
      }
    }

    if (best_feature < 0) {
      for (std::size_t k = 0; k < K; ++k) {
        tree_.values[static_cast<std::size_t>(id) * K + k] = static_cast<double>(counts[k]) / static_cast<double>(n);
      }
      return id;
    }
    std::vector<int> left_rows, right_rows;
    for (int r : rows) {
      (data_.x(static_cast<std::size_t>(r), static_cast<std::size_t>(best_feature)) <= best_threshold ? left_rows
                                                                                                        : right_rows)
          .push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(std::move(left_rows), depth + 1);
    const int r = grow(std::move(right_rows), depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  std::vector<int> candidate_features() {
    const std::size_t d = data_.x.cols;
    std::vector<int> all(d);
    std::iota(all.begin(), all.end(), 0);
    if (!rng_ || features_per_split_ >= d) return all;
    for (std::size_t i = 0; i < features_per_split_; ++i) {
      const auto j = i + static_cast<std::size_t>(rng_->below(d - i));
      std::swap(all[i], all[j]);
    }
    all.resize(features_per_split_);
    std::sort(all.begin(), all.end());
    return all;
  }

  const TrainingSet& data_;
  int max_depth_;
  std::size_t min_leaf_;
  std::size_t features_per_split_;
  Rng* rng_;
  Tree tree_;
};

TrainedModel train_forest(ModelKind kind, const TrainingSet& data, const ForestParams& p) {
  if (p.n_trees < 1 || p.max_depth < 0 || p.min_samples_leaf < 1) throw Error("forest params: invalid values");
  const std::size_t n = data.x.rows;
  const std::size_t d = data.x.cols;
  std::size_t per_split = d;
  if (p.max_features <= 0.0) {
    per_split = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(d))));
  } else if (p.max_features < 1.0) {
    per_split = static_cast<std::size_t>(std::lround(p.max_features * static_cast<double>(d)));
  }
  per_split = std::clamp<std::size_t>(per_split, 1, std::max<std::size_t>(d, 1));

  ForestModel model;
  for (int t = 0; t < p.n_trees; ++t) {
    Rng rng(derive_seed(p.seed, 0xF0, static_cast<std::uint64_t>(t)));
    std::vector<int> rows(n);
    if (p.bootstrap) {
      for (auto& r : rows) r = static_cast<int>(rng.below(n));
      std::sort(rows.begin(), rows.end());
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    GiniTreeBuilder builder(data, p.max_depth, p.min_samples_leaf, per_split, &rng);
    model.trees.push_back(builder.build(std::move(rows)));
  }
  return TrainedModel(kind, data.n_classes, d, std::move(model));
}

// ----------------------------------------------------------- linear models

LinearModel standardised_start(const TrainingSet& data, std::vector<double>& z) {
  const std::size_t n = data.x.rows;
  const std::size_t d = data.x.cols;
  const auto K = static_cast<std::size_t>(data.n_classes);
  LinearModel m;
  m.mean.assign(d, 0.0);
  m.scale.assign(d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += data.x(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (data.x(i, j) - mean) * (data.x(i, j) - mean);
    var /= static_cast<double>(n);
    m.mean[j] = mean;
    m.scale[j] = var > 1e-24 ? 1.0 / std::sqrt(var) : 1.0;
  }
  z.resize(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) z[i * d + j] = (data.x(i, j) - m.mean[j]) * m.scale[j];
  }
  m.weights.assign(K, std::vector<double>(d, 0.0));
  m.bias.assign(K, 0.0);
  return m;
}

TrainedModel train_logistic(const TrainingSet& data, const LinearParams& p) {
  if (p.epochs < 1 || !(p.learning_rate > 0.0) || !(p.l2 >= 0.0)) throw Error("linear params: invalid values");
  const std::size_t n = data.x.rows;
  const std::size_t d = data.x.cols;
  const auto K = static_cast<std::size_t>(data.n_classes);
  std::vector<double> zbuf;
  LinearModel m = standardised_start(data, zbuf);
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMatrix> z(zbuf.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  RowMatrix onehot = RowMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(K));
  for (std::size_t i = 0; i < n; ++i) onehot(static_cast<Eigen::Index>(i), data.y[i]) = 1.0;
  RowMatrix w = RowMatrix::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(d));
  Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(K));
  const double inv_n = 1.0 / static_cast<double>(n);
  RowMatrix scores(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(K));
  RowMatrix grad_w(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(d));
  for (int epoch = 0; epoch < p.epochs; ++epoch) {
    for (Eigen::Index k = 0; k < w.rows(); ++k) scores.col(k).noalias() = z * w.row(k).transpose();
    scores.rowwise() += b;
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
      std::span<double> row(scores.row(i).data(), K);
      softmax_inplace(row);
    }
    scores -= onehot;
    for (Eigen::Index k = 0; k < w.rows(); ++k) grad_w.row(k).noalias() = scores.col(k).transpose() * z * inv_n;
    b -= p.learning_rate * scores.colwise().sum() * inv_n;
    w -= p.learning_rate * (grad_w + p.l2 * w);
  }
  for (std::size_t k = 0; k < K; ++k) {
    m.bias[k] = b(static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < d; ++j) m.weights[k][j] = w(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
  }
  return TrainedModel(ModelKind::kLogisticRegression, data.n_classes, d, std::move(m));
}

TrainedModel train_svm(const TrainingSet& data, const LinearParams& p) {
  if (p.epochs < 1 || !(p.learning_rate > 0.0) || !(p.l2 >= 0.0)) throw Error("linear params: invalid values");
  const std::size_t n = data.x.rows;
  const std::size_t d = data.x.cols;
  const auto K = static_cast<std::size_t>(data.n_classes);
  std::vector<double> z;
  LinearModel m = standardised_start(data, z);
  std::vector<double> grad_w(d);
  for (std::size_t k = 0; k < K; ++k) {
    auto& w = m.weights[k];
    double& b = m.bias[k];
    for (int epoch = 1; epoch <= p.epochs; ++epoch) {
      std::fill(grad_w.begin(), grad_w.end(), 0.0);
      double grad_b = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double* zi = &z[i * d];
        const double y = data.y[i] == static_cast<int>(k) ? 1.0 : -1.0;
        const double margin = y * (b + std::inner_product(zi, zi + d, w.begin(), 0.0));
        if (margin < 1.0) {
          grad_b -= y;
          for (std::size_t j = 0; j < d; ++j) grad_w[j] -= y * zi[j];
        }
      }
      const double step = p.learning_rate / std::sqrt(static_cast<double>(epoch));
      const double inv_n = 1.0 / static_cast<double>(n);
      for (std::size_t j = 0; j < d; ++j) w[j] -= step * (grad_w[j] * inv_n + p.l2 * w[j]);
      b -= step * grad_b * inv_n;
    }
  }
  return TrainedModel(ModelKind::kLinearSvm, data.n_classes, d, std::move(m));
}

// ----------------------------------------------------------- serialisation

json tree_to_json(const Tree& t) {
  json j;
  std::vector<int> feature, left, right;
  std::vector<double> threshold;
  for (const auto& n : t.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
  }
  j["feature"] = feature;
  j["threshold"] = threshold;
  j["left"] = left;
  j["right"] = right;
  j["width"] = t.value_width;
  j["value"] = t.values;
  return j;
}

Tree tree_from_json(const json& j) {
  Tree t;
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<int>>();
  const auto right = j.at("right").get<std::vector<int>>();
  t.value_width = j.at("width").get<std::size_t>();
  t.values = j.at("value").get<std::vector<double>>();
  const std::size_t n = feature.size();
  if (threshold.size() != n || left.size() != n || right.size() != n || t.values.size() != n * t.value_width ||
      n == 0) {
    throw Error("model: inconsistent tree arrays");
  }
  t.nodes.resize(n);
  for (std::size_t i = 0; i < n; ++i) t.nodes[i] = {feature[i], threshold[i], left[i], right[i], 0};
  // Recover depths; children always follow their parent.
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = t.nodes[i];
    if (node.feature < 0) continue;
    for (int c : {node.left, node.right}) {
      if (c <= static_cast<int>(i) || c >= static_cast<int>(n)) throw Error("model: bad child index");
      t.nodes[static_cast<std::size_t>(c)].depth = node.depth + 1;
    }
  }
  return t;
}

constexpr int kModelFormatVersion = 1;

}  // namespace

// ------------------------------------------------------------- TrainedModel

TrainedModel::TrainedModel(ModelKind kind, int n_classes, std::size_t n_features, Payload payload)
    : kind_(kind), n_classes_(n_classes), n_features_(n_features), payload_(std::move(payload)) {}

std::vector<double> TrainedModel::predict_proba(std::span<const double> x) const {
  if (x.size() != n_features_) {
    throw Error("predict: expected " + std::to_string(n_features_) + " features, got " + std::to_string(x.size()));
  }
  const auto K = static_cast<std::size_t>(n_classes_);
  std::vector<double> out(K, 0.0);
  if (const auto* b = std::get_if<BoostedModel>(&payload_)) {
    for (const auto& round : b->rounds) {
      for (std::size_t k = 0; k < K; ++k) out[k] += round[k].predict(x)[0];
    }
    softmax_inplace(out);
  } else if (const auto* f = std::get_if<ForestModel>(&payload_)) {
    for (const auto& tree : f->trees) {
      const auto leaf = tree.predict(x);
      for (std::size_t k = 0; k < K; ++k) out[k] += leaf[k];
    }
    double sum = 0.0;
    for (double v : out) sum += v;
    for (double& v : out) v /= sum;
  } else {
    const auto& m = std::get<LinearModel>(payload_);
    for (std::size_t k = 0; k < K; ++k) {
      double s = m.bias[k];
      for (std::size_t j = 0; j < x.size(); ++j) s += m.weights[k][j] * (x[j] - m.mean[j]) * m.scale[j];
      out[k] = s;
    }
    softmax_inplace(out);
  }
  return out;
}

std::vector<double> TrainedModel::predict_proba(std::span<const float> x) const {
  const std::vector<double> widened(x.begin(), x.end());
  return predict_proba(std::span<const double>(widened));
}

int TrainedModel::predict(std::span<const double> x) const {
  const auto p = predict_proba(x);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()) + 1;
}

int TrainedModel::predict(std::span<const float> x) const {
  const std::vector<double> widened(x.begin(), x.end());
  return predict(std::span<const double>(widened));
}

std::string TrainedModel::serialize() const {
  json j;
  j["format"] = "runperf-model";
  j["version"] = kModelFormatVersion;
  j["kind"] = std::string(to_string(kind_));
  j["n_classes"] = n_classes_;
  j["n_features"] = n_features_;
  if (const auto* b = std::get_if<BoostedModel>(&payload_)) {
    json rounds = json::array();
    for (const auto& round : b->rounds) {
      json trees = json::array();
      for (const auto& t : round) trees.push_back(tree_to_json(t));
      rounds.push_back(std::move(trees));
    }
    j["rounds"] = std::move(rounds);
    j["training_loss"] = b->training_loss;
  } else if (const auto* f = std::get_if<ForestModel>(&payload_)) {
    json trees = json::array();
    for (const auto& t : f->trees) trees.push_back(tree_to_json(t));
    j["trees"] = std::move(trees);
  } else {
    const auto& m = std::get<LinearModel>(payload_);
    j["mean"] = m.mean;
    j["scale"] = m.scale;
    j["weights"] = m.weights;
    j["bias"] = m.bias;
  }
  return j.dump();
}

TrainedModel TrainedModel::deserialize(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("model: malformed JSON: ") + e.what());
  }
  try {
    if (j.at("format") != "runperf-model") throw Error("model: unknown format");
    if (j.at("version").get<int>() != kModelFormatVersion) throw Error("model: unsupported version");
    const ModelKind kind = parse_model_kind(j.at("kind").get<std::string>());
    const int n_classes = j.at("n_classes").get<int>();
    const auto n_features = j.at("n_features").get<std::size_t>();
    switch (kind) {
      case ModelKind::kBoosted: {
        BoostedModel b;
        for (const auto& round : j.at("rounds")) {
          std::vector<Tree> trees;
          for (const auto& t : round) trees.push_back(tree_from_json(t));
          if (trees.size() != static_cast<std::size_t>(n_classes)) throw Error("model: wrong tree count per round");
          b.rounds.push_back(std::move(trees));
        }
        b.training_loss = j.value("training_loss", std::vector<double>{});
        return TrainedModel(kind, n_classes, n_features, std::move(b));
      }
      case ModelKind::kDecisionTree:
      case ModelKind::kRandomForest: {
        ForestModel f;
        for (const auto& t : j.at("trees")) f.trees.push_back(tree_from_json(t));
        return TrainedModel(kind, n_classes, n_features, std::move(f));
      }
      case ModelKind::kLogisticRegression:
      case ModelKind::kLinearSvm: {
        LinearModel m;
        m.mean = j.at("mean").get<std::vector<double>>();
        m.scale = j.at("scale").get<std::vector<double>>();
        m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
        m.bias = j.at("bias").get<std::vector<double>>();
        return TrainedModel(kind, n_classes, n_features, std::move(m));
      }
    }
  } catch (const json::exception& e) {
    throw Error(std::string("model: ") + e.what());
  }
  throw Error("model: unknown kind");
}

// ----------------------------------------------------------------- training

TrainedModel train_boosted(const TrainingSet& data, const BoostedParams& params) {
  params.validate();
  check_trainable(data);
  const std::size_t n = data.x.rows;
  const std::size_t d = data.x.cols;
  const auto K = static_cast<std::size_t>(data.n_classes);

  const PresortedColumns sorted(data.x);
  GrowParams grow{params.max_depth, params.min_samples_leaf, params.l2, params.min_child_hessian,
                  params.min_split_gain, params.learning_rate};

  std::vector<int> all_features(d);
  std::iota(all_features.begin(), all_features.end(), 0);
  const auto subset_size = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(params.feature_fraction * static_cast<double>(d))));

  std::vector<double> margin(n * K, 0.0);
  std::vector<double> proba(n * K);
  std::vector<GradientPair> grad(n);
  BoostedModel model;

  const auto refresh = [&] {
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::span<double> row(&proba[i * K], K);
      std::copy_n(&margin[i * K], K, row.begin());
      softmax_inplace(row);
      loss -= std::log(std::max(row[static_cast<std::size_t>(data.y[i])], 1e-300));
    }
    model.training_loss.push_back(loss / static_cast<double>(n));
  };
  refresh();

  for (int round = 0; round < params.n_rounds; ++round) {
    std::vector<Tree> trees;
    trees.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
      if (K == 2 && k == 1) {
        // Margins stay antisymmetric, so the second class's gradients are the
        // first's negated and its tree is the mirror image.
        Tree mirror = trees[0];
        for (double& v : mirror.values) v = -v;
        trees.push_back(std::move(mirror));
        break;
      }
      for (std::size_t i = 0; i < n; ++i) {
        const double p = proba[i * K + k];
        grad[i].g = p - (data.y[i] == static_cast<int>(k) ? 1.0 : 0.0);
        grad[i].h = std::max(p * (1.0 - p), 1e-16);
      }
      std::vector<int> features = all_features;
      if (subset_size < d) {
        Rng rng(derive_seed(params.seed, static_cast<std::uint64_t>(round), k));
        rng.shuffle(std::span<int>(features));
        features.resize(subset_size);
        std::sort(features.begin(), features.end());
      }
      trees.push_back(grow_tree(data.x, sorted, grad, features, grow, params.parallel));
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < K; ++k) margin[i * K + k] += trees[k].predict(data.x.row(i))[0];
    }
    model.rounds.push_back(std::move(trees));
    refresh();
  }
  return TrainedModel(ModelKind::kBoosted, data.n_classes, d, std::move(model));
}

TrainedModel train_baseline(ModelKind kind, const TrainingSet& data, const ClassifierSpec& spec) {
  check_trainable(data);
  switch (kind) {
    case ModelKind::kBoosted:
      return train_boosted(data, spec.boosted);
    case ModelKind::kDecisionTree: {
      ForestParams p;
      p.n_trees = 1;
      p.max_depth = spec.tree.max_depth;
      p.min_samples_leaf = spec.tree.min_samples_leaf;
      p.max_features = 1.0;
      p.bootstrap = false;
      p.seed = spec.tree.seed;
      return train_forest(ModelKind::kDecisionTree, data, p);
    }
    case ModelKind::kRandomForest:
      return train_forest(ModelKind::kRandomForest, data, spec.forest);
    case ModelKind::kLogisticRegression:
      return train_logistic(data, spec.linear);
    case ModelKind::kLinearSvm:
      return train_svm(data, spec.linear);
  }
  throw Error("unknown classifier kind");
}

TrainedModel train(const ClassifierSpec& spec, const TrainingSet& data) {
  return train_baseline(spec.kind, data, spec);
}

double accuracy(const TrainedModel& model, const TrainingSet& data) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.x.rows; ++i) {
    if (model.predict(data.x.row(i)) - 1 == data.y[i]) ++correct;
  }
  return data.x.rows ? static_cast<double>(correct) / static_cast<double>(data.x.rows) : 0.0;
}

double cross_entropy(const TrainedModel& model, const TrainingSet& data) {
  double loss = 0.0;
  for (std::size_t i = 0; i < data.x.rows; ++i) {
    const auto p = model.predict_proba(data.x.row(i));
    loss -= std::log(std::max(p[static_cast<std::size_t>(data.y[i])], 1e-300));
  }
  return data.x.rows ? loss / static_cast<double>(data.x.rows) : 0.0;
}

}  // namespace runperf
