// Acceptance suite: one PASS/FAIL line per criterion.
#include <omp.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <thread>

#include "runperf/assignment.hpp"
#include "runperf/evalharness.hpp"
#include "runperf/kalman.hpp"
#include "runperf/report_io.hpp"
#include "runperf/rng.hpp"
#include "runperf/synthetic.hpp"
#include "runperf/tracker.hpp"

using namespace runperf;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& body, double limit_seconds = 0.0) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double elapsed = seconds_since(start);
  if (limit_seconds > 0.0) o.require(elapsed < limit_seconds, fmt("runtime %.2f s over the %.0f s limit", elapsed, limit_seconds));
  if (!o.pass) ++failures;
  std::printf("%s %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), elapsed, o.detail.c_str());
  std::fflush(stdout);
}

double brute_force(const Eigen::MatrixXd& cost) {
  const bool transpose = cost.rows() > cost.cols();
  const Eigen::MatrixXd c = transpose ? Eigen::MatrixXd(cost.transpose()) : cost;
  std::vector<int> cols(static_cast<std::size_t>(c.cols()));
  std::iota(cols.begin(), cols.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (Eigen::Index r = 0; r < c.rows(); ++r) total += c(r, cols[static_cast<std::size_t>(r)]);
    best = std::min(best, total);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

Outcome assignment_optimality() {
  Outcome o;
  Rng rng(101);
  double solver_seconds = 0.0;
  int mismatches = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    Eigen::MatrixXd cost(1 + static_cast<Eigen::Index>(rng.below(7)), 1 + static_cast<Eigen::Index>(rng.below(7)));
    // Integer costs keep every sum exact, so equality is exact too.
    for (Eigen::Index i = 0; i < cost.size(); ++i) cost.data()[i] = static_cast<double>(rng.below(trial % 2 ? 10 : 1000));
    const auto t0 = Clock::now();
    const auto r = assign(cost);
    solver_seconds += seconds_since(t0);
    mismatches += total_cost(cost, r) != brute_force(cost);
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " of 10000 totals differ from the permutation minimum");
  o.note("10000 matrices up to 7x7 match the permutation minimum exactly");
  o.note(fmt("assign() total %.3f s", solver_seconds));
  return o;
}

Outcome kalman_invariants() {
  Outcome o;
  Rng rng(202);
  double worst_asym = 0.0, worst_eig = std::numeric_limits<double>::infinity();
  int variance_growth = 0;
  KalmanState s = kalman_initiate({640, 360, 40, 100});
  for (int t = 0; t < 10000; ++t) {
    if (t % 500 == 0) s = kalman_initiate({rng.uniform(100, 1100), rng.uniform(100, 600), 40, rng.uniform(60, 160)});
    const auto prior = kalman_predict(s, 1.0 + static_cast<double>(rng.below(3)));
    const BBox m = to_bbox(prior.mean);
    const BBox z{m.cx + 8 * rng.normal(), m.cy + 8 * rng.normal(), std::max(4.0, m.w * (1 + 0.05 * rng.normal())),
                 std::max(8.0, m.h * (1 + 0.05 * rng.normal()))};
    s = kalman_update(prior, z, {}, rng.bernoulli(0.2) ? 4.0 : 1.0);
    worst_asym = std::max(worst_asym, (s.covariance - s.covariance.transpose()).cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<StateCovariance> es(s.covariance, Eigen::EigenvaluesOnly);
    worst_eig = std::min(worst_eig, es.eigenvalues().minCoeff());
    for (int k = 0; k < 4; ++k) variance_growth += s.covariance(k, k) > prior.covariance(k, k);
  }
  o.require(worst_asym <= 1e-9, fmt("asymmetry %.3g > 1e-9", worst_asym));
  o.require(worst_eig >= -1e-8, fmt("min eigenvalue %.3g < -1e-8", worst_eig));
  o.require(variance_growth == 0, std::to_string(variance_growth) + " posterior variances exceed the prior");
  o.note(fmt("10000 cycles, max asymmetry %.2g, min eigenvalue %.3g", worst_asym, worst_eig));
  return o;
}

struct StreamRun {
  std::vector<std::vector<TrackOutput>> outputs;
  std::vector<std::vector<std::pair<int, int>>> truth_to_id;
  std::optional<int> roi;
};

StreamRun run_stream(const SyntheticDataset& ds, const TrackerConfig& cfg, BackupTracker* backup) {
  Tracker tracker(cfg);
  StreamRun run;
  const auto frames = group_by_frame(ds.detections);
  std::size_t next = 0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    std::vector<int> truth;
    for (std::size_t j = 0; j < frames[f].size(); ++j) truth.push_back(ds.detection_truth[next++]);
    run.outputs.push_back(tracker.step(static_cast<int>(f), frames[f], backup));
    std::vector<std::pair<int, int>> pairs;
    for (const auto& t : tracker.tracks()) {
      if (t.status != TrackStatus::kConfirmed || t.frames_since_update != 0) continue;
      for (std::size_t j = 0; j < frames[f].size(); ++j)
        if (frames[f][j].bbox == t.last_bbox) pairs.emplace_back(truth[j], t.id);
    }
    run.truth_to_id.push_back(std::move(pairs));
  }
  run.roi = tracker.runner_of_interest();
  return run;
}

Outcome tracking_identity() {
  Outcome o;
  SynthConfig cfg;
  cfg.runners = 4;
  cfg.rps = {3};
  cfg.frames = 175;
  cfg.track_runners = 2;
  const auto clean = generate_synthetic(cfg, 21);
  const auto a = run_stream(clean, {}, nullptr);
  const auto switches = count_id_switches(a.truth_to_id);
  o.require(switches == 0, std::to_string(switches) + " id switches on the crossing oracle");

  cfg.dropout_start = 60;
  cfg.dropout_length = 10;
  const auto gap = generate_synthetic(cfg, 21);
  TrackerConfig tc;
  tc.seed_bbox = gap.initial_boxes[0];
  ConstantVelocityBackup backup;
  const auto b = run_stream(gap, tc, &backup);
  o.require(b.roi.has_value(), "no runner of interest designated");
  std::set<int> roi_ids, backup_frames;
  for (const auto& frame : b.truth_to_id)
    for (auto [truth, id] : frame)
      if (truth == 0) roi_ids.insert(id);
  for (const auto& frame : b.outputs)
    for (const auto& out : frame)
      if (out.source == TrackSource::kBackup && b.roi && out.id == *b.roi) backup_frames.insert(out.frame);
  std::size_t covered = 0;
  for (int f = 60; f < 70; ++f) covered += backup_frames.count(f);
  o.require(roi_ids.size() == 1 && b.roi && *roi_ids.begin() == *b.roi, "runner-of-interest id changed");
  o.require(covered == 10, std::to_string(covered) + " of 10 dropout frames carried by the backup");
  o.require(count_id_switches(b.truth_to_id) == 0, "id switches with dropout");
  o.note("175 frames, 0 switches; dropout frames 60-69 bridged with id " + std::to_string(b.roi.value_or(-1)));
  return o;
}

Outcome discretization() {
  Outcome o;
  Rng rng(404);
  int violations = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<std::string, double>> times;
    std::set<double> used;
    while (times.size() < 100) {
      const double t = std::round(rng.uniform(3000, 9000) * 1000.0) / 1000.0;
      if (used.insert(t).second) times.emplace_back("r" + std::to_string(times.size()), t);
    }
    std::map<int, std::map<std::string, int>> by_c;
    for (int C : {2, 3, 4}) {
      const auto labels = discretize(times, C);
      by_c[C] = labels;
      std::vector<int> counts(static_cast<std::size_t>(C), 0);
      for (const auto& [r, l] : labels) ++counts[static_cast<std::size_t>(l - 1)];
      violations += *std::max_element(counts.begin(), counts.end()) - *std::min_element(counts.begin(), counts.end()) > 1;
      auto shuffled = times;
      rng.shuffle(std::span(shuffled));
      violations += discretize(shuffled, C) != labels;
      auto scaled = times;
      const double k = rng.uniform(0.01, 100.0);
      for (auto& [r, t] : scaled) t *= k;
      violations += discretize(scaled, C) != labels;
    }
    for (const auto& [r, l] : by_c[4]) violations += l == 1 && by_c[2].at(r) != 1;
  }
  o.require(violations == 0, std::to_string(violations) + " property violations");
  o.note("n=100, C in {2,3,4}, 50 draws: balanced, permutation/scale invariant, coarsening consistent");
  return o;
}

DatasetSlice synthetic_slice(int runners, int categories, double separation, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.runners = runners;
  cfg.rps = {3};
  cfg.categories = categories;
  cfg.separation = separation;
  cfg.frames = 0;
  const auto ds = generate_synthetic(cfg, seed);
  return build_current(ds.clips, ds.splits, 3, ContextMode::kRaw, categories);
}

ProtocolConfig boosted_protocol(std::uint64_t seed) {
  ProtocolConfig c;
  c.iterations = 100;
  c.folds = 4;
  c.master_seed = seed;
  c.classifier.kind = ModelKind::kBoosted;
  c.classifier.boosted.n_rounds = 200;
  c.classifier.boosted.max_depth = 7;
  c.classifier.boosted.learning_rate = 0.1;
  return c;
}

ProtocolConfig linear_protocol(std::uint64_t seed) {
  ProtocolConfig c;
  c.iterations = 100;
  c.folds = 4;
  c.master_seed = seed;
  c.classifier.kind = ModelKind::kLogisticRegression;
  return c;
}

Outcome protocol_fidelity() {
  Outcome o;
  const auto start = Clock::now();
  const auto data = synthetic_slice(200, 2, 6.0, 606);
  const auto config = boosted_protocol(7);

  const auto parallel = run_protocol(data, config, Execution::kParallel);
  const double protocol_seconds = seconds_since(start);
  o.require(parallel.accuracy_mean >= 0.95, fmt("delta=6 accuracy %.4f < 0.95", parallel.accuracy_mean));
  o.note(fmt("delta=6 accuracy %.4f +- %.4f", parallel.accuracy_mean, parallel.accuracy_std));

  const auto sequential = run_protocol(data, config, Execution::kSequential);
  const bool identical = report_to_json(sequential) == report_to_json(parallel);
  o.require(identical, "sequential and parallel reports differ");
  o.note(identical ? "sequential and parallel reports byte-identical" : "");

  auto shuffled = data;
  auto labels = shuffled.labels();
  Rng rng(derive_seed(7, 0x5A));
  rng.shuffle(std::span(labels));
  for (std::size_t i = 0; i < labels.size(); ++i) shuffled.examples[i].label = labels[i];
  const auto chance = run_protocol(shuffled, config, Execution::kParallel);
  // Binomial standard error of an accuracy over the n pooled examples.
  const double p = 1.0 / data.categories;
  const double se = std::sqrt(p * (1 - p) / static_cast<double>(data.examples.size()));
  o.require(std::abs(chance.accuracy_mean - p) <= 3 * se,
            fmt("shuffled accuracy %.4f outside %.4f +- %.4f", chance.accuracy_mean, p, 3 * se));
  o.note(fmt("shuffled accuracy %.4f (chance %.2f +- %.4f)", chance.accuracy_mean, p, 3 * se));

  o.require(protocol_seconds < 120.0, fmt("run_protocol %.1f s >= 120 s", protocol_seconds));
  o.note(fmt("run_protocol %.1f s; with the sequential and shuffled runs %.1f s", protocol_seconds,
             seconds_since(start)));
  o.note("boosted 200 rounds depth 7, 100 iterations x 4 folds, " + std::to_string(omp_get_max_threads()) +
         " OpenMP threads on " + std::to_string(std::thread::hardware_concurrency()) + " hardware threads");
  return o;
}

Outcome category_degradation() {
  Outcome o;
  SynthConfig cfg;
  cfg.runners = 200;
  cfg.rps = {3};
  cfg.categories = 4;
  cfg.separation = 2.0;
  cfg.informative_dims = static_cast<int>(kLogitsDim);
  cfg.frames = 0;
  const auto ds = generate_synthetic(cfg, 707);
  std::vector<double> means;
  for (int C : {2, 3, 4}) {
    const auto slice = build_current(ds.clips, ds.splits, 3, ContextMode::kRaw, C);
    means.push_back(run_protocol(slice, linear_protocol(8)).accuracy_mean);
  }
  o.require(means[0] > means[1] && means[1] > means[2], "ordering C=2 > C=3 > C=4 violated");
  o.note(fmt("C=2 %.4f, C=3 %.4f, C=4 %.4f (logistic regression, 100 iterations)", means[0], means[1], means[2]));
  return o;
}

Outcome next_rp_degradation() {
  Outcome o;
  SynthConfig cfg;
  cfg.runners = 200;
  cfg.rps = {3, 4};
  cfg.categories = 2;
  cfg.separation = 4.0;
  cfg.next_flip_rate = 0.15;
  cfg.informative_dims = static_cast<int>(kLogitsDim);
  cfg.frames = 0;
  const auto ds = generate_synthetic(cfg, 808);
  const auto current = build_current(ds.clips, ds.splits, 3, ContextMode::kRaw, 2);
  const auto next = build_next(ds.clips, ds.splits, 3, ContextMode::kRaw, 2, rp_order_of(ds.splits));
  const double a = run_protocol(current, linear_protocol(9)).accuracy_mean;
  const double b = run_protocol(next, linear_protocol(9)).accuracy_mean;
  o.require(a - b >= 0.02, fmt("drop %.4f < 0.02", a - b));
  o.note(fmt("current %.4f, next %.4f, drop %.1f points", a, b, 100 * (a - b)));
  return o;
}

Outcome roc_confusion_artifacts() {
  Outcome o;
  std::vector<double> scores(1000);
  std::vector<int> positive(1000);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = static_cast<double>(i) / 1000.0;
    positive[i] = i >= 500;
  }
  const double perfect = roc_curve(scores, positive).auc;
  o.require(std::abs(perfect - 1.0) <= 1e-12, fmt("perfect ranking auc %.15f", perfect));
  Rng rng(909);
  rng.shuffle(std::span(positive));
  const double shuffled = roc_curve(scores, positive).auc;
  o.require(shuffled >= 0.45 && shuffled <= 0.55, fmt("shuffled auc %.4f", shuffled));

  auto cfg = linear_protocol(10);
  cfg.iterations = 20;
  const auto report = run_protocol(synthetic_slice(200, 3, 1.5, 910), cfg);
  const double ratio = static_cast<double>(report.confusion.trace()) / static_cast<double>(report.confusion.total());
  o.require(std::abs(ratio - report.pooled_accuracy) <= 1e-12, "trace/total differs from pooled accuracy");

  SynthConfig sc;
  sc.runners = 80;
  sc.separation = 3.0;
  sc.informative_dims = static_cast<int>(kLogitsDim);
  sc.modes = {ContextMode::kRaw, ContextMode::kBoundingBox, ContextMode::kVibe};
  sc.frames = 0;
  const auto ds = generate_synthetic(sc, 911);
  std::map<AblationKey, std::optional<DatasetSlice>> cells;
  for (Task task : {Task::kCurrent, Task::kNext})
    for (int C : {2, 3, 4})
      for (ContextMode mode : kAllContextModes)
        cells[{task, C, mode}] = build_union(ds.clips, ds.splits, sc.rps, mode, C, task);
  auto quick = linear_protocol(11);
  quick.iterations = 3;
  quick.classifier.linear.epochs = 50;
  const auto rows = ablation_table(cells, quick);
  std::size_t filled = 0;
  for (const auto& r : rows) filled += r.mean.has_value();
  const auto grid = ablation_grid(rows);
  bool layout = rows.size() == 18 && grid.find("| Raw") != std::string::npos && grid.find("| BB") != std::string::npos &&
                grid.find("| VIBE") != std::string::npos;
  for (const char* label : {"Curr-2", "Curr-3", "Curr-4", "Next-2", "Next-3", "Next-4"})
    layout = layout && grid.find(label) != std::string::npos;
  o.require(layout && filled == 18, "ablation table layout or cells incomplete");
  o.note(fmt("perfect auc %.15f, shuffled auc %.4f", perfect, shuffled));
  o.note(fmt("|trace/total - pooled| = %.2g", std::abs(ratio - report.pooled_accuracy)));
  o.note(std::to_string(filled) + " of 18 ablation cells in a 6x3 grid");
  return o;
}

Outcome classifier_sanity() {
  Outcome o;
  BoostedParams full;
  full.n_rounds = 200;
  full.max_depth = 7;
  full.learning_rate = 0.1;

  TrainingSet xor4;
  xor4.x = FeatureMatrix(4, 2);
  xor4.x.values = {0, 0, 0, 1, 1, 0, 1, 1};
  xor4.y = {0, 1, 1, 0};
  const double xor_acc = accuracy(train_boosted(xor4, full), xor4);
  o.require(xor_acc == 1.0, fmt("XOR-4 training accuracy %.3f", xor_acc));

  TrainingSet sep;
  sep.x = FeatureMatrix(100, 5);
  Rng rng(1001);
  for (std::size_t i = 0; i < 100; ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
      sep.x(i, j) = rng.uniform(-1, 1);
      dot += sep.x(i, j) * (static_cast<double>(j) - 2.0);
    }
    sep.y.push_back(dot > 0.0);
  }
  const double sep_acc = accuracy(train_boosted(sep, full), sep);
  o.require(sep_acc == 1.0, fmt("separable training accuracy %.3f", sep_acc));

  int loss_failures = 0, runs = 0;
  for (double delta : {0.5, 1.0, 2.0, 6.0}) {
    for (int C : {2, 3, 4}) {
      const auto slice = synthetic_slice(60, C, delta, 1002 + static_cast<std::uint64_t>(C));
      const auto model = train_boosted(make_training_set(slice), full);
      const auto& loss = std::get<BoostedModel>(model.payload()).training_loss;
      loss_failures += !(loss.back() < loss.front());
      ++runs;
    }
  }
  o.require(loss_failures == 0, std::to_string(loss_failures) + " synthetics without a loss decrease");
  o.note("200 rounds, depth 7, cross-entropy: XOR-4 and separable data fit exactly; loss falls on " +
         std::to_string(runs - loss_failures) + " of " + std::to_string(runs) + " synthetics");
  return o;
}

}  // namespace

int main() {
  std::printf("acceptance: %d OpenMP threads, %u hardware threads\n", omp_get_max_threads(),
              std::thread::hardware_concurrency());
  report("assignment optimality", assignment_optimality, 10.0);
  report("kalman invariants", kalman_invariants, 5.0);
  report("tracking identity", tracking_identity, 5.0);
  report("discretization", discretization);
  report("protocol fidelity", protocol_fidelity);
  report("category-count degradation", category_degradation);
  report("next-RP degradation", next_rp_degradation);
  report("ROC/confusion artifacts", roc_confusion_artifacts);
  report("classifier sanity", classifier_sanity);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
