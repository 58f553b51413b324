#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "runperf/dataio.hpp"

namespace runperf {

/// Knobs for the seeded oracle dataset.
struct SynthConfig {
  int runners = 200;
  std::vector<int> rps = {3, 4, 5};
  int categories = 2;
  /// Distance between adjacent class means, in units of the noise sigma.
  double separation = 4.0;
  /// Per-mode override of `separation`; modes not listed use the default.
  std::map<ContextMode, double> mode_separation;
  std::vector<ContextMode> modes = {ContextMode::kRaw};
  double noise_sigma = 1.0;
  /// Number of logit coordinates that carry the class signal.
  int informative_dims = 1;
  /// Fraction of runners whose category changes between consecutive RPs.
  double next_flip_rate = 0.0;
  /// Probability that a runner present at one RP is absent from the next.
  double attrition = 0.0;

  // Detection stream.
  int frames = 175;
  int track_runners = 2;
  std::size_t feature_dim = kDefaultFeatureDim;
  double feature_noise = 0.05;
  double frame_width = 1280.0;
  double frame_height = 720.0;
  /// Frames [dropout_start, dropout_start + dropout_length) lose the
  /// detection of the first tracked runner.
  int dropout_start = -1;
  int dropout_length = 0;
};

struct SyntheticDataset {
  std::vector<Detection> detections;     // flat, ordered by frame then runner
  std::vector<int> detection_truth;      // ground-truth runner index per detection
  std::vector<ClipRecord> clips;
  std::vector<SplitRecord> splits;
  /// Generating category (1-based) per (rp, runner).
  std::map<std::pair<int, std::string>, int> labels;
  /// Bounding box of each tracked runner in frame 0.
  std::vector<BBox> initial_boxes;
};

void validate(const SynthConfig& config);

/// Deterministic in (config, seed). Category boundaries are placed so that
/// rank-quantile binning of the split times at each RP reproduces `labels`.
SyntheticDataset generate_synthetic(const SynthConfig& config, std::uint64_t seed);

std::string runner_name(int index);

}  // namespace runperf
