#include "runperf/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "runperf/rng.hpp"

namespace runperf {

namespace {

// Seed streams, so that changing one part of the config leaves the others intact.
enum Stream : std::uint64_t { kOrderStream = 1, kTimeStream, kLogitStream, kDetectionStream };

constexpr double kWinnerPace = 13.0 * 3600.0 / 128.0;  // s/km over the full course
constexpr double kLastPace = 30.0 * 3600.0 / 128.0;
constexpr double kFastestSegmentPace = 300.0;

double km_of(int rp) {
  for (const auto& info : reference_recording_points()) {
    if (info.rp == rp) return info.km;
  }
  return 20.0 * rp;
}

int rank_label(std::size_t rank, std::size_t n, int categories) {
  return static_cast<int>(rank * static_cast<std::size_t>(categories) / n) + 1;
}

}  // namespace

std::string runner_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "r%03d", index + 1);
  return buf;
}

void validate(const SynthConfig& c) {
  if (c.categories < 2) throw Error("synthetic config: categories must be at least 2");
  if (c.runners < c.categories) throw Error("synthetic config: runner count must be at least the category count");
  if (c.rps.empty()) throw Error("synthetic config: at least one recording point is required");
  for (std::size_t i = 1; i < c.rps.size(); ++i) {
    if (c.rps[i] <= c.rps[i - 1]) throw Error("synthetic config: rps must be strictly increasing");
  }
  if (c.modes.empty()) throw Error("synthetic config: at least one context mode is required");
  if (!(c.separation >= 0.0)) throw Error("synthetic config: separation must be non-negative");
  for (const auto& [mode, sep] : c.mode_separation) {
    if (!(sep >= 0.0)) throw Error("synthetic config: separation must be non-negative");
  }
  if (!(c.noise_sigma > 0.0)) throw Error("synthetic config: noise sigma must be positive");
  if (c.informative_dims < 1 || c.informative_dims > static_cast<int>(kLogitsDim)) {
    throw Error("synthetic config: informative_dims must lie in [1, 400]");
  }
  if (!(c.next_flip_rate >= 0.0 && c.next_flip_rate <= 1.0)) throw Error("synthetic config: flip rate must lie in [0,1]");
  if (!(c.attrition >= 0.0 && c.attrition < 1.0)) throw Error("synthetic config: attrition must lie in [0,1)");
  if (c.frames < 0 || c.track_runners < 0) throw Error("synthetic config: frames and track_runners must be >= 0");
  if (c.feature_dim == 0) throw Error("synthetic config: feature_dim must be positive");
}

SyntheticDataset generate_synthetic(const SynthConfig& config, std::uint64_t seed) {
  validate(config);
  SyntheticDataset out;
  const int C = config.categories;

  // Finishing order per RP. Later RPs keep the previous order for survivors,
  // then swap pairs across category boundaries to realise the flip rate.
  std::vector<std::vector<int>> order(config.rps.size());
  {
    Rng rng(derive_seed(seed, kOrderStream));
    order[0].resize(static_cast<std::size_t>(config.runners));
    std::iota(order[0].begin(), order[0].end(), 0);
    rng.shuffle(std::span<int>(order[0]));
    for (std::size_t p = 1; p < config.rps.size(); ++p) {
      for (int runner : order[p - 1]) {
        if (!rng.bernoulli(config.attrition)) order[p].push_back(runner);
      }
      auto& cur = order[p];
      const std::size_t n = cur.size();
      if (n < static_cast<std::size_t>(C)) throw Error("synthetic config: attrition left fewer runners than categories");
      const auto target = static_cast<std::size_t>(std::lround(config.next_flip_rate * static_cast<double>(n)));
      std::vector<char> flipped(n, 0);
      std::size_t n_flipped = 0;
      for (std::size_t attempt = 0; n_flipped < target && attempt < 200 * n; ++attempt) {
        const auto i = static_cast<std::size_t>(rng.below(n));
        const auto j = static_cast<std::size_t>(rng.below(n));
        if (flipped[i] || flipped[j] || rank_label(i, n, C) == rank_label(j, n, C)) continue;
        std::swap(cur[i], cur[j]);
        flipped[i] = flipped[j] = 1;
        n_flipped += 2;
      }
    }
  }

  // Split times: strictly increasing along each RP's order and per runner.
  std::vector<double> previous_time(static_cast<std::size_t>(config.runners), 0.0);
  {
    Rng rng(derive_seed(seed, kTimeStream));
    double previous_km = 0.0;
    for (std::size_t p = 0; p < config.rps.size(); ++p) {
      const int rp = config.rps[p];
      const double km = km_of(rp);
      const std::size_t n = order[p].size();
      double last = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const int runner = order[p][r];
        const double position = (static_cast<double>(r) + 0.1 + 0.8 * rng.uniform()) / static_cast<double>(n);
        double t = km * (kWinnerPace + (kLastPace - kWinnerPace) * position);
        t = std::max(t, previous_time[static_cast<std::size_t>(runner)] + (km - previous_km) * kFastestSegmentPace);
        if (r > 0) t = std::max(t, last + 1.0);
        t = std::round(t * 1000.0) / 1000.0;
        if (r > 0 && t <= last) t = last + 0.001;
        last = t;
        previous_time[static_cast<std::size_t>(runner)] = t;
        out.splits.push_back({runner_name(runner), rp, t});
        out.labels[{rp, runner_name(runner)}] = rank_label(r, n, C);
      }
      previous_km = km;
    }
    std::sort(out.splits.begin(), out.splits.end(), [](const auto& a, const auto& b) {
      return a.runner != b.runner ? a.runner < b.runner : a.rp < b.rp;
    });
  }

  // Clip embeddings: a shared offset plus a class shift along a fixed direction.
  {
    Rng rng(derive_seed(seed, kLogitStream));
    std::vector<double> base(kLogitsDim);
    for (auto& b : base) b = 2.0 * rng.normal();
    std::vector<int> dims(kLogitsDim);
    std::iota(dims.begin(), dims.end(), 0);
    rng.shuffle(std::span<int>(dims));
    std::vector<double> direction(kLogitsDim, 0.0);
    for (int k = 0; k < config.informative_dims; ++k) {
      direction[static_cast<std::size_t>(dims[static_cast<std::size_t>(k)])] =
          1.0 / std::sqrt(static_cast<double>(config.informative_dims));
    }
    for (ContextMode mode : config.modes) {
      const auto it = config.mode_separation.find(mode);
      const double sep = (it != config.mode_separation.end() ? it->second : config.separation) * config.noise_sigma;
      for (std::size_t p = 0; p < config.rps.size(); ++p) {
        std::vector<int> runners = order[p];
        std::sort(runners.begin(), runners.end());
        for (int runner : runners) {
          const std::string name = runner_name(runner);
          const int label = out.labels.at({config.rps[p], name});
          ClipRecord rec{name, config.rps[p], mode, std::vector<float>(kLogitsDim)};
          for (std::size_t j = 0; j < kLogitsDim; ++j) {
            const double mean = base[j] + (label - 1) * sep * direction[j];
            rec.logits[j] = static_cast<float>(mean + config.noise_sigma * rng.normal());
          }
          out.clips.push_back(std::move(rec));
        }
      }
    }
  }

  // Detection stream: constant-velocity runners; the first two cross mid-clip.
  if (config.frames > 0 && config.track_runners > 0) {
    Rng rng(derive_seed(seed, kDetectionStream));
    const double W = config.frame_width;
    const double H = config.frame_height;
    const double span = std::max(1, config.frames - 1);
    struct Path {
      BBox start;
      double vx, vy;
      std::vector<double> appearance;
    };
    std::vector<Path> paths;
    for (int i = 0; i < config.track_runners; ++i) {
      Path path;
      const double h = 0.3 * H + 0.05 * H * rng.uniform();
      const double w = 0.4 * h;
      if (i < 2) {
        const double x_from = (i == 0 ? 0.15 : 0.85) * W + 20.0 * (rng.uniform() - 0.5);
        const double x_to = (i == 0 ? 0.85 : 0.15) * W + 20.0 * (rng.uniform() - 0.5);
        const double y = 0.5 * H + (i == 0 ? -0.02 : 0.02) * H;
        path.start = {x_from, y, w, h};
        path.vx = (x_to - x_from) / span;
        path.vy = (i == 0 ? 0.05 : -0.05) * H / span;
      } else {
        path.start = {rng.uniform(0.15, 0.85) * W, rng.uniform(0.3, 0.7) * H, w, h};
        path.vx = rng.uniform(-0.5, 0.5) * W / span;
        path.vy = rng.uniform(-0.1, 0.1) * H / span;
      }
      path.appearance.resize(config.feature_dim);
      for (auto& v : path.appearance) v = rng.normal();
      paths.push_back(std::move(path));
      out.initial_boxes.push_back(paths.back().start);
    }
    for (int frame = 0; frame < config.frames; ++frame) {
      for (int i = 0; i < config.track_runners; ++i) {
        const auto& path = paths[static_cast<std::size_t>(i)];
        Detection det;
        det.frame = frame;
        det.bbox = {path.start.cx + path.vx * frame + 0.5 * rng.normal(),
                    path.start.cy + path.vy * frame + 0.5 * rng.normal(), path.start.w + 0.3 * rng.normal(),
                    path.start.h + 0.3 * rng.normal()};
        det.confidence = 0.8 + 0.2 * rng.uniform();
        det.feature.resize(config.feature_dim);
        double norm = 0.0;
        for (std::size_t k = 0; k < config.feature_dim; ++k) {
          det.feature[k] = path.appearance[k] + config.feature_noise * rng.normal();
          norm += det.feature[k] * det.feature[k];
        }
        norm = std::sqrt(norm);
        for (auto& v : det.feature) v /= norm;
        const bool dropped =
            i == 0 && frame >= config.dropout_start && frame < config.dropout_start + config.dropout_length;
        if (dropped) continue;
        out.detections.push_back(std::move(det));
        out.detection_truth.push_back(i);
      }
    }
  }
  return out;
}

}  // namespace runperf
