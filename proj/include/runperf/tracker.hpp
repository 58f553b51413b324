#pragma once

#include <cstddef>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "runperf/assignment.hpp"
#include "runperf/dataio.hpp"
#include "runperf/kalman.hpp"

namespace runperf {

enum class TrackStatus { kTentative, kConfirmed, kDeleted };

struct Track {
  int id = 0;
  KalmanState state;
  std::deque<std::vector<double>> gallery;  // most recent last
  TrackStatus status = TrackStatus::kTentative;
  bool ever_confirmed = false;
  int hits = 0;
  int age = 0;
  int frames_since_update = 0;
  int first_frame = 0;
  BBox first_bbox;
  BBox last_bbox;
};

/// Smallest cosine distance between the detection feature and any gallery
/// member, in [0, 2]. Both sides are expected to be unit norm.
double appearance_cost(const Track& track, const Detection& detection);

/// Single-object tracker consulted when association loses the runner of
/// interest.
class BackupTracker {
 public:
  virtual ~BackupTracker() = default;
  virtual void reset() = 0;
  /// Feeds a confirmed observation of the target.
  virtual void observe(int frame, const BBox& box) = 0;
  /// Proposed target box for `frame`, or nothing when the tracker has lost it.
  virtual std::optional<BBox> propose(int frame) = 0;
};

/// Extrapolates the last observed box at the velocity fitted over a short
/// window of observations. A proposal is withdrawn once its overlap with the
/// last observed box drops below `min_iou`.
class ConstantVelocityBackup final : public BackupTracker {
 public:
  explicit ConstantVelocityBackup(double min_iou = 0.1, std::size_t window = 10);

  void reset() override;
  void observe(int frame, const BBox& box) override;
  std::optional<BBox> propose(int frame) override;

 private:
  double min_iou_;
  std::size_t window_;
  std::deque<std::pair<int, BBox>> history_;
};

struct TrackerConfig {
  KalmanConfig kalman;
  int max_age = 30;
  int n_init = 3;
  std::size_t gallery_size = 100;
  double max_cosine_distance = 0.2;
  double max_iou_distance = 0.7;
  double gating_threshold = kChiSquare95Dof4;
  /// Weight of the normalised Mahalanobis term in the association cost;
  /// 0 uses appearance only.
  double motion_weight = 0.0;
  /// Measurement covariance multiplier applied to backup proposals.
  double backup_noise_scale = 4.0;
  /// Box of the runner of interest in the first annotated frame.
  std::optional<BBox> seed_bbox;
};

enum class TrackSource { kMatch, kBackup };

struct TrackOutput {
  int frame = 0;
  int id = 0;
  BBox bbox;
  TrackSource source = TrackSource::kMatch;
};

/// Tracking-by-detection over one video sequence. Not thread-safe; use one
/// instance per sequence.
class Tracker {
 public:
  explicit Tracker(TrackerConfig config = {});

  /// Processes one frame. `backup` may be null.
  std::vector<TrackOutput> step(int frame, std::span<const Detection> detections, BackupTracker* backup = nullptr);

  /// Every track created so far, including deleted ones, in id order.
  const std::vector<Track>& tracks() const { return tracks_; }
  std::optional<int> runner_of_interest() const { return roi_; }
  const TrackerConfig& config() const { return config_; }

 private:
  struct Match {
    std::size_t track;
    std::size_t detection;
  };

  void match(std::span<const Detection> detections, std::vector<Match>& matches,
             std::vector<std::size_t>& unmatched_tracks, std::vector<std::size_t>& unmatched_detections) const;
  void min_cost_matching(const Eigen::MatrixXd& cost, double max_distance, const std::vector<std::size_t>& track_ids,
                         const std::vector<std::size_t>& detection_ids, std::vector<Match>& matches,
                         std::vector<std::size_t>& unmatched_tracks,
                         std::vector<std::size_t>& unmatched_detections) const;
  Eigen::MatrixXd appearance_costs(std::span<const Detection> detections, const std::vector<std::size_t>& track_ids,
                                   const std::vector<std::size_t>& detection_ids) const;
  Eigen::MatrixXd iou_costs(std::span<const Detection> detections, const std::vector<std::size_t>& track_ids,
                            const std::vector<std::size_t>& detection_ids) const;
  Track* find(int id);

  TrackerConfig config_;
  std::vector<Track> tracks_;
  int next_id_ = 1;
  std::optional<int> roi_;
};

/// The confirmed track whose first box overlaps `seed` most; ties go to the
/// lower id. Throws when no confirmed track overlaps the seed.
int select_runner_of_interest(std::span<const Track> tracks, const BBox& seed);

/// Number of identity switches: for each ground-truth object, the count of
/// frames where its reported id differs from the previous reported id.
std::size_t count_id_switches(const std::vector<std::vector<std::pair<int, int>>>& truth_to_id_per_frame);

}  // namespace runperf
