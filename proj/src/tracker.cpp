#include "runperf/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace runperf {

double appearance_cost(const Track& track, const Detection& detection) {
  if (track.gallery.empty()) throw Error("appearance_cost: track " + std::to_string(track.id) + " has an empty gallery");
  double best = 2.0;
  for (const auto& member : track.gallery) {
    if (member.size() != detection.feature.size()) throw Error("appearance_cost: feature dimension mismatch");
    double dot = 0.0;
    for (std::size_t k = 0; k < member.size(); ++k) dot += member[k] * detection.feature[k];
    best = std::min(best, 1.0 - dot);
  }
  return std::clamp(best, 0.0, 2.0);
}

// ------------------------------------------------------------ backup tracker

ConstantVelocityBackup::ConstantVelocityBackup(double min_iou, std::size_t window)
    : min_iou_(min_iou), window_(std::max<std::size_t>(window, 2)) {}

void ConstantVelocityBackup::reset() { history_.clear(); }

void ConstantVelocityBackup::observe(int frame, const BBox& box) {
  if (!history_.empty() && frame <= history_.back().first) history_.clear();
  history_.emplace_back(frame, box);
  while (history_.size() > window_) history_.pop_front();
}

std::optional<BBox> ConstantVelocityBackup::propose(int frame) {
  if (history_.empty()) return std::nullopt;
  const auto& [last_frame, last] = history_.back();
  const auto& [first_frame, first] = history_.front();
  double vx = 0.0, vy = 0.0;
  if (last_frame > first_frame) {
    const double span = last_frame - first_frame;
    vx = (last.cx - first.cx) / span;
    vy = (last.cy - first.cy) / span;
  }
  const double dt = frame - last_frame;
  const BBox proposal{last.cx + vx * dt, last.cy + vy * dt, last.w, last.h};
  if (iou(proposal, last) < min_iou_) return std::nullopt;
  return proposal;
}

// ------------------------------------------------------------------ tracker

Tracker::Tracker(TrackerConfig config) : config_(std::move(config)) {
  if (config_.max_age < 1 || config_.n_init < 1 || config_.gallery_size < 1) {
    throw Error("tracker config: max_age, n_init and gallery_size must be positive");
  }
}

Track* Tracker::find(int id) {
  for (auto& t : tracks_) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

Eigen::MatrixXd Tracker::appearance_costs(std::span<const Detection> detections,
                                          const std::vector<std::size_t>& track_ids,
                                          const std::vector<std::size_t>& detection_ids) const {
  Eigen::MatrixXd cost(track_ids.size(), detection_ids.size());
  const double lambda = config_.motion_weight;
  for (std::size_t r = 0; r < track_ids.size(); ++r) {
    const Track& track = tracks_[track_ids[r]];
    const Projection proj = kalman_project(track.state, config_.kalman);
    for (std::size_t c = 0; c < detection_ids.size(); ++c) {
      const Detection& det = detections[detection_ids[c]];
      const double maha = squared_mahalanobis(proj, to_measurement(det.bbox));
      if (maha > config_.gating_threshold) {
        cost(r, c) = kGatedCost;
        continue;
      }
      const double app = appearance_cost(track, det);
      cost(r, c) = lambda > 0.0 ? lambda * (maha / config_.gating_threshold) + (1.0 - lambda) * app : app;
    }
  }
  return cost;
}

Eigen::MatrixXd Tracker::iou_costs(std::span<const Detection> detections, const std::vector<std::size_t>& track_ids,
                                   const std::vector<std::size_t>& detection_ids) const {
  Eigen::MatrixXd cost(track_ids.size(), detection_ids.size());
  for (std::size_t r = 0; r < track_ids.size(); ++r) {
    const Track& track = tracks_[track_ids[r]];
    const BBox predicted = to_bbox(track.state.mean);
    for (std::size_t c = 0; c < detection_ids.size(); ++c) {
      cost(r, c) = track.frames_since_update > 1 ? kGatedCost
                                                 : 1.0 - iou(predicted, detections[detection_ids[c]].bbox);
    }
  }
  return cost;
}

void Tracker::min_cost_matching(const Eigen::MatrixXd& cost_in, double max_distance,
                                const std::vector<std::size_t>& track_ids,
                                const std::vector<std::size_t>& detection_ids, std::vector<Match>& matches,
                                std::vector<std::size_t>& unmatched_tracks,
                                std::vector<std::size_t>& unmatched_detections) const {
  unmatched_tracks.clear();
  unmatched_detections.clear();
  if (track_ids.empty() || detection_ids.empty()) {
    unmatched_tracks = track_ids;
    unmatched_detections = detection_ids;
    return;
  }
  Eigen::MatrixXd cost = cost_in;
  for (Eigen::Index i = 0; i < cost.size(); ++i) {
    double& v = cost.data()[i];
    if (v < kGatedCost && v > max_distance) v = max_distance + 1e-5;
  }
  const AssignmentResult result = assign(cost);
  std::vector<char> det_used(detection_ids.size(), 0);
  for (int r : result.unmatched_rows) unmatched_tracks.push_back(track_ids[static_cast<std::size_t>(r)]);
  for (const auto& [r, c] : result.matches) {
    if (cost(r, c) > max_distance) {
      unmatched_tracks.push_back(track_ids[static_cast<std::size_t>(r)]);
    } else {
      matches.push_back({track_ids[static_cast<std::size_t>(r)], detection_ids[static_cast<std::size_t>(c)]});
      det_used[static_cast<std::size_t>(c)] = 1;
    }
  }
  for (std::size_t c = 0; c < detection_ids.size(); ++c) {
    if (!det_used[c]) unmatched_detections.push_back(detection_ids[c]);
  }
  std::sort(unmatched_tracks.begin(), unmatched_tracks.end());
}

void Tracker::match(std::span<const Detection> detections, std::vector<Match>& matches,
                    std::vector<std::size_t>& unmatched_tracks, std::vector<std::size_t>& unmatched_detections) const {
  std::vector<std::size_t> confirmed, unconfirmed;
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    if (tracks_[i].status == TrackStatus::kConfirmed) confirmed.push_back(i);
    if (tracks_[i].status == TrackStatus::kTentative) unconfirmed.push_back(i);
  }

  // Matching cascade: recently updated tracks pick first.
  std::vector<std::size_t> remaining(detections.size());
  for (std::size_t j = 0; j < remaining.size(); ++j) remaining[j] = j;
  std::vector<char> matched(tracks_.size(), 0);
  std::vector<std::size_t> level_unmatched_tracks, level_unmatched_dets;
  for (int level = 0; level < config_.max_age && !remaining.empty(); ++level) {
    std::vector<std::size_t> level_tracks;
    for (std::size_t i : confirmed) {
      if (tracks_[i].frames_since_update == 1 + level) level_tracks.push_back(i);
    }
    if (level_tracks.empty()) continue;
    const std::size_t before = matches.size();
    min_cost_matching(appearance_costs(detections, level_tracks, remaining), config_.max_cosine_distance,
                      level_tracks, remaining, matches, level_unmatched_tracks, level_unmatched_dets);
    for (std::size_t k = before; k < matches.size(); ++k) matched[matches[k].track] = 1;
    remaining = level_unmatched_dets;
  }

  // Overlap matching for tentative tracks and confirmed tracks missed just now.
  std::vector<std::size_t> iou_tracks = unconfirmed;
  std::vector<std::size_t> stale;
  for (std::size_t i : confirmed) {
    if (matched[i]) continue;
    (tracks_[i].frames_since_update == 1 ? iou_tracks : stale).push_back(i);
  }
  std::sort(iou_tracks.begin(), iou_tracks.end());
  std::vector<std::size_t> iou_unmatched;
  min_cost_matching(iou_costs(detections, iou_tracks, remaining), config_.max_iou_distance, iou_tracks, remaining,
                    matches, iou_unmatched, unmatched_detections);

  unmatched_tracks = stale;
  unmatched_tracks.insert(unmatched_tracks.end(), iou_unmatched.begin(), iou_unmatched.end());
  std::sort(unmatched_tracks.begin(), unmatched_tracks.end());
}

std::vector<TrackOutput> Tracker::step(int frame, std::span<const Detection> detections, BackupTracker* backup) {
  for (auto& t : tracks_) {
    if (t.status == TrackStatus::kDeleted) continue;
    t.state = kalman_predict(t.state, 1.0, config_.kalman);
    ++t.age;
    ++t.frames_since_update;
  }

  std::vector<Match> matches;
  std::vector<std::size_t> unmatched_tracks, unmatched_detections;
  match(detections, matches, unmatched_tracks, unmatched_detections);

  std::vector<TrackOutput> out;
  for (const auto& m : matches) {
    Track& t = tracks_[m.track];
    const Detection& det = detections[m.detection];
    t.state = kalman_update(t.state, det.bbox, config_.kalman);
    t.gallery.push_back(det.feature);
    while (t.gallery.size() > config_.gallery_size) t.gallery.pop_front();
    ++t.hits;
    t.frames_since_update = 0;
    t.last_bbox = det.bbox;
    if (t.status == TrackStatus::kTentative && t.hits >= config_.n_init) {
      t.status = TrackStatus::kConfirmed;
      t.ever_confirmed = true;
    }
    if (backup && roi_ && *roi_ == t.id) backup->observe(frame, det.bbox);
  }

  for (std::size_t i : unmatched_tracks) {
    Track& t = tracks_[i];
    if (backup && roi_ && *roi_ == t.id && t.status == TrackStatus::kConfirmed) {
      if (auto proposal = backup->propose(frame)) {
        t.state = kalman_update(t.state, *proposal, config_.kalman, config_.backup_noise_scale);
        out.push_back({frame, t.id, *proposal, TrackSource::kBackup});
      }
    }
    if (t.status == TrackStatus::kTentative || t.frames_since_update > config_.max_age) {
      t.status = TrackStatus::kDeleted;
    }
  }

  for (std::size_t j : unmatched_detections) {
    const Detection& det = detections[j];
    Track t;
    t.id = next_id_++;
    t.state = kalman_initiate(det.bbox, config_.kalman);
    t.gallery.push_back(det.feature);
    t.hits = 1;
    t.age = 1;
    t.first_frame = frame;
    t.first_bbox = det.bbox;
    t.last_bbox = det.bbox;
    if (config_.n_init <= 1) {
      t.status = TrackStatus::kConfirmed;
      t.ever_confirmed = true;
    }
    tracks_.push_back(std::move(t));
  }

  if (config_.seed_bbox && !roi_) {
    try {
      roi_ = select_runner_of_interest(tracks_, *config_.seed_bbox);
      if (backup) {
        backup->reset();
        const Track* t = find(*roi_);
        if (t && t->frames_since_update == 0) backup->observe(frame, t->last_bbox);
      }
    } catch (const Error&) {
      // No confirmed track overlaps the seed yet.
    }
  }

  for (const auto& t : tracks_) {
    if (t.status == TrackStatus::kConfirmed && t.frames_since_update == 0) {
      out.push_back({frame, t.id, to_bbox(t.state.mean), TrackSource::kMatch});
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

int select_runner_of_interest(std::span<const Track> tracks, const BBox& seed) {
  int best_id = -1;
  double best_iou = 0.0;
  bool any_confirmed = false;
  for (const auto& t : tracks) {
    if (!t.ever_confirmed) continue;
    any_confirmed = true;
    const double overlap = iou(t.first_bbox, seed);
    if (overlap > best_iou || (overlap == best_iou && overlap > 0.0 && t.id < best_id)) {
      best_iou = overlap;
      best_id = t.id;
    }
  }
  if (!any_confirmed) throw Error("runner-of-interest selection: no confirmed track");
  if (best_id < 0) throw Error("runner-of-interest selection: no confirmed track overlaps the seed box");
  return best_id;
}

std::size_t count_id_switches(const std::vector<std::vector<std::pair<int, int>>>& frames) {
  std::map<int, int> last_id;
  std::size_t switches = 0;
  for (const auto& frame : frames) {
    for (const auto& [truth, id] : frame) {
      auto [it, inserted] = last_id.emplace(truth, id);
      if (!inserted && it->second != id) {
        ++switches;
        it->second = id;
      }
    }
  }
  return switches;
}

}  // namespace runperf
