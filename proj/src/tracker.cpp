#include "prt/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "prt/solvers.hpp"

namespace prt {

void TrackerConfig::validate() const {
  auto require = [](bool ok, const char* field) {
    if (!ok) throw ConfigInvalid(std::string("tracker.") + field + " out of range");
  };
  require(alpha >= 0.0 && alpha <= 1.0, "alpha");
  require(appearance_weight >= 0.0 && appearance_weight <= 1.0, "appearance_weight");
  require(match_threshold >= 0.0, "match_threshold");
  require(iou_gate >= 0.0 && iou_gate <= 1.0, "iou_gate");
  require(max_age >= 0, "max_age");
  require(n_init >= 1, "n_init");
}

Mat build_cost(std::span<const AssociationInput> tracks, std::span<const AssociationInput> dets,
               const TrackerConfig& cfg) {
  const double w = cfg.appearance_weight;
  Mat cost(static_cast<Eigen::Index>(tracks.size()), static_cast<Eigen::Index>(dets.size()));
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    for (std::size_t j = 0; j < dets.size(); ++j) {
      double app = kInf;
      if (tracks[i].features && dets[j].features) {
        app = part_distance_or_inf(*tracks[i].features, *dets[j].features);
      }
      const double overlap = iou(tracks[i].box, dets[j].box);
      double c;
      if (std::isinf(app) && w > 0.0) {
        c = kInf;
      } else if (w == 0.0) {
        c = 1.0 - overlap;
      } else {
        c = w * app + (1.0 - w) * (1.0 - overlap);
      }
      if (overlap < cfg.iou_gate && c > cfg.match_threshold) c = kInf;
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c;
    }
  }
  return cost;
}

PartFeatureSet ema_update(const PartFeatureSet& track, const PartFeatureSet& det, double alpha,
                          EmaMode mode) {
  if (track.num_parts() != det.num_parts() || track.dim() != det.dim()) {
    throw DimMismatch("ema_update: feature sets differ in K or D");
  }
  PartFeatureSet out;
  out.foreground = track.foreground;
  out.parts = track.parts;
  out.visibility = track.visibility;
  for (int i = 0; i <= track.num_parts(); ++i) {
    const double v_old = track.visibility[i];
    const double v_new = det.visibility[i];
    Vec e = alpha * v_old * track.embedding(i) + (1.0 - alpha) * v_new * det.embedding(i);
    if (mode == EmaMode::Normalized) {
      const double norm = alpha * v_old + (1.0 - alpha) * v_new;
      e = norm > 0.0 ? Vec(e / norm) : track.embedding(i);
    }
    out.embedding(i) = std::move(e);
    out.visibility[i] = static_cast<std::uint8_t>(track.visibility[i] | det.visibility[i]);
  }
  return out;
}

Tracker::Tracker(TrackerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

std::vector<TrackOutput> Tracker::step(const FrameInput& input) {
  if (input.frame <= last_frame_) {
    throw NonMonotoneFrame("frame " + std::to_string(input.frame) + " after frame " +
                           std::to_string(last_frame_));
  }
  for (const auto& d : input.detections) {
    if (d.frame != input.frame) throw std::invalid_argument("detection frame differs from input frame");
    if (cfg_.appearance_weight > 0.0 && !d.features) {
      throw std::invalid_argument("detections need part features when appearance is weighted");
    }
  }
  last_frame_ = input.frame;

  for (auto& t : active_) t.tracklet.kalman = kalman_predict(t.tracklet.kalman, cfg_.noise);

  std::vector<AssociationInput> track_in, det_in;
  track_in.reserve(active_.size());
  for (const auto& t : active_) {
    track_in.push_back({t.tracklet.kalman.box(), &t.tracklet.ema_features});
  }
  for (const auto& d : input.detections) {
    det_in.push_back({d.box, d.features ? &*d.features : nullptr});
  }
  const Assignment match = hungarian(build_cost(track_in, det_in, cfg_), kInf);

  std::vector<char> det_used(input.detections.size(), 0), track_used(active_.size(), 0);
  std::vector<TrackOutput> out;
  for (const auto& [ti, di] : match.pairs) {
    track_used[ti] = det_used[di] = 1;
    Track& t = active_[ti];
    Detection det = input.detections[di];
    det.truth.reset();
    t.tracklet.kalman = kalman_update(t.tracklet.kalman, det.box, cfg_.noise);
    if (det.features) {
      t.tracklet.ema_features = ema_update(t.tracklet.ema_features, *det.features, cfg_.alpha, cfg_.ema_mode);
    }
    t.tracklet.frames.last = input.frame;
    t.tracklet.detections.push_back(std::move(det));
    ++t.hits;
    t.misses = 0;
    if (t.tracklet.status == TrackStatus::Lost ||
        (t.tracklet.status == TrackStatus::Tentative && t.hits >= cfg_.n_init)) {
      t.tracklet.status = TrackStatus::Confirmed;
      t.confirmed_once = true;
    }
    if (t.tracklet.status == TrackStatus::Confirmed) {
      const auto& d = t.tracklet.detections.back();
      out.push_back({t.tracklet.id, input.frame, d.box, d.confidence});
    }
  }

  for (std::size_t i = 0; i < active_.size(); ++i) {
    if (track_used[i]) continue;
    Track& t = active_[i];
    ++t.misses;
    if (t.tracklet.status == TrackStatus::Tentative || t.misses > cfg_.max_age) {
      t.tracklet.status = TrackStatus::Finished;
    } else {
      t.tracklet.status = TrackStatus::Lost;
    }
  }

  std::vector<Track> keep;
  keep.reserve(active_.size() + input.detections.size());
  for (auto& t : active_) {
    if (t.tracklet.status != TrackStatus::Finished) {
      keep.push_back(std::move(t));
    } else if (t.confirmed_once) {
      t.tracklet.segments = {t.tracklet.frames};
      done_.push_back(std::move(t.tracklet));
    }
  }
  active_ = std::move(keep);

  for (std::size_t j = 0; j < input.detections.size(); ++j) {
    if (det_used[j]) continue;
    Track t;
    Detection det = input.detections[j];
    det.truth.reset();
    t.tracklet.id = next_id_++;
    t.tracklet.kalman = kalman_initiate(det.box, cfg_.noise);
    if (det.features) {
      t.tracklet.ema_features = *det.features;
      t.tracklet.ema_features.concat = Vec();
      t.tracklet.ema_features.global.reset();
    }
    t.tracklet.frames = {input.frame, input.frame};
    t.tracklet.detections.push_back(std::move(det));
    t.hits = 1;
    if (cfg_.n_init <= 1) {
      t.tracklet.status = TrackStatus::Confirmed;
      t.confirmed_once = true;
      const auto& d = t.tracklet.detections.back();
      out.push_back({t.tracklet.id, input.frame, d.box, d.confidence});
    }
    active_.push_back(std::move(t));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.track_id < b.track_id; });
  return out;
}

std::vector<Tracklet> Tracker::finish() {
  for (auto& t : active_) {
    if (!t.confirmed_once) continue;
    t.tracklet.status = TrackStatus::Finished;
    t.tracklet.segments = {t.tracklet.frames};
    done_.push_back(std::move(t.tracklet));
  }
  active_.clear();
  std::vector<Tracklet> out = std::move(done_);
  done_.clear();
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

std::vector<Tracklet> Tracker::active_tracks() const {
  std::vector<Tracklet> out;
  for (const auto& t : active_) out.push_back(t.tracklet);
  return out;
}

}  // namespace prt
