#pragma once

#include <span>
#include <vector>

#include "prt/core.hpp"
#include "prt/kalman.hpp"

namespace prt {

enum class EmaMode {
  Literal,     // e <- a*e*v_old + (1-a)*f*v_new
  Normalized,  // same, divided by a*v_old + (1-a)*v_new
};

struct TrackerConfig {
  double alpha = 0.9;              // EMA momentum
  double appearance_weight = 0.75;
  double match_threshold = 0.4;    // fused-cost ceiling below iou_gate
  double iou_gate = 0.3;
  int max_age = 30;
  int n_init = 3;
  EmaMode ema_mode = EmaMode::Normalized;
  KalmanNoise noise;

  /// Throws ConfigInvalid naming the first field out of range.
  void validate() const;
};

struct FrameInput {
  int frame = 1;
  std::vector<Detection> detections;
};

/// What association may look at: a box and an appearance, nothing else.
struct AssociationInput {
  BoundingBox box;
  const PartFeatureSet* features = nullptr;
};

/// cost = w * part_distance + (1 - w) * (1 - IoU); +inf when IoU < iou_gate
/// and the cost exceeds match_threshold, or when the pair has no mutually
/// visible part (unless w is 0).
Mat build_cost(std::span<const AssociationInput> tracks, std::span<const AssociationInput> dets,
               const TrackerConfig& cfg);

/// Part-wise exponential moving average of a tracklet appearance. Visibility
/// bits become the OR of the tracklet and detection bits.
PartFeatureSet ema_update(const PartFeatureSet& track, const PartFeatureSet& det, double alpha,
                          EmaMode mode = EmaMode::Literal);

struct TrackOutput {
  int track_id = 0;
  int frame = 0;
  BoundingBox box;
  double confidence = 1.0;
};

/// Online tracker state for one sequence.
class Tracker {
public:
  explicit Tracker(TrackerConfig cfg = {});

  /// Predict, associate, update and manage lifecycles for one frame. Returns
  /// the Confirmed tracks matched in this frame. Throws NonMonotoneFrame.
  std::vector<TrackOutput> step(const FrameInput& input);

  /// Closes the sequence and returns every tracklet that reached Confirmed,
  /// ordered by id, with all of its detections.
  std::vector<Tracklet> finish();

  /// Tracks alive after the last step (Tentative, Confirmed or Lost).
  std::vector<Tracklet> active_tracks() const;
  const TrackerConfig& config() const { return cfg_; }

private:
  struct Track {
    Tracklet tracklet;
    int hits = 0;
    int misses = 0;
    bool confirmed_once = false;
  };

  TrackerConfig cfg_;
  std::vector<Track> active_;
  std::vector<Tracklet> done_;
  int next_id_ = 1;
  int last_frame_ = 0;
};

}  // namespace prt
