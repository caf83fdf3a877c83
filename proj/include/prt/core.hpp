#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "prt/errors.hpp"

namespace prt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Role : int { Player = 0, Goalkeeper = 1, Referee = 2, Staff = 3 };
inline constexpr int kNumRoles = 4;

enum class Team : int { Left = 0, Right = 1 };

std::string_view to_string(Role role);
std::string_view to_string(Team team);

using RoleLogits = std::array<double, kNumRoles>;

struct BoundingBox {
  double x = 0.0;  // top-left
  double y = 0.0;
  double w = 1.0;
  double h = 1.0;

  double cx() const { return x + 0.5 * w; }
  double cy() const { return y + 0.5 * h; }
  double area() const { return w * h; }
  bool valid() const { return w > 0.0 && h > 0.0; }

  static BoundingBox from_center(double cx, double cy, double w, double h) {
    return {cx - 0.5 * w, cy - 0.5 * h, w, h};
  }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Appearance of one detection or tracklet: a foreground embedding, K part
/// embeddings and K+1 visibility bits ordered (foreground, part 1..K).
struct PartFeatureSet {
  Vec foreground;
  std::vector<Vec> parts;
  Vec concat;                 // empty until derive_concat() fills it
  std::optional<Vec> global;  // training-time global average pooling
  std::vector<std::uint8_t> visibility;

  int num_parts() const { return static_cast<int>(parts.size()); }
  int dim() const { return static_cast<int>(foreground.size()); }

  /// Index 0 is the foreground, 1..K are the parts.
  const Vec& embedding(int index) const { return index == 0 ? foreground : parts[index - 1]; }
  Vec& embedding(int index) { return index == 0 ? foreground : parts[index - 1]; }
  bool visible(int index) const { return visibility[index] != 0; }
  int visible_parts() const;

  /// Throws DimMismatch / std::invalid_argument when an invariant is broken.
  void validate() const;

  /// Builds a set with foreground visibility = OR of the part bits.
  static PartFeatureSet make(Vec foreground, std::vector<Vec> parts,
                             const std::vector<std::uint8_t>& part_visibility);

  friend bool operator==(const PartFeatureSet&, const PartFeatureSet&) = default;
};

/// Mean Euclidean distance over mutually visible indices {foreground, 1..K}.
/// Empty when no index is visible on both sides.
std::optional<double> part_distance(const PartFeatureSet& q, const PartFeatureSet& g);

/// part_distance with "no mutual visibility" mapped to +inf.
inline double part_distance_or_inf(const PartFeatureSet& q, const PartFeatureSet& g) {
  return part_distance(q, g).value_or(kInf);
}

/// Distance using only the foreground embedding, +inf if either side hides it.
double foreground_distance_or_inf(const PartFeatureSet& q, const PartFeatureSet& g);

double iou(const BoundingBox& a, const BoundingBox& b);

PartFeatureSet derive_concat(PartFeatureSet p);

/// Ground-truth annotation carried by detections from labeled sources.
struct GroundTruthLabel {
  int identity = -1;
  std::optional<Team> team;
  Role role = Role::Player;
  friend bool operator==(const GroundTruthLabel&, const GroundTruthLabel&) = default;
};

struct Detection {
  int frame = 1;
  BoundingBox box;
  double confidence = 1.0;
  std::optional<PartFeatureSet> features;
  std::optional<RoleLogits> role_logits;
  std::optional<GroundTruthLabel> truth;
};

/// Constant-velocity state (cx, cy, aspect, height, and their velocities).
struct KalmanState {
  Eigen::Matrix<double, 8, 1> mean = Eigen::Matrix<double, 8, 1>::Zero();
  Eigen::Matrix<double, 8, 8> covariance = Eigen::Matrix<double, 8, 8>::Identity();

  BoundingBox box() const;
};

enum class TrackStatus { Tentative, Confirmed, Lost, Finished };

struct FrameInterval {
  int first = 0;
  int last = 0;
  bool overlaps(const FrameInterval& o) const { return first <= o.last && o.first <= last; }
  friend bool operator==(const FrameInterval&, const FrameInterval&) = default;
};

struct Tracklet {
  int id = 0;
  std::vector<Detection> detections;
  PartFeatureSet ema_features;
  KalmanState kalman;
  TrackStatus status = TrackStatus::Tentative;
  FrameInterval frames;
  /// Source intervals; a single entry until tracklets are merged.
  std::vector<FrameInterval> segments;

  /// Any shared frame between segments (the frame interval when a side has
  /// no segments).
  bool overlaps(const Tracklet& other) const;
};

}  // namespace prt
