#include "prt/core.hpp"

#include <algorithm>
#include <stdexcept>

namespace prt {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::Player: return "player";
    case Role::Goalkeeper: return "goalkeeper";
    case Role::Referee: return "referee";
    case Role::Staff: return "staff";
  }
  return "?";
}

std::string_view to_string(Team team) { return team == Team::Left ? "left" : "right"; }

int PartFeatureSet::visible_parts() const {
  int n = 0;
  for (std::size_t i = 1; i < visibility.size(); ++i) n += visibility[i] != 0;
  return n;
}

void PartFeatureSet::validate() const {
  if (parts.empty()) throw DimMismatch("part feature set needs K >= 1");
  const auto d = foreground.size();
  for (const auto& p : parts) {
    if (p.size() != d) throw DimMismatch("part embeddings must share the foreground dimension");
  }
  if (visibility.size() != parts.size() + 1) {
    throw DimMismatch("visibility must hold K+1 entries");
  }
  for (auto v : visibility) {
    if (v > 1) throw std::invalid_argument("visibility entries must be 0 or 1");
  }
  if (concat.size() != 0) {
    if (concat.size() != static_cast<Eigen::Index>(parts.size()) * d) {
      throw DimMismatch("concat must hold K*D entries");
    }
    for (std::size_t k = 0; k < parts.size(); ++k) {
      if (concat.segment(static_cast<Eigen::Index>(k) * d, d) != parts[k]) {
        throw std::invalid_argument("concat is stale");
      }
    }
  }
}

PartFeatureSet PartFeatureSet::make(Vec foreground, std::vector<Vec> parts,
                                    const std::vector<std::uint8_t>& part_visibility) {
  PartFeatureSet p;
  p.foreground = std::move(foreground);
  p.parts = std::move(parts);
  p.visibility.resize(p.parts.size() + 1, 0);
  std::uint8_t any = 0;
  for (std::size_t k = 0; k < p.parts.size(); ++k) {
    p.visibility[k + 1] = part_visibility.at(k) ? 1 : 0;
    any |= p.visibility[k + 1];
  }
  p.visibility[0] = any;
  return p;
}

std::optional<double> part_distance(const PartFeatureSet& q, const PartFeatureSet& g) {
  if (q.parts.size() != g.parts.size() || q.dim() != g.dim()) {
    throw DimMismatch("part_distance: feature sets differ in K or D");
  }
  double sum = 0.0;
  int count = 0;
  const int n = q.num_parts() + 1;
  for (int i = 0; i < n; ++i) {
    if (q.visibility[i] && g.visibility[i]) {
      sum += (q.embedding(i) - g.embedding(i)).norm();
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / count;
}

double foreground_distance_or_inf(const PartFeatureSet& q, const PartFeatureSet& g) {
  if (q.dim() != g.dim()) throw DimMismatch("foreground_distance: dimension mismatch");
  if (!q.visibility[0] || !g.visibility[0]) return kInf;
  return (q.foreground - g.foreground).norm();
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

PartFeatureSet derive_concat(PartFeatureSet p) {
  const Eigen::Index d = p.dim();
  p.concat.resize(static_cast<Eigen::Index>(p.parts.size()) * d);
  for (std::size_t k = 0; k < p.parts.size(); ++k) {
    p.concat.segment(static_cast<Eigen::Index>(k) * d, d) = p.parts[k];
  }
  return p;
}

BoundingBox KalmanState::box() const {
  const double h = mean(3);
  const double w = mean(2) * h;
  return BoundingBox::from_center(mean(0), mean(1), w, h);
}

bool Tracklet::overlaps(const Tracklet& other) const {
  const std::vector<FrameInterval> own{frames}, theirs{other.frames};
  for (const auto& a : segments.empty() ? own : segments) {
    for (const auto& b : other.segments.empty() ? theirs : other.segments) {
      if (a.overlaps(b)) return true;
    }
  }
  return false;
}

}  // namespace prt
