#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "prt/core.hpp"
#include "prt/kernels.hpp"

namespace prt {

struct MergeConfig {
  double merge_threshold = 0.6;  // accept pairs with appearance cost below this
  bool allow_temporal_overlap = false;
  int max_rounds = 10;
  DistanceMode distance = DistanceMode::PartBased;

  void validate() const;
};

/// M x M appearance cost between tracklet EMA features: +inf on the diagonal,
/// and +inf for temporally overlapping pairs unless overlap is allowed.
Mat tracklet_cost_matrix(std::span<const Tracklet> tracklets, const MergeConfig& cfg = {});

struct MergeResult {
  std::vector<Tracklet> tracklets;  // ordered by id
  std::map<int, int> id_map;        // input id -> output id
  int rounds = 0;                   // rounds that merged at least one pair
};

/// Repeated assignment-based merging until no pair is accepted or
/// max_rounds is reached. A merged tracklet keeps the id of its earliest
/// member and a detection-count-weighted mean of the members' EMA features.
MergeResult merge_tracklets(std::vector<Tracklet> tracklets, const MergeConfig& cfg = {});

/// Per-tracklet role: argmax of the mean role logits over its detections,
/// ties resolved to the lowest role index.
std::vector<Role> assign_roles(std::span<const Tracklet> tracklets);

struct TeamClusters {
  std::vector<std::optional<int>> labels;  // cluster 0/1 per Player tracklet
  Mat centroids;
};

/// Two-cluster k-means over L2-normalised foreground EMA embeddings of the
/// tracklets whose role is Player. Throws TooFewPlayers (< 2 players) and
/// DegenerateInput (all player embeddings identical).
TeamClusters assign_teams(std::span<const Tracklet> tracklets, std::span<const Role> roles,
                          std::uint64_t seed);

/// Best-permutation agreement of 0/1 cluster labels with two-valued truth.
double cluster_accuracy(std::span<const int> predicted, std::span<const int> truth);

}  // namespace prt
