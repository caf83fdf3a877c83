#pragma once

#include <optional>
#include <span>
#include <vector>

#include "prt/core.hpp"

namespace prt {

struct RetrievalItem {
  PartFeatureSet features;
  int identity = 0;
  std::optional<Team> team;
  Role role = Role::Player;
  int video = 0;
  /// Items sharing a tracklet with the query are removed from its ranking.
  std::optional<int> tracklet;
};

struct RetrievalSet {
  std::vector<RetrievalItem> queries;
  std::vector<RetrievalItem> gallery;
};

/// Gallery indices by ascending part distance; pairs without mutual
/// visibility go last, ties keep gallery order. Throws EmptyGallery.
std::vector<int> rank(const RetrievalItem& query, std::span<const RetrievalItem> gallery);

/// Same ordering from a precomputed distance row.
std::vector<int> rank_by_distance(const RetrievalItem& query, std::span<const RetrievalItem> gallery,
                                  std::span<const double> distances);

enum class MatchKey {
  Identity,  // same identity
  Team,      // same (video, team); both sides must be players
};

struct RetrievalMetrics {
  double map = 0.0;
  double rank1 = 0.0;
  int evaluated = 0;  // queries with at least one positive
  int skipped = 0;    // queries without positives (excluded from the means)
};

/// Mean average precision and CMC rank-1. For MatchKey::Team only player
/// queries and player gallery items take part.
RetrievalMetrics map_cmc(const RetrievalSet& set, MatchKey key);

/// Average precision of one ranked list of positive flags (0 without positives).
double average_precision(std::span<const std::uint8_t> positives);

struct RoleMetrics {
  double accuracy = 0.0;
  double macro_precision = 0.0;  // over the four roles; unpredicted roles count 0
};

/// Throws LengthMismatch.
RoleMetrics role_metrics(std::span<const Role> predicted, std::span<const Role> truth);

}  // namespace prt
