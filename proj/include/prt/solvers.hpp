#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "prt/core.hpp"

namespace prt {

struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (row, col), sorted by row
  double total_cost = 0.0;
};

/// Minimum-cost linear assignment (Kuhn-Munkres with potentials).
///
/// Entries that are +inf or >= forbid_threshold are never returned. Among all
/// assignments using the largest possible number of allowed pairs, the one of
/// minimum total cost is returned. Rectangular inputs are padded internally.
Assignment hungarian(const Mat& costs, double forbid_threshold = kInf);

struct KMeansResult {
  std::vector<std::uint8_t> labels;  // 0 or 1 per point
  Mat centroids;                     // 2 x D
  double inertia = 0.0;              // within-cluster sum of squares
  bool degenerate = false;           // all points identical
  int iterations = 0;                // Lloyd iterations of the winning restart
};

/// Two-cluster k-means with k-means++ seeding; best of `restarts` runs.
/// Restart r uses a seed derived from (seed, r) so the result does not depend
/// on how restarts are scheduled across threads.
KMeansResult kmeans2(const Mat& points, std::uint64_t seed, int restarts = 10);

/// Lloyd objective trace for a single k-means++ restart; exposed for tests.
std::vector<double> kmeans2_trace(const Mat& points, std::uint64_t seed);

}  // namespace prt
