#pragma once

#include <span>

#include "prt/core.hpp"

namespace prt {

enum class DistanceMode {
  PartBased,       // mean over mutually visible {foreground, parts}
  ForegroundOnly,  // Euclidean distance of foreground embeddings
};

/// rows.size() x cols.size() matrix of appearance distances; pairs without a
/// mutually visible index are +inf. OpenMP-parallel over rows.
Mat distance_matrix(std::span<const PartFeatureSet> rows, std::span<const PartFeatureSet> cols,
                    DistanceMode mode = DistanceMode::PartBased);

/// Serial reference of distance_matrix; results are bitwise identical.
Mat distance_matrix_serial(std::span<const PartFeatureSet> rows,
                           std::span<const PartFeatureSet> cols,
                           DistanceMode mode = DistanceMode::PartBased);

}  // namespace prt
