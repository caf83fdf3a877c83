#include "prt/kernels.hpp"

namespace prt {

namespace {

double pair_distance(const PartFeatureSet& a, const PartFeatureSet& b, DistanceMode mode) {
  return mode == DistanceMode::PartBased ? part_distance_or_inf(a, b)
                                         : foreground_distance_or_inf(a, b);
}

}  // namespace

Mat distance_matrix(std::span<const PartFeatureSet> rows, std::span<const PartFeatureSet> cols,
                    DistanceMode mode) {
  const auto n_rows = static_cast<std::ptrdiff_t>(rows.size());
  const auto n_cols = static_cast<Eigen::Index>(cols.size());
  Mat out(n_rows, n_cols);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n_rows; ++i) {
    for (Eigen::Index j = 0; j < n_cols; ++j) out(i, j) = pair_distance(rows[i], cols[j], mode);
  }
  return out;
}

Mat distance_matrix_serial(std::span<const PartFeatureSet> rows,
                           std::span<const PartFeatureSet> cols, DistanceMode mode) {
  Mat out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pair_distance(rows[i], cols[j], mode);
    }
  }
  return out;
}

}  // namespace prt
