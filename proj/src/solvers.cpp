#include "prt/solvers.hpp"

#include <algorithm>
#include <cmath>

#include "prt/rng.hpp"

namespace prt {

namespace {

bool allowed(double c, double forbid_threshold) {
  return std::isfinite(c) && c < forbid_threshold;
}

// Square Kuhn-Munkres on a dense N x N matrix; returns column of each row.
std::vector<int> solve_square(const Mat& a) {
  const int n = static_cast<int>(a.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col_of_row(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] != 0) col_of_row[p[j] - 1] = j - 1;
  }
  return col_of_row;
}

}  // namespace

Assignment hungarian(const Mat& costs, double forbid_threshold) {
  Assignment out;
  const int rows = static_cast<int>(costs.rows());
  const int cols = static_cast<int>(costs.cols());
  if (rows == 0 || cols == 0) return out;

  double lo = kInf, hi = -kInf;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double x = costs(r, c);
      if (std::isnan(x)) throw std::invalid_argument("hungarian: NaN cost");
      if (allowed(x, forbid_threshold)) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
    }
  }
  if (lo == kInf) return out;

  // Shift allowed costs to [0, span]; a forbidden cell costs more than any
  // complete set of allowed pairs, so cardinality is maximised first.
  const int n = std::max(rows, cols);
  const double span = hi - lo;
  const double sentinel = (span + 1.0) * (n + 1);
  Mat a = Mat::Zero(n, n);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double x = costs(r, c);
      a(r, c) = allowed(x, forbid_threshold) ? x - lo : sentinel;
    }
  }

  const auto col_of_row = solve_square(a);
  for (int r = 0; r < rows; ++r) {
    const int c = col_of_row[r];
    if (c >= 0 && c < cols && allowed(costs(r, c), forbid_threshold)) {
      out.pairs.emplace_back(r, c);
      out.total_cost += costs(r, c);
    }
  }
  return out;
}

namespace {

struct Restart {
  std::vector<std::uint8_t> labels;
  Mat centroids;
  double inertia = kInf;
  int iterations = 0;
  std::vector<double> trace;
};

double assign_labels(const Mat& points, const Mat& centroids, std::vector<std::uint8_t>& labels) {
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double d0 = (points.row(i) - centroids.row(0)).squaredNorm();
    const double d1 = (points.row(i) - centroids.row(1)).squaredNorm();
    labels[i] = d1 < d0 ? 1 : 0;
    inertia += std::min(d0, d1);
  }
  return inertia;
}

Restart run_restart(const Mat& points, std::uint64_t seed) {
  const Eigen::Index n = points.rows();
  Rng rng(seed);
  Restart out;
  out.centroids.resize(2, points.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  const Eigen::Index first = pick(rng);
  out.centroids.row(0) = points.row(first);

  std::vector<double> weights(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    weights[i] = (points.row(i) - out.centroids.row(0)).squaredNorm();
  }
  std::discrete_distribution<Eigen::Index> weighted(weights.begin(), weights.end());
  out.centroids.row(1) = points.row(weighted(rng));

  out.labels.assign(n, 0);
  double inertia = assign_labels(points, out.centroids, out.labels);
  out.trace.push_back(inertia);
  for (int it = 0; it < 100; ++it) {
    Mat next = Mat::Zero(2, points.cols());
    std::array<int, 2> counts{0, 0};
    for (Eigen::Index i = 0; i < n; ++i) {
      next.row(out.labels[i]) += points.row(i);
      ++counts[out.labels[i]];
    }
    for (int c = 0; c < 2; ++c) {
      if (counts[c] > 0) {
        next.row(c) /= counts[c];
      } else {
        next.row(c) = out.centroids.row(c);
      }
    }
    const double shift = (next - out.centroids).norm();
    out.centroids = next;
    inertia = assign_labels(points, out.centroids, out.labels);
    out.trace.push_back(inertia);
    out.iterations = it + 1;
    if (shift < 1e-8) break;
  }
  out.inertia = inertia;
  return out;
}

bool all_identical(const Mat& points) {
  for (Eigen::Index i = 1; i < points.rows(); ++i) {
    if (points.row(i) != points.row(0)) return false;
  }
  return true;
}

}  // namespace

KMeansResult kmeans2(const Mat& points, std::uint64_t seed, int restarts) {
  if (points.rows() < 2) throw std::invalid_argument("kmeans2 needs at least two points");
  KMeansResult result;
  if (all_identical(points)) {
    result.labels.assign(points.rows(), 0);
    result.centroids = points.topRows(1).replicate(2, 1);
    result.degenerate = true;
    return result;
  }
  restarts = std::max(1, restarts);
  std::vector<Restart> runs(restarts);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < restarts; ++r) {
    runs[r] = run_restart(points, derive_seed({seed, static_cast<std::uint64_t>(r)}));
  }
  int best = 0;
  for (int r = 1; r < restarts; ++r) {
    if (runs[r].inertia < runs[best].inertia) best = r;
  }
  auto& win = runs[best];
  // Canonical labelling: the first point is always in cluster 0.
  if (win.labels[0] == 1) {
    for (auto& l : win.labels) l ^= 1;
    win.centroids.row(0).swap(win.centroids.row(1));
  }
  result.labels = std::move(win.labels);
  result.centroids = std::move(win.centroids);
  result.inertia = win.inertia;
  result.iterations = win.iterations;
  return result;
}

std::vector<double> kmeans2_trace(const Mat& points, std::uint64_t seed) {
  if (points.rows() < 2 || all_identical(points)) return {};
  return run_restart(points, seed).trace;
}

}  // namespace prt
