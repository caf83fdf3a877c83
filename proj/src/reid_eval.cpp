#include "prt/reid_eval.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include "prt/kernels.hpp"

namespace prt {

std::vector<int> rank_by_distance(const RetrievalItem& query, std::span<const RetrievalItem> gallery,
                                  std::span<const double> distances) {
  if (gallery.empty()) throw EmptyGallery("empty gallery");
  if (distances.size() != gallery.size()) throw LengthMismatch("one distance per gallery item");
  std::vector<int> order;
  order.reserve(gallery.size());
  for (std::size_t i = 0; i < gallery.size(); ++i) {
    if (query.tracklet && gallery[i].tracklet == query.tracklet) continue;
    order.push_back(static_cast<int>(i));
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return distances[a] < distances[b]; });
  return order;
}

std::vector<int> rank(const RetrievalItem& query, std::span<const RetrievalItem> gallery) {
  if (gallery.empty()) throw EmptyGallery("empty gallery");
  std::vector<double> d(gallery.size());
  for (std::size_t i = 0; i < gallery.size(); ++i) {
    d[i] = part_distance_or_inf(query.features, gallery[i].features);
  }
  return rank_by_distance(query, gallery, d);
}

double average_precision(std::span<const std::uint8_t> positives) {
  double hits = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < positives.size(); ++i) {
    if (!positives[i]) continue;
    hits += 1.0;
    sum += hits / static_cast<double>(i + 1);
  }
  return hits > 0.0 ? sum / hits : 0.0;
}

namespace {

bool eligible(const RetrievalItem& item, MatchKey key) {
  return key == MatchKey::Identity || (item.role == Role::Player && item.team.has_value());
}

bool matches(const RetrievalItem& q, const RetrievalItem& g, MatchKey key) {
  if (key == MatchKey::Identity) return q.identity == g.identity;
  return q.video == g.video && q.team == g.team;
}

}  // namespace

RetrievalMetrics map_cmc(const RetrievalSet& set, MatchKey key) {
  std::vector<RetrievalItem> gallery;
  for (const auto& g : set.gallery) {
    if (eligible(g, key)) gallery.push_back(g);
  }
  std::vector<const RetrievalItem*> queries;
  for (const auto& q : set.queries) {
    if (eligible(q, key)) queries.push_back(&q);
  }
  if (gallery.empty()) throw EmptyGallery("no eligible gallery items");

  std::vector<PartFeatureSet> qf, gf;
  for (const auto* q : queries) qf.push_back(q->features);
  for (const auto& g : gallery) gf.push_back(g.features);
  const Mat dist = distance_matrix(qf, gf, DistanceMode::PartBased);

  RetrievalMetrics out;
  double ap_sum = 0.0, r1_sum = 0.0;
  std::vector<double> row(gallery.size());
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    for (std::size_t g = 0; g < gallery.size(); ++g) row[g] = dist(qi, g);
    const auto order = rank_by_distance(*queries[qi], gallery, row);
    std::vector<std::uint8_t> pos(order.size());
    for (std::size_t r = 0; r < order.size(); ++r) pos[r] = matches(*queries[qi], gallery[order[r]], key);
    if (std::find(pos.begin(), pos.end(), 1) == pos.end()) {
      ++out.skipped;
      continue;
    }
    ++out.evaluated;
    ap_sum += average_precision(pos);
    r1_sum += pos[0];
  }
  if (out.evaluated > 0) {
    out.map = ap_sum / out.evaluated;
    out.rank1 = r1_sum / out.evaluated;
  }
  return out;
}

RoleMetrics role_metrics(std::span<const Role> predicted, std::span<const Role> truth) {
  if (predicted.size() != truth.size()) throw LengthMismatch("role_metrics: length mismatch");
  RoleMetrics out;
  if (predicted.empty()) return out;
  std::array<int, kNumRoles> predicted_count{}, correct{};
  int right = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const int p = static_cast<int>(predicted[i]);
    ++predicted_count[p];
    if (predicted[i] == truth[i]) {
      ++correct[p];
      ++right;
    }
  }
  out.accuracy = static_cast<double>(right) / static_cast<double>(predicted.size());
  for (int r = 0; r < kNumRoles; ++r) {
    if (predicted_count[r] > 0) out.macro_precision += static_cast<double>(correct[r]) / predicted_count[r];
  }
  out.macro_precision /= kNumRoles;
  return out;
}

}  // namespace prt
