#include "prt/merge.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <tuple>

#include "prt/solvers.hpp"

namespace prt {

void MergeConfig::validate() const {
  if (!(merge_threshold > 0.0)) throw ConfigInvalid("merge.merge_threshold must be > 0");
  if (max_rounds < 0) throw ConfigInvalid("merge.max_rounds must be >= 0");
}

Mat tracklet_cost_matrix(std::span<const Tracklet> tracklets, const MergeConfig& cfg) {
  std::vector<PartFeatureSet> feats;
  feats.reserve(tracklets.size());
  for (const auto& t : tracklets) feats.push_back(t.ema_features);
  Mat a = distance_matrix(feats, feats, cfg.distance);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    a(i, i) = kInf;
    if (cfg.allow_temporal_overlap) continue;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (i != j && tracklets[i].overlaps(tracklets[j])) a(i, j) = kInf;
    }
  }
  return a;
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
};

Tracklet combine(std::vector<Tracklet*> members) {
  std::sort(members.begin(), members.end(), [](const Tracklet* a, const Tracklet* b) {
    return std::tie(a->frames.first, a->id) < std::tie(b->frames.first, b->id);
  });
  Tracklet out;
  out.id = members.front()->id;
  out.status = TrackStatus::Finished;
  out.frames = members.front()->frames;

  const PartFeatureSet& proto = members.front()->ema_features;
  const int n_idx = proto.num_parts() + 1;
  out.ema_features = proto;
  for (int i = 0; i < n_idx; ++i) {
    Vec sum = Vec::Zero(proto.dim());
    double weight = 0.0;
    bool any_visible = false;
    for (const auto* m : members) any_visible |= m->ema_features.visible(i);
    for (const auto* m : members) {
      if (any_visible && !m->ema_features.visible(i)) continue;
      const double n = static_cast<double>(m->detections.size());
      sum += n * m->ema_features.embedding(i);
      weight += n;
    }
    out.ema_features.embedding(i) = weight > 0.0 ? Vec(sum / weight) : sum;
    out.ema_features.visibility[i] = any_visible ? 1 : 0;
  }

  const Tracklet* latest = members.front();
  for (const auto* m : members) {
    out.frames.first = std::min(out.frames.first, m->frames.first);
    out.frames.last = std::max(out.frames.last, m->frames.last);
    out.segments.insert(out.segments.end(), m->segments.begin(), m->segments.end());
    out.detections.insert(out.detections.end(), m->detections.begin(), m->detections.end());
    if (m->frames.last > latest->frames.last) latest = m;
  }
  out.kalman = latest->kalman;
  std::stable_sort(out.detections.begin(), out.detections.end(),
                   [](const Detection& a, const Detection& b) { return a.frame < b.frame; });
  std::sort(out.segments.begin(), out.segments.end(),
            [](const FrameInterval& a, const FrameInterval& b) { return a.first < b.first; });
  return out;
}

}  // namespace

MergeResult merge_tracklets(std::vector<Tracklet> tracklets, const MergeConfig& cfg) {
  cfg.validate();
  MergeResult result;
  for (auto& t : tracklets) {
    if (t.segments.empty()) t.segments = {t.frames};
    result.id_map[t.id] = t.id;
  }

  for (int round = 0; round < cfg.max_rounds && tracklets.size() > 1; ++round) {
    const Mat cost = tracklet_cost_matrix(tracklets, cfg);
    const Assignment match = hungarian(cost, cfg.merge_threshold);

    std::vector<std::tuple<double, int, int>> accepted;
    for (const auto& [i, j] : match.pairs) accepted.emplace_back(cost(i, j), std::min(i, j), std::max(i, j));
    std::sort(accepted.begin(), accepted.end());

    const int m = static_cast<int>(tracklets.size());
    UnionFind uf(m);
    std::vector<std::vector<int>> groups(m);
    for (int i = 0; i < m; ++i) groups[i] = {i};
    bool merged = false;
    for (const auto& [c, i, j] : accepted) {
      const int ri = uf.find(i), rj = uf.find(j);
      if (ri == rj) continue;
      if (!cfg.allow_temporal_overlap) {
        bool clash = false;
        for (int a : groups[ri]) {
          for (int b : groups[rj]) clash |= tracklets[a].overlaps(tracklets[b]);
        }
        if (clash) continue;
      }
      uf.parent[rj] = ri;
      groups[ri].insert(groups[ri].end(), groups[rj].begin(), groups[rj].end());
      groups[rj].clear();
      merged = true;
    }
    if (!merged) break;
    ++result.rounds;

    std::vector<Tracklet> next;
    for (int r = 0; r < m; ++r) {
      if (uf.find(r) != r) continue;
      if (groups[r].size() == 1) {
        next.push_back(std::move(tracklets[r]));
        continue;
      }
      std::vector<Tracklet*> members;
      for (int idx : groups[r]) members.push_back(&tracklets[idx]);
      Tracklet combined = combine(members);
      for (const auto* mem : members) {
        for (auto& [src, dst] : result.id_map) {
          if (dst == mem->id) dst = combined.id;
        }
      }
      next.push_back(std::move(combined));
    }
    tracklets = std::move(next);
  }
  std::sort(tracklets.begin(), tracklets.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  result.tracklets = std::move(tracklets);
  return result;
}

std::vector<Role> assign_roles(std::span<const Tracklet> tracklets) {
  std::vector<Role> out;
  out.reserve(tracklets.size());
  for (const auto& t : tracklets) {
    RoleLogits mean{};
    int n = 0;
    for (const auto& d : t.detections) {
      if (!d.role_logits) continue;
      for (int r = 0; r < kNumRoles; ++r) mean[r] += (*d.role_logits)[r];
      ++n;
    }
    if (n == 0) throw std::invalid_argument("tracklet " + std::to_string(t.id) + " has no role logits");
    int best = 0;
    for (int r = 1; r < kNumRoles; ++r) {
      if (mean[r] / n > mean[best] / n) best = r;
    }
    out.push_back(static_cast<Role>(best));
  }
  return out;
}

TeamClusters assign_teams(std::span<const Tracklet> tracklets, std::span<const Role> roles,
                          std::uint64_t seed) {
  if (roles.size() != tracklets.size()) throw LengthMismatch("one role per tracklet required");
  std::vector<std::size_t> players;
  for (std::size_t i = 0; i < tracklets.size(); ++i) {
    if (roles[i] == Role::Player) players.push_back(i);
  }
  if (players.size() < 2) throw TooFewPlayers("team clustering needs at least two players");
  const Eigen::Index dim = tracklets[players.front()].ema_features.dim();
  Mat points(static_cast<Eigen::Index>(players.size()), dim);
  for (std::size_t p = 0; p < players.size(); ++p) {
    const Vec& f = tracklets[players[p]].ema_features.foreground;
    const double n = f.norm();
    points.row(static_cast<Eigen::Index>(p)) = n > 0.0 ? Vec(f / n) : f;
  }
  const KMeansResult km = kmeans2(points, seed);
  if (km.degenerate) throw DegenerateInput("all player embeddings coincide");
  TeamClusters out;
  out.labels.assign(tracklets.size(), std::nullopt);
  for (std::size_t p = 0; p < players.size(); ++p) out.labels[players[p]] = km.labels[p];
  out.centroids = km.centroids;
  return out;
}

double cluster_accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw LengthMismatch("cluster_accuracy: length mismatch");
  if (predicted.empty()) return 0.0;
  std::size_t same = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) same += predicted[i] == truth[i];
  const std::size_t best = std::max(same, predicted.size() - same);
  return static_cast<double>(best) / static_cast<double>(predicted.size());
}

}  // namespace prt
