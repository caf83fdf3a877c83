#include "prt/trackeval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "prt/solvers.hpp"

namespace prt {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

Mat iou_matrix(std::span<const BoxRecord> gt, std::span<const BoxRecord> pred) {
  Mat m(static_cast<Eigen::Index>(gt.size()), static_cast<Eigen::Index>(pred.size()));
  for (std::size_t i = 0; i < gt.size(); ++i) {
    for (std::size_t j = 0; j < pred.size(); ++j) m(i, j) = iou(gt[i].box, pred[j].box);
  }
  return m;
}

// Dense id indices for both sides, in ascending id order.
struct IdIndex {
  std::map<int, int> gt, pred;
  IdIndex(const SequenceResult& seq) {
    std::set<int> g, p;
    for (const auto& [f, recs] : seq.gt) {
      for (const auto& r : recs) g.insert(r.id);
    }
    for (const auto& [f, recs] : seq.pred) {
      for (const auto& r : recs) p.insert(r.id);
    }
    for (int id : g) gt.emplace(id, static_cast<int>(gt.size()));
    for (int id : p) pred.emplace(id, static_cast<int>(pred.size()));
  }
};

const std::vector<BoxRecord>& at(const std::map<int, std::vector<BoxRecord>>& m, int frame) {
  static const std::vector<BoxRecord> empty;
  auto it = m.find(frame);
  return it == m.end() ? empty : it->second;
}

std::set<int> all_frames(const SequenceResult& seq) {
  std::set<int> frames;
  for (const auto& [f, r] : seq.gt) frames.insert(f);
  for (const auto& [f, r] : seq.pred) frames.insert(f);
  return frames;
}

// Maximise the sum of `score` over a full assignment.
std::vector<std::pair<int, int>> max_assignment(const Mat& score) {
  return hungarian(-score).pairs;
}

}  // namespace

std::vector<std::pair<int, int>> frame_match(std::span<const BoxRecord> gt,
                                             std::span<const BoxRecord> pred, double alpha) {
  const Mat sim = iou_matrix(gt, pred);
  Mat cost = Mat::Constant(sim.rows(), sim.cols(), kInf);
  for (Eigen::Index i = 0; i < sim.rows(); ++i) {
    for (Eigen::Index j = 0; j < sim.cols(); ++j) {
      if (sim(i, j) >= alpha - kEps && sim(i, j) > 0.0) cost(i, j) = 1.0 - sim(i, j);
    }
  }
  return hungarian(cost).pairs;
}

std::vector<double> default_hota_alphas() {
  std::vector<double> a;
  for (int i = 1; i <= 19; ++i) a.push_back(0.05 * i);
  return a;
}

HotaResult hota(const SequenceResult& seq, std::span<const double> alphas_in) {
  std::size_t gt_dets = 0;
  for (const auto& [f, recs] : seq.gt) gt_dets += recs.size();
  if (gt_dets == 0) throw EmptyGroundTruth("sequence '" + seq.name + "' has no ground truth");

  HotaResult out;
  out.alphas = alphas_in.empty() ? default_hota_alphas()
                                 : std::vector<double>(alphas_in.begin(), alphas_in.end());
  const int n_alpha = static_cast<int>(out.alphas.size());
  const IdIndex ids(seq);
  const auto ng = static_cast<Eigen::Index>(ids.gt.size());
  const auto np = static_cast<Eigen::Index>(ids.pred.size());
  const auto frames = all_frames(seq);

  // Global alignment between id pairs from soft per-frame IoU overlap.
  Mat potential = Mat::Zero(ng, np);
  Vec gt_count = Vec::Zero(ng), pred_count = Vec::Zero(np);
  for (int f : frames) {
    const auto& g = at(seq.gt, f);
    const auto& p = at(seq.pred, f);
    for (const auto& r : g) gt_count(ids.gt.at(r.id)) += 1.0;
    for (const auto& r : p) pred_count(ids.pred.at(r.id)) += 1.0;
    if (g.empty() || p.empty()) continue;
    const Mat sim = iou_matrix(g, p);
    const Vec row_sum = sim.rowwise().sum();
    const Eigen::RowVectorXd col_sum = sim.colwise().sum();
    for (Eigen::Index i = 0; i < sim.rows(); ++i) {
      for (Eigen::Index j = 0; j < sim.cols(); ++j) {
        const double denom = row_sum(i) + col_sum(j) - sim(i, j);
        if (denom > kEps) potential(ids.gt.at(g[i].id), ids.pred.at(p[j].id)) += sim(i, j) / denom;
      }
    }
  }
  Mat alignment = Mat::Zero(ng, np);
  for (Eigen::Index i = 0; i < ng; ++i) {
    for (Eigen::Index j = 0; j < np; ++j) {
      alignment(i, j) = potential(i, j) / (gt_count(i) + pred_count(j) - potential(i, j));
    }
  }

  std::vector<double> tp(n_alpha, 0.0), fn(n_alpha, 0.0), fp(n_alpha, 0.0);
  std::vector<Mat> matches(n_alpha, Mat::Zero(ng, np));
  for (int f : frames) {
    const auto& g = at(seq.gt, f);
    const auto& p = at(seq.pred, f);
    if (g.empty() || p.empty()) {
      for (int a = 0; a < n_alpha; ++a) {
        fn[a] += static_cast<double>(g.size());
        fp[a] += static_cast<double>(p.size());
      }
      continue;
    }
    const Mat sim = iou_matrix(g, p);
    Mat score(sim.rows(), sim.cols());
    for (Eigen::Index i = 0; i < sim.rows(); ++i) {
      for (Eigen::Index j = 0; j < sim.cols(); ++j) {
        score(i, j) = alignment(ids.gt.at(g[i].id), ids.pred.at(p[j].id)) * sim(i, j);
      }
    }
    const auto pairs = max_assignment(score);
#pragma omp parallel for schedule(static)
    for (int a = 0; a < n_alpha; ++a) {
      int matched = 0;
      for (const auto& [i, j] : pairs) {
        if (sim(i, j) >= out.alphas[a] - kEps && sim(i, j) > 0.0) {
          ++matched;
          matches[a](ids.gt.at(g[i].id), ids.pred.at(p[j].id)) += 1.0;
        }
      }
      tp[a] += matched;
      fn[a] += static_cast<double>(g.size()) - matched;
      fp[a] += static_cast<double>(p.size()) - matched;
    }
  }

  out.hota_per_alpha.resize(n_alpha);
  out.deta_per_alpha.resize(n_alpha);
  out.assa_per_alpha.resize(n_alpha);
  for (int a = 0; a < n_alpha; ++a) {
    double ass_sum = 0.0;
    for (Eigen::Index i = 0; i < ng; ++i) {
      for (Eigen::Index j = 0; j < np; ++j) {
        const double m = matches[a](i, j);
        if (m <= 0.0) continue;
        ass_sum += m * m / std::max(1.0, gt_count(i) + pred_count(j) - m);
      }
    }
    out.assa_per_alpha[a] = ass_sum / std::max(1.0, tp[a]);
    out.deta_per_alpha[a] = tp[a] / std::max(1.0, tp[a] + fn[a] + fp[a]);
    out.hota_per_alpha[a] = std::sqrt(out.deta_per_alpha[a] * out.assa_per_alpha[a]);
  }
  for (int a = 0; a < n_alpha; ++a) {
    out.hota += out.hota_per_alpha[a];
    out.deta += out.deta_per_alpha[a];
    out.assa += out.assa_per_alpha[a];
  }
  out.hota /= n_alpha;
  out.deta /= n_alpha;
  out.assa /= n_alpha;
  return out;
}

ClearResult mota_ids(const SequenceResult& seq, double threshold) {
  ClearResult out;
  const IdIndex ids(seq);
  constexpr int kNone = -1;
  std::vector<int> prev_pred(ids.gt.size(), kNone);      // last matched pred id, any frame
  std::vector<int> prev_step_pred(ids.gt.size(), kNone);  // pred id matched in the previous step
  int gt_total = 0;
  for (int f : all_frames(seq)) {
    const auto& g = at(seq.gt, f);
    const auto& p = at(seq.pred, f);
    gt_total += static_cast<int>(g.size());
    if (g.empty()) {
      out.fp += static_cast<int>(p.size());
      continue;
    }
    if (p.empty()) {
      out.fn += static_cast<int>(g.size());
      continue;
    }
    const Mat sim = iou_matrix(g, p);
    Mat score(sim.rows(), sim.cols());
    for (Eigen::Index i = 0; i < sim.rows(); ++i) {
      for (Eigen::Index j = 0; j < sim.cols(); ++j) {
        if (sim(i, j) < threshold - kEps) {
          score(i, j) = 0.0;
          continue;
        }
        const bool continued = prev_step_pred[ids.gt.at(g[i].id)] == p[j].id;
        score(i, j) = (continued ? 1000.0 : 0.0) + sim(i, j);
      }
    }
    std::fill(prev_step_pred.begin(), prev_step_pred.end(), kNone);
    int matched = 0;
    for (const auto& [i, j] : max_assignment(score)) {
      if (!(score(i, j) > kEps)) continue;
      ++matched;
      const int gi = ids.gt.at(g[i].id);
      if (prev_pred[gi] != kNone && prev_pred[gi] != p[j].id) ++out.id_switches;
      prev_pred[gi] = p[j].id;
      prev_step_pred[gi] = p[j].id;
    }
    out.tp += matched;
    out.fn += static_cast<int>(g.size()) - matched;
    out.fp += static_cast<int>(p.size()) - matched;
  }
  out.mota = static_cast<double>(out.tp - out.fp - out.id_switches) / std::max(1, gt_total);
  return out;
}

IdentityResult idf1(const SequenceResult& seq, double threshold) {
  IdentityResult out;
  const IdIndex ids(seq);
  const auto ng = static_cast<Eigen::Index>(ids.gt.size());
  const auto np = static_cast<Eigen::Index>(ids.pred.size());
  Mat overlap = Mat::Zero(ng, np);
  double gt_total = 0.0, pred_total = 0.0;
  for (int f : all_frames(seq)) {
    const auto& g = at(seq.gt, f);
    const auto& p = at(seq.pred, f);
    gt_total += static_cast<double>(g.size());
    pred_total += static_cast<double>(p.size());
    for (const auto& gr : g) {
      for (const auto& pr : p) {
        if (iou(gr.box, pr.box) >= threshold - kEps) overlap(ids.gt.at(gr.id), ids.pred.at(pr.id)) += 1.0;
      }
    }
  }
  for (const auto& [i, j] : max_assignment(overlap)) out.idtp += overlap(i, j);
  out.idfn = gt_total - out.idtp;
  out.idfp = pred_total - out.idtp;
  out.idf1 = out.idtp / std::max(1.0, out.idtp + 0.5 * out.idfp + 0.5 * out.idfn);
  return out;
}

TrackingMetrics evaluate_sequence(const SequenceResult& seq) {
  TrackingMetrics m;
  m.name = seq.name;
  const HotaResult h = hota(seq);
  m.hota = h.hota;
  m.deta = h.deta;
  m.assa = h.assa;
  const ClearResult c = mota_ids(seq);
  m.mota = c.mota;
  m.id_switches = c.id_switches;
  m.idf1 = idf1(seq).idf1;
  return m;
}

EvalReport evaluate_tracking(std::span<const SequenceResult> sequences) {
  EvalReport report;
  report.combined.name = "COMBINED";
  for (const auto& s : sequences) report.sequences.push_back(evaluate_sequence(s));
  const double n = static_cast<double>(report.sequences.size());
  for (const auto& m : report.sequences) {
    report.combined.hota += m.hota;
    report.combined.deta += m.deta;
    report.combined.assa += m.assa;
    report.combined.mota += m.mota;
    report.combined.idf1 += m.idf1;
    report.combined.id_switches += m.id_switches;
  }
  if (n > 0) {
    report.combined.hota /= n;
    report.combined.deta /= n;
    report.combined.assa /= n;
    report.combined.mota /= n;
    report.combined.idf1 /= n;
  }
  return report;
}

}  // namespace prt
