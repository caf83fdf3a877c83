#include "prt/losses.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace prt {

namespace {

void check_triplet_batch(std::span<const int> labels) {
  std::map<int, int> counts;
  for (int l : labels) ++counts[l];
  if (counts.size() < 2) throw DegenerateBatch("triplet batch needs at least two labels");
  for (const auto& [label, n] : counts) {
    if (n < 2) {
      throw DegenerateBatch("label " + std::to_string(label) + " has a single sample");
    }
  }
}

Mat pairwise_distances(const Mat& x) {
  const Eigen::Index n = x.rows();
  Mat d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) = (x.row(i) - x.row(j)).norm();
    }
  }
  return d;
}

struct HardPair {
  Eigen::Index positive = -1;
  Eigen::Index negative = -1;
};

HardPair hardest(const Mat& dist, std::span<const int> labels,
                 std::span<const std::uint8_t> visible, Eigen::Index a) {
  HardPair hp;
  const auto n = static_cast<Eigen::Index>(labels.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == a || !visible[j]) continue;
    if (labels[j] == labels[a]) {
      if (hp.positive < 0 || dist(a, j) > dist(a, hp.positive)) hp.positive = j;
    } else {
      if (hp.negative < 0 || dist(a, j) < dist(a, hp.negative)) hp.negative = j;
    }
  }
  return hp;
}

// d|x_a - x_b| / dx_a, zero at coincident points.
Eigen::RowVectorXd unit_diff(const Mat& x, Eigen::Index a, Eigen::Index b, double d) {
  if (d <= 0.0) return Eigen::RowVectorXd::Zero(x.cols());
  return (x.row(a) - x.row(b)) / d;
}

LossValue masked_triplet_impl(const Mat& x, std::span<const int> labels,
                              std::span<const std::uint8_t> visible, const TripletConfig& cfg) {
  const Eigen::Index n = x.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n ||
      static_cast<Eigen::Index>(visible.size()) != n) {
    throw DimMismatch("triplet: labels/visibility length differs from batch size");
  }
  LossValue out;
  out.gradients.push_back(Mat::Zero(n, x.cols()));
  Mat& grad = out.gradients[0];
  const Mat dist = pairwise_distances(x);

  int anchors = 0;
  double sum = 0.0;
  std::vector<std::pair<Eigen::Index, HardPair>> active;
  for (Eigen::Index a = 0; a < n; ++a) {
    if (!visible[a]) continue;
    const HardPair hp = hardest(dist, labels, visible, a);
    if (hp.positive < 0 || hp.negative < 0) continue;
    ++anchors;
    const double h = dist(a, hp.positive) - dist(a, hp.negative) + cfg.margin;
    if (h > 0.0) {
      sum += h;
      active.emplace_back(a, hp);
    }
  }
  if (anchors == 0) return out;
  out.value = sum / anchors;
  const double scale = 1.0 / anchors;
  for (const auto& [a, hp] : active) {
    const auto gp = unit_diff(x, a, hp.positive, dist(a, hp.positive));
    const auto gn = unit_diff(x, a, hp.negative, dist(a, hp.negative));
    grad.row(a) += scale * (gp - gn);
    grad.row(hp.positive) -= scale * gp;
    grad.row(hp.negative) += scale * gn;
  }
  return out;
}

double log_sum_exp(const Eigen::RowVectorXd& z) {
  const double m = z.maxCoeff();
  return m + std::log((z.array() - m).exp().sum());
}

void check_targets(const Mat& logits, std::span<const int> targets) {
  if (static_cast<Eigen::Index>(targets.size()) != logits.rows()) {
    throw DimMismatch("logits rows differ from number of targets");
  }
  for (int t : targets) {
    if (t < 0 || t >= logits.cols()) throw std::out_of_range("target class out of range");
  }
}

// Per-row softmax cross-entropy; `scale` multiplies both value and gradient.
LossValue softmax_ce(const Mat& logits, std::span<const int> targets, double scale) {
  check_targets(logits, targets);
  LossValue out;
  out.gradients.push_back(Mat::Zero(logits.rows(), logits.cols()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const Eigen::RowVectorXd z = logits.row(i);
    const double lse = log_sum_exp(z);
    out.value += scale * (lse - z(targets[i]));
    Eigen::RowVectorXd p = (z.array() - lse).exp();
    p(targets[i]) -= 1.0;
    out.gradients[0].row(i) = scale * p;
  }
  return out;
}

}  // namespace

LossValue triplet_batch_hard(const Mat& embeddings, std::span<const int> labels,
                             const TripletConfig& cfg) {
  if (static_cast<Eigen::Index>(labels.size()) != embeddings.rows()) {
    throw DimMismatch("triplet: labels length differs from batch size");
  }
  check_triplet_batch(labels);
  const std::vector<std::uint8_t> all(labels.size(), 1);
  return masked_triplet_impl(embeddings, labels, all, cfg);
}

LossValue triplet_batch_hard_masked(const Mat& embeddings, std::span<const int> labels,
                                    std::span<const std::uint8_t> visible,
                                    const TripletConfig& cfg) {
  return masked_triplet_impl(embeddings, labels, visible, cfg);
}

double triplet_kink_distance(const Mat& x, std::span<const int> labels,
                             std::span<const std::uint8_t> visible, const TripletConfig& cfg) {
  const Mat dist = pairwise_distances(x);
  const auto n = static_cast<Eigen::Index>(labels.size());
  double closest = kInf;
  for (Eigen::Index a = 0; a < n; ++a) {
    if (!visible[a]) continue;
    std::vector<double> pos, neg;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == a || !visible[j]) continue;
      (labels[j] == labels[a] ? pos : neg).push_back(dist(a, j));
    }
    if (pos.empty() || neg.empty()) continue;
    std::sort(pos.begin(), pos.end(), std::greater<>());
    std::sort(neg.begin(), neg.end());
    closest = std::min(closest, std::abs(pos[0] - neg[0] + cfg.margin));
    closest = std::min({closest, pos[0], neg[0]});
    if (pos.size() > 1) closest = std::min(closest, pos[0] - pos[1]);
    if (neg.size() > 1) closest = std::min(closest, neg[1] - neg[0]);
  }
  return closest;
}

LossValue cross_entropy_id(const Mat& logits, std::span<const int> targets) {
  if (logits.rows() == 0) return {0.0, {Mat::Zero(0, logits.cols())}};
  return softmax_ce(logits, targets, 1.0 / static_cast<double>(logits.rows()));
}

LossValue focal_loss(const Mat& logits, std::span<const int> targets, double gamma) {
  check_targets(logits, targets);
  const Eigen::Index n = logits.rows();
  LossValue out;
  out.gradients.push_back(Mat::Zero(n, logits.cols()));
  if (n == 0) return out;
  const double scale = 1.0 / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::RowVectorXd z = logits.row(i);
    const double lse = log_sum_exp(z);
    const double log_pt = z(targets[i]) - lse;
    const double pt = std::exp(log_pt);
    const double q = 1.0 - pt;
    const double mod = gamma == 0.0 ? 1.0 : std::pow(q, gamma);
    out.value += scale * mod * (-log_pt);
    // dL/dz_j = [gamma (1-p)^(gamma-1) p ln p - (1-p)^gamma] (delta_tj - p_j)
    const double dmod = (gamma == 0.0 || q <= 0.0) ? 0.0 : gamma * std::pow(q, gamma - 1.0);
    const double coef = dmod * pt * log_pt - mod;
    Eigen::RowVectorXd delta = -(z.array() - lse).exp();
    delta(targets[i]) += 1.0;
    out.gradients[0].row(i) = scale * coef * delta;
  }
  return out;
}

LossValue part_prediction_loss(const Mat& cell_logits, std::span<const int> labels) {
  return softmax_ce(cell_logits, labels, 1.0);
}

LossValue gilt_loss(const GiltInputs& in, std::span<const int> labels, const TripletConfig& cfg) {
  check_triplet_batch(labels);
  if (in.visibility.size() != in.parts.size()) {
    throw DimMismatch("gilt: one visibility vector per part required");
  }
  LossValue out;
  const std::array<const Mat*, 3> scopes{&in.global_logits, &in.concat_logits,
                                         &in.foreground_logits};
  for (const Mat* logits : scopes) {
    auto ce = cross_entropy_id(*logits, labels);
    out.value += ce.value / 3.0;
    out.gradients.push_back(ce.gradients[0] / 3.0);
  }
  const auto k_parts = static_cast<double>(in.parts.size());
  for (std::size_t k = 0; k < in.parts.size(); ++k) {
    auto tri = masked_triplet_impl(in.parts[k], labels, in.visibility[k], cfg);
    out.value += tri.value / k_parts;
    out.gradients.push_back(tri.gradients[0] / k_parts);
  }
  return out;
}

LossValue total_loss(const std::array<LossValue, 4>& components, const LossWeights& w) {
  const std::array<double, 4> lambda{w.pa, w.reid, w.team, w.role};
  LossValue out;
  for (std::size_t c = 0; c < components.size(); ++c) {
    out.value += lambda[c] * components[c].value;
    for (const auto& g : components[c].gradients) out.gradients.push_back(lambda[c] * g);
  }
  return out;
}

}  // namespace prt
