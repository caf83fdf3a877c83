#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "prt/core.hpp"

namespace prt {

/// Scaling factors of the four training objectives.
struct LossWeights {
  double pa = 0.3;
  double reid = 1.0;
  double team = 0.1;
  double role = 1.5;

  static LossWeights reid_only() { return {0.3, 1.0, 0.0, 0.0}; }
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

enum class Mining { BatchHard };

struct TripletConfig {
  double margin = 0.3;
  Mining mining = Mining::BatchHard;

  static TripletConfig reid() { return {0.3, Mining::BatchHard}; }
  static TripletConfig team() { return {0.05, Mining::BatchHard}; }
};

/// A scalar loss and the gradient with respect to each of its inputs, in the
/// input order documented on the producing function.
struct LossValue {
  double value = 0.0;
  std::vector<Mat> gradients;
};

/// Batch-hard triplet loss over rows of `embeddings` (N x D).
/// gradients[0] is N x D. Throws DegenerateBatch unless every label has at
/// least two samples and at least two labels are present.
LossValue triplet_batch_hard(const Mat& embeddings, std::span<const int> labels,
                             const TripletConfig& cfg);

/// Batch-hard triplet restricted to samples flagged in `visible`: an anchor
/// only considers positives/negatives that are also visible, and anchors
/// without a valid positive and negative are skipped. The loss is the mean
/// over contributing anchors (0 when none contribute).
LossValue triplet_batch_hard_masked(const Mat& embeddings, std::span<const int> labels,
                                    std::span<const std::uint8_t> visible,
                                    const TripletConfig& cfg);

/// Smallest distance of any anchor to a point where the batch-hard loss is
/// not differentiable (hinge boundary or a tie in hardest selection).
double triplet_kink_distance(const Mat& embeddings, std::span<const int> labels,
                             std::span<const std::uint8_t> visible, const TripletConfig& cfg);

/// Mean softmax cross-entropy. gradients[0] is N x C.
LossValue cross_entropy_id(const Mat& logits, std::span<const int> targets);

/// Mean focal loss (1 - p_t)^gamma * (-ln p_t), no class weighting.
LossValue focal_loss(const Mat& logits, std::span<const int> targets, double gamma = 2.0);

/// Pixel-wise part classification: SUM of cross-entropy over the rows of
/// `cell_logits` ((H'*W') x (K+1)); label 0 is background.
LossValue part_prediction_loss(const Mat& cell_logits, std::span<const int> labels);

/// Inputs of the identity objective for one batch of N samples.
struct GiltInputs {
  Mat global_logits;      // N x ids, from the global embedding
  Mat concat_logits;      // N x ids, from the concatenated parts
  Mat foreground_logits;  // N x ids, from the foreground embedding
  std::vector<Mat> parts;                              // K entries, N x D
  std::vector<std::vector<std::uint8_t>> visibility;  // K entries, N bits
};

/// Global-identity / local-triplet objective:
///   mean of identity cross-entropy over the (global, concat, foreground) scopes
///   + mean over the K parts of the visibility-masked batch-hard triplet.
/// gradients: [0] global logits, [1] concat logits, [2] foreground logits,
/// [3 + k] part k embeddings.
LossValue gilt_loss(const GiltInputs& in, std::span<const int> labels, const TripletConfig& cfg);

/// Weighted sum of (part-prediction, reid, team, role) components. Gradients
/// are the components' gradients scaled by their weight, concatenated in that
/// component order.
LossValue total_loss(const std::array<LossValue, 4>& components, const LossWeights& w);

}  // namespace prt
