#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "prt/core.hpp"
#include "prt/losses.hpp"
#include "prt/rng.hpp"

namespace prt {

/// Miniature backbone output: a rows x cols grid of C-dim cell features and
/// the synthetic human-parsing label of every cell (0 = background).
struct FeatureGrid {
  int rows = 8;
  int cols = 4;
  Mat cells;                     // (rows*cols) x C, cell (r, c) at row r*cols + c
  std::vector<int> part_labels;  // rows*cols entries in [0, K]

  int num_cells() const { return rows * cols; }
  int channels() const { return static_cast<int>(cells.cols()); }
};

struct EmbedderShape {
  int channels = 16;
  int parts = 5;
  int dim = 8;
  int identities = 1;
};

/// Linear part-attention model: pixel classifier, shared embedding
/// projection, role head and per-scope identity heads (training only).
struct EmbedderModel {
  Mat classifier_w;  // (K+1) x C
  Vec classifier_b;
  Mat embed_w;  // D x C
  Vec embed_b;
  Mat role_w;  // 4 x D
  Vec role_b;
  Mat id_global_w;  // N x D
  Vec id_global_b;
  Mat id_foreground_w;  // N x D
  Vec id_foreground_b;
  Mat id_concat_w;  // N x (K*D)
  Vec id_concat_b;

  EmbedderShape shape() const;
  int num_parts() const { return static_cast<int>(classifier_w.rows()) - 1; }
  int dim() const { return static_cast<int>(embed_w.rows()); }
  int channels() const { return static_cast<int>(embed_w.cols()); }

  static EmbedderModel zeros(const EmbedderShape& s);
  static EmbedderModel random(const EmbedderShape& s, std::uint64_t seed);

  /// Named views of every parameter tensor, in a fixed order.
  struct Tensor {
    std::string name;
    double* data;
    Eigen::Index rows;
    Eigen::Index cols;
    Eigen::Index size() const { return rows * cols; }
  };
  std::vector<Tensor> tensors();
  std::size_t parameter_count() const;

  friend bool operator==(const EmbedderModel&, const EmbedderModel&) = default;
};

struct EmbedOutput {
  PartFeatureSet features;  // concat and global populated
  RoleLogits role_logits{};
  Mat masks;  // cells x (K+1), rows sum to 1
};

/// Throws DimMismatch when the grid does not fit the model.
EmbedOutput forward(const EmbedderModel& model, const FeatureGrid& grid);

/// Embeds every grid; OpenMP-parallel over grids.
std::vector<EmbedOutput> embed_batch(const EmbedderModel& model, const std::vector<FeatureGrid>& grids);
/// Serial reference of embed_batch.
std::vector<EmbedOutput> embed_batch_serial(const EmbedderModel& model,
                                            const std::vector<FeatureGrid>& grids);

struct LabeledGrid {
  FeatureGrid grid;
  int identity = 0;  // contiguous training identity index
  std::optional<Team> team;
  Role role = Role::Player;
  int video = 0;
  int frame = 0;
};

struct TrainingSet {
  std::vector<LabeledGrid> samples;
  int num_identities = 0;
};

using Batch = std::vector<const LabeledGrid*>;

struct LossOptions {
  LossWeights weights;
  TripletConfig reid_triplet = TripletConfig::reid();
  TripletConfig team_triplet = TripletConfig::team();
  double focal_gamma = 2.0;
  /// Evaluate terms whose weight is zero instead of skipping them.
  bool evaluate_zero_weight_terms = false;
};

struct LossBreakdown {
  double total = 0.0;
  double part_prediction = 0.0;
  double reid = 0.0;
  double team = 0.0;
  double role = 0.0;
  EmbedderModel gradients;
};

LossBreakdown loss_and_grad(const EmbedderModel& model, const Batch& batch, const LossOptions& opts);

/// 4 left-team players, 4 right-team players and 3 identities of other roles,
/// all from one video, `samples_per_identity` grids each.
struct SampledBatch {
  Batch items;
  std::size_t team_batch_size = 0;  // Player samples seen by the team term
};
SampledBatch sample_batch(const TrainingSet& dataset, Rng& rng, int samples_per_identity = 4);

struct TrainConfig {
  int epochs = 50;
  int batches_per_epoch = 24;
  int samples_per_identity = 4;
  std::uint64_t seed = 0;
  double base_lr = 1e-2;
  int warmup_epochs = 5;
  std::array<int, 2> decay_epochs{20, 35};
  int embed_dim = 8;
  int num_parts = 5;
  LossOptions loss;
};

/// Learning rate of `epoch` (0-based): linear warmup from base/10, then x0.1
/// and x0.01 after the two decay epochs.
double learning_rate(const TrainConfig& cfg, int epoch);

struct TrainResult {
  EmbedderModel model;
  std::vector<double> epoch_losses;  // mean total loss per epoch
};

TrainResult train(const TrainConfig& cfg, const TrainingSet& dataset);

/// Relative error with an absolute floor of 1e-5 on the denominator.
double relative_error(double analytic, double numeric);

/// Max relative error between analytic gradients and central differences
/// (step 1e-5) over every parameter. `corrupt` may tamper with the analytic
/// gradients before comparison.
double grad_check(const EmbedderModel& model, const Batch& batch, const LossOptions& opts,
                  const std::function<void(EmbedderModel&)>& corrupt = {});

/// Smallest top-2 classifier logit gap over all cells of the batch, i.e. how
/// close the batch is to a change of part visibility.
double visibility_margin(const EmbedderModel& model, const Batch& batch);

/// Distance of the batch to any non-differentiable point of the objective:
/// visibility flips, triplet hinge boundaries and hardest-sample ties.
double kink_distance(const EmbedderModel& model, const Batch& batch, const LossOptions& opts);

}  // namespace prt
