#include "prt/embedder.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace prt {

EmbedderShape EmbedderModel::shape() const {
  return {channels(), num_parts(), dim(), static_cast<int>(id_global_w.rows())};
}

EmbedderModel EmbedderModel::zeros(const EmbedderShape& s) {
  EmbedderModel m;
  m.classifier_w = Mat::Zero(s.parts + 1, s.channels);
  m.classifier_b = Vec::Zero(s.parts + 1);
  m.embed_w = Mat::Zero(s.dim, s.channels);
  m.embed_b = Vec::Zero(s.dim);
  m.role_w = Mat::Zero(kNumRoles, s.dim);
  m.role_b = Vec::Zero(kNumRoles);
  m.id_global_w = Mat::Zero(s.identities, s.dim);
  m.id_global_b = Vec::Zero(s.identities);
  m.id_foreground_w = Mat::Zero(s.identities, s.dim);
  m.id_foreground_b = Vec::Zero(s.identities);
  m.id_concat_w = Mat::Zero(s.identities, s.parts * s.dim);
  m.id_concat_b = Vec::Zero(s.identities);
  return m;
}

EmbedderModel EmbedderModel::random(const EmbedderShape& s, std::uint64_t seed) {
  EmbedderModel m = zeros(s);
  Rng rng(seed);
  auto fill = [&rng](Mat& w, double stddev) {
    std::normal_distribution<double> n(0.0, stddev);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = n(rng);
  };
  fill(m.classifier_w, 0.1);
  fill(m.embed_w, 1.0 / std::sqrt(static_cast<double>(s.channels)));
  fill(m.role_w, 0.1);
  fill(m.id_global_w, 0.1);
  fill(m.id_foreground_w, 0.1);
  fill(m.id_concat_w, 0.1);
  return m;
}

std::vector<EmbedderModel::Tensor> EmbedderModel::tensors() {
  auto mat = [](std::string name, Mat& x) { return Tensor{std::move(name), x.data(), x.rows(), x.cols()}; };
  auto vec = [](std::string name, Vec& x) { return Tensor{std::move(name), x.data(), x.size(), 1}; };
  return {mat("classifier_w", classifier_w),       vec("classifier_b", classifier_b),
          mat("embed_w", embed_w),                 vec("embed_b", embed_b),
          mat("role_w", role_w),                   vec("role_b", role_b),
          mat("id_global_w", id_global_w),         vec("id_global_b", id_global_b),
          mat("id_foreground_w", id_foreground_w), vec("id_foreground_b", id_foreground_b),
          mat("id_concat_w", id_concat_w),         vec("id_concat_b", id_concat_b)};
}

std::size_t EmbedderModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : const_cast<EmbedderModel*>(this)->tensors()) n += t.size();
  return n;
}

namespace {

struct GridCache {
  Mat logits;  // P x (K+1)
  Mat masks;   // P x (K+1)
  Mat proj;    // P x D
  Vec mass;    // [0] foreground mass, [k] part k mass
  std::vector<Vec> parts;
  Vec foreground;
  Vec global;
  std::vector<std::uint8_t> part_visible;  // K entries
};

void check_grid(const EmbedderModel& model, const FeatureGrid& grid) {
  if (grid.channels() != model.channels()) throw DimMismatch("grid channels differ from model");
  if (grid.cells.rows() != grid.num_cells() || grid.num_cells() < 1) {
    throw DimMismatch("grid cell count differs from rows*cols");
  }
}

GridCache run_forward(const EmbedderModel& model, const FeatureGrid& grid) {
  check_grid(model, grid);
  const int k_parts = model.num_parts();
  const Eigen::Index cells = grid.num_cells();
  GridCache c;
  c.logits = (grid.cells * model.classifier_w.transpose()).rowwise() + model.classifier_b.transpose();
  c.masks.resize(cells, k_parts + 1);
  for (Eigen::Index n = 0; n < cells; ++n) {
    const double mx = c.logits.row(n).maxCoeff();
    Eigen::RowVectorXd e = (c.logits.row(n).array() - mx).exp();
    c.masks.row(n) = e / e.sum();
  }
  c.proj = (grid.cells * model.embed_w.transpose()).rowwise() + model.embed_b.transpose();

  c.mass.resize(k_parts + 1);
  c.parts.resize(k_parts);
  for (int k = 1; k <= k_parts; ++k) {
    c.mass(k) = c.masks.col(k).sum();
    c.parts[k - 1] = c.proj.transpose() * c.masks.col(k) / c.mass(k);
  }
  const Vec fg_mask = 1.0 - c.masks.col(0).array();
  c.mass(0) = fg_mask.sum();
  c.foreground = c.proj.transpose() * fg_mask / c.mass(0);
  c.global = c.proj.colwise().mean().transpose();

  c.part_visible.assign(k_parts, 0);
  for (Eigen::Index n = 0; n < cells; ++n) {
    Eigen::Index arg = 0;
    c.masks.row(n).maxCoeff(&arg);
    if (arg > 0) c.part_visible[arg - 1] = 1;
  }
  return c;
}

Vec concat_parts(const std::vector<Vec>& parts) {
  const Eigen::Index d = parts.empty() ? 0 : parts[0].size();
  Vec out(static_cast<Eigen::Index>(parts.size()) * d);
  for (std::size_t k = 0; k < parts.size(); ++k) out.segment(static_cast<Eigen::Index>(k) * d, d) = parts[k];
  return out;
}

void add_linear_grad(const Mat& dout, const Mat& in, Mat& dw, Vec& db) {
  dw += dout.transpose() * in;
  db += dout.colwise().sum().transpose();
}

LossBreakdown evaluate(const EmbedderModel& model, const Batch& batch, const LossOptions& opts,
                       bool with_grad) {
  const auto b_size = static_cast<Eigen::Index>(batch.size());
  if (b_size == 0) throw DegenerateBatch("empty batch");
  const int k_parts = model.num_parts();
  const int d = model.dim();
  const LossWeights& w = opts.weights;
  const bool all = opts.evaluate_zero_weight_terms;

  std::vector<GridCache> caches;
  caches.reserve(batch.size());
  for (const auto* item : batch) caches.push_back(run_forward(model, item->grid));

  Mat f_global(b_size, d), f_fore(b_size, d), f_concat(b_size, k_parts * d);
  std::vector<Mat> f_parts(k_parts, Mat(b_size, d));
  std::vector<std::vector<std::uint8_t>> vis(k_parts, std::vector<std::uint8_t>(b_size));
  std::vector<int> ids(b_size);
  for (Eigen::Index b = 0; b < b_size; ++b) {
    const auto& c = caches[b];
    f_global.row(b) = c.global.transpose();
    f_fore.row(b) = c.foreground.transpose();
    f_concat.row(b) = concat_parts(c.parts).transpose();
    for (int k = 0; k < k_parts; ++k) {
      f_parts[k].row(b) = c.parts[k].transpose();
      vis[k][b] = c.part_visible[k];
    }
    ids[b] = batch[b]->identity;
  }

  std::array<LossValue, 4> comp;

  // Part prediction: batch mean of the per-grid sum over cells.
  Eigen::Index total_cells = 0;
  for (const auto& c : caches) total_cells += c.logits.rows();
  if (w.pa != 0.0 || all) {
    Mat stacked(total_cells, k_parts + 1);
    std::vector<int> labels;
    labels.reserve(total_cells);
    Eigen::Index row = 0;
    for (Eigen::Index b = 0; b < b_size; ++b) {
      stacked.middleRows(row, caches[b].logits.rows()) = caches[b].logits;
      row += caches[b].logits.rows();
      const auto& pl = batch[b]->grid.part_labels;
      labels.insert(labels.end(), pl.begin(), pl.end());
    }
    comp[0] = part_prediction_loss(stacked, labels);
    comp[0].value /= static_cast<double>(b_size);
    comp[0].gradients[0] /= static_cast<double>(b_size);
  } else {
    comp[0].gradients.push_back(Mat::Zero(total_cells, k_parts + 1));
  }

  // Identity objective on global, concat and foreground logits and the part embeddings.
  const Mat logit_g = (f_global * model.id_global_w.transpose()).rowwise() + model.id_global_b.transpose();
  const Mat logit_c = (f_concat * model.id_concat_w.transpose()).rowwise() + model.id_concat_b.transpose();
  const Mat logit_f =
      (f_fore * model.id_foreground_w.transpose()).rowwise() + model.id_foreground_b.transpose();
  if (w.reid != 0.0 || all) {
    GiltInputs gi{logit_g, logit_c, logit_f, f_parts, vis};
    comp[1] = gilt_loss(gi, ids, opts.reid_triplet);
  } else {
    comp[1].gradients = {Mat::Zero(b_size, logit_g.cols()), Mat::Zero(b_size, logit_c.cols()),
                         Mat::Zero(b_size, logit_f.cols())};
    for (int k = 0; k < k_parts; ++k) comp[1].gradients.push_back(Mat::Zero(b_size, d));
  }

  // Team triplet on foreground embeddings of players only.
  std::vector<Eigen::Index> players;
  std::vector<int> team_labels;
  for (Eigen::Index b = 0; b < b_size; ++b) {
    if (batch[b]->role == Role::Player && batch[b]->team) {
      players.push_back(b);
      team_labels.push_back(batch[b]->video * 2 + static_cast<int>(*batch[b]->team));
    }
  }
  Mat team_grad = Mat::Zero(b_size, d);
  if (w.team != 0.0 || all) {
    Mat sub(static_cast<Eigen::Index>(players.size()), d);
    for (std::size_t i = 0; i < players.size(); ++i) sub.row(static_cast<Eigen::Index>(i)) = f_fore.row(players[i]);
    comp[2] = triplet_batch_hard(sub, team_labels, opts.team_triplet);
  } else {
    comp[2].gradients.push_back(Mat::Zero(static_cast<Eigen::Index>(players.size()), d));
  }

  // Role classification on the foreground embedding.
  const Mat role_logits = (f_fore * model.role_w.transpose()).rowwise() + model.role_b.transpose();
  std::vector<int> roles(b_size);
  for (Eigen::Index b = 0; b < b_size; ++b) roles[b] = static_cast<int>(batch[b]->role);
  if (w.role != 0.0 || all) {
    comp[3] = focal_loss(role_logits, roles, opts.focal_gamma);
  } else {
    comp[3].gradients.push_back(Mat::Zero(b_size, kNumRoles));
  }

  LossBreakdown out;
  out.part_prediction = comp[0].value;
  out.reid = comp[1].value;
  out.team = comp[2].value;
  out.role = comp[3].value;
  const LossValue total = total_loss(comp, w);
  out.total = total.value;
  if (!with_grad) return out;

  // Gradient slices in total_loss order: pa, reid (3 + K), team, role.
  const Mat& d_cells = total.gradients[0];
  const Mat& d_logit_g = total.gradients[1];
  const Mat& d_logit_c = total.gradients[2];
  const Mat& d_logit_f = total.gradients[3];
  const Mat& d_team = total.gradients[4 + k_parts];
  const Mat& d_role = total.gradients[5 + k_parts];

  EmbedderModel g = EmbedderModel::zeros(model.shape());
  add_linear_grad(d_logit_g, f_global, g.id_global_w, g.id_global_b);
  add_linear_grad(d_logit_c, f_concat, g.id_concat_w, g.id_concat_b);
  add_linear_grad(d_logit_f, f_fore, g.id_foreground_w, g.id_foreground_b);
  add_linear_grad(d_role, f_fore, g.role_w, g.role_b);

  Mat d_global = d_logit_g * model.id_global_w;
  Mat d_concat = d_logit_c * model.id_concat_w;
  Mat d_fore = d_logit_f * model.id_foreground_w + d_role * model.role_w;
  for (std::size_t i = 0; i < players.size(); ++i) {
    d_fore.row(players[i]) += d_team.row(static_cast<Eigen::Index>(i));
  }
  (void)team_grad;

  Eigen::Index row = 0;
  for (Eigen::Index b = 0; b < b_size; ++b) {
    const auto& c = caches[b];
    const auto& x = batch[b]->grid.cells;
    const Eigen::Index cells = c.logits.rows();
    Mat d_proj = Mat::Zero(cells, d);
    Mat d_mask = Mat::Zero(cells, k_parts + 1);
    for (int k = 1; k <= k_parts; ++k) {
      Vec gk = d_concat.row(b).segment((k - 1) * d, d).transpose() +
               total.gradients[4 + (k - 1)].row(b).transpose();
      d_proj += c.masks.col(k) * gk.transpose() / c.mass(k);
      d_mask.col(k) = (c.proj.rowwise() - c.parts[k - 1].transpose()) * gk / c.mass(k);
    }
    const Vec gf = d_fore.row(b).transpose();
    const Vec fg_mask = 1.0 - c.masks.col(0).array();
    d_proj += fg_mask * gf.transpose() / c.mass(0);
    d_mask.col(0) = -(c.proj.rowwise() - c.foreground.transpose()) * gf / c.mass(0);
    d_proj.rowwise() += d_global.row(b) / static_cast<double>(cells);

    // Softmax backward, plus the direct part-prediction gradient on logits.
    Mat d_logits(cells, k_parts + 1);
    for (Eigen::Index n = 0; n < cells; ++n) {
      const double inner = c.masks.row(n).dot(d_mask.row(n));
      d_logits.row(n) = c.masks.row(n).array() * (d_mask.row(n).array() - inner);
    }
    d_logits += d_cells.middleRows(row, cells);
    row += cells;

    add_linear_grad(d_logits, x, g.classifier_w, g.classifier_b);
    add_linear_grad(d_proj, x, g.embed_w, g.embed_b);
  }
  out.gradients = std::move(g);
  return out;
}

}  // namespace

EmbedOutput forward(const EmbedderModel& model, const FeatureGrid& grid) {
  GridCache c = run_forward(model, grid);
  EmbedOutput out;
  out.features = PartFeatureSet::make(c.foreground, c.parts, c.part_visible);
  out.features = derive_concat(std::move(out.features));
  out.features.global = c.global;
  const Vec role = model.role_w * c.foreground + model.role_b;
  for (int r = 0; r < kNumRoles; ++r) out.role_logits[r] = role(r);
  out.masks = std::move(c.masks);
  return out;
}

std::vector<EmbedOutput> embed_batch(const EmbedderModel& model, const std::vector<FeatureGrid>& grids) {
  std::vector<EmbedOutput> out(grids.size());
  const auto n = static_cast<std::ptrdiff_t>(grids.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = forward(model, grids[i]);
  return out;
}

std::vector<EmbedOutput> embed_batch_serial(const EmbedderModel& model,
                                            const std::vector<FeatureGrid>& grids) {
  std::vector<EmbedOutput> out;
  out.reserve(grids.size());
  for (const auto& g : grids) out.push_back(forward(model, g));
  return out;
}

LossBreakdown loss_and_grad(const EmbedderModel& model, const Batch& batch, const LossOptions& opts) {
  return evaluate(model, batch, opts, true);
}

SampledBatch sample_batch(const TrainingSet& dataset, Rng& rng, int samples_per_identity) {
  // video -> identity -> sample indices, ordered for determinism.
  std::map<int, std::map<int, std::vector<std::size_t>>> by_video;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const auto& s = dataset.samples[i];
    by_video[s.video][s.identity].push_back(i);
  }
  struct Pools {
    int video;
    std::vector<int> left, right, other;
  };
  std::vector<Pools> eligible;
  for (const auto& [video, ids] : by_video) {
    Pools p{video, {}, {}, {}};
    for (const auto& [id, idx] : ids) {
      const auto& s = dataset.samples[idx.front()];
      if (s.role == Role::Player && s.team == Team::Left) p.left.push_back(id);
      else if (s.role == Role::Player && s.team == Team::Right) p.right.push_back(id);
      else if (s.role != Role::Player) p.other.push_back(id);
    }
    if (p.left.size() >= 4 && p.right.size() >= 4 && p.other.size() >= 3) eligible.push_back(std::move(p));
  }
  if (eligible.empty()) {
    throw InsufficientIdentities("no video holds 4 left players, 4 right players and 3 other identities");
  }
  std::uniform_int_distribution<std::size_t> pick_video(0, eligible.size() - 1);
  Pools& pools = eligible[pick_video(rng)];
  const auto& ids = by_video[pools.video];

  SampledBatch out;
  auto take = [&](std::vector<int>& pool, std::size_t count, bool player) {
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t i = 0; i < count; ++i) {
      std::vector<std::size_t> idx = ids.at(pool[i]);
      std::shuffle(idx.begin(), idx.end(), rng);
      for (int s = 0; s < samples_per_identity; ++s) {
        std::size_t chosen;
        if (static_cast<std::size_t>(s) < idx.size()) {
          chosen = idx[s];
        } else {
          std::uniform_int_distribution<std::size_t> any(0, idx.size() - 1);
          chosen = idx[any(rng)];
        }
        out.items.push_back(&dataset.samples[chosen]);
        if (player) ++out.team_batch_size;
      }
    }
  };
  take(pools.left, 4, true);
  take(pools.right, 4, true);
  take(pools.other, 3, false);
  return out;
}

double learning_rate(const TrainConfig& cfg, int epoch) {
  if (epoch < cfg.warmup_epochs) {
    const double t = static_cast<double>(epoch) / cfg.warmup_epochs;
    return cfg.base_lr * (0.1 + 0.9 * t);
  }
  if (epoch >= cfg.decay_epochs[1]) return cfg.base_lr * 0.01;
  if (epoch >= cfg.decay_epochs[0]) return cfg.base_lr * 0.1;
  return cfg.base_lr;
}

TrainResult train(const TrainConfig& cfg, const TrainingSet& dataset) {
  if (dataset.samples.empty()) throw InsufficientIdentities("empty training set");
  EmbedderShape shape;
  shape.channels = dataset.samples.front().grid.channels();
  shape.dim = cfg.embed_dim;
  shape.identities = dataset.num_identities;
  shape.parts = cfg.num_parts;
  for (const auto& s : dataset.samples) {
    for (int l : s.grid.part_labels) {
      if (l < 0 || l > cfg.num_parts) throw DimMismatch("part label outside [0, K]");
    }
  }

  TrainResult result;
  result.model = EmbedderModel::random(shape, derive_seed({cfg.seed, 0x6d6f64656cULL}));
  Rng rng(derive_seed({cfg.seed, 0x62617463ULL}));

  auto params = result.model.tensors();
  std::vector<Vec> m1, m2;
  for (const auto& t : params) {
    m1.push_back(Vec::Zero(t.size()));
    m2.push_back(Vec::Zero(t.size()));
  }
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = learning_rate(cfg, epoch);
    double epoch_loss = 0.0;
    for (int b = 0; b < cfg.batches_per_epoch; ++b) {
      const SampledBatch batch = sample_batch(dataset, rng, cfg.samples_per_identity);
      LossBreakdown lb = evaluate(result.model, batch.items, cfg.loss, true);
      epoch_loss += lb.total;
      ++step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      auto grads = lb.gradients.tensors();
      for (std::size_t t = 0; t < params.size(); ++t) {
        Eigen::Map<Vec> p(params[t].data, params[t].size());
        Eigen::Map<const Vec> gr(grads[t].data, grads[t].size());
        m1[t] = beta1 * m1[t] + (1.0 - beta1) * gr;
        m2[t] = beta2 * m2[t] + (1.0 - beta2) * gr.cwiseProduct(gr);
        p.array() -= lr * (m1[t].array() / c1) / ((m2[t].array() / c2).sqrt() + eps);
      }
    }
    result.epoch_losses.push_back(epoch_loss / std::max(1, cfg.batches_per_epoch));
  }
  return result;
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-5});
  return std::abs(analytic - numeric) / denom;
}

double grad_check(const EmbedderModel& model, const Batch& batch, const LossOptions& opts,
                  const std::function<void(EmbedderModel&)>& corrupt) {
  constexpr double h = 1e-5;
  LossBreakdown analytic = evaluate(model, batch, opts, true);
  if (corrupt) corrupt(analytic.gradients);
  auto grads = analytic.gradients.tensors();
  EmbedderModel probe = model;
  auto params = probe.tensors();
  double worst = 0.0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (Eigen::Index i = 0; i < params[t].size(); ++i) {
      double& x = params[t].data[i];
      const double saved = x;
      x = saved + h;
      const double up = evaluate(probe, batch, opts, false).total;
      x = saved - h;
      const double down = evaluate(probe, batch, opts, false).total;
      x = saved;
      worst = std::max(worst, relative_error(grads[t].data[i], (up - down) / (2.0 * h)));
    }
  }
  return worst;
}

double visibility_margin(const EmbedderModel& model, const Batch& batch) {
  double margin = kInf;
  for (const auto* item : batch) {
    const GridCache c = run_forward(model, item->grid);
    for (Eigen::Index n = 0; n < c.logits.rows(); ++n) {
      Eigen::RowVectorXd z = c.logits.row(n);
      std::sort(z.data(), z.data() + z.size(), std::greater<>());
      if (z.size() > 1) margin = std::min(margin, z(0) - z(1));
    }
  }
  return margin;
}

double kink_distance(const EmbedderModel& model, const Batch& batch, const LossOptions& opts) {
  double closest = visibility_margin(model, batch);
  const auto b_size = static_cast<Eigen::Index>(batch.size());
  const int k_parts = model.num_parts();
  std::vector<Mat> parts(k_parts, Mat(b_size, model.dim()));
  std::vector<std::vector<std::uint8_t>> vis(k_parts, std::vector<std::uint8_t>(b_size));
  Mat players(0, model.dim());
  std::vector<int> ids(b_size), teams;
  for (Eigen::Index b = 0; b < b_size; ++b) {
    const GridCache c = run_forward(model, batch[b]->grid);
    ids[b] = batch[b]->identity;
    for (int k = 0; k < k_parts; ++k) {
      parts[k].row(b) = c.parts[k].transpose();
      vis[k][b] = c.part_visible[k];
    }
    if (batch[b]->role == Role::Player && batch[b]->team) {
      players.conservativeResize(players.rows() + 1, Eigen::NoChange);
      players.row(players.rows() - 1) = c.foreground.transpose();
      teams.push_back(batch[b]->video * 2 + static_cast<int>(*batch[b]->team));
    }
  }
  for (int k = 0; k < k_parts; ++k) {
    closest = std::min(closest, triplet_kink_distance(parts[k], ids, vis[k], opts.reid_triplet));
  }
  const std::vector<std::uint8_t> all(teams.size(), 1);
  if (!teams.empty()) {
    closest = std::min(closest, triplet_kink_distance(players, teams, all, opts.team_triplet));
  }
  return closest;
}

}  // namespace prt
