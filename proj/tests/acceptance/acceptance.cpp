// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "prt/embedder.hpp"
#include "prt/io.hpp"
#include "prt/losses.hpp"
#include "prt/pipeline.hpp"
#include "prt/solvers.hpp"
#include "sequences.hpp"

using namespace prt;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

int failures = 0;

void report(int n, bool pass, const std::string& detail) {
  std::cout << "CRITERION " << n << ' ' << (pass ? "PASS" : "FAIL") << ": " << detail << std::endl;
  if (!pass) ++failures;
}

fs::path scratch_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / ("prt_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// ------------------------------------------------------------ 1. gradients

constexpr int kPoints = 100;
constexpr double kKink = 1e-3;
constexpr double kGradTol = 1e-4;

struct GradStats {
  double worst = 0.0;
  int points = 0;
};

// Draws random points until `n` smooth ones were checked (or attempts run out).
GradStats sample_points(int n, const std::function<std::optional<double>()>& one_point) {
  GradStats s;
  for (int attempts = 0; s.points < n && attempts < 50 * n; ++attempts) {
    if (auto err = one_point()) {
      s.worst = std::max(s.worst, *err);
      ++s.points;
    }
  }
  return s;
}

double matrix_error(const Mat& analytic, const std::function<double(const Mat&)>& f, const Mat& x) {
  return oracle::max_relative_error(analytic, oracle::numeric_gradient(f, x));
}

// Small batch with exact per-role identity counts (4 + 4 players, 3 others).
TrainingSet tiny_dataset(std::mt19937_64& rng, int per_id, int channels, int parts) {
  TrainingSet ds;
  int id = 0;
  std::uniform_int_distribution<int> label(0, parts);
  auto add = [&](Role role, std::optional<Team> team) {
    for (int s = 0; s < per_id; ++s) {
      LabeledGrid lg;
      lg.grid.rows = 4;
      lg.grid.cols = 2;
      lg.grid.cells = oracle::random_matrix(rng, 8, channels);
      for (int c = 0; c < 8; ++c) lg.grid.part_labels.push_back(label(rng));
      lg.identity = id;
      lg.team = team;
      lg.role = role;
      ds.samples.push_back(std::move(lg));
    }
    ++id;
  };
  for (int i = 0; i < 4; ++i) add(Role::Player, Team::Left);
  for (int i = 0; i < 4; ++i) add(Role::Player, Team::Right);
  add(Role::Goalkeeper, Team::Left);
  add(Role::Referee, std::nullopt);
  add(Role::Staff, std::nullopt);
  ds.num_identities = id;
  return ds;
}

void criterion_gradients() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::vector<std::pair<std::string, GradStats>> rows;

  const std::vector<int> labels{0, 0, 0, 1, 1, 1, 2, 2};
  const std::vector<std::uint8_t> all_visible(labels.size(), 1);
  rows.emplace_back("triplet", sample_points(kPoints, [&]() -> std::optional<double> {
    const Mat x = oracle::random_matrix(rng, 8, 4);
    const TripletConfig cfg = TripletConfig::reid();
    if (triplet_kink_distance(x, labels, all_visible, cfg) < kKink) return std::nullopt;
    auto f = [&](const Mat& m) { return triplet_batch_hard(m, labels, cfg).value; };
    return matrix_error(triplet_batch_hard(x, labels, cfg).gradients[0], f, x);
  }));

  rows.emplace_back("masked triplet", sample_points(kPoints, [&]() -> std::optional<double> {
    const Mat x = oracle::random_matrix(rng, 8, 4);
    std::bernoulli_distribution vis(0.75);
    std::vector<std::uint8_t> bits(8);
    for (auto& b : bits) b = vis(rng);
    const TripletConfig cfg = TripletConfig::team();
    if (triplet_kink_distance(x, labels, bits, cfg) < kKink) return std::nullopt;
    auto f = [&](const Mat& m) { return triplet_batch_hard_masked(m, labels, bits, cfg).value; };
    return matrix_error(triplet_batch_hard_masked(x, labels, bits, cfg).gradients[0], f, x);
  }));

  std::uniform_int_distribution<int> cls(0, 4);
  auto random_targets = [&](int n) {
    std::vector<int> t(n);
    for (auto& v : t) v = cls(rng);
    return t;
  };
  rows.emplace_back("cross-entropy", sample_points(kPoints, [&]() -> std::optional<double> {
    const Mat x = oracle::random_matrix(rng, 6, 5, 2.0);
    const auto t = random_targets(6);
    auto f = [&](const Mat& m) { return cross_entropy_id(m, t).value; };
    return matrix_error(cross_entropy_id(x, t).gradients[0], f, x);
  }));
  rows.emplace_back("focal", sample_points(kPoints, [&]() -> std::optional<double> {
    const Mat x = oracle::random_matrix(rng, 6, 5, 2.0);
    const auto t = random_targets(6);
    auto f = [&](const Mat& m) { return focal_loss(m, t, 2.0).value; };
    return matrix_error(focal_loss(x, t, 2.0).gradients[0], f, x);
  }));
  rows.emplace_back("part prediction", sample_points(kPoints, [&]() -> std::optional<double> {
    const Mat x = oracle::random_matrix(rng, 8, 5, 2.0);
    const auto t = random_targets(8);
    auto f = [&](const Mat& m) { return part_prediction_loss(m, t).value; };
    return matrix_error(part_prediction_loss(x, t).gradients[0], f, x);
  }));

  const std::vector<int> gilt_labels{0, 0, 1, 1, 2, 2, 3, 3};
  rows.emplace_back("gilt", sample_points(kPoints, [&]() -> std::optional<double> {
    std::bernoulli_distribution vis(0.7);
    GiltInputs in;
    in.global_logits = oracle::random_matrix(rng, 8, 4);
    in.concat_logits = oracle::random_matrix(rng, 8, 4);
    in.foreground_logits = oracle::random_matrix(rng, 8, 4);
    for (int k = 0; k < 3; ++k) {
      in.parts.push_back(oracle::random_matrix(rng, 8, 3));
      std::vector<std::uint8_t> bits(8);
      for (auto& b : bits) b = vis(rng);
      in.visibility.push_back(bits);
    }
    for (int k = 0; k < 3; ++k) {
      if (triplet_kink_distance(in.parts[k], gilt_labels, in.visibility[k], TripletConfig::reid()) < kKink) {
        return std::nullopt;
      }
    }
    const auto out = gilt_loss(in, gilt_labels, TripletConfig::reid());
    std::vector<Mat*> inputs{&in.global_logits, &in.concat_logits, &in.foreground_logits};
    for (auto& p : in.parts) inputs.push_back(&p);
    double worst = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const Mat saved = *inputs[i];
      auto f = [&](const Mat& m) {
        *inputs[i] = m;
        const double v = gilt_loss(in, gilt_labels, TripletConfig::reid()).value;
        *inputs[i] = saved;
        return v;
      };
      worst = std::max(worst, matrix_error(out.gradients[i], f, saved));
    }
    return worst;
  }));

  rows.emplace_back("total", sample_points(kPoints, [&]() -> std::optional<double> {
    std::array<LossValue, 4> parts;
    for (auto& p : parts) {
      p.value = 0.0;
      p.gradients = {oracle::random_matrix(rng, 3, 2)};
    }
    // The weighted sum of f_i(x) = <g_i, x> has gradient w_i * g_i.
    const Mat x = oracle::random_matrix(rng, 3, 2);
    const LossWeights w;
    const std::array<double, 4> ws{w.pa, w.reid, w.team, w.role};
    auto f = [&](const Mat& m) {
      std::array<LossValue, 4> c = parts;
      for (int i = 0; i < 4; ++i) c[i].value = (parts[i].gradients[0].array() * m.array()).sum();
      return total_loss(c, w).value;
    };
    const auto out = total_loss(parts, w);
    double worst = 0.0;
    const Mat numeric = oracle::numeric_gradient(f, x);
    Mat expected = Mat::Zero(3, 2);
    for (int i = 0; i < 4; ++i) {
      expected += ws[i] * parts[i].gradients[0];
      worst = std::max(worst, oracle::max_relative_error(out.gradients[i], ws[i] * parts[i].gradients[0]));
    }
    return std::max(worst, oracle::max_relative_error(expected, numeric));
  }));

  const auto ds = tiny_dataset(rng, 2, 6, 3);
  Rng batch_rng(7);
  int model_seed = 0;
  rows.emplace_back("embedder chain", sample_points(kPoints, [&]() -> std::optional<double> {
    const auto batch = sample_batch(ds, batch_rng, 2);
    const auto model = EmbedderModel::random({6, 3, 4, ds.num_identities}, 1000 + model_seed++);
    const LossOptions opts;
    if (kink_distance(model, batch.items, opts) < kKink) return std::nullopt;
    return grad_check(model, batch.items, opts);
  }));

  bool ok = true;
  std::string detail;
  for (const auto& [name, s] : rows) {
    ok &= s.points == kPoints && s.worst < kGradTol;
    detail += name + " " + sci(s.worst) + " (" + std::to_string(s.points) + "), ";
  }
  const double secs = seconds_since(t0);
  ok &= secs < 30.0;
  report(1, ok, "max relative error per loss (points): " + detail + "tolerance 1e-4, " + fmt(secs, 1) + " s (limit 30)");
}

// ----------------------------------------------------------- 2. oracles

struct Builder {
  SequenceResult s;
  Builder& gt(int f, int id, double x, double y = 0, double w = 10, double h = 10) {
    s.gt[f].push_back({id, {x, y, w, h}});
    return *this;
  }
  Builder& pr(int f, int id, double x, double y = 0, double w = 10, double h = 10) {
    s.pred[f].push_back({id, {x, y, w, h}});
    return *this;
  }
};

std::vector<SequenceResult> hand_built_sequences() {
  std::vector<SequenceResult> out;
  auto add = [&](const std::string& name, Builder b) {
    b.s.name = name;
    out.push_back(std::move(b.s));
  };
  {  // perfect single track
    Builder b;
    for (int f = 1; f <= 5; ++f) b.gt(f, 1, 5 * f).pr(f, 7, 5 * f);
    add("perfect", b);
  }
  {  // perfect three tracks
    Builder b;
    for (int f = 1; f <= 10; ++f) {
      for (int i = 0; i < 3; ++i) b.gt(f, i + 1, 2 * f, 40 * i).pr(f, 10 + i, 2 * f, 40 * i);
    }
    add("perfect3", b);
  }
  {  // swap in the middle
    Builder b;
    for (int f = 1; f <= 8; ++f) {
      b.gt(f, 1, f, 0).gt(f, 2, f, 50);
      b.pr(f, f <= 4 ? 1 : 2, f, 0).pr(f, f <= 4 ? 2 : 1, f, 50);
    }
    add("swap", b);
  }
  {  // split track
    Builder b;
    for (int f = 1; f <= 10; ++f) b.gt(f, 1, f).pr(f, f <= 6 ? 1 : 2, f);
    add("split", b);
  }
  {  // one prediction id covers two gt ids in turn
    Builder b;
    for (int f = 1; f <= 6; ++f) b.gt(f, 1, 0).pr(f, 9, 0);
    for (int f = 7; f <= 12; ++f) b.gt(f, 2, 80).pr(f, 9, 80);
    add("merge", b);
  }
  {  // missed frames
    Builder b;
    for (int f = 1; f <= 10; ++f) {
      b.gt(f, 1, 0);
      if (f % 3) b.pr(f, 1, 0);
    }
    add("misses", b);
  }
  {  // spurious boxes
    Builder b;
    for (int f = 1; f <= 6; ++f) b.gt(f, 1, 0).pr(f, 1, 0);
    for (int f = 2; f <= 4; ++f) b.pr(f, 5, 100);
    add("false positives", b);
  }
  {  // shift with IoU 0.6
    Builder b;
    for (int f = 1; f <= 4; ++f) b.gt(f, 1, 0).pr(f, 1, 2.5);
    add("iou 0.6", b);
  }
  {  // shift with IoU below 0.5
    Builder b;
    for (int f = 1; f <= 4; ++f) b.gt(f, 1, 0).pr(f, 1, 4);
    add("iou 0.43", b);
  }
  {  // switch away and back
    Builder b;
    for (int f = 1; f <= 9; ++f) b.gt(f, 1, 0).pr(f, (f >= 4 && f <= 6) ? 2 : 1, 0);
    add("switch and back", b);
  }
  {  // no predictions at all
    Builder b;
    for (int f = 1; f <= 3; ++f) b.gt(f, 1, 0).gt(f, 2, 30);
    add("empty prediction", b);
  }
  {  // gt appears late, tracker early
    Builder b;
    for (int f = 1; f <= 8; ++f) {
      if (f >= 4) b.gt(f, 1, 0);
      b.pr(f, 1, 0);
    }
    add("late gt", b);
  }
  {  // drifting prediction
    Builder b;
    for (int f = 1; f <= 10; ++f) b.gt(f, 1, 0).pr(f, 1, 0.7 * f);
    add("drift", b);
  }
  {  // overlapping gt, predictions follow them
    Builder b;
    for (int f = 1; f <= 8; ++f) {
      b.gt(f, 1, f).gt(f, 2, 14 - f);
      b.pr(f, 1, f + 0.5).pr(f, 2, 14 - f - 0.5);
    }
    add("overlap", b);
  }
  {  // fragment with a gap
    Builder b;
    for (int f = 1; f <= 12; ++f) {
      b.gt(f, 1, 0);
      if (f <= 4) b.pr(f, 1, 0);
      if (f >= 8) b.pr(f, 3, 0);
    }
    add("gap", b);
  }
  {  // four ids with different faults
    Builder b;
    for (int f = 1; f <= 10; ++f) {
      for (int i = 0; i < 4; ++i) b.gt(f, i + 1, 0, 30 * i);
      b.pr(f, 11, 0, 0);
      if (f % 2) b.pr(f, 12, 0, 30);
      b.pr(f, f <= 5 ? 13 : 23, 0, 60);
      b.pr(f, 14, 3, 90);
    }
    add("four ids", b);
  }
  {  // duplicate prediction on one gt
    Builder b;
    for (int f = 1; f <= 5; ++f) b.gt(f, 1, 0).pr(f, 1, 0).pr(f, 2, 1.5);
    add("duplicate", b);
  }
  {  // tracker id reused for another gt later
    Builder b;
    for (int f = 1; f <= 5; ++f) b.gt(f, 1, 0).pr(f, 4, 0);
    for (int f = 6; f <= 10; ++f) b.gt(f, 2, 50).pr(f, 4, 50).gt(f, 1, 0).pr(f, 5, 0);
    add("id reuse", b);
  }
  {  // periodic switches over 20 frames
    Builder b;
    for (int f = 1; f <= 20; ++f) {
      b.gt(f, 1, 0).gt(f, 2, 40);
      const bool flip = (f / 5) % 2;
      b.pr(f, flip ? 2 : 1, 0).pr(f, flip ? 1 : 2, 40);
    }
    add("periodic", b);
  }
  {  // scale change
    Builder b;
    for (int f = 1; f <= 6; ++f) b.gt(f, 1, 0, 0, 10, 10).pr(f, 1, 0, 0, 10 + f, 10);
    add("scale", b);
  }
  {  // alternating presence of two gt ids
    Builder b;
    for (int f = 1; f <= 10; ++f) {
      b.gt(f, f % 2 ? 1 : 2, 0, f % 2 ? 0 : 40);
      b.pr(f, 1, 0, f % 2 ? 0 : 40);
    }
    add("alternating", b);
  }
  return out;
}

struct OracleCheck {
  int compared = 0;
  int skipped = 0;
  double worst = 0.0;
  int count_mismatches = 0;
};

void compare_to_oracles(const SequenceResult& s, OracleCheck& c) {
  const auto alphas = default_hota_alphas();
  const auto ho = oracle::hota_oracle(s, alphas);
  const auto co = oracle::clear_oracle(s);
  if (ho.ambiguous || co.ambiguous) {
    ++c.skipped;
    return;
  }
  ++c.compared;
  const auto h = hota(s);
  const auto m = mota_ids(s);
  const double id = idf1(s).idf1;
  for (double d : {h.hota - ho.hota, h.deta - ho.deta, h.assa - ho.assa, m.mota - co.mota,
                   id - oracle::idf1_oracle(s)}) {
    c.worst = std::max(c.worst, std::abs(d));
  }
  c.count_mismatches += (m.id_switches != co.idsw) + (m.tp != co.tp) + (m.fn != co.fn) + (m.fp != co.fp);
}

void criterion_oracles() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int bad = 0;
  double worst_cost = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int r = dim(rng), c = dim(rng);
    Mat m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = u(rng) < 0.15 ? kInf : u(rng);
    const double forbid = t % 2 ? kInf : 0.8;
    const auto a = hungarian(m, forbid);
    const auto b = oracle::brute_assignment(m, forbid);
    double sum = 0.0;
    bool valid = true;
    std::vector<char> rows(r, 0), cols(c, 0);
    for (auto [i, j] : a.pairs) {
      valid &= !rows[i] && !cols[j] && std::isfinite(m(i, j)) && m(i, j) < forbid;
      rows[i] = cols[j] = 1;
      sum += m(i, j);
    }
    valid &= std::abs(sum - a.total_cost) <= 1e-9;
    valid &= static_cast<int>(a.pairs.size()) == b.cardinality;
    worst_cost = std::max(worst_cost, std::abs(a.total_cost - b.cost));
    bad += !valid || std::abs(a.total_cost - b.cost) > 1e-9;
  }

  OracleCheck hand, random;
  for (const auto& s : hand_built_sequences()) compare_to_oracles(s, hand);
  for (int t = 0; t < 200; ++t) compare_to_oracles(oracle::random_micro_sequence(rng, 20, 4), random);

  // Metrics are sums of the same terms in a different order: exact up to
  // floating-point reassociation.
  constexpr double kExact = 1e-12;
  const bool ok = bad == 0 && hand.compared >= 20 && hand.worst <= kExact && hand.count_mismatches == 0 &&
                  random.worst <= kExact && random.count_mismatches == 0;
  report(2, ok,
         "hungarian 1000 matrices, " + std::to_string(bad) + " mismatches (max cost diff " + sci(worst_cost) +
             "); hand-built sequences " + std::to_string(hand.compared) + " compared / " +
             std::to_string(hand.skipped) + " ambiguous, max metric diff " + sci(hand.worst) + ", " +
             std::to_string(hand.count_mismatches) + " count mismatches; random sequences " +
             std::to_string(random.compared) + " compared, max diff " + sci(random.worst) + ", " +
             std::to_string(random.count_mismatches) + " count mismatches; " + fmt(seconds_since(t0), 1) + " s");
}

// ------------------------------------------------------ 3. part distance

void criterion_distance_properties() {
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> kdist(1, 6), ddist(1, 8);
  std::uniform_real_distribution<double> pvis(0.2, 1.0);
  std::normal_distribution<double> n01;
  double worst_sym = 0.0, worst_inv = 0.0, worst_mean = 0.0;
  int structural = 0;
  for (int t = 0; t < 10000; ++t) {
    const int k = kdist(rng), d = ddist(rng);
    const double p = pvis(rng);
    const auto a = oracle::random_features(rng, k, d, p);
    const auto b = oracle::random_features(rng, k, d, p);
    const double ab = part_distance_or_inf(a, b), ba = part_distance_or_inf(b, a);
    if (std::isinf(ab) != std::isinf(ba)) {
      ++structural;
    } else if (!std::isinf(ab)) {
      worst_sym = std::max(worst_sym, std::abs(ab - ba));
    }
    auto c = a;
    for (int i = 0; i <= k; ++i) {
      if (a.visible(i) && b.visible(i)) continue;
      for (Eigen::Index j = 0; j < d; ++j) c.embedding(i)(j) += 5.0 * n01(rng);
    }
    const double cb = part_distance_or_inf(c, b);
    if (std::isinf(cb) != std::isinf(ab)) {
      ++structural;
    } else if (!std::isinf(ab)) {
      worst_inv = std::max(worst_inv, std::abs(cb - ab));
    }
    auto va = a, vb = b;
    std::fill(va.visibility.begin(), va.visibility.end(), 1);
    std::fill(vb.visibility.begin(), vb.visibility.end(), 1);
    double mean = 0.0;
    for (int i = 0; i <= k; ++i) {
      double sq = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) sq += std::pow(va.embedding(i)(j) - vb.embedding(i)(j), 2);
      mean += std::sqrt(sq);
    }
    mean /= k + 1;
    worst_mean = std::max(worst_mean, std::abs(part_distance(va, vb).value() - mean));
  }
  constexpr double kTol = 1e-9;
  const bool ok = structural == 0 && worst_sym <= kTol && worst_inv <= kTol && worst_mean <= kTol;
  report(3, ok,
         "10000 random sets: symmetry " + sci(worst_sym) + ", hidden-index invariance " + sci(worst_inv) +
             ", all-visible mean " + sci(worst_mean) + ", visibility-structure mismatches " +
             std::to_string(structural) + " (tolerance 1e-9)");
}

// ------------------------------------------------ 4, 5, 6. directional runs

constexpr int kSeeds = 5;

struct BenchmarkRuns {
  ReidEvaluation joint[kSeeds];
  ReidEvaluation reid_only[kSeeds];
  EmbedderModel joint_model[kSeeds];
  double joint_seconds = 0.0;
  double total_seconds = 0.0;
};

BenchmarkRuns run_benchmarks() {
  BenchmarkRuns r;
  const auto t0 = Clock::now();
  for (int seed = 0; seed < kSeeds; ++seed) {
    RunConfig cfg = parse_config("{}");
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.train.seed = cfg.seed;
    const ReidSplit split = make_reid_split(cfg);
    const auto tj = Clock::now();
    TrainConfig joint = cfg.train;
    const TrainResult trained = train(joint, split.train);
    r.joint[seed] = evaluate_reid(trained.model, split, cfg.seed);
    r.joint_model[seed] = trained.model;
    r.joint_seconds += seconds_since(tj);
    TrainConfig single = cfg.train;
    single.loss.weights = LossWeights::reid_only();
    r.reid_only[seed] = evaluate_reid(train(single, split.train).model, split, cfg.seed);
  }
  r.total_seconds = seconds_since(t0);
  return r;
}

double mean_of(const ReidEvaluation (&runs)[kSeeds], double ReidEvaluation::*field) {
  double s = 0.0;
  for (const auto& r : runs) s += r.*field;
  return s / kSeeds;
}

double mean_map(const ReidEvaluation (&runs)[kSeeds], RetrievalMetrics ReidEvaluation::*which) {
  double s = 0.0;
  for (const auto& r : runs) s += (r.*which).map;
  return s / kSeeds;
}

void criterion_multitask(const BenchmarkRuns& r) {
  const double team_j = mean_map(r.joint, &ReidEvaluation::team);
  const double team_r = mean_map(r.reid_only, &ReidEvaluation::team);
  const double reid_j = mean_map(r.joint, &ReidEvaluation::reid);
  const double reid_r = mean_map(r.reid_only, &ReidEvaluation::reid);
  const bool ok = team_j > team_r && reid_j >= reid_r - 0.02 && r.total_seconds < 300.0;
  report(4, ok,
         "5 seeds, team mAP joint " + fmt(team_j) + " vs ReID-only " + fmt(team_r) + "; ReID mAP joint " +
             fmt(reid_j) + " vs ReID-only " + fmt(reid_r) + " (allowed drop 0.02); " + fmt(r.total_seconds, 1) +
             " s (limit 300)");
}

void criterion_clustering(const BenchmarkRuns& r) {
  const double acc_j = mean_of(r.joint, &ReidEvaluation::cluster_accuracy);
  const double acc_r = mean_of(r.reid_only, &ReidEvaluation::cluster_accuracy);
  const bool ok = acc_j >= acc_r && acc_j >= 0.95;
  report(5, ok,
         "5 seeds, default (separable) scenario, k-means team accuracy joint " + fmt(acc_j) + " vs ReID-only " +
             fmt(acc_r) + ", floor 0.95");
}

void criterion_part_merge(const BenchmarkRuns& r) {
  const auto t0 = Clock::now();
  const RunConfig cfg = parse_config(R"({"scenario": {"occlusion_rate": 0.3, "n_referees": 1, "n_staff": 0}})");
  double idf[3] = {}, ids[3] = {};
  int agents = 0, frames = 0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const Scenario sc = generate(video_config(cfg.scenario, static_cast<std::uint64_t>(seed), 100));
    agents = static_cast<int>(sc.agents.size());
    frames = static_cast<int>(sc.frames.size());
    TrackingStream stream = to_tracking_input(sc, cfg.benchmark.detector);
    attach_features(stream, sc, &r.joint_model[seed]);
    const MergeMode modes[3] = {MergeMode::None, MergeMode::PartBased, MergeMode::ForegroundOnly};
    for (int m = 0; m < 3; ++m) {
      const auto run = run_tracking(sc, stream, cfg.tracker, cfg.merge, modes[m], static_cast<std::uint64_t>(seed));
      idf[m] += run.metrics.idf1 / kSeeds;
      ids[m] += static_cast<double>(run.metrics.id_switches) / kSeeds;
    }
  }
  // The embedders come from criterion 4; their training time counts here too.
  const double secs = seconds_since(t0) + r.joint_seconds;
  const bool ok = agents == 23 && frames == 750 && idf[1] > idf[0] && idf[1] > idf[2] && ids[1] < ids[0] &&
                  ids[1] < ids[2] && secs < 180.0;
  report(6, ok,
         "occlusion 0.3, " + std::to_string(frames) + " frames, " + std::to_string(agents) +
             " agents, 5 seeds: IDF1 part merge " + fmt(idf[1]) + " / no merge " + fmt(idf[0]) + " / foreground merge " +
             fmt(idf[2]) + "; IDs " + fmt(ids[1], 1) + " / " + fmt(ids[0], 1) + " / " + fmt(ids[2], 1) + "; " +
             fmt(secs, 1) + " s incl. training (limit 180)");
}

// ---------------------------------------------------- 7. perfect input

void criterion_perfect_input() {
  const RunConfig cfg = parse_config("{}");
  bool ok = true;
  double worst = 0.0;
  int switches = 0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const Scenario sc = generate(video_config(cfg.scenario, static_cast<std::uint64_t>(seed), 100));
    TrackingStream stream = to_tracking_input(sc, DetectorNoise::none());
    attach_features(stream, sc, nullptr);
    const auto run = run_tracking(sc, stream, cfg.tracker, cfg.merge, MergeMode::PartBased,
                                  static_cast<std::uint64_t>(seed));
    const auto& m = run.metrics;
    ok &= m.hota == 1.0 && m.mota == 1.0 && m.idf1 == 1.0 && m.id_switches == 0;
    worst = std::max({worst, 1.0 - m.hota, 1.0 - m.mota, 1.0 - m.idf1});
    switches += m.id_switches;
  }
  report(7, ok,
         "ground-truth boxes + noiseless features, default config, 5 seeds: max (1 - metric) over HOTA/MOTA/IDF1 " +
             sci(worst) + ", total IDs " + std::to_string(switches));
}

// ------------------------------------------------------ 8. determinism

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PRT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void criterion_determinism() {
  const auto t0 = Clock::now();
  const fs::path a = scratch_dir() / "run_a", b = scratch_dir() / "run_b";
  const int ca = run_cli("pipeline --config default --seed 7 --out " + a.string());
  const int cb = run_cli("pipeline --config default --seed 7 --out " + b.string());
  bool ok = ca == 0 && cb == 0;
  std::string detail;
  for (const char* f : {"report.txt", "report.json", "tracks.txt", "tracks_online.txt"}) {
    const bool same = ok && fs::exists(a / f) && read_text(a / f) == read_text(b / f);
    ok &= same;
    detail += std::string(f) + (same ? " identical, " : " DIFFERENT, ");
  }
  report(8, ok, "pipeline --seed 7 twice (exit " + std::to_string(ca) + ", " + std::to_string(cb) + "): " + detail +
                    fmt(seconds_since(t0), 1) + " s");
}

// ------------------------------------------------------- 9. round trip

void criterion_round_trip() {
  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> coord(-200.0, 2000.0), unit(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 60), id(-1, 40), kd(1, 6), dd(1, 16);
  std::lognormal_distribution<double> scale(0.0, 3.0);
  int mot_ok = 0, feat_ok = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<MotRecord> recs;
    int frame = 1;
    for (int i = count(rng); i > 0; --i) {
      frame += unit(rng) < 0.3;
      recs.push_back({frame, id(rng), coord(rng), coord(rng), 1e-3 + scale(rng), 1e-3 + scale(rng), unit(rng),
                      1 + (i % 3), unit(rng)});
    }
    const fs::path p1 = scratch_dir() / "mot1.txt", p2 = scratch_dir() / "mot2.txt";
    write_mot(p1, recs);
    write_mot(p2, parse_mot(p1));
    mot_ok += read_text(p1) == read_text(p2);

    std::vector<FeatureRecord> feats;
    const int k = kd(rng), d = dd(rng);
    for (int i = count(rng); i > 0; --i) {
      FeatureRecord r;
      r.frame = 1 + i / 5;
      r.det = i % 5;
      r.features = oracle::random_features(rng, k, d, unit(rng));
      for (int j = 0; j <= k; ++j) r.features.embedding(j) *= scale(rng);
      for (auto& v : r.role) v = coord(rng) * scale(rng);
      feats.push_back(r);
    }
    const fs::path f1 = scratch_dir() / "feat1.txt", f2 = scratch_dir() / "feat2.txt";
    write_features(f1, feats);
    write_features(f2, parse_features(f1));
    feat_ok += read_text(f1) == read_text(f2);
  }
  report(9, mot_ok == 100 && feat_ok == 100,
         "write->parse->write byte-identical: MOT " + std::to_string(mot_ok) + "/100, features " +
             std::to_string(feat_ok) + "/100");
}

}  // namespace

int main() {
  std::cout << "acceptance suite\n";
  criterion_gradients();
  criterion_oracles();
  criterion_distance_properties();
  const BenchmarkRuns runs = run_benchmarks();
  criterion_multitask(runs);
  criterion_clustering(runs);
  criterion_part_merge(runs);
  criterion_perfect_input();
  criterion_determinism();
  criterion_round_trip();
  fs::remove_all(scratch_dir());
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
