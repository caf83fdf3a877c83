#include <gtest/gtest.h>

#include <map>
#include <set>

#include "prt/errors.hpp"
#include "prt/kalman.hpp"
#include "prt/pipeline.hpp"
#include "prt/tracker.hpp"

using namespace prt;

namespace {

PartFeatureSet constant_features(double value, int k = 2, int d = 3) {
  std::vector<Vec> parts(k, Vec::Constant(d, value));
  return PartFeatureSet::make(Vec::Constant(d, value), parts, std::vector<std::uint8_t>(k, 1));
}

PartFeatureSet scalar(double value, std::uint8_t bit) {
  PartFeatureSet p;
  p.foreground = Vec::Constant(1, value);
  p.parts = {Vec::Constant(1, value)};
  p.visibility = {bit, bit};
  return p;
}

Detection det_at(int frame, BoundingBox box, double look) {
  Detection d;
  d.frame = frame;
  d.box = box;
  d.features = constant_features(look);
  return d;
}

}  // namespace

TEST(Kalman, InitiateAndPredictWithoutVelocity) {
  const BoundingBox b{10, 20, 40, 80};
  const auto s = kalman_initiate(b);
  EXPECT_EQ(Eigen::Vector4d(s.mean.head<4>()), to_measurement(b));
  EXPECT_TRUE(s.mean.tail<4>().isZero());
  const auto p = kalman_predict(s);
  EXPECT_TRUE(p.mean.isApprox(s.mean));
  EXPECT_GT(p.covariance.trace(), s.covariance.trace());
  const auto box = p.box();
  EXPECT_NEAR(box.x, 10, 1e-12);
  EXPECT_NEAR(box.h, 80, 1e-12);
}

TEST(Kalman, UpdateMovesTowardMeasurementAndShrinksCovariance) {
  const auto s = kalman_predict(kalman_initiate({0, 0, 10, 20}));
  const auto u = kalman_update(s, {4, 0, 10, 20});
  EXPECT_GT(u.mean(0), s.mean(0));
  EXPECT_LT(u.mean(0), 9.0);
  EXPECT_LT(u.covariance.trace(), s.covariance.trace());
  EXPECT_TRUE(u.covariance.isApprox(u.covariance.transpose()));
}

TEST(Kalman, LearnsConstantVelocity) {
  auto s = kalman_initiate({0, 0, 10, 20});
  for (int t = 1; t <= 40; ++t) s = kalman_update(kalman_predict(s), {3.0 * t, 0, 10, 20});
  EXPECT_NEAR(s.mean(4), 3.0, 0.05);
  EXPECT_NEAR(kalman_predict(s).box().x, 123.0, 0.5);
}

TEST(BuildCost, HandComputedTwoByTwo) {
  TrackerConfig cfg;
  const auto fa = constant_features(0.0), fb = constant_features(1.0);
  // part distance between fa and fb: every index at distance sqrt(3).
  const BoundingBox a{0, 0, 10, 10}, b{5, 0, 10, 10};
  std::vector<AssociationInput> tracks{{a, &fa}, {b, &fb}};
  std::vector<AssociationInput> dets{{a, &fa}, {b, &fa}};
  const Mat c = build_cost(tracks, dets, cfg);
  EXPECT_NEAR(c(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(c(0, 1), 0.25 * (1.0 - 1.0 / 3.0), 1e-15);
  EXPECT_NEAR(c(1, 0), 0.75 * std::sqrt(3.0) + 0.25 * (2.0 / 3.0), 1e-12);
  EXPECT_NEAR(c(1, 1), 0.75 * std::sqrt(3.0), 1e-12);
}

TEST(BuildCost, GateBelowIouThreshold) {
  TrackerConfig cfg;
  const auto near = scalar(0.0, 1), close_look = scalar(0.2, 1), far_look = scalar(0.5, 1);
  const BoundingBox a{0, 0, 10, 10}, away{500, 0, 10, 10};
  std::vector<AssociationInput> tracks{{a, &near}};
  // IoU 0: fused cost 0.75*0.2 + 0.25 = 0.4 stays; 0.75*0.5 + 0.25 = 0.625 is gated.
  std::vector<AssociationInput> dets{{away, &close_look}, {away, &far_look}, {a, &far_look}};
  const Mat c = build_cost(tracks, dets, cfg);
  EXPECT_NEAR(c(0, 0), 0.4, 1e-12);
  EXPECT_TRUE(std::isinf(c(0, 1)));
  EXPECT_NEAR(c(0, 2), 0.375, 1e-12);  // IoU 1 is never gated
}

TEST(BuildCost, NoMutualVisibilityAndIouOnly) {
  TrackerConfig cfg;
  const auto seen = scalar(0.0, 1), hidden = scalar(0.0, 0);
  const BoundingBox a{0, 0, 10, 10};
  std::vector<AssociationInput> tracks{{a, &seen}};
  std::vector<AssociationInput> dets{{a, &hidden}, {a, nullptr}};
  const Mat c = build_cost(tracks, dets, cfg);
  EXPECT_TRUE(std::isinf(c(0, 0)));
  EXPECT_TRUE(std::isinf(c(0, 1)));
  cfg.appearance_weight = 0.0;
  const Mat d = build_cost(tracks, dets, cfg);
  EXPECT_EQ(d(0, 0), 0.0);
  EXPECT_EQ(d(0, 1), 0.0);
}

TEST(EmaUpdate, LiteralExamples) {
  EXPECT_NEAR(ema_update(scalar(1, 1), scalar(2, 1), 0.9, EmaMode::Literal).foreground(0), 1.1, 1e-15);
  EXPECT_NEAR(ema_update(scalar(1, 1), scalar(2, 0), 0.9, EmaMode::Literal).foreground(0), 0.9, 1e-15);
  EXPECT_EQ(ema_update(scalar(1, 1), scalar(2, 1), 1.0, EmaMode::Literal).foreground(0), 1.0);
}

TEST(EmaUpdate, NormalizedExamples) {
  EXPECT_NEAR(ema_update(scalar(1, 1), scalar(2, 1), 0.9, EmaMode::Normalized).foreground(0), 1.1, 1e-15);
  EXPECT_EQ(ema_update(scalar(1, 1), scalar(2, 0), 0.9, EmaMode::Normalized).foreground(0), 1.0);
  EXPECT_NEAR(ema_update(scalar(1, 0), scalar(2, 1), 0.9, EmaMode::Normalized).foreground(0), 2.0, 1e-14);
  EXPECT_EQ(ema_update(scalar(1, 0), scalar(2, 0), 0.9, EmaMode::Normalized).foreground(0), 1.0);
}

TEST(EmaUpdate, VisibilityIsOrAndShapesMustMatch) {
  const auto out = ema_update(scalar(1, 0), scalar(2, 1), 0.9);
  EXPECT_EQ(out.visibility, (std::vector<std::uint8_t>{1, 1}));
  EXPECT_THROW(ema_update(scalar(1, 1), constant_features(1.0), 0.9), DimMismatch);
}

TEST(Tracker, LifecycleConfirmLoseRecoverFinish) {
  TrackerConfig cfg;
  cfg.max_age = 3;
  Tracker tr(cfg);
  const BoundingBox b{100, 100, 20, 40};
  EXPECT_TRUE(tr.step({1, {det_at(1, b, 0)}}).empty());
  EXPECT_TRUE(tr.step({2, {det_at(2, b, 0)}}).empty());
  auto out = tr.step({3, {det_at(3, b, 0)}});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].track_id, 1);
  for (int f = 4; f <= 6; ++f) EXPECT_TRUE(tr.step({f, {}}).empty());
  ASSERT_EQ(tr.active_tracks().size(), 1u);
  EXPECT_EQ(tr.active_tracks()[0].status, TrackStatus::Lost);
  out = tr.step({7, {det_at(7, b, 0)}});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].track_id, 1);  // recovered within max_age
  for (int f = 8; f <= 11; ++f) tr.step({f, {}});
  EXPECT_TRUE(tr.active_tracks().empty());
  tr.step({12, {det_at(12, b, 0)}});
  EXPECT_EQ(tr.active_tracks()[0].id, 2);
  const auto done = tr.finish();
  ASSERT_EQ(done.size(), 1u);  // id 2 never confirmed
  EXPECT_EQ(done[0].id, 1);
  EXPECT_EQ(done[0].detections.size(), 4u);
  EXPECT_EQ(done[0].frames, (FrameInterval{1, 7}));
  EXPECT_EQ(done[0].segments, (std::vector<FrameInterval>{{1, 7}}));
}

TEST(Tracker, TentativeMissIsDropped) {
  Tracker tr;
  const BoundingBox b{0, 0, 20, 40};
  tr.step({1, {det_at(1, b, 0)}});
  tr.step({2, {det_at(2, b, 0)}});
  tr.step({3, {}});
  EXPECT_TRUE(tr.active_tracks().empty());
  EXPECT_TRUE(tr.finish().empty());
}

TEST(Tracker, RejectsBadInput) {
  Tracker tr;
  tr.step({5, {}});
  EXPECT_THROW(tr.step({5, {}}), NonMonotoneFrame);
  EXPECT_THROW(tr.step({4, {}}), NonMonotoneFrame);
  Detection no_features;
  no_features.frame = 6;
  EXPECT_THROW(tr.step({6, {no_features}}), std::invalid_argument);
  TrackerConfig bad;
  bad.alpha = 1.5;
  EXPECT_THROW(Tracker{bad}, ConfigInvalid);
}

TEST(Tracker, UniqueIdsAndDeterminismOnSimulatedVideo) {
  ScenarioConfig sc;
  sc.frames = 120;
  const auto scenario = generate(sc);
  auto stream = to_tracking_input(scenario);
  attach_features(stream, scenario, nullptr);
  const auto& frames = stream.frames;
  auto run = [&] {
    Tracker tr;
    std::vector<std::vector<TrackOutput>> outs;
    for (const auto& f : frames) outs.push_back(tr.step(f));
    return std::make_pair(outs, tr.finish());
  };
  const auto [outs, tracklets] = run();
  for (std::size_t f = 0; f < outs.size(); ++f) {
    std::set<int> ids;
    std::set<std::pair<double, double>> boxes;
    for (const auto& o : outs[f]) {
      EXPECT_TRUE(ids.insert(o.track_id).second);
      EXPECT_TRUE(boxes.insert({o.box.x, o.box.y}).second);
    }
  }
  const auto [outs2, tracklets2] = run();
  ASSERT_EQ(tracklets.size(), tracklets2.size());
  for (std::size_t i = 0; i < tracklets.size(); ++i) {
    EXPECT_EQ(tracklets[i].id, tracklets2[i].id);
    EXPECT_EQ(tracklets[i].ema_features, tracklets2[i].ema_features);
    EXPECT_EQ(tracklets[i].detections.size(), tracklets2[i].detections.size());
  }
}

TEST(Tracker, AppearanceSeparatesAgentsThatMeetAndTurnBack) {
  // A walks right and B walks left; they stand on the same spot for six
  // frames and then both turn back. Motion alone carries each track on
  // through the other agent.
  auto box_of = [](int agent, int f) {
    const double meet = 200.0;
    double x;
    if (f <= 10) {
      x = agent == 0 ? meet - 6.0 * (11 - f) : meet + 6.0 * (11 - f);
    } else if (f <= 16) {
      x = meet;
    } else {
      x = agent == 0 ? meet - 6.0 * (f - 16) : meet + 6.0 * (f - 16);
    }
    return BoundingBox{x, 50, 20, 40};
  };
  auto run = [&](double w) {
    TrackerConfig cfg;
    cfg.appearance_weight = w;
    Tracker tr(cfg);
    std::map<int, std::set<int>> agents_of_track;
    for (int f = 1; f <= 30; ++f) {
      FrameInput in{f, {det_at(f, box_of(0, f), 0.0), det_at(f, box_of(1, f), 1.0)}};
      for (const auto& o : tr.step(in)) {
        if (f >= 11 && f <= 16) continue;  // boxes coincide
        agents_of_track[o.track_id].insert(o.box == box_of(0, f) ? 0 : 1);
      }
    }
    int mixed = 0;
    for (const auto& [id, agents] : agents_of_track) mixed += agents.size() > 1;
    return std::make_pair(agents_of_track.size(), mixed);
  };
  const auto [n_app, mixed_app] = run(0.75);
  EXPECT_EQ(n_app, 2u);
  EXPECT_EQ(mixed_app, 0);
  const auto [n_iou, mixed_iou] = run(0.0);
  EXPECT_GT(mixed_iou, 0);
}
