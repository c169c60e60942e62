#include <gtest/gtest.h>

#include <numbers>

#include "cfplan/csp.hpp"
#include "fixtures.hpp"

namespace cfplan {
namespace {

using test::future;
using test::open_scene;
using test::straight_future;
using test::vehicle;

TEST(Label, OpenRoadIsPos) {
  const SafetyLabel l = label_scene(open_scene(10.0));
  EXPECT_EQ(l.value, Label::Pos);
  EXPECT_EQ(l.ttc_min, kTtcCap);
}

TEST(Label, CloseLeadIsNeg) {
  Scene s = open_scene(10.0);
  s.ego.footprint = {4.0, 1.9};
  s.agents.push_back(vehicle(1, [](double t) { return Vec2{30.0 + 5.0 * t, 0.0}; }, {4.0, 1.9}));
  const SafetyLabel l = label_scene(s);
  EXPECT_NEAR(l.ttc_min, 1.2, 1e-9);
  EXPECT_EQ(l.value, Label::Neg);
}

TEST(Label, ExactlyTwoSecondsIsPos) {
  // Ego rolls 2.5 m at 5 m/s then stops; the last moving check (t = 0.4) sees a
  // 10 m bumper gap to a stopped lead.
  Scene s = open_scene(5.0);
  s.ego.footprint = {4.0, 1.9};
  s.observed_future = future([](double) { return Vec2{2.5, 0.0}; });
  s.agents.push_back(vehicle(1, [](double) { return Vec2{16.0, 0.0}; }, {4.0, 1.9}));
  const SafetyLabel l = label_scene(s);
  EXPECT_NEAR(l.ttc_min, 2.0, 1e-9);
  EXPECT_EQ(l.value, Label::Pos);
}

TEST(Candidates, SixteenFromFourAccelerations) {
  const Scene s = open_scene(10.0);
  const auto c = generate_candidates(s);
  EXPECT_EQ(c.size(), 16u);
  EXPECT_THROW(generate_candidates(s, 9), std::invalid_argument);
  // a1 = a2 = 0 sits at index 2 * 4 + 2
  EXPECT_EQ(c[10], follow_centerline(s.map, s.ego, {{0.0, 0.0}}, kPlanHorizon));
}

TEST(Candidates, SlowEgoBrakesGently) {
  const Scene s = open_scene(5.0);
  const auto c = generate_candidates(s);
  // hardest braking in both stages: -1.5 m/s^2 from 5 m/s stops at t = 10/3
  const double expected_end = 5.0 * 5.0 / (2.0 * 1.5);
  EXPECT_NEAR(c[0].back().x, expected_end, 1e-9);
}

TEST(Select, SingleCandidateIsItself) {
  const Scene s = open_scene(10.0);
  const std::vector<Trajectory> one{straight_future(8.0)};
  const auto sel = select_counterfactual(one, s);
  EXPECT_EQ(sel.index, 0u);
  EXPECT_EQ(sel.tau_pos, one[0]);
}

TEST(Select, TieGoesToLowerIndex) {
  const Scene s = open_scene(10.0);
  const std::vector<Trajectory> two{straight_future(10.0), straight_future(10.0)};
  EXPECT_EQ(select_counterfactual(two, s).index, 0u);
  const std::vector<Trajectory> empty;
  EXPECT_THROW(select_counterfactual(empty, s), std::invalid_argument);
}

TEST(Select, BrakingBeatsCollisionOnLeadBrake) {
  Scene s = open_scene(10.0);
  s.scenario = ScenarioTemplate::lead_brake;
  s.agents.push_back(vehicle(1, [](double) { return Vec2{28.0, 0.0}; }));
  const auto c = generate_candidates(s);
  const auto sel = select_counterfactual(c, s);

  // Exhaustive oracle: rescore every candidate directly.
  double max_progress = 0.0;
  for (const auto& t : c) {
    max_progress = std::max(max_progress, progress_along(t, s.map));
  }
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double score = pdms(score_trajectory(c[i], s, max_progress));
    EXPECT_DOUBLE_EQ(sel.scores[i], score);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  EXPECT_EQ(sel.index, best);
  EXPECT_EQ(nc_score(c[10], s.agents), 0.0);
  EXPECT_EQ(nc_score(sel.tau_pos, s.agents), 1.0);
  EXPECT_LT(sel.tau_pos.back().x, c[10].back().x);
}

TEST(NegativeAnalysis, IdenticalTrajectoriesGiveZeros) {
  const Trajectory t = straight_future(10.0);
  const auto b = build_negative_analysis(t, t, {});
  EXPECT_EQ(b.risk_identification.max_deviation, 0.0);
  EXPECT_EQ(b.failure_attribution.longitudinal_error, 0.0);
  EXPECT_EQ(b.failure_attribution.lateral_error, 0.0);
  for (const auto& c : b.actionable_correction) {
    EXPECT_EQ(c.d_long, 0.0);
    EXPECT_EQ(c.d_lat, 0.0);
  }
}

TEST(NegativeAnalysis, TwoMetresAheadIsLongitudinal) {
  const Trajectory pos = straight_future(10.0);
  const Trajectory neg = future([](double t) { return Vec2{10.0 * t + 2.0, 0.0}; });
  const auto b = build_negative_analysis(neg, pos, {});
  EXPECT_NEAR(b.failure_attribution.longitudinal_error, 2.0, 1e-12);
  EXPECT_NEAR(b.failure_attribution.lateral_error, 0.0, 1e-12);
  EXPECT_EQ(b.failure_attribution.primary_axis, ErrorAxis::longitudinal);
  EXPECT_NEAR(b.risk_identification.mean_deviation, 2.0, 1e-12);
}

TEST(NegativeAnalysis, CorrectionReproducesPositive) {
  const Trajectory pos = future([](double t) { return Vec2{8.0 * t, 0.3 * t * t}; });
  const Trajectory neg = future([](double t) { return Vec2{11.0 * t - 0.2 * t * t, 1.2 * std::sin(t)}; });
  const auto b = build_negative_analysis(neg, pos, {});
  const Trajectory fixed = apply_correction(neg, b);
  for (std::size_t i = 0; i < pos.size(); ++i) {
    EXPECT_NEAR(fixed[i].x, pos[i].x, 1e-6);
    EXPECT_NEAR(fixed[i].y, pos[i].y, 1e-6);
  }
  const Trajectory shorter({{0, 0, 0.5}, {1, 0, 1.0}}, 2.0);
  EXPECT_THROW(build_negative_analysis(shorter, pos, {}), std::invalid_argument);
}

TEST(MetaActions, ConstantSpeedStraight) {
  const MetaActions m = derive_meta_actions(straight_future(10.0), 10.0, test::straight_map());
  const DrivingCommand keep{SpeedDecision::maintain, DirectionDecision::keep_lane};
  EXPECT_EQ(m.short_term, keep);
  EXPECT_EQ(m.long_term, keep);
}

TEST(MetaActions, HardBrakeThenStop) {
  const Scene s = open_scene(10.0);
  const Trajectory brake = follow_centerline(s.map, s.ego, {{0.0, -6.0}}, kPlanHorizon);
  const MetaActions m = derive_meta_actions(brake, 10.0, s.map);
  EXPECT_EQ(m.short_term, (DrivingCommand{SpeedDecision::decelerate, DirectionDecision::keep_lane}));
  EXPECT_EQ(m.long_term, (DrivingCommand{SpeedDecision::decelerate, DirectionDecision::keep_lane}));
}

TEST(MetaActions, LeftTurnInSecondWindow) {
  // Straight to x = 10 at t = 1, then a quarter circle of radius 12 to the left.
  const double r = 12.0;
  const Trajectory turn = future([=](double t) {
    if (t <= 1.0) {
      return Vec2{10.0 * t, 0.0};
    }
    const double phi = 0.5 * std::numbers::pi * (t - 1.0) / 3.0;
    return Vec2{10.0 + r * std::sin(phi), r * (1.0 - std::cos(phi))};
  });
  const MetaActions m = derive_meta_actions(turn, 10.0, test::straight_map());
  EXPECT_EQ(m.short_term.direction_decision, DirectionDecision::keep_lane);
  EXPECT_EQ(m.long_term.direction_decision, DirectionDecision::turn_left);
}

TEST(BuildDataset, AllPosBatchHasNoNegatives) {
  std::vector<Scene> scenes;
  for (int seed = 0; seed < 5; ++seed) {
    scenes.push_back(generate_scene(ScenarioTemplate::free_road, seed));
  }
  for (const CspRecord& r : build_dataset(scenes)) {
    EXPECT_EQ(r.label.value, Label::Pos);
    EXPECT_FALSE(r.tau_neg.has_value());
    EXPECT_FALSE(r.analysis.has_value());
    EXPECT_EQ(r.tau_pos, r.scene.observed_future);
  }
}

TEST(BuildDataset, MixedBatchCountsAndNegativeImprovement) {
  std::vector<Scene> scenes;
  for (int seed = 0; seed < 10; ++seed) {
    scenes.push_back(generate_scene(kAllTemplates[seed % 4], seed));
  }
  const auto records = build_dataset(scenes, 3);
  ASSERT_EQ(records.size(), 10u);
  EXPECT_EQ(records, build_dataset(scenes, 1));
  std::size_t neg = 0, expected_neg = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const CspRecord& r = records[i];
    expected_neg += label_scene(scenes[i]).value == Label::Neg ? 1 : 0;
    if (r.label.value != Label::Neg) {
      continue;
    }
    ++neg;
    ASSERT_TRUE(r.tau_neg.has_value());
    EXPECT_EQ(*r.tau_neg, scenes[i].observed_future);
    const double ref = reference_progress(r);
    EXPECT_GE(pdms(score_trajectory(r.tau_pos, r.scene, ref)), pdms(score_trajectory(*r.tau_neg, r.scene, ref)));
    ASSERT_TRUE(r.analysis.has_value());
    EXPECT_EQ(r.analysis->counterfactual_analysis.size(), 16u);
  }
  EXPECT_EQ(neg, expected_neg);
  EXPECT_GT(neg, 0u);
}

}  // namespace
}  // namespace cfplan
