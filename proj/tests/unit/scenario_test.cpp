#include <gtest/gtest.h>

#include "cfplan/metrics.hpp"
#include "cfplan/scenario.hpp"
#include "fixtures.hpp"

namespace cfplan {
namespace {

using test::straight_map;

TEST(Trajectory, RejectsIrregularTimeStamps) {
  EXPECT_THROW(Trajectory({{0, 0, 0.0}, {1, 0, 0.4}}, 2.0), std::invalid_argument);
  EXPECT_THROW(Trajectory({{0, 0, 0.0}}, 0.0), std::invalid_argument);
  EXPECT_NO_THROW(Trajectory({{0, 0, 0.0}, {1, 0, 0.5}}, 2.0));
}

TEST(Trajectory, PositionAtInterpolatesAndClamps) {
  const Trajectory t({{0, 0, 0.0}, {2, 4, 0.5}}, 2.0);
  EXPECT_EQ(t.position_at(0.25), (Vec2{1.0, 2.0}));
  EXPECT_EQ(t.position_at(-1.0), (Vec2{0.0, 0.0}));
  EXPECT_EQ(t.position_at(3.0), (Vec2{2.0, 4.0}));
}

TEST(Resample, TwoPointSegmentToTenHertz) {
  const Trajectory t({{0, 0, 0.0}, {1, 0, 0.5}}, 2.0);
  const Trajectory r = resample_trajectory(t, 10.0);
  ASSERT_EQ(r.size(), 6u);
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_NEAR(r[i].x, 0.2 * static_cast<double>(i), 1e-12);
    EXPECT_EQ(r[i].y, 0.0);
    EXPECT_NEAR(r[i].t, 0.1 * static_cast<double>(i), 1e-12);
  }
}

TEST(Resample, CollinearWithSameEndpoints) {
  const Trajectory t({{1, 2, 0.0}, {3, 6, 0.5}}, 2.0);
  const Trajectory r = resample_trajectory(t, 10.0);
  EXPECT_EQ(r.front(), t.front());
  EXPECT_EQ(r.back(), t.back());
  for (const Waypoint& w : r.waypoints()) {
    EXPECT_NEAR((w.x - 1.0) * 4.0 - (w.y - 2.0) * 2.0, 0.0, 1e-12);
  }
}

TEST(Resample, SameRateIsIdentity) {
  const Trajectory t = test::future([](double s) { return Vec2{s * s, std::sin(s)}; });
  EXPECT_EQ(resample_trajectory(t, 2.0), t);
}

TEST(Resample, RejectsNonPositiveRate) {
  const Trajectory t({{0, 0, 0.0}, {1, 0, 0.5}}, 2.0);
  EXPECT_THROW(resample_trajectory(t, 0.0), std::invalid_argument);
  EXPECT_THROW(resample_trajectory(t, -2.0), std::invalid_argument);
}

EgoState ego_at(double speed) {
  EgoState e;
  e.speed = speed;
  return e;
}

TEST(FollowCenterline, ConstantVelocity) {
  const Trajectory t = follow_centerline(straight_map(), ego_at(10.0), {{0.0, 0.0}}, 4.0);
  ASSERT_EQ(t.size(), 8u);
  EXPECT_NEAR(t.back().x, 40.0, 1e-9);
  EXPECT_NEAR(t.back().y, 0.0, 1e-12);
  EXPECT_NEAR(t.front().t, 0.5, 1e-12);
  EXPECT_NEAR(t.back().t, 4.0, 1e-12);
}

TEST(FollowCenterline, BrakingClampsAtStandstill) {
  const Trajectory t = follow_centerline(straight_map(), ego_at(10.0), {{0.0, -3.0}}, 4.0);
  // v^2 / (2|a|) once stopped at t = 10/3 s
  EXPECT_NEAR(t.back().x, 100.0 / 6.0, 1e-9);
  EXPECT_NEAR(t[6].x, 100.0 / 6.0, 1e-9);
  EXPECT_NEAR(t[5].x, 10.0 * 3.0 - 1.5 * 9.0, 1e-9);
}

TEST(FollowCenterline, TwoStageProfileReachesStageTwoSpeed) {
  const Trajectory t = follow_centerline(straight_map(), ego_at(5.0), two_stage_profile(1.0, 0.0), 4.0);
  EXPECT_NEAR(t[0].x, 5.0 * 0.5 + 0.5 * 0.25, 1e-9);
  EXPECT_NEAR(t[1].x, 5.5, 1e-9);
  for (std::size_t i = 2; i < t.size(); ++i) {
    const double v = (t[i].x - t[i - 1].x) / 0.5;
    EXPECT_NEAR(v, 6.0, 1e-9);
  }
}

TEST(FollowCenterline, RejectsStartFarFromCenterline) {
  EgoState e = ego_at(5.0);
  e.position = {0.0, 3.0};
  EXPECT_THROW(follow_centerline(straight_map(), e, {{0.0, 0.0}}, 4.0), std::invalid_argument);
}

TEST(AccelerationGrid, SpeedProportionalScale) {
  EXPECT_DOUBLE_EQ(acceleration_scale(5.0), 0.5);
  EXPECT_DOUBLE_EQ(acceleration_grid(5.0).front(), -1.5);
  EXPECT_DOUBLE_EQ(acceleration_scale(20.0), 1.0);
  EXPECT_DOUBLE_EQ(acceleration_scale(0.0), 0.3);
}

TEST(GenerateScene, DeterministicAndValid) {
  for (ScenarioTemplate tpl : kAllTemplates) {
    for (std::int64_t seed : {0, 1, 7, 42}) {
      const Scene a = generate_scene(tpl, seed);
      const Scene b = generate_scene(tpl, seed);
      EXPECT_EQ(a, b);
      EXPECT_NO_THROW(validate_scene(a));
      EXPECT_EQ(a.observed_future.size(), kFutureWaypoints);
      EXPECT_EQ(a.ego_history.size(), kHistoryWaypoints);
    }
  }
  EXPECT_NE(generate_scene(ScenarioTemplate::lead_brake, 1), generate_scene(ScenarioTemplate::lead_brake, 2));
}

TEST(GenerateScene, CrossingSeedElevenConflicts) {
  const Scene s = generate_scene(ScenarioTemplate::crossing, 11);
  EXPECT_LT(ttc_min(s.observed_future, s.agents, kPlanHorizon, s.ego.footprint), 2.0);
}

TEST(GenerateScene, RejectsNegativeSeed) {
  EXPECT_THROW(generate_scene(ScenarioTemplate::free_road, -1), std::invalid_argument);
}

TEST(ValidateScene, RejectsBrokenInvariants) {
  Scene s = test::open_scene(10.0);
  EXPECT_NO_THROW(validate_scene(s));
  Scene bad = s;
  bad.ego.speed = -1.0;
  EXPECT_THROW(validate_scene(bad), std::invalid_argument);
  bad = s;
  bad.map.drivable_area.clear();
  EXPECT_THROW(validate_scene(bad), std::invalid_argument);
  bad = s;
  bad.map.drivable_area = {{{0, 0}, {2, 2}, {2, 0}, {0, 2}}};
  EXPECT_THROW(validate_scene(bad), std::invalid_argument);
  bad = s;
  Agent short_agent = test::vehicle(1, [](double t) { return Vec2{20.0 + t, 3.5}; });
  short_agent.scripted_trajectory = Trajectory({{20, 3.5, 0.0}, {21, 3.5, 0.1}}, 10.0);
  bad.agents.push_back(short_agent);
  EXPECT_THROW(validate_scene(bad), std::invalid_argument);
}

TEST(Names, RoundTrip) {
  for (ScenarioTemplate t : kAllTemplates) {
    EXPECT_EQ(parse_template(to_string(t)), t);
  }
  for (auto d : {SpeedDecision::maintain, SpeedDecision::accelerate, SpeedDecision::decelerate}) {
    EXPECT_EQ(parse_speed_decision(to_string(d)), d);
  }
  for (auto d : {DirectionDecision::keep_lane, DirectionDecision::turn_left, DirectionDecision::turn_right,
                 DirectionDecision::lane_change_left, DirectionDecision::lane_change_right}) {
    EXPECT_EQ(parse_direction_decision(to_string(d)), d);
  }
  EXPECT_THROW(parse_template("roundabout"), std::invalid_argument);
}

TEST(AnchorAtOrigin, PrependsOrigin) {
  const Trajectory a = anchor_at_origin(test::straight_future(4.0));
  ASSERT_EQ(a.size(), 9u);
  EXPECT_EQ(a.front(), (Waypoint{0.0, 0.0, 0.0}));
  EXPECT_EQ(anchor_at_origin(a), a);
}

}  // namespace
}  // namespace cfplan
