#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "cfplan/scenario.hpp"

namespace cfplan::test {

using PositionFn = std::function<Vec2(double)>;

// Straight road along +x, three lanes of 3.5 m.
inline SceneMap straight_map() {
  SceneMap map;
  map.centerline = Polyline({{-80.0, 0.0}, {0.0, 0.0}, {240.0, 0.0}});
  map.lane_width = 3.5;
  map.drivable_area.push_back({{-80.0, -5.25}, {240.0, -5.25}, {240.0, 5.25}, {-80.0, 5.25}});
  return map;
}

// Eight waypoints at t = 0.5 ... 4.0.
inline Trajectory future(const PositionFn& p) {
  std::vector<Waypoint> wps;
  for (int k = 1; k <= 8; ++k) {
    const double t = 0.5 * k;
    const Vec2 v = p(t);
    wps.push_back({v.x, v.y, t});
  }
  return Trajectory(std::move(wps), 2.0);
}

inline Trajectory straight_future(double speed) {
  return future([=](double t) { return Vec2{speed * t, 0.0}; });
}

// Agent motion sampled at 10 Hz over [-1.5, 4.0].
inline Trajectory agent_script(const PositionFn& p) {
  std::vector<Waypoint> wps;
  for (int k = 0; k <= 55; ++k) {
    const double t = -1.5 + 0.1 * k;
    const Vec2 v = p(t);
    wps.push_back({v.x, v.y, t});
  }
  return Trajectory(std::move(wps), 10.0);
}

inline Agent vehicle(int id, const PositionFn& p, Footprint fp = {4.5, 1.9}) {
  Agent a;
  a.id = id;
  a.kind = AgentKind::vehicle;
  a.footprint = fp;
  a.scripted_trajectory = agent_script(p);
  return a;
}

// Ego at the origin heading +x at constant speed, no agents.
inline Scene open_scene(double speed) {
  Scene s;
  s.seed = 0;
  s.scenario = ScenarioTemplate::free_road;
  s.ego.position = {0.0, 0.0};
  s.ego.heading = 0.0;
  s.ego.speed = speed;
  s.ego.footprint = {4.5, 1.9};
  s.ego_history = Trajectory({{-speed, 0.0, -1.0}, {-0.5 * speed, 0.0, -0.5}, {0.0, 0.0, 0.0}}, 2.0);
  s.map = straight_map();
  s.observed_future = straight_future(speed);
  return s;
}

}  // namespace cfplan::test
