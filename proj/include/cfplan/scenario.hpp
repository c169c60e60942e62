#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfplan/geometry.hpp"

namespace cfplan {

// Horizons of the planning problem, in seconds.
inline constexpr double kHistoryHorizon = 1.5;
inline constexpr double kShortTermHorizon = 1.0;
inline constexpr double kPlanHorizon = 4.0;
inline constexpr double kSupervisionRateHz = 2.0;
inline constexpr std::size_t kFutureWaypoints = 8;
inline constexpr std::size_t kHistoryWaypoints = 3;
inline constexpr double kAgentRateHz = 10.0;
inline constexpr double kReplanStep = 0.1;

struct Waypoint {
  double x{0.0};
  double y{0.0};
  double t{0.0};

  Vec2 position() const { return {x, y}; }
  bool operator==(const Waypoint&) const = default;
};

// Uniformly sampled waypoint sequence. Construction validates strictly
// increasing time stamps spaced 1/rate_hz apart (within 1e-9 s).
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(std::vector<Waypoint> waypoints, double rate_hz);

  std::span<const Waypoint> waypoints() const { return waypoints_; }
  const Waypoint& operator[](std::size_t i) const { return waypoints_[i]; }
  const Waypoint& front() const { return waypoints_.front(); }
  const Waypoint& back() const { return waypoints_.back(); }
  std::size_t size() const { return waypoints_.size(); }
  bool empty() const { return waypoints_.empty(); }
  double rate_hz() const { return rate_hz_; }
  double dt() const { return 1.0 / rate_hz_; }
  double start_time() const { return waypoints_.front().t; }
  double end_time() const { return waypoints_.back().t; }

  // Linear interpolation in x, y; clamps outside the covered interval.
  Vec2 position_at(double t) const;

  bool operator==(const Trajectory&) const = default;

 private:
  std::vector<Waypoint> waypoints_;
  double rate_hz_{kSupervisionRateHz};
};

struct EgoState {
  Vec2 position;
  double heading{0.0};
  double speed{0.0};
  Footprint footprint;
  bool operator==(const EgoState&) const = default;
};

enum class AgentKind { vehicle, pedestrian, cyclist };

struct Agent {
  int id{0};
  AgentKind kind{AgentKind::vehicle};
  Footprint footprint;
  Trajectory scripted_trajectory;
  bool operator==(const Agent&) const = default;
};

struct SceneMap {
  Polyline centerline;
  double lane_width{3.5};
  std::vector<Polygon> drivable_area;
  bool operator==(const SceneMap&) const = default;
};

enum class SpeedDecision { maintain, accelerate, decelerate };
enum class DirectionDecision { keep_lane, turn_left, turn_right, lane_change_left, lane_change_right };

struct DrivingCommand {
  SpeedDecision speed_decision{SpeedDecision::maintain};
  DirectionDecision direction_decision{DirectionDecision::keep_lane};
  bool operator==(const DrivingCommand&) const = default;
};

enum class ScenarioTemplate { free_road, lead_brake, crossing, cut_in };

inline constexpr ScenarioTemplate kAllTemplates[] = {ScenarioTemplate::free_road, ScenarioTemplate::lead_brake,
                                                     ScenarioTemplate::crossing, ScenarioTemplate::cut_in};

struct Scene {
  std::int64_t seed{0};
  ScenarioTemplate scenario{ScenarioTemplate::free_road};
  EgoState ego;
  Trajectory ego_history;
  std::vector<Agent> agents;
  SceneMap map;
  DrivingCommand command;
  Trajectory observed_future;
  bool operator==(const Scene&) const = default;
};

// One longitudinal control stage: `accel` applies from `start_s` until the
// next stage begins.
struct AccelStage {
  double start_s{0.0};
  double accel{0.0};
};
using AccelProfile = std::vector<AccelStage>;

std::string_view to_string(ScenarioTemplate t);
std::string_view to_string(AgentKind k);
std::string_view to_string(SpeedDecision d);
std::string_view to_string(DirectionDecision d);
ScenarioTemplate parse_template(std::string_view name);
AgentKind parse_agent_kind(std::string_view name);
SpeedDecision parse_speed_decision(std::string_view name);
DirectionDecision parse_direction_decision(std::string_view name);

Footprint default_footprint(AgentKind kind);

// Deterministic synthetic scene; identical (template, seed) pairs give
// bit-identical scenes.
Scene generate_scene(ScenarioTemplate scenario, std::int64_t seed);

// Throws std::invalid_argument when the scene breaks a structural invariant.
void validate_scene(const Scene& scene);

Trajectory resample_trajectory(const Trajectory& traj, double rate_hz);

// Longitudinal replanning along the centerline. Speed follows the
// piecewise-constant acceleration profile on a 0.1 s grid, clamped at zero;
// arc length is integrated exactly within each grid step. Output is sampled
// at 2 Hz with time stamps 0.5, 1.0, ..., horizon_s.
Trajectory follow_centerline(const SceneMap& map, const EgoState& start, const AccelProfile& profile,
                             double horizon_s);

// Two-stage stage-1/stage-2 profile with the boundary at the short-term horizon.
AccelProfile two_stage_profile(double stage1_accel, double stage2_accel);

// Speed-proportional authority used for counterfactual replanning.
double acceleration_scale(double speed);
std::vector<double> acceleration_grid(double speed);

// Future trajectory with the current ego position (origin of the ego frame)
// prepended when it does not already start at t = 0.
Trajectory anchor_at_origin(const Trajectory& future);

}  // namespace cfplan
