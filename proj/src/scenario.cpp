#include "cfplan/scenario.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace cfplan {

namespace {

constexpr double kTimeTolerance = 1e-9;
constexpr double kRoadStart = -80.0;
constexpr double kRoadEnd = 240.0;
constexpr double kLaneWidth = 3.5;
constexpr int kLanesEachSide = 1;

using PositionFn = std::function<Vec2(double)>;

// Samples a continuous agent motion at 10 Hz over [-T_h, T_p]; linear
// interpolation between samples gives piecewise-constant velocity.
Trajectory script_agent(const PositionFn& position) {
  const auto count = static_cast<std::size_t>(std::lround((kHistoryHorizon + kPlanHorizon) * kAgentRateHz)) + 1;
  std::vector<Waypoint> wps;
  wps.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = -kHistoryHorizon + static_cast<double>(k) / kAgentRateHz;
    const Vec2 p = position(t);
    wps.push_back({p.x, p.y, t});
  }
  return Trajectory(std::move(wps), kAgentRateHz);
}

Polygon rectangle(double x0, double x1, double y0, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

SceneMap straight_road() {
  SceneMap map;
  map.centerline = Polyline({{kRoadStart, 0.0}, {0.0, 0.0}, {kRoadEnd, 0.0}});
  map.lane_width = kLaneWidth;
  const double half = kLaneWidth * (0.5 + kLanesEachSide);
  map.drivable_area.push_back(rectangle(kRoadStart, kRoadEnd, -half, half));
  return map;
}

Trajectory constant_speed_history(double speed) {
  std::vector<Waypoint> wps;
  for (std::size_t k = 0; k < kHistoryWaypoints; ++k) {
    const double t = -static_cast<double>(kHistoryWaypoints - 1 - k) / kSupervisionRateHz;
    wps.push_back({speed * t, 0.0, t});
  }
  return Trajectory(std::move(wps), kSupervisionRateHz);
}

class SceneRng {
 public:
  SceneRng(ScenarioTemplate scenario, std::int64_t seed)
      : engine_(make_seed(scenario, seed)) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  int index(int n) { return std::uniform_int_distribution<int>(0, n - 1)(engine_); }
  bool chance(double p) { return uniform(0.0, 1.0) < p; }

 private:
  static std::uint64_t make_seed(ScenarioTemplate scenario, std::int64_t seed) {
    std::seed_seq seq{static_cast<std::uint64_t>(seed), static_cast<std::uint64_t>(scenario) + 1,
                      std::uint64_t{0x5ce9e}};
    std::array<std::uint64_t, 1> out{};
    seq.generate(out.begin(), out.end());
    return out[0];
  }

  std::mt19937_64 engine_;
};

struct ProfileChoice {
  int stage1;
  int stage2;
};

Trajectory observed_from_grid(const Scene& scene, ProfileChoice choice) {
  const std::vector<double> grid = acceleration_grid(scene.ego.speed);
  return follow_centerline(scene.map, scene.ego,
                           two_stage_profile(grid[static_cast<std::size_t>(choice.stage1)],
                                             grid[static_cast<std::size_t>(choice.stage2)]),
                           kPlanHorizon);
}

ProfileChoice pick(SceneRng& rng, std::span<const ProfileChoice> options) {
  return options[static_cast<std::size_t>(rng.index(static_cast<int>(options.size())))];
}

// Grid indices: 0 hard brake, 1 moderate brake, 2 hold, 3 accelerate.
constexpr ProfileChoice kAttentive[] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
constexpr ProfileChoice kInattentive[] = {{2, 2}, {2, 1}, {3, 2}, {2, 3}};

void add_parallel_traffic(Scene& scene, SceneRng& rng, int count) {
  double side = rng.chance(0.5) ? 1.0 : -1.0;
  for (int i = 0; i < count; ++i) {
    const double lane_y = side * kLaneWidth;
    const double x0 = rng.uniform(-15.0, 40.0) + 12.0 * i;
    const double v = std::max(0.0, scene.ego.speed + rng.uniform(-2.0, 2.0));
    Agent agent;
    agent.id = static_cast<int>(scene.agents.size()) + 1;
    agent.kind = AgentKind::vehicle;
    agent.footprint = default_footprint(AgentKind::vehicle);
    agent.scripted_trajectory = script_agent([=](double t) { return Vec2{x0 + v * t, lane_y}; });
    scene.agents.push_back(std::move(agent));
    side = -side;
  }
}

void build_free_road(Scene& scene, SceneRng& rng) {
  add_parallel_traffic(scene, rng, rng.index(3));
  scene.observed_future = observed_from_grid(scene, {2, 2});
}

void build_lead_brake(Scene& scene, SceneRng& rng) {
  const double gap = rng.uniform(22.0, 38.0);
  const double lead_speed = std::max(2.0, scene.ego.speed + rng.uniform(-1.0, 1.0));
  const double brake_onset = rng.uniform(-1.0, -0.2);
  const double decel = rng.uniform(2.5, 4.5);
  const double stop_after = lead_speed / decel;

  // Distance covered since brake onset, then shifted so x(0) = gap.
  auto travelled = [=](double t) {
    const double dt = t - brake_onset;
    if (dt <= 0.0) {
      return lead_speed * dt;
    }
    const double d = std::min(dt, stop_after);
    return lead_speed * d - 0.5 * decel * d * d;
  };
  const double offset = gap - travelled(0.0);

  Agent lead;
  lead.id = 1;
  lead.kind = AgentKind::vehicle;
  lead.footprint = default_footprint(AgentKind::vehicle);
  lead.scripted_trajectory = script_agent([=](double t) { return Vec2{offset + travelled(t), 0.0}; });
  scene.agents.push_back(std::move(lead));
  add_parallel_traffic(scene, rng, rng.index(2));

  scene.observed_future = observed_from_grid(scene, rng.chance(0.5) ? pick(rng, kAttentive) : pick(rng, kInattentive));
}

void build_crossing(Scene& scene, SceneRng& rng) {
  const double crossing_x = rng.uniform(24.0, 38.0);
  const auto kind = static_cast<AgentKind>(rng.index(3));
  double speed = 0.0;
  switch (kind) {
    case AgentKind::pedestrian:
      speed = rng.uniform(1.2, 2.0);
      break;
    case AgentKind::cyclist:
      speed = rng.uniform(3.5, 5.5);
      break;
    case AgentKind::vehicle:
      speed = rng.uniform(5.0, 8.0);
      break;
  }
  const double direction = rng.chance(0.5) ? 1.0 : -1.0;
  const double arrival = crossing_x / scene.ego.speed + rng.uniform(-0.5, 0.8);

  Agent crosser;
  crosser.id = 1;
  crosser.kind = kind;
  crosser.footprint = default_footprint(kind);
  crosser.scripted_trajectory =
      script_agent([=](double t) { return Vec2{crossing_x, direction * speed * (t - arrival)}; });
  scene.agents.push_back(std::move(crosser));
  scene.map.drivable_area.push_back(rectangle(crossing_x - 5.0, crossing_x + 5.0, -60.0, 60.0));

  scene.observed_future =
      observed_from_grid(scene, rng.chance(0.3) ? pick(rng, kAttentive) : pick(rng, kInattentive));
}

void build_cut_in(Scene& scene, SceneRng& rng) {
  const double side = rng.chance(0.5) ? 1.0 : -1.0;
  const double gap = rng.uniform(10.0, 22.0);
  const double speed = std::max(2.0, scene.ego.speed - rng.uniform(1.0, 4.0));
  const double lateral_speed = rng.uniform(0.8, 1.4);
  const double start = rng.uniform(-0.8, 0.0);
  const double lane_y = side * kLaneWidth;
  const double merge_done = start + kLaneWidth / lateral_speed;

  Agent cutter;
  cutter.id = 1;
  cutter.kind = AgentKind::vehicle;
  cutter.footprint = default_footprint(AgentKind::vehicle);
  cutter.scripted_trajectory = script_agent([=](double t) {
    const double moved = std::clamp(t, start, merge_done) - start;
    return Vec2{gap + speed * t, lane_y - side * lateral_speed * moved};
  });
  scene.agents.push_back(std::move(cutter));

  scene.observed_future =
      observed_from_grid(scene, rng.chance(0.4) ? pick(rng, kAttentive) : pick(rng, kInattentive));
}

}  // namespace

Trajectory::Trajectory(std::vector<Waypoint> waypoints, double rate_hz)
    : waypoints_(std::move(waypoints)), rate_hz_(rate_hz) {
  if (!(rate_hz_ > 0.0) || !std::isfinite(rate_hz_)) {
    throw std::invalid_argument("trajectory rate must be positive");
  }
  const double dt = 1.0 / rate_hz_;
  for (std::size_t i = 0; i < waypoints_.size(); ++i) {
    const Waypoint& w = waypoints_[i];
    if (!std::isfinite(w.t) || !std::isfinite(w.x) || !std::isfinite(w.y)) {
      throw std::invalid_argument("trajectory waypoint is not finite");
    }
    if (i > 0) {
      const double step = w.t - waypoints_[i - 1].t;
      if (step <= 0.0 || std::abs(step - dt) > kTimeTolerance) {
        throw std::invalid_argument("trajectory time stamps must be uniformly spaced at 1/rate_hz");
      }
    }
  }
}

Vec2 Trajectory::position_at(double t) const {
  if (waypoints_.empty()) {
    throw std::invalid_argument("empty trajectory");
  }
  if (t <= waypoints_.front().t) {
    return waypoints_.front().position();
  }
  if (t >= waypoints_.back().t) {
    return waypoints_.back().position();
  }
  const double u = (t - waypoints_.front().t) * rate_hz_;
  auto i = static_cast<std::size_t>(std::floor(u + kTimeTolerance));
  i = std::min(i, waypoints_.size() - 1);
  const double frac = (t - waypoints_[i].t) * rate_hz_;
  if (std::abs(frac) < kTimeTolerance || i + 1 == waypoints_.size()) {
    return waypoints_[i].position();
  }
  const Vec2 a = waypoints_[i].position();
  const Vec2 b = waypoints_[i + 1].position();
  return a + (b - a) * frac;
}

std::string_view to_string(ScenarioTemplate t) {
  switch (t) {
    case ScenarioTemplate::free_road:
      return "free_road";
    case ScenarioTemplate::lead_brake:
      return "lead_brake";
    case ScenarioTemplate::crossing:
      return "crossing";
    case ScenarioTemplate::cut_in:
      return "cut_in";
  }
  throw std::invalid_argument("unknown scenario template");
}

std::string_view to_string(AgentKind k) {
  switch (k) {
    case AgentKind::vehicle:
      return "vehicle";
    case AgentKind::pedestrian:
      return "pedestrian";
    case AgentKind::cyclist:
      return "cyclist";
  }
  throw std::invalid_argument("unknown agent kind");
}

std::string_view to_string(SpeedDecision d) {
  switch (d) {
    case SpeedDecision::maintain:
      return "maintain";
    case SpeedDecision::accelerate:
      return "accelerate";
    case SpeedDecision::decelerate:
      return "decelerate";
  }
  throw std::invalid_argument("unknown speed decision");
}

std::string_view to_string(DirectionDecision d) {
  switch (d) {
    case DirectionDecision::keep_lane:
      return "keep_lane";
    case DirectionDecision::turn_left:
      return "turn_left";
    case DirectionDecision::turn_right:
      return "turn_right";
    case DirectionDecision::lane_change_left:
      return "lane_change_left";
    case DirectionDecision::lane_change_right:
      return "lane_change_right";
  }
  throw std::invalid_argument("unknown direction decision");
}

ScenarioTemplate parse_template(std::string_view name) {
  for (ScenarioTemplate t : kAllTemplates) {
    if (to_string(t) == name) {
      return t;
    }
  }
  throw std::invalid_argument("unknown scenario template: " + std::string(name));
}

AgentKind parse_agent_kind(std::string_view name) {
  for (AgentKind k : {AgentKind::vehicle, AgentKind::pedestrian, AgentKind::cyclist}) {
    if (to_string(k) == name) {
      return k;
    }
  }
  throw std::invalid_argument("unknown agent kind: " + std::string(name));
}

SpeedDecision parse_speed_decision(std::string_view name) {
  for (SpeedDecision d : {SpeedDecision::maintain, SpeedDecision::accelerate, SpeedDecision::decelerate}) {
    if (to_string(d) == name) {
      return d;
    }
  }
  throw std::invalid_argument("unknown speed decision: " + std::string(name));
}

DirectionDecision parse_direction_decision(std::string_view name) {
  for (DirectionDecision d : {DirectionDecision::keep_lane, DirectionDecision::turn_left, DirectionDecision::turn_right,
                              DirectionDecision::lane_change_left, DirectionDecision::lane_change_right}) {
    if (to_string(d) == name) {
      return d;
    }
  }
  throw std::invalid_argument("unknown direction decision: " + std::string(name));
}

Footprint default_footprint(AgentKind kind) {
  switch (kind) {
    case AgentKind::vehicle:
      return {4.5, 1.9};
    case AgentKind::pedestrian:
      return {0.6, 0.6};
    case AgentKind::cyclist:
      return {1.8, 0.6};
  }
  throw std::invalid_argument("unknown agent kind");
}

Scene generate_scene(ScenarioTemplate scenario, std::int64_t seed) {
  if (seed < 0) {
    throw std::invalid_argument("scene seed must be non-negative");
  }
  // rejects values outside the enum
  (void)to_string(scenario);

  SceneRng rng(scenario, seed);
  Scene scene;
  scene.seed = seed;
  scene.scenario = scenario;
  scene.map = straight_road();
  scene.ego.position = {0.0, 0.0};
  scene.ego.heading = 0.0;
  scene.ego.footprint = default_footprint(AgentKind::vehicle);
  scene.command = {SpeedDecision::maintain, DirectionDecision::keep_lane};

  switch (scenario) {
    case ScenarioTemplate::free_road:
      scene.ego.speed = rng.uniform(8.0, 14.0);
      scene.ego_history = constant_speed_history(scene.ego.speed);
      build_free_road(scene, rng);
      break;
    case ScenarioTemplate::lead_brake:
      scene.ego.speed = rng.uniform(8.0, 14.0);
      scene.ego_history = constant_speed_history(scene.ego.speed);
      build_lead_brake(scene, rng);
      break;
    case ScenarioTemplate::crossing:
      scene.ego.speed = rng.uniform(8.0, 13.0);
      scene.ego_history = constant_speed_history(scene.ego.speed);
      build_crossing(scene, rng);
      break;
    case ScenarioTemplate::cut_in:
      scene.ego.speed = rng.uniform(9.0, 14.0);
      scene.ego_history = constant_speed_history(scene.ego.speed);
      build_cut_in(scene, rng);
      break;
  }
  return scene;
}

void validate_scene(const Scene& scene) {
  const auto fail = [](const std::string& what) { throw std::invalid_argument("invalid scene: " + what); };
  if (scene.ego.speed < 0.0 || !std::isfinite(scene.ego.speed)) {
    fail("ego speed must be non-negative");
  }
  if (scene.ego.footprint.length <= 0.0 || scene.ego.footprint.width <= 0.0) {
    fail("ego footprint must be positive");
  }
  if (scene.ego_history.empty() || scene.ego_history.back().position() != scene.ego.position ||
      std::abs(scene.ego_history.back().t) > kTimeTolerance) {
    fail("ego history must end at the ego position at t = 0");
  }
  if (scene.observed_future.size() != kFutureWaypoints) {
    fail("observed future must have 8 waypoints");
  }
  if (scene.map.centerline.points().size() < 2) {
    fail("centerline needs two points");
  }
  for (const Polygon& poly : scene.map.drivable_area) {
    if (!is_simple_polygon(poly)) {
      fail("drivable area polygon is self-intersecting");
    }
  }
  if (scene.map.drivable_area.empty()) {
    fail("drivable area is empty");
  }
  for (const Agent& agent : scene.agents) {
    if (agent.footprint.length <= 0.0 || agent.footprint.width <= 0.0) {
      fail("agent footprint must be positive");
    }
    const Trajectory& traj = agent.scripted_trajectory;
    if (traj.empty() || traj.start_time() > -kHistoryHorizon + kTimeTolerance ||
        traj.end_time() < kPlanHorizon - kTimeTolerance) {
      fail("agent trajectory must span the episode window");
    }
  }
}

Trajectory resample_trajectory(const Trajectory& traj, double rate_hz) {
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) {
    throw std::invalid_argument("resample rate must be positive");
  }
  if (traj.size() < 2) {
    throw std::invalid_argument("resampling needs at least two waypoints");
  }
  const double duration = traj.end_time() - traj.start_time();
  const double steps_real = duration * rate_hz;
  const auto steps = static_cast<std::size_t>(std::llround(steps_real));
  if (std::abs(steps_real - static_cast<double>(steps)) > 1e-6) {
    throw std::invalid_argument("trajectory duration is not a multiple of the target sample period");
  }

  std::vector<Waypoint> out;
  out.reserve(steps + 1);
  const double src_rate = traj.rate_hz();
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = traj.start_time() + static_cast<double>(k) / rate_hz;
    // Samples that coincide with a source waypoint copy it exactly.
    const double u = (t - traj.start_time()) * src_rate;
    const double nearest = std::round(u);
    if (std::abs(u - nearest) < 1e-6) {
      out.push_back(traj[static_cast<std::size_t>(nearest)]);
      continue;
    }
    const Vec2 p = traj.position_at(t);
    out.push_back({p.x, p.y, t});
  }
  return Trajectory(std::move(out), rate_hz);
}

AccelProfile two_stage_profile(double stage1_accel, double stage2_accel) {
  return {{0.0, stage1_accel}, {kShortTermHorizon, stage2_accel}};
}

double acceleration_scale(double speed) { return std::clamp(speed / 10.0, 0.3, 1.0); }

std::vector<double> acceleration_grid(double speed) {
  const double scale = acceleration_scale(speed);
  return {-3.0 * scale, -1.5 * scale, 0.0 * scale, 1.0 * scale};
}

Trajectory follow_centerline(const SceneMap& map, const EgoState& start, const AccelProfile& profile,
                             double horizon_s) {
  if (!(horizon_s > 0.0)) {
    throw std::invalid_argument("replanning horizon must be positive");
  }
  const PolylineProjection proj = map.centerline.project(start.position);
  if (std::abs(proj.lateral) > 0.5 * map.lane_width + 1e-9) {
    throw std::invalid_argument("start position is too far from the centerline");
  }
  const auto steps = static_cast<int>(std::lround(horizon_s / kReplanStep));
  const int per_sample = static_cast<int>(std::lround(1.0 / (kSupervisionRateHz * kReplanStep)));

  auto accel_at_step = [&](int k) {
    double a = 0.0;
    for (const AccelStage& stage : profile) {
      if (std::lround(stage.start_s / kReplanStep) <= k) {
        a = stage.accel;
      }
    }
    return a;
  };

  std::vector<Waypoint> wps;
  wps.reserve(static_cast<std::size_t>(steps / per_sample));
  double v = start.speed;
  double s = 0.0;
  for (int k = 0; k < steps; ++k) {
    const double a = accel_at_step(k);
    double v_next = v + a * kReplanStep;
    if (v_next < 0.0) {
      // stops inside this step
      s += a < 0.0 ? v * v / (-2.0 * a) : 0.0;
      v_next = 0.0;
    } else {
      s += 0.5 * (v + v_next) * kReplanStep;
    }
    v = v_next;
    if ((k + 1) % per_sample == 0) {
      const Vec2 p = map.centerline.point_at(proj.s + s);
      const double t = static_cast<double>((k + 1) / per_sample) / kSupervisionRateHz;
      wps.push_back({p.x, p.y, t});
    }
  }
  return Trajectory(std::move(wps), kSupervisionRateHz);
}

Trajectory anchor_at_origin(const Trajectory& future) {
  if (future.empty()) {
    throw std::invalid_argument("empty trajectory");
  }
  if (std::abs(future.start_time()) < kTimeTolerance) {
    return future;
  }
  if (std::abs(future.start_time() - future.dt()) > kTimeTolerance) {
    throw std::invalid_argument("future trajectory must start one sample after t = 0");
  }
  std::vector<Waypoint> wps;
  wps.reserve(future.size() + 1);
  wps.push_back({0.0, 0.0, 0.0});
  wps.insert(wps.end(), future.waypoints().begin(), future.waypoints().end());
  return Trajectory(std::move(wps), future.rate_hz());
}

}  // namespace cfplan
