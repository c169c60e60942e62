#include "cfplan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cfplan {

namespace {

constexpr double kTimeTolerance = 1e-9;
constexpr double kMovingSpeed = 1e-6;
constexpr double kLimitTolerance = 1e-9;

struct MotionState {
  Vec2 position;
  Vec2 velocity;
  double heading{0.0};
};

Vec2 velocity_at(const Trajectory& traj, double t) {
  constexpr double h = kTtcCheckStep;
  if (t + h <= traj.end_time() + kTimeTolerance) {
    return (traj.position_at(t + h) - traj.position_at(t)) * (1.0 / h);
  }
  return (traj.position_at(t) - traj.position_at(t - h)) * (1.0 / h);
}

// Heading follows the velocity; while stationary it keeps the most recent
// direction of motion (or the next one, or +x when the trajectory never moves).
MotionState state_at(const Trajectory& traj, double t) {
  MotionState s;
  s.position = traj.position_at(t);
  s.velocity = velocity_at(traj, t);
  Vec2 dir = s.velocity;
  if (dir.norm() <= kMovingSpeed) {
    for (double back = t - kTtcCheckStep; back >= traj.start_time() - kTimeTolerance; back -= kTtcCheckStep) {
      dir = velocity_at(traj, back);
      if (dir.norm() > kMovingSpeed) {
        break;
      }
    }
  }
  if (dir.norm() <= kMovingSpeed) {
    for (double fwd = t + kTtcCheckStep; fwd <= traj.end_time() + kTimeTolerance; fwd += kTtcCheckStep) {
      dir = velocity_at(traj, fwd);
      if (dir.norm() > kMovingSpeed) {
        break;
      }
    }
  }
  s.heading = dir.norm() > kMovingSpeed ? std::atan2(dir.y, dir.x) : 0.0;
  return s;
}

OrientedBox box_of(const MotionState& s, const Footprint& fp, double delta = 0.0) {
  return {s.position + s.velocity * delta, s.heading, fp.length, fp.width};
}

// First overlap of two constant-velocity projections on the scan grid, or the cap.
double projected_ttc(const MotionState& ego, const Footprint& ego_fp, const MotionState& agent,
                     const Footprint& agent_fp) {
  const Vec2 r0 = agent.position - ego.position;
  const Vec2 vrel = agent.velocity - ego.velocity;
  const double reach = 0.5 * std::hypot(ego_fp.length, ego_fp.width) + 0.5 * std::hypot(agent_fp.length, agent_fp.width);
  const double vv = vrel.dot(vrel);
  double closest = kTtcCap;
  if (vv > 0.0) {
    closest = std::clamp(-r0.dot(vrel) / vv, 0.0, kTtcCap);
  } else {
    closest = 0.0;
  }
  if ((r0 + vrel * closest).norm() > reach) {
    return kTtcCap;
  }
  const auto scans = static_cast<int>(std::lround(kTtcCap / kTtcScanStep));
  for (int k = 0; k <= scans; ++k) {
    const double delta = k * kTtcScanStep;
    if ((r0 + vrel * delta).norm() > reach) {
      continue;
    }
    if (overlaps(box_of(ego, ego_fp, delta), box_of(agent, agent_fp, delta))) {
      return delta;
    }
  }
  return kTtcCap;
}

Trajectory checked_anchor(const Trajectory& ego_traj) {
  if (ego_traj.empty()) {
    throw std::invalid_argument("ego trajectory is empty");
  }
  return anchor_at_origin(ego_traj);
}

Trajectory at_collision_rate(const Trajectory& ego_traj) {
  return resample_trajectory(checked_anchor(ego_traj), kCollisionCheckRateHz);
}

bool contact_on_rear_face(const MotionState& ego, const Footprint& ego_fp, const Vec2& agent_center) {
  const Vec2 d = agent_center - ego.position;
  const double lx = d.dot(unit_from_heading(ego.heading));
  const double ly = d.dot(left_normal(ego.heading));
  return lx < 0.0 && std::abs(ly) * ego_fp.length <= std::abs(lx) * ego_fp.width;
}

}  // namespace

std::vector<double> ttc_per_agent(const Trajectory& ego_traj, std::span<const Agent> agents, double horizon_s,
                                  const Footprint& ego_footprint) {
  const Trajectory ego = checked_anchor(ego_traj);
  if (horizon_s < 0.0 || ego.end_time() < horizon_s - kTimeTolerance) {
    throw std::invalid_argument("ego trajectory does not cover the TTC horizon");
  }
  std::vector<double> result(agents.size(), kTtcCap);
  const auto checks = static_cast<int>(std::lround(horizon_s / kTtcCheckStep));
  for (int j = 0; j <= checks; ++j) {
    const double tau = j * kTtcCheckStep;
    const MotionState ego_state = state_at(ego, tau);
    for (std::size_t a = 0; a < agents.size(); ++a) {
      const MotionState agent_state = state_at(agents[a].scripted_trajectory, tau);
      result[a] = std::min(result[a], projected_ttc(ego_state, ego_footprint, agent_state, agents[a].footprint));
    }
  }
  return result;
}

double ttc_min(const Trajectory& ego_traj, std::span<const Agent> agents, double horizon_s,
               const Footprint& ego_footprint) {
  const std::vector<double> per_agent = ttc_per_agent(ego_traj, agents, horizon_s, ego_footprint);
  double best = kTtcCap;
  for (double v : per_agent) {
    best = std::min(best, v);
  }
  return best;
}

double nc_score(const Trajectory& ego_traj, std::span<const Agent> agents, const Footprint& ego_footprint) {
  const Trajectory ego = at_collision_rate(ego_traj);
  std::vector<bool> resolved(agents.size(), false);
  for (std::size_t j = 0; j < ego.size(); ++j) {
    const double tau = ego[j].t;
    const MotionState ego_state = state_at(ego, tau);
    const double speed =
        j == 0 ? ego_state.velocity.norm() : (ego[j].position() - ego[j - 1].position()).norm() * kCollisionCheckRateHz;
    for (std::size_t a = 0; a < agents.size(); ++a) {
      if (resolved[a]) {
        continue;
      }
      const MotionState agent_state = state_at(agents[a].scripted_trajectory, tau);
      if (!overlaps(box_of(ego_state, ego_footprint), box_of(agent_state, agents[a].footprint))) {
        continue;
      }
      resolved[a] = true;
      const bool stationary = speed < kStationarySpeed;
      if (!stationary && !contact_on_rear_face(ego_state, ego_footprint, agent_state.position)) {
        return 0.0;
      }
    }
  }
  return 1.0;
}

double dac_score(const Trajectory& ego_traj, const SceneMap& map, const Footprint& ego_footprint) {
  const Trajectory ego = at_collision_rate(ego_traj);
  for (std::size_t j = 0; j < ego.size(); ++j) {
    const MotionState s = state_at(ego, ego[j].t);
    for (const Vec2& corner : box_of(s, ego_footprint).corners()) {
      if (!point_in_any(corner, map.drivable_area)) {
        return 0.0;
      }
    }
  }
  return 1.0;
}

double progress_along(const Trajectory& ego_traj, const SceneMap& map) {
  const Trajectory ego = checked_anchor(ego_traj);
  return map.centerline.project(ego.back().position()).s - map.centerline.project(ego.front().position()).s;
}

double ep_score(const Trajectory& ego_traj, const SceneMap& map, double reference_progress) {
  if (!(reference_progress > 0.0)) {
    throw std::invalid_argument("reference progress must be positive");
  }
  return std::clamp(progress_along(ego_traj, map) / reference_progress, 0.0, 1.0);
}

double ttc_subscore(const Trajectory& ego_traj, std::span<const Agent> agents, const Footprint& ego_footprint) {
  return ttc_min(ego_traj, agents, kPlanHorizon, ego_footprint) >= kTtcRisk ? 1.0 : 0.0;
}

double comfort_score(const Trajectory& ego_traj, const ComfortLimits& limits) {
  const Trajectory ego = checked_anchor(ego_traj);
  if (ego.size() < 3) {
    throw std::invalid_argument("comfort needs at least three waypoints");
  }
  const double dt = ego.dt();
  std::vector<Vec2> vel;
  for (std::size_t i = 0; i + 1 < ego.size(); ++i) {
    vel.push_back((ego[i + 1].position() - ego[i].position()) * (1.0 / dt));
  }
  std::vector<Vec2> acc;
  double heading = 0.0;
  for (std::size_t i = 0; i + 1 < vel.size(); ++i) {
    const Vec2 a = (vel[i + 1] - vel[i]) * (1.0 / dt);
    const Vec2 dir = vel[i] + vel[i + 1];
    if (dir.norm() > kMovingSpeed) {
      heading = std::atan2(dir.y, dir.x);
    }
    const double a_long = a.dot(unit_from_heading(heading));
    const double a_lat = a.dot(left_normal(heading));
    if (std::abs(a_long) > limits.max_longitudinal_accel + kLimitTolerance ||
        std::abs(a_lat) > limits.max_lateral_accel + kLimitTolerance) {
      return 0.0;
    }
    acc.push_back(a);
  }
  for (std::size_t i = 0; i + 1 < acc.size(); ++i) {
    if ((acc[i + 1] - acc[i]).norm() / dt > limits.max_jerk + kLimitTolerance) {
      return 0.0;
    }
  }
  return 1.0;
}

double pdms(const SubScores& sub) {
  return sub.nc * sub.dac * (5.0 * sub.ep + 5.0 * sub.ttc + 2.0 * sub.comfort) / 12.0;
}

SubScores score_trajectory(const Trajectory& ego_traj, const Scene& scene, double reference_progress) {
  SubScores sub;
  sub.nc = nc_score(ego_traj, scene.agents, scene.ego.footprint);
  sub.dac = dac_score(ego_traj, scene.map, scene.ego.footprint);
  sub.ep = ep_score(ego_traj, scene.map, reference_progress);
  sub.ttc = ttc_subscore(ego_traj, scene.agents, scene.ego.footprint);
  sub.comfort = comfort_score(ego_traj);
  return sub;
}

DisplacementErrors displacement_errors(const Trajectory& pred, const Trajectory& ref) {
  if (pred.size() != ref.size() || pred.empty()) {
    throw std::invalid_argument("displacement errors need trajectories of equal, non-zero length");
  }
  if (std::abs(pred.rate_hz() - ref.rate_hz()) > kTimeTolerance) {
    throw std::invalid_argument("displacement errors need trajectories at the same rate");
  }
  auto error_at = [&](double t) {
    for (std::size_t i = 0; i < ref.size(); ++i) {
      if (std::abs(ref[i].t - t) < kTimeTolerance) {
        return (pred[i].position() - ref[i].position()).norm();
      }
    }
    throw std::invalid_argument("reference has no waypoint at the requested time");
  };
  DisplacementErrors e;
  e.l2_at_1s = error_at(1.0);
  e.l2_at_4s = error_at(kPlanHorizon);
  e.fde = (pred.back().position() - ref.back().position()).norm();
  return e;
}

SceneEval evaluate_prediction(const Trajectory& pred, const EvalTarget& target) {
  SceneEval eval;
  eval.sub = score_trajectory(pred, *target.scene, target.reference_progress);
  eval.pdms = pdms(eval.sub);
  eval.errors = displacement_errors(pred, *target.reference);
  return eval;
}

EvalReport aggregate(std::span<const SceneEval> evals) {
  EvalReport r;
  r.sample_count = evals.size();
  if (evals.empty()) {
    return r;
  }
  std::size_t collisions = 0;
  for (const SceneEval& e : evals) {
    r.mean_pdms += e.pdms;
    r.mean_sub.nc += e.sub.nc;
    r.mean_sub.dac += e.sub.dac;
    r.mean_sub.ep += e.sub.ep;
    r.mean_sub.ttc += e.sub.ttc;
    r.mean_sub.comfort += e.sub.comfort;
    r.l2_at_1s += e.errors.l2_at_1s;
    r.l2_at_4s += e.errors.l2_at_4s;
    r.fde += e.errors.fde;
    if (e.sub.nc == 0.0) {
      ++collisions;
    }
  }
  const double n = static_cast<double>(evals.size());
  r.mean_pdms /= n;
  r.mean_sub.nc /= n;
  r.mean_sub.dac /= n;
  r.mean_sub.ep /= n;
  r.mean_sub.ttc /= n;
  r.mean_sub.comfort /= n;
  r.l2_at_1s /= n;
  r.l2_at_4s /= n;
  r.fde /= n;
  r.collision_rate = static_cast<double>(collisions) / n;
  return r;
}

EvalReport evaluate_dataset(std::span<const Trajectory> predictions, std::span<const EvalTarget> targets) {
  if (predictions.size() != targets.size()) {
    throw std::invalid_argument("one prediction per scene is required");
  }
  std::vector<SceneEval> evals;
  evals.reserve(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    evals.push_back(evaluate_prediction(predictions[i], targets[i]));
  }
  return aggregate(evals);
}

}  // namespace cfplan
