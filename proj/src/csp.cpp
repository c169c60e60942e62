#include "cfplan/csp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cfplan/parallel.hpp"

namespace cfplan {

namespace {

constexpr double kMinReferenceProgress = 0.1;
constexpr double kSpeedBand = 0.1;
constexpr double kTurnThreshold = 10.0 * std::numbers::pi / 180.0;
constexpr double kDegenerateStep = 1e-6;
constexpr double kTimeTolerance = 1e-9;

// Local tangent heading at each waypoint; stationary stretches inherit the
// nearest direction of motion.
std::vector<double> local_headings(const Trajectory& traj) {
  const std::size_t n = traj.size();
  std::vector<double> heading(n, 0.0);
  std::vector<bool> known(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 d{};
    if (i + 1 < n) {
      d = traj[i + 1].position() - traj[i].position();
    } else if (i > 0) {
      d = traj[i].position() - traj[i - 1].position();
    }
    if (d.norm() > kDegenerateStep) {
      heading[i] = std::atan2(d.y, d.x);
      known[i] = true;
    }
  }
  const auto first = std::find(known.begin(), known.end(), true);
  if (first == known.end()) {
    return heading;
  }
  double carry = heading[static_cast<std::size_t>(std::distance(known.begin(), first))];
  for (std::size_t i = 0; i < n; ++i) {
    if (known[i]) {
      carry = heading[i];
    } else {
      heading[i] = carry;
    }
  }
  return heading;
}

SpeedDecision classify_speed(double mean_speed, double reference) {
  if (mean_speed > reference * (1.0 + kSpeedBand)) {
    return SpeedDecision::accelerate;
  }
  if (mean_speed < reference * (1.0 - kSpeedBand)) {
    return SpeedDecision::decelerate;
  }
  return SpeedDecision::maintain;
}

DirectionDecision classify_direction(double heading_change, double lateral_change, double lane_width) {
  if (heading_change > kTurnThreshold) {
    return DirectionDecision::turn_left;
  }
  if (heading_change < -kTurnThreshold) {
    return DirectionDecision::turn_right;
  }
  if (lateral_change > 0.5 * lane_width) {
    return DirectionDecision::lane_change_left;
  }
  if (lateral_change < -0.5 * lane_width) {
    return DirectionDecision::lane_change_right;
  }
  return DirectionDecision::keep_lane;
}

}  // namespace

double reference_progress(const CspRecord& record) {
  return std::max(progress_along(record.tau_pos, record.scene.map), kMinReferenceProgress);
}

SafetyLabel label_scene(const Scene& scene) {
  SafetyLabel label;
  label.ttc_min = ttc_min(scene.observed_future, scene.agents, kPlanHorizon, scene.ego.footprint);
  label.value = label.ttc_min >= kTtcRisk ? Label::Pos : Label::Neg;
  return label;
}

std::vector<Trajectory> generate_candidates(const Scene& scene, std::size_t count) {
  const std::vector<double> grid = acceleration_grid(scene.ego.speed);
  if (count != grid.size() * grid.size()) {
    throw std::invalid_argument("candidate count must equal the squared acceleration grid size");
  }
  std::vector<Trajectory> candidates;
  candidates.reserve(count);
  for (double a1 : grid) {
    for (double a2 : grid) {
      candidates.push_back(follow_centerline(scene.map, scene.ego, two_stage_profile(a1, a2), kPlanHorizon));
    }
  }
  return candidates;
}

CounterfactualSelection select_counterfactual(std::span<const Trajectory> candidates, const Scene& scene) {
  if (candidates.empty()) {
    throw std::invalid_argument("no counterfactual candidates");
  }
  std::vector<double> progress;
  progress.reserve(candidates.size());
  for (const Trajectory& c : candidates) {
    progress.push_back(progress_along(c, scene.map));
  }
  const double max_progress =
      std::max(*std::max_element(progress.begin(), progress.end()), kMinReferenceProgress);

  CounterfactualSelection sel;
  sel.scores.reserve(candidates.size());
  for (const Trajectory& c : candidates) {
    sel.scores.push_back(pdms(score_trajectory(c, scene, max_progress)));
  }
  for (std::size_t i = 1; i < sel.scores.size(); ++i) {
    if (sel.scores[i] > sel.scores[sel.index]) {
      sel.index = i;
    }
  }
  sel.all_zero = sel.scores[sel.index] == 0.0;
  sel.tau_pos = candidates[sel.index];
  sel.reference_progress = std::max(progress[sel.index], kMinReferenceProgress);
  return sel;
}

NegativeAnalysisBlock build_negative_analysis(const Trajectory& tau_neg, const Trajectory& tau_pos,
                                              std::span<const CounterfactualOutcome> candidate_scores) {
  if (tau_neg.size() != tau_pos.size() || tau_pos.empty() ||
      std::abs(tau_neg.rate_hz() - tau_pos.rate_hz()) > kTimeTolerance) {
    throw std::invalid_argument("negative analysis needs aligned trajectories of equal length");
  }
  const std::vector<double> heading = local_headings(tau_pos);
  NegativeAnalysisBlock block;
  block.actionable_correction.reserve(tau_pos.size());

  double sum_dev = 0.0, max_dev = 0.0, sum_long = 0.0, sum_lat = 0.0;
  for (std::size_t i = 0; i < tau_pos.size(); ++i) {
    const Vec2 diff = tau_neg[i].position() - tau_pos[i].position();
    const double along = diff.dot(unit_from_heading(heading[i]));
    const double across = diff.dot(left_normal(heading[i]));
    const double dev = diff.norm();
    sum_dev += dev;
    max_dev = std::max(max_dev, dev);
    sum_long += std::abs(along);
    sum_lat += std::abs(across);
    block.actionable_correction.push_back({tau_pos[i].t, heading[i], -along, -across});
  }
  const double n = static_cast<double>(tau_pos.size());
  block.risk_identification = {true, max_dev, sum_dev / n};
  block.failure_attribution.longitudinal_error = sum_long / n;
  block.failure_attribution.lateral_error = sum_lat / n;
  block.failure_attribution.primary_axis =
      sum_long >= sum_lat ? ErrorAxis::longitudinal : ErrorAxis::lateral;
  block.counterfactual_analysis.assign(candidate_scores.begin(), candidate_scores.end());
  return block;
}

Trajectory apply_correction(const Trajectory& traj, const NegativeAnalysisBlock& block) {
  if (traj.size() != block.actionable_correction.size()) {
    throw std::invalid_argument("correction length does not match the trajectory");
  }
  std::vector<Waypoint> out;
  out.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const WaypointCorrection& c = block.actionable_correction[i];
    const Vec2 p = traj[i].position() + unit_from_heading(c.heading) * c.d_long + left_normal(c.heading) * c.d_lat;
    out.push_back({p.x, p.y, traj[i].t});
  }
  return Trajectory(std::move(out), traj.rate_hz());
}

MetaActions derive_meta_actions(const Trajectory& traj, double initial_speed, const SceneMap& map) {
  const Trajectory path = anchor_at_origin(traj);
  if (path.end_time() < kPlanHorizon - kTimeTolerance) {
    throw std::invalid_argument("meta-actions need a trajectory covering the planning horizon");
  }
  struct Window {
    double speed_sum{0.0};
    int segments{0};
    double heading_end{0.0};
    std::size_t first{0};
    std::size_t last{0};
  };
  Window windows[2];
  double heading = map.centerline.project(path.front().position()).heading;
  const double initial_heading = heading;
  double heading_before_second = heading;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const double t_end = path[i + 1].t;
    if (t_end > kPlanHorizon + kTimeTolerance) {
      break;
    }
    const Vec2 d = path[i + 1].position() - path[i].position();
    if (d.norm() > kDegenerateStep) {
      heading = std::atan2(d.y, d.x);
    }
    const int w = t_end <= kShortTermHorizon + kTimeTolerance ? 0 : 1;
    Window& win = windows[w];
    if (win.segments == 0) {
      win.first = i;
    }
    win.speed_sum += d.norm() / path.dt();
    ++win.segments;
    win.heading_end = heading;
    win.last = i + 1;
    if (w == 0) {
      heading_before_second = heading;
    }
  }

  auto mean_speed = [](const Window& w) { return w.segments > 0 ? w.speed_sum / w.segments : 0.0; };
  auto lateral = [&](std::size_t i) { return map.centerline.project(path[i].position()).lateral; };

  MetaActions out;
  const double mean1 = mean_speed(windows[0]);
  out.short_term.speed_decision = classify_speed(mean1, initial_speed);
  out.short_term.direction_decision =
      classify_direction(wrap_angle(windows[0].heading_end - initial_heading),
                         lateral(windows[0].last) - lateral(windows[0].first), map.lane_width);
  out.long_term.speed_decision = classify_speed(mean_speed(windows[1]), mean1);
  out.long_term.direction_decision =
      classify_direction(wrap_angle(windows[1].heading_end - heading_before_second),
                         lateral(windows[1].last) - lateral(windows[1].first), map.lane_width);
  return out;
}

CspRecord build_record(const Scene& scene) {
  CspRecord record;
  record.scene = scene;
  record.label = label_scene(scene);

  CotRecord& cot = record.cot;
  for (const Agent& a : scene.agents) {
    switch (a.kind) {
      case AgentKind::vehicle:
        ++cot.scene_description.vehicles;
        break;
      case AgentKind::pedestrian:
        ++cot.scene_description.pedestrians;
        break;
      case AgentKind::cyclist:
        ++cot.scene_description.cyclists;
        break;
    }
  }
  cot.scene_description.ego_speed = scene.ego.speed;
  cot.scene_description.command = scene.command;
  const std::vector<double> per_agent =
      ttc_per_agent(scene.observed_future, scene.agents, kPlanHorizon, scene.ego.footprint);
  double best = kTtcCap;
  for (std::size_t i = 0; i < per_agent.size(); ++i) {
    if (per_agent[i] < best) {
      best = per_agent[i];
      cot.critical_object = scene.agents[i].id;
    }
  }
  cot.risk_estimate = record.label;

  if (record.label.value == Label::Pos) {
    record.tau_pos = scene.observed_future;
  } else {
    record.tau_neg = scene.observed_future;
    const std::vector<Trajectory> candidates = generate_candidates(scene);
    const CounterfactualSelection sel = select_counterfactual(candidates, scene);
    record.tau_pos = sel.tau_pos;
    std::vector<CounterfactualOutcome> outcomes;
    outcomes.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      outcomes.push_back({derive_meta_actions(candidates[i], scene.ego.speed, scene.map), sel.scores[i]});
    }
    NegativeAnalysisBlock block = build_negative_analysis(*record.tau_neg, record.tau_pos, outcomes);
    block.quality.all_candidates_zero = sel.all_zero;
    block.quality.counterfactual_unsafe = ttc_subscore(record.tau_pos, scene.agents, scene.ego.footprint) == 0.0;
    cot.counterfactual_reasoning = block.counterfactual_analysis;
    record.analysis = std::move(block);
  }
  cot.meta_actions = derive_meta_actions(record.tau_pos, scene.ego.speed, scene.map);
  return record;
}

std::vector<CspRecord> build_dataset(std::span<const Scene> scenes, unsigned threads) {
  std::vector<CspRecord> records(scenes.size());
  parallel_for(scenes.size(), threads, [&](std::size_t i) { records[i] = build_record(scenes[i]); });
  return records;
}

}  // namespace cfplan
