#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cfplan/scenario.hpp"

namespace cfplan {

inline constexpr double kTtcCap = 10.0;
inline constexpr double kTtcRisk = 2.0;
inline constexpr double kTtcCheckStep = 0.1;
inline constexpr double kTtcScanStep = 0.05;
inline constexpr double kCollisionCheckRateHz = 10.0;
inline constexpr double kStationarySpeed = 0.1;

struct ComfortLimits {
  double max_longitudinal_accel{4.0};
  double max_lateral_accel{4.0};
  double max_jerk{8.0};
};

struct SubScores {
  double nc{1.0};
  double dac{1.0};
  double ep{1.0};
  double ttc{1.0};
  double comfort{1.0};
  bool operator==(const SubScores&) const = default;
};

// Minimum time-to-collision over check times on a 0.1 s grid in
// [0, horizon_s]. At each check time the ego and every agent are projected at
// their finite-difference velocities and the first overlap is searched on a
// 0.05 s grid up to the 10 s cap. Future-only ego trajectories are anchored
// at the ego-frame origin.
double ttc_min(const Trajectory& ego_traj, std::span<const Agent> agents, double horizon_s,
               const Footprint& ego_footprint = Footprint{});

// Per-agent minimum TTC, same conventions as ttc_min.
std::vector<double> ttc_per_agent(const Trajectory& ego_traj, std::span<const Agent> agents, double horizon_s,
                                  const Footprint& ego_footprint = Footprint{});

double nc_score(const Trajectory& ego_traj, std::span<const Agent> agents,
                const Footprint& ego_footprint = Footprint{});
double dac_score(const Trajectory& ego_traj, const SceneMap& map, const Footprint& ego_footprint = Footprint{});

// Arc-length progress of the trajectory endpoint relative to its start.
double progress_along(const Trajectory& ego_traj, const SceneMap& map);
double ep_score(const Trajectory& ego_traj, const SceneMap& map, double reference_progress);

double ttc_subscore(const Trajectory& ego_traj, std::span<const Agent> agents,
                    const Footprint& ego_footprint = Footprint{});
double comfort_score(const Trajectory& ego_traj, const ComfortLimits& limits = {});

double pdms(const SubScores& sub);

// All five sub-scores of a candidate in its scene.
SubScores score_trajectory(const Trajectory& ego_traj, const Scene& scene, double reference_progress);

struct DisplacementErrors {
  double l2_at_1s{0.0};
  double l2_at_4s{0.0};
  double fde{0.0};
};

DisplacementErrors displacement_errors(const Trajectory& pred, const Trajectory& ref);

struct SceneEval {
  SubScores sub;
  double pdms{0.0};
  DisplacementErrors errors;
};

struct EvalTarget {
  const Scene* scene{nullptr};
  const Trajectory* reference{nullptr};
  double reference_progress{0.0};
};

struct EvalReport {
  double mean_pdms{0.0};
  SubScores mean_sub{0.0, 0.0, 0.0, 0.0, 0.0};
  double l2_at_1s{0.0};
  double l2_at_4s{0.0};
  double fde{0.0};
  double collision_rate{0.0};
  std::size_t sample_count{0};
};

SceneEval evaluate_prediction(const Trajectory& pred, const EvalTarget& target);
EvalReport aggregate(std::span<const SceneEval> evals);
EvalReport evaluate_dataset(std::span<const Trajectory> predictions, std::span<const EvalTarget> targets);

}  // namespace cfplan
