#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "cfplan/csp.hpp"
#include "cfplan/policy.hpp"
#include "cfplan/sft.hpp"

namespace cfplan {

struct GrpoConfig {
  std::size_t n_samples{6};
  std::size_t k_refined{2};
  std::size_t refine_draws{8};
  double delta{0.6};
  double sigma{0.1};
  double margin{1.0};
  double eta{1e-6};
  double c_clip{1.5};
  double s_goal{3.0};
  double delta_huber{1.0};
  double w_traj{0.5};
  double w_pref{0.3};
  double w_goal{0.2};
  int epochs{10};
  std::uint64_t seed{0};
  bool use_feedback{true};
  bool use_anchors{true};
  LearningRates lr{1e-5, 1e-5, 0.0};  // meta is ignored
};

void validate(const GrpoConfig& config);

struct RewardBreakdown {
  double r_traj{0.0};
  double r_pref{0.0};
  double r_goal{0.0};
  double total{0.0};
};

// Root of the summed squared per-waypoint distances.
double trajectory_distance(const Trajectory& a, const Trajectory& b);

double reward_pref(const Trajectory& tau, const Trajectory& tau_pos, const Trajectory& tau_neg,
                   const GrpoConfig& config);
double reward_goal(const Trajectory& tau, const Trajectory& tau_pos, const GrpoConfig& config);
double combine_rewards(double r_traj, double r_pref, double r_goal, const GrpoConfig& config);

// Needs a negative record (both anchors). With anchors disabled the reward is
// the trajectory score alone.
RewardBreakdown reward_total(const Trajectory& tau, const CspRecord& record, const GrpoConfig& config);

enum class MemberRole { sampled, refined, anchor_pos, anchor_neg };

struct GroupMember {
  MemberRole role{MemberRole::sampled};
  Trajectory trajectory;
  RewardBreakdown reward;
  double advantage{0.0};
  // Inputs needed to replay the forward pass for gradients.
  Features features{Features::Zero()};
  FeatureVec noise{FeatureVec::Zero()};
};

struct TrajectoryGroup {
  std::vector<GroupMember> members;
  double max_sampled_reward{0.0};
  bool refinement_triggered{false};
};

std::vector<GroupMember> sample_group(const CspRecord& record, const PolicyParams& params, const GrpoConfig& config,
                                      std::mt19937_64& rng);

// Draws every refinement sample even when fewer qualify so the generator
// stream does not depend on rewards.
std::vector<GroupMember> feedback_refine(std::span<const GroupMember> sampled, const CspRecord& record,
                                         const PolicyParams& params, const GrpoConfig& config, std::mt19937_64& rng);

struct Advantages {
  std::vector<double> sample;  // aligned with the rewards passed in
  std::vector<double> anchor;
  double mean{0.0};
  double stddev{0.0};
};

// Population statistics over sample_rewards only; anchors are scored against
// them but never enter the mean or deviation.
Advantages normalize_advantages(std::span<const double> sample_rewards, std::span<const double> anchor_rewards);
void normalize_advantages(TrajectoryGroup& group);

// Huber distance averaged over waypoints. The quadratic branch
// applies when the waypoint's L1 error is within delta.
struct DistanceTerm {
  double value{0.0};
  WaypointGrad grad{WaypointGrad::Zero()};
};
DistanceTerm huber_distance(const Trajectory& tau, const Trajectory& target, double delta);
DistanceTerm hinge_distance(const Trajectory& tau, const Trajectory& reference, double margin);

struct DualBranchLoss {
  double loss{0.0};
  std::vector<WaypointGrad> member_grads;  // d loss / d waypoints, zero for anchors
};

DualBranchLoss dual_branch_loss(const TrajectoryGroup& group, const Trajectory& pull_target,
                                const Trajectory& push_reference, const GrpoConfig& config);

struct GrpoTraceRecord {
  std::size_t step{0};
  int epoch{0};
  std::int64_t scene_seed{0};
  ScenarioTemplate scenario{ScenarioTemplate::free_road};
  std::vector<MemberRole> roles;
  std::vector<double> rewards;
  std::vector<double> advantages;
  double max_sampled_reward{0.0};
  bool refinement_triggered{false};
  std::size_t refined_count{0};
  double loss{0.0};
  double grad_norm_pooling{0.0};
  double grad_norm_action{0.0};
};

struct GrpoStep {
  TrajectoryGroup group;
  GrpoTraceRecord trace;
};

// One scene: sample, refine, group, normalize, update. Only the pooling and
// action parameters move.
GrpoStep grpo_step(const CspRecord& record, PolicyParams& params, const GrpoConfig& config, std::mt19937_64& rng);

struct GrpoResult {
  PolicyParams params;
  std::vector<GrpoTraceRecord> trace;
};

GrpoResult train_grpo(std::span<const CspRecord> dataset, PolicyParams params, const GrpoConfig& config);

}  // namespace cfplan
