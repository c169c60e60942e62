#include "cfplan/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cfplan/metrics.hpp"

namespace cfplan {

namespace {

constexpr double kStdGuard = 1e-8;

void require_aligned(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("trajectories must have the same non-zero length");
  }
}

const NegativeAnalysisBlock& require_negative(const CspRecord& record) {
  if (!record.tau_neg.has_value() || !record.analysis.has_value()) {
    throw std::invalid_argument("GRPO needs a negative record carrying both anchors");
  }
  return *record.analysis;
}

GroupMember decode_member(MemberRole role, const Features& features, const FeatureVec& noise,
                          const PolicyParams& params, const CspRecord& record, const GrpoConfig& config) {
  GroupMember m;
  m.role = role;
  m.features = features;
  m.noise = noise;
  m.trajectory = act(forward(features, params, noise)).trajectory;
  m.reward = reward_total(m.trajectory, record, config);
  return m;
}

FeatureVec draw_noise(double sigma, std::mt19937_64& rng) { return perturb(FeatureVec::Zero(), sigma, rng); }

bool is_anchor(MemberRole role) { return role == MemberRole::anchor_pos || role == MemberRole::anchor_neg; }

}  // namespace

void validate(const GrpoConfig& c) {
  const bool positive = c.n_samples > 0 && c.k_refined > 0 && c.refine_draws > 0 && c.sigma >= 0.0 &&
                        c.margin > 0.0 && c.eta > 0.0 && c.c_clip > 0.0 && c.s_goal > 0.0 && c.delta_huber > 0.0 &&
                        c.epochs >= 0;
  if (!positive) {
    throw std::invalid_argument("GRPO settings must be positive");
  }
  if (!(c.delta > 0.0 && c.delta < 1.0)) {
    throw std::invalid_argument("feedback threshold must lie in (0, 1)");
  }
  if (c.n_samples + c.k_refined < 2) {
    throw std::invalid_argument("a group needs at least two scored members");
  }
}

double trajectory_distance(const Trajectory& a, const Trajectory& b) {
  require_aligned(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double dx = a[i].x - b[i].x;
    const double dy = a[i].y - b[i].y;
    sum += dx * dx + dy * dy;
  }
  return std::sqrt(sum);
}

double reward_pref(const Trajectory& tau, const Trajectory& tau_pos, const Trajectory& tau_neg,
                   const GrpoConfig& config) {
  const double ratio = trajectory_distance(tau, tau_neg) / (trajectory_distance(tau_pos, tau_neg) + config.eta);
  return std::clamp(ratio, 0.0, config.c_clip) / config.c_clip;
}

double reward_goal(const Trajectory& tau, const Trajectory& tau_pos, const GrpoConfig& config) {
  require_aligned(tau, tau_pos);
  const double fde = (tau.back().position() - tau_pos.back().position()).norm();
  return std::exp(-fde / config.s_goal);
}

double combine_rewards(double r_traj, double r_pref, double r_goal, const GrpoConfig& config) {
  return config.w_traj * r_traj + config.w_pref * r_pref + config.w_goal * r_goal;
}

RewardBreakdown reward_total(const Trajectory& tau, const CspRecord& record, const GrpoConfig& config) {
  RewardBreakdown r;
  r.r_traj = pdms(score_trajectory(tau, record.scene, reference_progress(record)));
  if (!config.use_anchors) {
    r.total = r.r_traj;
    return r;
  }
  require_negative(record);
  r.r_pref = reward_pref(tau, record.tau_pos, *record.tau_neg, config);
  r.r_goal = reward_goal(tau, record.tau_pos, config);
  r.total = combine_rewards(r.r_traj, r.r_pref, r.r_goal, config);
  return r;
}

std::vector<GroupMember> sample_group(const CspRecord& record, const PolicyParams& params, const GrpoConfig& config,
                                      std::mt19937_64& rng) {
  const Features features = encode_features(record.scene);
  std::vector<GroupMember> out;
  out.reserve(config.n_samples);
  for (std::size_t i = 0; i < config.n_samples; ++i) {
    const FeatureVec noise = draw_noise(config.sigma, rng);
    out.push_back(decode_member(MemberRole::sampled, features, noise, params, record, config));
  }
  return out;
}

std::vector<GroupMember> feedback_refine(std::span<const GroupMember> sampled, const CspRecord& record,
                                         const PolicyParams& params, const GrpoConfig& config, std::mt19937_64& rng) {
  if (sampled.empty()) {
    throw std::invalid_argument("refinement needs a sampled group");
  }
  std::size_t best = 0, worst = 0;
  for (std::size_t i = 1; i < sampled.size(); ++i) {
    if (sampled[i].reward.total > sampled[best].reward.total) {
      best = i;
    }
    if (sampled[i].reward.total < sampled[worst].reward.total) {
      worst = i;
    }
  }
  const double max_reward = sampled[best].reward.total;
  if (!config.use_feedback || max_reward >= config.delta) {
    return {};
  }
  std::vector<CounterfactualOutcome> outcomes;
  if (record.analysis.has_value()) {
    outcomes = record.analysis->counterfactual_analysis;
  }
  const NegativeAnalysisBlock block = build_negative_analysis(sampled[worst].trajectory, record.tau_pos, outcomes);
  const Features features = encode_features(record.scene, &block);

  std::vector<GroupMember> kept;
  for (std::size_t i = 0; i < config.refine_draws; ++i) {
    const FeatureVec noise = draw_noise(config.sigma, rng);
    GroupMember m = decode_member(MemberRole::refined, features, noise, params, record, config);
    if (m.reward.total > max_reward && kept.size() < config.k_refined) {
      kept.push_back(std::move(m));
    }
  }
  return kept;
}

Advantages normalize_advantages(std::span<const double> sample_rewards, std::span<const double> anchor_rewards) {
  if (sample_rewards.size() < 2) {
    throw std::invalid_argument("advantage normalization needs at least two sampled rewards");
  }
  Advantages a;
  const double n = static_cast<double>(sample_rewards.size());
  const auto [lo, hi] = std::minmax_element(sample_rewards.begin(), sample_rewards.end());
  // Equal rewards get an exact mean so every advantage is exactly zero.
  a.mean = *lo == *hi ? *lo : std::accumulate(sample_rewards.begin(), sample_rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : sample_rewards) {
    var += (r - a.mean) * (r - a.mean);
  }
  a.stddev = std::sqrt(var / n);
  const double denom = std::max(a.stddev, kStdGuard);
  for (double r : sample_rewards) {
    a.sample.push_back((r - a.mean) / denom);
  }
  for (double r : anchor_rewards) {
    a.anchor.push_back((r - a.mean) / denom);
  }
  return a;
}

void normalize_advantages(TrajectoryGroup& group) {
  std::vector<double> samples, anchors;
  for (const GroupMember& m : group.members) {
    (is_anchor(m.role) ? anchors : samples).push_back(m.reward.total);
  }
  const Advantages a = normalize_advantages(samples, anchors);
  std::size_t si = 0, ai = 0;
  for (GroupMember& m : group.members) {
    m.advantage = is_anchor(m.role) ? a.anchor[ai++] : a.sample[si++];
  }
}

DistanceTerm huber_distance(const Trajectory& tau, const Trajectory& target, double delta) {
  require_aligned(tau, target);
  DistanceTerm out;
  const double n = static_cast<double>(tau.size());
  for (std::size_t i = 0; i < tau.size(); ++i) {
    const double ex = tau[i].x - target[i].x;
    const double ey = tau[i].y - target[i].y;
    const double l1 = std::abs(ex) + std::abs(ey);
    const auto row = static_cast<Eigen::Index>(i);
    if (l1 <= delta) {
      out.value += 0.5 * (ex * ex + ey * ey) / n;
      out.grad(row, 0) = ex / n;
      out.grad(row, 1) = ey / n;
    } else {
      out.value += delta * (l1 - 0.5 * delta) / n;
      // sign(0) = 0 at the coordinate kink.
      out.grad(row, 0) = delta * static_cast<double>((ex > 0.0) - (ex < 0.0)) / n;
      out.grad(row, 1) = delta * static_cast<double>((ey > 0.0) - (ey < 0.0)) / n;
    }
  }
  return out;
}

DistanceTerm hinge_distance(const Trajectory& tau, const Trajectory& reference, double margin) {
  const double d = trajectory_distance(tau, reference);
  DistanceTerm out;
  // Inactive at d == margin; zero gradient at d == 0 where the direction is undefined.
  if (d >= margin) {
    return out;
  }
  out.value = margin - d;
  if (d > 0.0) {
    for (std::size_t i = 0; i < tau.size(); ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      out.grad(row, 0) = -(tau[i].x - reference[i].x) / d;
      out.grad(row, 1) = -(tau[i].y - reference[i].y) / d;
    }
  }
  return out;
}

DualBranchLoss dual_branch_loss(const TrajectoryGroup& group, const Trajectory& pull_target,
                                const Trajectory& push_reference, const GrpoConfig& config) {
  if (group.members.empty()) {
    throw std::invalid_argument("empty trajectory group");
  }
  DualBranchLoss out;
  const double inv = 1.0 / static_cast<double>(group.members.size());
  for (const GroupMember& m : group.members) {
    const bool pull = m.advantage >= 0.0;
    const DistanceTerm d = pull ? huber_distance(m.trajectory, pull_target, config.delta_huber)
                                : hinge_distance(m.trajectory, push_reference, config.margin);
    const double weight = std::abs(m.advantage) * inv;
    out.loss += weight * d.value;
    out.member_grads.push_back(is_anchor(m.role) ? WaypointGrad::Zero() : WaypointGrad(weight * d.grad));
  }
  return out;
}

GrpoStep grpo_step(const CspRecord& record, PolicyParams& params, const GrpoConfig& config, std::mt19937_64& rng) {
  require_negative(record);
  GrpoStep step;
  TrajectoryGroup& group = step.group;
  group.members = sample_group(record, params, config, rng);
  double max_reward = group.members.front().reward.total;
  for (const GroupMember& m : group.members) {
    max_reward = std::max(max_reward, m.reward.total);
  }
  group.max_sampled_reward = max_reward;
  group.refinement_triggered = config.use_feedback && max_reward < config.delta;
  std::vector<GroupMember> refined = feedback_refine(group.members, record, params, config, rng);
  const std::size_t refined_count = refined.size();
  for (GroupMember& m : refined) {
    group.members.push_back(std::move(m));
  }

  Trajectory pull_target = record.tau_pos;
  Trajectory push_reference = *record.tau_neg;
  if (config.use_anchors) {
    GroupMember pos;
    pos.role = MemberRole::anchor_pos;
    pos.trajectory = record.tau_pos;
    pos.reward = reward_total(record.tau_pos, record, config);
    GroupMember neg;
    neg.role = MemberRole::anchor_neg;
    neg.trajectory = *record.tau_neg;
    neg.reward = reward_total(*record.tau_neg, record, config);
    group.members.push_back(std::move(pos));
    group.members.push_back(std::move(neg));
  } else {
    // Without anchors the group's own best and worst members stand in.
    std::size_t best = 0, worst = 0;
    for (std::size_t i = 1; i < group.members.size(); ++i) {
      if (group.members[i].reward.total > group.members[best].reward.total) {
        best = i;
      }
      if (group.members[i].reward.total < group.members[worst].reward.total) {
        worst = i;
      }
    }
    pull_target = group.members[best].trajectory;
    push_reference = group.members[worst].trajectory;
  }
  normalize_advantages(group);

  const DualBranchLoss loss = dual_branch_loss(group, pull_target, push_reference, config);
  if (!std::isfinite(loss.loss)) {
    throw std::runtime_error("training diverged: non-finite GRPO loss");
  }
  PolicyParams grad;
  for (std::size_t i = 0; i < group.members.size(); ++i) {
    const GroupMember& m = group.members[i];
    if (is_anchor(m.role) || loss.member_grads[i].isZero(0.0)) {
      continue;
    }
    OutputGrad og;
    og.waypoints = loss.member_grads[i];
    grad += backward(forward(m.features, params, m.noise), params, og);
  }
  LearningRates lr = config.lr;
  lr.meta = 0.0;
  update(params, grad, lr);

  GrpoTraceRecord& t = step.trace;
  t.scene_seed = record.scene.seed;
  t.scenario = record.scene.scenario;
  for (const GroupMember& m : group.members) {
    t.roles.push_back(m.role);
    t.rewards.push_back(m.reward.total);
    t.advantages.push_back(m.advantage);
  }
  t.max_sampled_reward = group.max_sampled_reward;
  t.refinement_triggered = group.refinement_triggered;
  t.refined_count = refined_count;
  t.loss = loss.loss;
  t.grad_norm_pooling = std::sqrt(grad.pool_w.squaredNorm() + grad.pool_b * grad.pool_b);
  t.grad_norm_action = std::sqrt(grad.w1.squaredNorm() + grad.b1.squaredNorm() + grad.w2.squaredNorm() +
                                 grad.b2.squaredNorm() + grad.w3.squaredNorm() + grad.b3.squaredNorm());
  return step;
}

GrpoResult train_grpo(std::span<const CspRecord> dataset, PolicyParams params, const GrpoConfig& config) {
  validate(config);
  std::vector<const CspRecord*> negatives;
  for (const CspRecord& r : dataset) {
    if (r.label.value == Label::Neg) {
      negatives.push_back(&r);
    }
  }
  if (negatives.empty()) {
    throw std::invalid_argument("GRPO training needs negative records");
  }
  std::mt19937_64 rng(config.seed + 2);
  GrpoResult res;
  std::size_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(negatives.begin(), negatives.end(), rng);
    for (const CspRecord* r : negatives) {
      GrpoStep s = grpo_step(*r, params, config, rng);
      s.trace.step = step++;
      s.trace.epoch = epoch;
      res.trace.push_back(std::move(s.trace));
    }
  }
  res.params = std::move(params);
  return res;
}

}  // namespace cfplan
