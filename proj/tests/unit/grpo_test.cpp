#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "cfplan/grpo.hpp"
#include "fixtures.hpp"

namespace cfplan {
namespace {

using test::future;
using test::straight_future;

std::vector<CspRecord> suite(int count, int seed0) {
  std::vector<Scene> scenes;
  for (int i = 0; i < count; ++i) {
    scenes.push_back(generate_scene(kAllTemplates[i % 4], seed0 + i / 4));
  }
  return build_dataset(scenes, 4);
}

std::vector<CspRecord> negatives_of(ScenarioTemplate tpl, int count) {
  std::vector<CspRecord> out;
  for (int seed = 0; static_cast<int>(out.size()) < count; ++seed) {
    CspRecord r = build_record(generate_scene(tpl, seed));
    if (r.label.value == Label::Neg) {
      out.push_back(std::move(r));
    }
  }
  return out;
}

TEST(RewardPref, Examples) {
  const GrpoConfig c;
  const Trajectory pos = straight_future(8.0);
  const Trajectory neg = straight_future(11.0);
  EXPECT_EQ(reward_pref(neg, pos, neg, c), 0.0);
  const double d = trajectory_distance(pos, neg);
  EXPECT_NEAR(reward_pref(pos, pos, neg, c), (d / (d + 1e-6)) / 1.5, 1e-15);
  EXPECT_NEAR(reward_pref(pos, pos, neg, c), 0.666667, 1e-6);
  const Trajectory far = straight_future(5.0);
  EXPECT_GE(trajectory_distance(far, neg), 1.5 * d);
  EXPECT_EQ(reward_pref(far, pos, neg, c), 1.0);
}

TEST(RewardGoal, Examples) {
  const GrpoConfig c;
  const Trajectory pos = straight_future(8.0);
  EXPECT_EQ(reward_goal(pos, pos, c), 1.0);
  const Trajectory off3 = future([](double t) { return Vec2{8.0 * t, t == 4.0 ? 3.0 : 0.0}; });
  EXPECT_NEAR(reward_goal(off3, pos, c), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(reward_goal(off3, pos, c), 0.367879, 1e-6);
  const Trajectory off30 = future([](double t) { return Vec2{8.0 * t + (t == 4.0 ? 30.0 : 0.0), 0.0}; });
  EXPECT_NEAR(reward_goal(off30, pos, c), 4.54e-5, 1e-7);
  EXPECT_GT(reward_goal(off30, pos, c), 0.0);
}

TEST(RewardTotal, WeightedSum) {
  const GrpoConfig c;
  EXPECT_DOUBLE_EQ(combine_rewards(1.0, 1.0, 1.0, c), 1.0);
  EXPECT_NEAR(combine_rewards(11.0 / 12.0, 2.0 / 3.0, 1.0, c), 0.858333, 1e-6);
  EXPECT_EQ(combine_rewards(0.916667, 0.666667, 1.0, c), 0.5 * 0.916667 + 0.3 * 0.666667 + 0.2 * 1.0);
}

TEST(RewardTotal, CollisionGatesTrajectoryScore) {
  CspRecord r = negatives_of(ScenarioTemplate::lead_brake, 1).front();
  // Drive straight through everything at high speed.
  Trajectory crash = straight_future(25.0);
  r.scene.agents.push_back(test::vehicle(99, [](double t) { return Vec2{25.0 * t + 0.5, 0.0}; }));
  const GrpoConfig c;
  const RewardBreakdown b = reward_total(crash, r, c);
  EXPECT_EQ(b.r_traj, 0.0);
  EXPECT_EQ(b.total, 0.3 * b.r_pref + 0.2 * b.r_goal);
  EXPECT_EQ(b.r_pref, reward_pref(crash, r.tau_pos, *r.tau_neg, c));
  EXPECT_EQ(b.r_goal, reward_goal(crash, r.tau_pos, c));
}

TEST(RewardTotal, RangesOnRandomTrajectories) {
  const auto negs = negatives_of(ScenarioTemplate::cut_in, 3);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 4.0);
  const GrpoConfig c;
  for (const CspRecord& r : negs) {
    for (int i = 0; i < 30; ++i) {
      const double a = n(rng), b = n(rng);
      const Trajectory t = future([&](double s) { return Vec2{(10.0 + a) * s, 0.2 * b * s}; });
      const RewardBreakdown rb = reward_total(t, r, c);
      EXPECT_GE(rb.r_pref, 0.0);
      EXPECT_LE(rb.r_pref, 1.0);
      EXPECT_GT(rb.r_goal, 0.0);
      EXPECT_LE(rb.r_goal, 1.0);
      EXPECT_GE(rb.total, 0.0);
      EXPECT_LE(rb.total, 1.0);
    }
  }
}

TEST(RewardTotal, RejectsPositiveRecordWithAnchors) {
  const CspRecord pos = build_record(generate_scene(ScenarioTemplate::free_road, 0));
  EXPECT_THROW(reward_total(pos.tau_pos, pos, GrpoConfig{}), std::invalid_argument);
  GrpoConfig no_anchor;
  no_anchor.use_anchors = false;
  EXPECT_NO_THROW(reward_total(pos.tau_pos, pos, no_anchor));
}

TEST(SampleGroup, SigmaZeroAndSeeded) {
  const CspRecord r = negatives_of(ScenarioTemplate::lead_brake, 1).front();
  const PolicyParams p = init_params(5);
  GrpoConfig c;
  c.sigma = 0.0;
  std::mt19937_64 rng(1);
  const auto flat = sample_group(r, p, c, rng);
  ASSERT_EQ(flat.size(), 6u);
  for (const auto& m : flat) {
    EXPECT_EQ(m.trajectory, flat[0].trajectory);
  }
  c.sigma = 0.1;
  std::mt19937_64 a(4), b(4);
  const auto ga = sample_group(r, p, c, a);
  const auto gb = sample_group(r, p, c, b);
  for (std::size_t i = 0; i < ga.size(); ++i) {
    EXPECT_EQ(ga[i].trajectory, gb[i].trajectory);
    EXPECT_EQ(ga[i].reward.total, gb[i].reward.total);
  }
}

TEST(SampleGroup, NoiseSpreadsTrajectoryScores) {
  const CspRecord r = negatives_of(ScenarioTemplate::lead_brake, 1).front();
  std::mt19937_64 rng(0);
  // init_params(0) sends every sample behind its start, pinning EP at 0
  const auto group = sample_group(r, init_params(1), GrpoConfig{}, rng);
  std::set<double> scores;
  for (const auto& m : group) {
    scores.insert(m.reward.r_traj);
  }
  EXPECT_GE(scores.size(), 2u);
}

TEST(Refine, NotTriggeredAboveThreshold) {
  const CspRecord r = negatives_of(ScenarioTemplate::crossing, 1).front();
  std::mt19937_64 rng(0);
  auto group = sample_group(r, init_params(0), GrpoConfig{}, rng);
  group[2].reward.total = 0.7;
  EXPECT_TRUE(feedback_refine(group, r, init_params(0), GrpoConfig{}, rng).empty());
}

// Replays the refinement draws with a copy of the generator.
std::vector<GroupMember> replay_draws(const std::vector<GroupMember>& sampled, std::size_t worst, const CspRecord& r,
                                      const PolicyParams& p, const GrpoConfig& c, std::mt19937_64 rng) {
  const NegativeAnalysisBlock block =
      build_negative_analysis(sampled[worst].trajectory, r.tau_pos, r.analysis->counterfactual_analysis);
  const Features f = encode_features(r.scene, &block);
  std::vector<GroupMember> out;
  for (std::size_t i = 0; i < c.refine_draws; ++i) {
    GroupMember m;
    m.noise = perturb(FeatureVec::Zero(), c.sigma, rng);
    m.trajectory = act(forward(f, p, m.noise)).trajectory;
    m.reward = reward_total(m.trajectory, r, c);
    out.push_back(m);
  }
  return out;
}

TEST(Refine, KeepsFirstTwoOfThreeQualifying) {
  const CspRecord r = negatives_of(ScenarioTemplate::lead_brake, 1).front();
  const PolicyParams p = init_params(3);
  const GrpoConfig c;
  std::mt19937_64 rng(8);
  auto sampled = sample_group(r, p, c, rng);
  // worst member stays at index 0 with the lowest fabricated reward
  for (std::size_t i = 0; i < sampled.size(); ++i) {
    sampled[i].reward.total = -1.0;
  }
  const auto draws = replay_draws(sampled, 0, r, p, c, rng);
  std::vector<double> sorted;
  for (const auto& d : draws) {
    sorted.push_back(d.reward.total);
  }
  std::sort(sorted.rbegin(), sorted.rend());
  ASSERT_GT(sorted[2], sorted[3]) << "fixture needs a strict gap below the third-best draw";
  const double threshold = sorted[3];
  ASSERT_LT(threshold, c.delta);
  for (std::size_t i = 1; i < sampled.size(); ++i) {
    sampled[i].reward.total = threshold;
  }
  sampled[0].reward.total = threshold - 1.0;

  const auto kept = feedback_refine(sampled, r, p, c, rng);
  ASSERT_EQ(kept.size(), 2u);
  std::vector<const GroupMember*> qualifying;
  for (const auto& d : draws) {
    if (d.reward.total > threshold) {
      qualifying.push_back(&d);
    }
  }
  ASSERT_EQ(qualifying.size(), 3u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(kept[i].role, MemberRole::refined);
    EXPECT_EQ(kept[i].trajectory, qualifying[i]->trajectory);
    EXPECT_GT(reward_total(kept[i].trajectory, r, c).total, threshold);
  }
}

TEST(Refine, EmptyWhenNoDrawBeatsTheGroup) {
  const CspRecord r = negatives_of(ScenarioTemplate::lead_brake, 1).front();
  const PolicyParams p = init_params(3);
  const GrpoConfig c;
  std::mt19937_64 rng(8);
  auto sampled = sample_group(r, p, c, rng);
  const auto draws = replay_draws(sampled, 0, r, p, c, rng);
  double best = 0.0;
  for (const auto& d : draws) {
    best = std::max(best, d.reward.total);
  }
  ASSERT_LT(best, c.delta);
  for (auto& m : sampled) {
    m.reward.total = best;
  }
  EXPECT_TRUE(feedback_refine(sampled, r, p, c, rng).empty());
}

TEST(Advantages, Examples) {
  const std::vector<double> equal{0.3, 0.3, 0.3};
  for (double a : normalize_advantages(equal, {}).sample) {
    EXPECT_EQ(a, 0.0);
  }
  const std::vector<double> two{0.0, 1.0};
  const std::vector<double> anchors{0.9, 0.1};
  const Advantages a = normalize_advantages(two, anchors);
  EXPECT_DOUBLE_EQ(a.sample[0], -1.0);
  EXPECT_DOUBLE_EQ(a.sample[1], 1.0);
  EXPECT_DOUBLE_EQ(a.stddev, 0.5);
  EXPECT_NEAR(a.anchor[0], 0.8, 1e-15);
  EXPECT_NEAR(a.anchor[1], -0.8, 1e-15);
  const Advantages no_anchor = normalize_advantages(two, {});
  EXPECT_EQ(no_anchor.sample, a.sample);
  EXPECT_EQ(no_anchor.mean, a.mean);
  const std::vector<double> one{0.5};
  EXPECT_THROW(normalize_advantages(one, {}), std::invalid_argument);
}

TEST(Advantages, GroupFormAssignsAnchors) {
  TrajectoryGroup g;
  const double rewards[] = {0.0, 1.0, 0.9, 0.1};
  const MemberRole roles[] = {MemberRole::sampled, MemberRole::refined, MemberRole::anchor_pos,
                              MemberRole::anchor_neg};
  for (int i = 0; i < 4; ++i) {
    GroupMember m;
    m.role = roles[i];
    m.reward.total = rewards[i];
    g.members.push_back(m);
  }
  normalize_advantages(g);
  EXPECT_DOUBLE_EQ(g.members[0].advantage, -1.0);
  EXPECT_DOUBLE_EQ(g.members[1].advantage, 1.0);
  EXPECT_NEAR(g.members[2].advantage, 0.8, 1e-15);
  EXPECT_NEAR(g.members[3].advantage, -0.8, 1e-15);
}

GroupMember member(MemberRole role, const Trajectory& t, double adv) {
  GroupMember m;
  m.role = role;
  m.trajectory = t;
  m.advantage = adv;
  return m;
}

TEST(DualBranch, Examples) {
  const GrpoConfig c;
  const Trajectory pos = straight_future(8.0);
  const Trajectory neg = straight_future(11.0);
  TrajectoryGroup g;
  g.members = {member(MemberRole::sampled, pos, 1.0)};
  EXPECT_EQ(dual_branch_loss(g, pos, neg, c).loss, 0.0);
  g.members = {member(MemberRole::sampled, straight_future(10.0), -1.0)};
  EXPECT_EQ(dual_branch_loss(g, pos, neg, c).loss, 0.0);
  // d = 0.4 from the negative anchor
  const Trajectory close = future([](double t) { return Vec2{11.0 * t + (t == 4.0 ? 0.4 : 0.0), 0.0}; });
  g.members = {member(MemberRole::sampled, close, -1.0)};
  EXPECT_NEAR(dual_branch_loss(g, pos, neg, c).loss, 0.6, 1e-12);
}

TEST(DualBranch, HuberBranchesAndMeanOverGroup) {
  const GrpoConfig c;
  const Trajectory pos = straight_future(8.0);
  // 0.3 m lateral everywhere: quadratic; 2 m ahead: linear
  const Trajectory near = future([](double t) { return Vec2{8.0 * t, 0.3}; });
  const Trajectory far = future([](double t) { return Vec2{8.0 * t + 2.0, 0.0}; });
  EXPECT_NEAR(huber_distance(near, pos, 1.0).value, 0.5 * 0.09, 1e-15);
  EXPECT_NEAR(huber_distance(far, pos, 1.0).value, 1.0 * (2.0 - 0.5), 1e-15);
  TrajectoryGroup g;
  g.members = {member(MemberRole::sampled, near, 0.5), member(MemberRole::sampled, far, 2.0),
               member(MemberRole::anchor_pos, far, 1.0), member(MemberRole::anchor_neg, near, -1.0)};
  const DualBranchLoss l = dual_branch_loss(g, pos, straight_future(20.0), c);
  const double expected = (0.5 * 0.045 + 2.0 * 1.5 + 1.0 * 1.5 + 0.0) / 4.0;
  EXPECT_NEAR(l.loss, expected, 1e-14);
  EXPECT_TRUE(l.member_grads[2].isZero(0.0));
  EXPECT_TRUE(l.member_grads[3].isZero(0.0));
  EXPECT_FALSE(l.member_grads[1].isZero(0.0));
}

TEST(GrpoStep, PositiveMemberMovesTowardPositiveAnchor) {
  const auto train = suite(40, 0);
  SftConfig sc;
  sc.epochs_stage1 = 3;
  const PolicyParams base = train_stage1(train, init_params(0), sc).params;
  GrpoConfig c;
  c.use_feedback = false;
  c.lr = {1e-4, 1e-4, 0.0};
  int checked = 0;
  for (const CspRecord& r : negatives_of(ScenarioTemplate::lead_brake, 4)) {
    PolicyParams p = base;
    std::mt19937_64 rng(7);
    const GrpoStep s = grpo_step(r, p, c, rng);
    for (const GroupMember& m : s.group.members) {
      if (m.role != MemberRole::sampled || m.advantage <= 0.0) {
        continue;
      }
      const double before = huber_distance(m.trajectory, r.tau_pos, c.delta_huber).value;
      const Trajectory moved = act(forward(m.features, p, m.noise)).trajectory;
      EXPECT_LT(huber_distance(moved, r.tau_pos, c.delta_huber).value, before);
      ++checked;
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(GrpoStep, AnchorsGetAdvantagesButNoGradient) {
  const CspRecord r = negatives_of(ScenarioTemplate::cut_in, 1).front();
  PolicyParams p = init_params(2);
  std::mt19937_64 rng(1);
  const GrpoStep s = grpo_step(r, p, GrpoConfig{}, rng);
  ASSERT_GE(s.group.members.size(), 8u);
  EXPECT_EQ(s.group.members[s.group.members.size() - 2].role, MemberRole::anchor_pos);
  EXPECT_EQ(s.group.members.back().role, MemberRole::anchor_neg);
  EXPECT_EQ(s.trace.roles.size(), s.group.members.size());
  EXPECT_LE(s.trace.refined_count, 2u);
}

TEST(GrpoStep, EqualRewardsGiveNoSampledGradient) {
  const CspRecord r = negatives_of(ScenarioTemplate::lead_brake, 1).front();
  PolicyParams p = init_params(1);
  const PolicyParams before = p;
  GrpoConfig c;
  c.sigma = 0.0;
  c.use_feedback = false;
  std::mt19937_64 rng(1);
  const GrpoStep s = grpo_step(r, p, c, rng);
  for (const auto& m : s.group.members) {
    if (m.role == MemberRole::sampled) {
      EXPECT_EQ(m.advantage, 0.0);
    }
  }
  EXPECT_EQ(s.trace.grad_norm_action, 0.0);
  EXPECT_EQ(p, before);
}

TEST(TrainGrpo, FreezesMetaHeadAndIsDeterministic) {
  const auto data = suite(24, 0);
  GrpoConfig c;
  c.epochs = 2;
  const PolicyParams p0 = init_params(3);
  const GrpoResult a = train_grpo(data, p0, c);
  const GrpoResult b = train_grpo(data, p0, c);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.params.wm, p0.wm);
  EXPECT_EQ(a.params.bm, p0.bm);
  EXPECT_FALSE(a.params.w3 == p0.w3);
  for (const auto& t : a.trace) {
    for (std::size_t i = 0; i + 2 < t.rewards.size(); ++i) {
      if (t.roles[i] == MemberRole::refined) {
        EXPECT_GT(t.rewards[i], t.max_sampled_reward);
      }
    }
  }
}

TEST(TrainGrpo, RejectsDatasetsWithoutNegatives) {
  std::vector<CspRecord> pos{build_record(generate_scene(ScenarioTemplate::free_road, 0))};
  EXPECT_THROW(train_grpo(pos, init_params(0), GrpoConfig{}), std::invalid_argument);
  GrpoConfig bad;
  bad.delta = 1.0;
  EXPECT_THROW(validate(bad), std::invalid_argument);
}

TEST(TrainGrpo, HeldOutRewardImprovesOverSft) {
  const auto train = suite(200, 0);
  const auto holdout = suite(50, 5000);
  const SftConfig sc;
  const PolicyParams sft = train_stage2(train, train_stage1(train, init_params(0), sc).params, sc).params;
  const GrpoConfig gc;
  const PolicyParams tuned = train_grpo(train, sft, gc).params;
  auto mean_reward = [&](const PolicyParams& p) {
    double sum = 0.0;
    int n = 0;
    for (const CspRecord& r : holdout) {
      if (r.label.value == Label::Neg) {
        sum += reward_total(infer(r.scene, p).trajectory, r, gc).total;
        ++n;
      }
    }
    return sum / n;
  };
  const double before = mean_reward(sft);
  const double after = mean_reward(tuned);
  EXPECT_GE(after, 1.1 * before) << "sft " << before << " grpo " << after;
}

}  // namespace
}  // namespace cfplan
