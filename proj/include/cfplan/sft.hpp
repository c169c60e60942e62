#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cfplan/csp.hpp"
#include "cfplan/policy.hpp"

namespace cfplan {

struct SftConfig {
  double alpha{1.0};          // used as-is when adaptive_alpha is off
  bool adaptive_alpha{true};  // per-batch gradient-norm balancing
  int epochs_stage1{15};
  int epochs_stage2{5};
  double mix_ratio{0.5};
  std::size_t batch_size{8};
  std::uint64_t seed{0};
  LearningRates lr{1e-3, 3e-3, 1e-2};
};

void validate(const SftConfig& config);

using WaypointGrad = Eigen::Matrix<double, static_cast<int>(kFutureWaypoints), 2>;

struct TrajLoss {
  double loss{0.0};
  WaypointGrad grad{WaypointGrad::Zero()};
};

// Mean squared Euclidean waypoint error.
TrajLoss traj_loss(const Trajectory& pred, const Trajectory& target);

struct TextLoss {
  double loss{0.0};
  MetaLogits grad{MetaLogits::Zero()};
};

// Logit layout: [speed(3), direction(5)] for the short-term window followed by
// the same for the long-term window. Sum of the four softmax cross-entropies.
TextLoss text_loss(const MetaLogits& logits, const MetaActions& target);

struct SftSample {
  Features features;
  Trajectory target;
  MetaActions meta;
};

// Positive records train on the bare scene; negative records see the
// analysis slot and learn to produce the counterfactual.
SftSample make_sample(const CspRecord& record, bool with_analysis);

struct TraceRecord {
  std::size_t step{0};
  int stage{1};
  double loss_total{0.0};
  double loss_text{0.0};
  double loss_traj{0.0};
  double alpha{0.0};
  double grad_norm{0.0};
};

struct StepResult {
  TraceRecord trace;
  PolicyParams text_grad;
  PolicyParams traj_grad;
};

// One update on the mean batch loss L_text + alpha * L_traj. Throws
// std::runtime_error when the loss is not finite.
StepResult joint_step(std::span<const SftSample> batch, PolicyParams& params, const SftConfig& config);

struct SftResult {
  PolicyParams params;
  std::vector<TraceRecord> trace;
};

SftResult train_stage1(std::span<const CspRecord> dataset, PolicyParams params, const SftConfig& config);
SftResult train_stage2(std::span<const CspRecord> dataset, PolicyParams params, const SftConfig& config);

// Deterministic label interleaving: element j of the stream is positive iff
// floor((j + 1) * ratio) > floor(j * ratio).
std::vector<Label> stage2_schedule(std::size_t length, double mix_ratio);

}  // namespace cfplan
