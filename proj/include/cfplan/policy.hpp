#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include "cfplan/csp.hpp"
#include "cfplan/scenario.hpp"

namespace cfplan {

inline constexpr int kSlots = 8;
inline constexpr int kFeatureDim = 16;
inline constexpr int kHidden1 = 64;
inline constexpr int kHidden2 = 256;
inline constexpr int kActionDim = 2 * static_cast<int>(kFutureWaypoints);
inline constexpr int kSpeedClasses = 3;
inline constexpr int kDirectionClasses = 5;
inline constexpr int kMetaDim = 2 * (kSpeedClasses + kDirectionClasses);

// Slot indices.
inline constexpr int kEgoSlot = 0;
inline constexpr int kFirstAgentSlot = 1;
inline constexpr int kAgentSlots = 4;
inline constexpr int kCommandSlot = 5;
inline constexpr int kContextSlot = 6;
inline constexpr int kAnalysisSlot = 7;

using Features = Eigen::Matrix<double, kSlots, kFeatureDim, Eigen::RowMajor>;
using FeatureVec = Eigen::Matrix<double, kFeatureDim, 1>;
using MetaLogits = Eigen::Matrix<double, kMetaDim, 1>;
using ActionVec = Eigen::Matrix<double, kActionDim, 1>;

// Each slot kind writes into its own feature columns so mean pooling keeps
// them separable:
//   ego      0-3   speed, history acceleration, lateral offset, heading
//   agents   4-9   relative x, y, vx, vy, risk cue, presence
//   command  10-11 speed and direction codes
//   context  8-9   scene-level risk cue and risk flag
//   analysis 12-15 longitudinal error, lateral error, primary-axis flag,
//                  mean correction magnitude signed by its along-track sense
// Agent kinematics come from the scripted history only (backward differences
// at t = 0), so nothing after the scene time leaks into the features.
Features encode_features(const Scene& scene, const NegativeAnalysisBlock* analysis = nullptr);

enum class ParamGroup { pooling, action, meta };

struct PolicyParams {
  FeatureVec pool_w{FeatureVec::Zero()};
  double pool_b{0.0};
  Eigen::MatrixXd w1{Eigen::MatrixXd::Zero(kHidden1, kFeatureDim)};
  Eigen::VectorXd b1{Eigen::VectorXd::Zero(kHidden1)};
  Eigen::MatrixXd w2{Eigen::MatrixXd::Zero(kHidden2, kHidden1)};
  Eigen::VectorXd b2{Eigen::VectorXd::Zero(kHidden2)};
  Eigen::MatrixXd w3{Eigen::MatrixXd::Zero(kActionDim, kHidden2)};
  Eigen::VectorXd b3{Eigen::VectorXd::Zero(kActionDim)};
  Eigen::MatrixXd wm{Eigen::MatrixXd::Zero(kMetaDim, kFeatureDim)};
  Eigen::VectorXd bm{Eigen::VectorXd::Zero(kMetaDim)};

  static PolicyParams zeros() { return {}; }
  std::size_t size() const;

  // Flat views in a fixed order (pool_w, pool_b, w1, b1, w2, b2, w3, b3, wm, bm)
  // used for finite-difference checks and norms.
  Eigen::VectorXd flatten() const;
  void assign(const Eigen::VectorXd& flat);
  // Group of the flat coordinate at `index`.
  ParamGroup group_of(std::size_t index) const;

  PolicyParams& operator+=(const PolicyParams& o);
  PolicyParams& operator*=(double s);
  double squared_norm() const;
  bool all_finite() const;
  bool operator==(const PolicyParams& o) const;
};

// Xavier-style uniform initialization from a seeded generator.
PolicyParams init_params(std::uint64_t seed);

// Softmax attention pooling with its intermediate quantities.
struct PoolResult {
  FeatureVec pooled;
  Eigen::Matrix<double, kSlots, 1> weights;
};
PoolResult pool(const Features& features, const PolicyParams& params);

FeatureVec perturb(const FeatureVec& pooled, double sigma, std::mt19937_64& rng);

struct PolicyOutput {
  Trajectory trajectory;
  MetaLogits meta_logits;
};

struct ForwardCache {
  Features features;
  PoolResult pool;
  FeatureVec input;  // pooled plus noise
  Eigen::VectorXd h1;
  Eigen::VectorXd h2;
  ActionVec action;
  MetaLogits meta_logits;
};

// Action head output read as per-step (dx, dy) displacements summed into
// waypoints at t = 0.5 ... 4.0 s.
Trajectory decode_action(const ActionVec& action);

ForwardCache forward(const Features& features, const PolicyParams& params, const FeatureVec& noise);
PolicyOutput act(const FeatureVec& input, const PolicyParams& params);
PolicyOutput act(const ForwardCache& cache);

// Noise-free inference on a scene.
PolicyOutput infer(const Scene& scene, const PolicyParams& params, const NegativeAnalysisBlock* analysis = nullptr);

// Loss gradients with respect to the policy outputs.
struct OutputGrad {
  Eigen::Matrix<double, static_cast<int>(kFutureWaypoints), 2> waypoints{
      Eigen::Matrix<double, static_cast<int>(kFutureWaypoints), 2>::Zero()};
  MetaLogits meta{MetaLogits::Zero()};
};

// Backpropagates output gradients through both heads and the pooling layer.
// Throws std::runtime_error when the result is not finite.
PolicyParams backward(const ForwardCache& cache, const PolicyParams& params, const OutputGrad& grad);

struct LearningRates {
  double pooling{1e-3};
  double action{1e-3};
  double meta{1e-3};
};

// Plain gradient descent with per-group rates.
void update(PolicyParams& params, const PolicyParams& grads, const LearningRates& lr);

enum class CheckpointStage : std::uint32_t { init = 0, sft1 = 1, sft2 = 2, grpo = 3 };

struct Checkpoint {
  CheckpointStage stage{CheckpointStage::init};
  PolicyParams params;
};

class CheckpointShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
// Throws std::invalid_argument on a malformed buffer and CheckpointShapeError
// when tensor shapes differ from the compiled policy.
Checkpoint parse_checkpoint(std::string_view bytes);

}  // namespace cfplan
