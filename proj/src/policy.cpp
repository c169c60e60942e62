#include "cfplan/policy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>

#include "cfplan/metrics.hpp"

namespace cfplan {

namespace {

constexpr double kSpeedScale = 10.0;
constexpr double kAccelScale = 3.0;
constexpr double kLongScale = 30.0;
constexpr double kLatScale = 5.0;
constexpr double kErrorScale = 5.0;
constexpr double kRiskTimeScale = 2.0;
constexpr double kObservationStep = 1.0 / kAgentRateHz;
// Uniform pooling averages over all slots; this gain keeps pooled features at
// roughly unit scale.
constexpr double kSlotGain = kSlots;

constexpr char kMagic[8] = {'C', 'F', 'P', 'L', 'A', 'N', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

Vec2 rotate(const Vec2& v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Agent as seen at t = 0: current position and backward-difference velocity,
// extrapolated at constant velocity over the episode window.
struct ObservedAgent {
  Vec2 position;
  Vec2 velocity;
  Agent projected;
};

ObservedAgent observe(const Agent& agent) {
  const Trajectory& tr = agent.scripted_trajectory;
  ObservedAgent obs;
  obs.position = tr.position_at(0.0);
  obs.velocity = (obs.position - tr.position_at(-kObservationStep)) * (1.0 / kObservationStep);
  obs.projected = agent;
  const auto count = static_cast<std::size_t>(std::lround((kHistoryHorizon + kPlanHorizon) * kAgentRateHz)) + 1;
  std::vector<Waypoint> wps;
  wps.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = -kHistoryHorizon + static_cast<double>(k) / kAgentRateHz;
    const Vec2 p = obs.position + obs.velocity * t;
    wps.push_back({p.x, p.y, t});
  }
  obs.projected.scripted_trajectory = Trajectory(std::move(wps), kAgentRateHz);
  return obs;
}

Trajectory constant_velocity_future(const EgoState& ego) {
  std::vector<Waypoint> wps;
  const Vec2 v = unit_from_heading(ego.heading) * ego.speed;
  for (std::size_t k = 1; k <= kFutureWaypoints; ++k) {
    const double t = static_cast<double>(k) / kSupervisionRateHz;
    const Vec2 p = ego.position + v * t;
    wps.push_back({p.x, p.y, t});
  }
  return Trajectory(std::move(wps), kSupervisionRateHz);
}

double speed_code(SpeedDecision d) {
  switch (d) {
    case SpeedDecision::maintain:
      return 0.0;
    case SpeedDecision::accelerate:
      return 1.0;
    case SpeedDecision::decelerate:
      return -1.0;
  }
  return 0.0;
}

double direction_code(DirectionDecision d) {
  switch (d) {
    case DirectionDecision::keep_lane:
      return 0.0;
    case DirectionDecision::turn_left:
      return 1.0;
    case DirectionDecision::turn_right:
      return -1.0;
    case DirectionDecision::lane_change_left:
      return 0.5;
    case DirectionDecision::lane_change_right:
      return -0.5;
  }
  return 0.0;
}

template <typename M>
void append(Eigen::VectorXd& flat, std::size_t& at, const M& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      flat[static_cast<Eigen::Index>(at++)] = m(r, c);
    }
  }
}

template <typename M>
void extract(const Eigen::VectorXd& flat, std::size_t& at, M& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = flat[static_cast<Eigen::Index>(at++)];
    }
  }
}

// Applies fn to every tensor in flat order.
template <typename Fn>
void for_each_tensor(PolicyParams& a, Fn&& fn) {
  Eigen::Matrix<double, 1, 1> pb;
  pb(0, 0) = a.pool_b;
  fn(a.pool_w, ParamGroup::pooling);
  fn(pb, ParamGroup::pooling);
  a.pool_b = pb(0, 0);
  fn(a.w1, ParamGroup::action);
  fn(a.b1, ParamGroup::action);
  fn(a.w2, ParamGroup::action);
  fn(a.b2, ParamGroup::action);
  fn(a.w3, ParamGroup::action);
  fn(a.b3, ParamGroup::action);
  fn(a.wm, ParamGroup::meta);
  fn(a.bm, ParamGroup::meta);
}

struct Shape {
  std::uint32_t rows;
  std::uint32_t cols;
};

constexpr std::array<Shape, 10> kShapes = {{{kFeatureDim, 1},
                                            {1, 1},
                                            {kHidden1, kFeatureDim},
                                            {kHidden1, 1},
                                            {kHidden2, kHidden1},
                                            {kHidden2, 1},
                                            {kActionDim, kHidden2},
                                            {kActionDim, 1},
                                            {kMetaDim, kFeatureDim},
                                            {kMetaDim, 1}}};

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(std::string_view bytes, std::size_t& at) {
  if (at + sizeof(T) > bytes.size()) {
    throw std::invalid_argument("checkpoint is truncated");
  }
  T value;
  std::memcpy(&value, bytes.data() + at, sizeof(T));
  at += sizeof(T);
  return value;
}

}  // namespace

Features encode_features(const Scene& scene, const NegativeAnalysisBlock* analysis) {
  Features f = Features::Zero();
  const EgoState& ego = scene.ego;

  const Trajectory& hist = scene.ego_history;
  double accel = 0.0;
  if (hist.size() >= 3) {
    const std::size_t n = hist.size();
    const double v_now = (hist[n - 1].position() - hist[n - 2].position()).norm() * hist.rate_hz();
    const double v_before = (hist[n - 2].position() - hist[n - 3].position()).norm() * hist.rate_hz();
    accel = (v_now - v_before) * hist.rate_hz();
  }
  const PolylineProjection proj = scene.map.centerline.project(ego.position);
  f(kEgoSlot, 0) = ego.speed / kSpeedScale;
  f(kEgoSlot, 1) = accel / kAccelScale;
  f(kEgoSlot, 2) = proj.lateral / scene.map.lane_width;
  f(kEgoSlot, 3) = wrap_angle(ego.heading - proj.heading);

  std::vector<ObservedAgent> observed;
  observed.reserve(scene.agents.size());
  for (const Agent& a : scene.agents) {
    observed.push_back(observe(a));
  }
  std::vector<Agent> projected;
  projected.reserve(observed.size());
  for (const ObservedAgent& o : observed) {
    projected.push_back(o.projected);
  }
  const std::vector<double> ttc =
      ttc_per_agent(constant_velocity_future(ego), projected, 0.0, ego.footprint);

  std::vector<std::size_t> order(observed.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return (observed[a].position - ego.position).norm() < (observed[b].position - ego.position).norm();
  });

  const Vec2 ego_velocity = unit_from_heading(ego.heading) * ego.speed;
  double max_risk = 0.0;
  double min_ttc = kTtcCap;
  for (std::size_t i = 0; i < ttc.size(); ++i) {
    max_risk = std::max(max_risk, std::exp(-ttc[i] / kRiskTimeScale));
    min_ttc = std::min(min_ttc, ttc[i]);
  }
  for (std::size_t k = 0; k < order.size() && k < static_cast<std::size_t>(kAgentSlots); ++k) {
    const ObservedAgent& o = observed[order[k]];
    const Vec2 rel_p = rotate(o.position - ego.position, -ego.heading);
    const Vec2 rel_v = rotate(o.velocity - ego_velocity, -ego.heading);
    const int slot = kFirstAgentSlot + static_cast<int>(k);
    f(slot, 4) = rel_p.x / kLongScale;
    f(slot, 5) = rel_p.y / kLatScale;
    f(slot, 6) = rel_v.x / kSpeedScale;
    f(slot, 7) = rel_v.y / kLatScale;
    f(slot, 8) = std::exp(-ttc[order[k]] / kRiskTimeScale);
    f(slot, 9) = 1.0;
  }

  f(kCommandSlot, 10) = speed_code(scene.command.speed_decision);
  f(kCommandSlot, 11) = direction_code(scene.command.direction_decision);

  f(kContextSlot, 8) = max_risk;
  f(kContextSlot, 9) = min_ttc < kTtcRisk ? 1.0 : 0.0;

  if (analysis != nullptr) {
    const FailureAttribution& fa = analysis->failure_attribution;
    double magnitude = 0.0, along = 0.0;
    for (const WaypointCorrection& c : analysis->actionable_correction) {
      magnitude += std::hypot(c.d_long, c.d_lat);
      along += c.d_long;
    }
    if (!analysis->actionable_correction.empty()) {
      magnitude /= static_cast<double>(analysis->actionable_correction.size());
    }
    f(kAnalysisSlot, 12) = fa.longitudinal_error / kErrorScale;
    f(kAnalysisSlot, 13) = fa.lateral_error / kErrorScale;
    f(kAnalysisSlot, 14) = fa.primary_axis == ErrorAxis::longitudinal ? 1.0 : -1.0;
    f(kAnalysisSlot, 15) = (along < 0.0 ? -magnitude : magnitude) / kErrorScale;
  }
  f *= kSlotGain;
  return f;
}

std::size_t PolicyParams::size() const {
  std::size_t n = 0;
  for (const Shape& s : kShapes) {
    n += static_cast<std::size_t>(s.rows) * s.cols;
  }
  return n;
}

Eigen::VectorXd PolicyParams::flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(size()));
  std::size_t at = 0;
  PolicyParams copy = *this;
  for_each_tensor(copy, [&](auto& m, ParamGroup) { append(flat, at, m); });
  return flat;
}

void PolicyParams::assign(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != size()) {
    throw std::invalid_argument("flat parameter vector has the wrong length");
  }
  std::size_t at = 0;
  for_each_tensor(*this, [&](auto& m, ParamGroup) { extract(flat, at, m); });
}

ParamGroup PolicyParams::group_of(std::size_t index) const {
  const std::size_t pooling = kFeatureDim + 1;
  const std::size_t action = static_cast<std::size_t>(kHidden1) * (kFeatureDim + 1) +
                             static_cast<std::size_t>(kHidden2) * (kHidden1 + 1) +
                             static_cast<std::size_t>(kActionDim) * (kHidden2 + 1);
  if (index < pooling) {
    return ParamGroup::pooling;
  }
  if (index < pooling + action) {
    return ParamGroup::action;
  }
  if (index < size()) {
    return ParamGroup::meta;
  }
  throw std::out_of_range("parameter index out of range");
}

PolicyParams& PolicyParams::operator+=(const PolicyParams& o) {
  pool_w += o.pool_w;
  pool_b += o.pool_b;
  w1 += o.w1;
  b1 += o.b1;
  w2 += o.w2;
  b2 += o.b2;
  w3 += o.w3;
  b3 += o.b3;
  wm += o.wm;
  bm += o.bm;
  return *this;
}

PolicyParams& PolicyParams::operator*=(double s) {
  for_each_tensor(*this, [&](auto& m, ParamGroup) { m *= s; });
  return *this;
}

double PolicyParams::squared_norm() const {
  double total = 0.0;
  PolicyParams copy = *this;
  for_each_tensor(copy, [&](auto& m, ParamGroup) { total += m.squaredNorm(); });
  return total;
}

bool PolicyParams::all_finite() const {
  bool ok = true;
  PolicyParams copy = *this;
  for_each_tensor(copy, [&](auto& m, ParamGroup) { ok = ok && m.allFinite(); });
  return ok;
}

bool PolicyParams::operator==(const PolicyParams& o) const {
  return pool_w == o.pool_w && pool_b == o.pool_b && w1 == o.w1 && b1 == o.b1 && w2 == o.w2 && b2 == o.b2 &&
         w3 == o.w3 && b3 == o.b3 && wm == o.wm && bm == o.bm;
}

PolicyParams init_params(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PolicyParams p;
  auto xavier = [&](Eigen::MatrixXd& m) {
    const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        m(r, c) = dist(rng);
      }
    }
  };
  xavier(p.w1);
  xavier(p.w2);
  xavier(p.w3);
  xavier(p.wm);
  return p;
}

PoolResult pool(const Features& features, const PolicyParams& params) {
  Eigen::Matrix<double, kSlots, 1> scores = features * params.pool_w;
  scores.array() += params.pool_b;
  const double top = scores.maxCoeff();
  PoolResult out;
  out.weights = (scores.array() - top).exp();
  out.weights /= out.weights.sum();
  out.pooled = features.transpose() * out.weights;
  return out;
}

FeatureVec perturb(const FeatureVec& pooled, double sigma, std::mt19937_64& rng) {
  if (sigma < 0.0) {
    throw std::invalid_argument("noise scale must be non-negative");
  }
  FeatureVec out = pooled;
  if (sigma == 0.0) {
    return out;
  }
  std::normal_distribution<double> dist(0.0, sigma);
  for (int i = 0; i < kFeatureDim; ++i) {
    out[i] += dist(rng);
  }
  return out;
}

Trajectory decode_action(const ActionVec& action) {
  std::vector<Waypoint> wps;
  wps.reserve(kFutureWaypoints);
  double x = 0.0, y = 0.0;
  for (std::size_t k = 0; k < kFutureWaypoints; ++k) {
    x += action[static_cast<Eigen::Index>(2 * k)];
    y += action[static_cast<Eigen::Index>(2 * k + 1)];
    wps.push_back({x, y, static_cast<double>(k + 1) / kSupervisionRateHz});
  }
  if (!std::isfinite(x) || !std::isfinite(y)) {
    throw std::runtime_error("policy output is not finite");
  }
  return Trajectory(std::move(wps), kSupervisionRateHz);
}

ForwardCache forward(const Features& features, const PolicyParams& params, const FeatureVec& noise) {
  ForwardCache c;
  c.features = features;
  c.pool = pool(features, params);
  c.input = c.pool.pooled + noise;
  c.h1 = (params.w1 * c.input + params.b1).array().tanh();
  c.h2 = (params.w2 * c.h1 + params.b2).array().tanh();
  c.action = params.w3 * c.h2 + params.b3;
  c.meta_logits = params.wm * c.input + params.bm;
  return c;
}

PolicyOutput act(const ForwardCache& cache) { return {decode_action(cache.action), cache.meta_logits}; }

PolicyOutput act(const FeatureVec& input, const PolicyParams& params) {
  const Eigen::VectorXd h1 = (params.w1 * input + params.b1).array().tanh();
  const Eigen::VectorXd h2 = (params.w2 * h1 + params.b2).array().tanh();
  const ActionVec action = params.w3 * h2 + params.b3;
  const MetaLogits logits = params.wm * input + params.bm;
  return {decode_action(action), logits};
}

PolicyOutput infer(const Scene& scene, const PolicyParams& params, const NegativeAnalysisBlock* analysis) {
  return act(forward(encode_features(scene, analysis), params, FeatureVec::Zero()));
}

PolicyParams backward(const ForwardCache& cache, const PolicyParams& params, const OutputGrad& grad) {
  PolicyParams g;

  // Waypoint k is the sum of steps 0..k, so step j collects the gradients of
  // every waypoint from j onward.
  ActionVec d_action;
  Eigen::Vector2d running = Eigen::Vector2d::Zero();
  for (int k = static_cast<int>(kFutureWaypoints) - 1; k >= 0; --k) {
    running += grad.waypoints.row(k).transpose();
    d_action[2 * k] = running[0];
    d_action[2 * k + 1] = running[1];
  }

  g.w3 = d_action * cache.h2.transpose();
  g.b3 = d_action;
  const Eigen::VectorXd d_h2 = (params.w3.transpose() * d_action).array() * (1.0 - cache.h2.array().square());
  g.w2 = d_h2 * cache.h1.transpose();
  g.b2 = d_h2;
  const Eigen::VectorXd d_h1 = (params.w2.transpose() * d_h2).array() * (1.0 - cache.h1.array().square());
  g.w1 = d_h1 * cache.input.transpose();
  g.b1 = d_h1;

  g.wm = grad.meta * cache.input.transpose();
  g.bm = grad.meta;

  const FeatureVec d_pooled = params.w1.transpose() * d_h1 + params.wm.transpose() * grad.meta;
  const Eigen::Matrix<double, kSlots, 1> d_weight = cache.features * d_pooled;
  const double mean = cache.pool.weights.dot(d_weight);
  const Eigen::Matrix<double, kSlots, 1> d_score = cache.pool.weights.array() * (d_weight.array() - mean);
  g.pool_w = cache.features.transpose() * d_score;
  g.pool_b = d_score.sum();

  if (!g.all_finite()) {
    throw std::runtime_error("non-finite gradient");
  }
  return g;
}

void update(PolicyParams& params, const PolicyParams& grads, const LearningRates& lr) {
  if (!(lr.pooling >= 0.0 && lr.action >= 0.0 && lr.meta >= 0.0)) {
    throw std::invalid_argument("learning rates must be non-negative");
  }
  params.pool_w -= lr.pooling * grads.pool_w;
  params.pool_b -= lr.pooling * grads.pool_b;
  params.w1 -= lr.action * grads.w1;
  params.b1 -= lr.action * grads.b1;
  params.w2 -= lr.action * grads.w2;
  params.b2 -= lr.action * grads.b2;
  params.w3 -= lr.action * grads.w3;
  params.b3 -= lr.action * grads.b3;
  params.wm -= lr.meta * grads.wm;
  params.bm -= lr.meta * grads.bm;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, sizeof(kMagic));
  put(out, kCheckpointVersion);
  put(out, static_cast<std::uint32_t>(ckpt.stage));
  put(out, static_cast<std::uint32_t>(kShapes.size()));
  for (const Shape& s : kShapes) {
    put(out, s.rows);
    put(out, s.cols);
  }
  const Eigen::VectorXd flat = ckpt.params.flatten();
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    put(out, flat[i]);
  }
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw std::invalid_argument("not a policy checkpoint");
  }
  std::size_t at = sizeof(kMagic);
  if (take<std::uint32_t>(bytes, at) != kCheckpointVersion) {
    throw std::invalid_argument("unsupported checkpoint version");
  }
  const auto stage = take<std::uint32_t>(bytes, at);
  if (stage > static_cast<std::uint32_t>(CheckpointStage::grpo)) {
    throw std::invalid_argument("unknown checkpoint stage");
  }
  const auto count = take<std::uint32_t>(bytes, at);
  std::vector<Shape> shapes;
  std::size_t total = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto rows = take<std::uint32_t>(bytes, at);
    const auto cols = take<std::uint32_t>(bytes, at);
    shapes.push_back({rows, cols});
    total += static_cast<std::size_t>(rows) * cols;
  }
  bool same = shapes.size() == kShapes.size();
  for (std::size_t i = 0; same && i < shapes.size(); ++i) {
    same = shapes[i].rows == kShapes[i].rows && shapes[i].cols == kShapes[i].cols;
  }
  if (!same) {
    throw CheckpointShapeError("checkpoint tensor shapes do not match the policy");
  }
  if (bytes.size() - at != total * sizeof(double)) {
    throw std::invalid_argument("checkpoint payload length does not match its shape table");
  }
  Eigen::VectorXd flat(static_cast<Eigen::Index>(total));
  for (std::size_t i = 0; i < total; ++i) {
    flat[static_cast<Eigen::Index>(i)] = take<double>(bytes, at);
  }
  Checkpoint ckpt;
  ckpt.stage = static_cast<CheckpointStage>(stage);
  ckpt.params.assign(flat);
  return ckpt;
}

}  // namespace cfplan
