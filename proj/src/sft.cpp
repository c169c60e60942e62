#include "cfplan/sft.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace cfplan {

namespace {

constexpr double kAlphaMin = 0.1;
constexpr double kAlphaMax = 10.0;
constexpr double kNormGuard = 1e-8;

int speed_index(SpeedDecision d) { return static_cast<int>(d); }
int direction_index(DirectionDecision d) { return static_cast<int>(d); }

// Softmax cross-entropy over logits[offset, offset + n) for class `target`.
double cross_entropy(const MetaLogits& logits, int offset, int n, int target, MetaLogits& grad) {
  const auto seg = logits.segment(offset, n);
  const double top = seg.maxCoeff();
  const Eigen::VectorXd e = (seg.array() - top).exp();
  const double z = e.sum();
  grad.segment(offset, n) = e / z;
  grad[offset + target] -= 1.0;
  return -(seg[target] - top - std::log(z));
}

// Visits records of one label in shuffled order, reshuffling on every pass.
class Cursor {
 public:
  Cursor(std::vector<const CspRecord*> items, std::mt19937_64& rng) : items_(std::move(items)), rng_(rng) {}

  const CspRecord& next() {
    if (pos_ == 0) {
      std::shuffle(items_.begin(), items_.end(), rng_);
    }
    const CspRecord& r = *items_[pos_];
    pos_ = (pos_ + 1) % items_.size();
    return r;
  }

 private:
  std::vector<const CspRecord*> items_;
  std::mt19937_64& rng_;
  std::size_t pos_{0};
};

}  // namespace

void validate(const SftConfig& config) {
  if (!(config.alpha > 0.0)) {
    throw std::invalid_argument("alpha must be positive");
  }
  if (!(config.mix_ratio >= 0.0 && config.mix_ratio <= 1.0)) {
    throw std::invalid_argument("mix_ratio must lie in [0, 1]");
  }
  if (config.batch_size == 0) {
    throw std::invalid_argument("batch_size must be positive");
  }
  if (config.epochs_stage1 < 0 || config.epochs_stage2 < 0) {
    throw std::invalid_argument("epoch counts must be non-negative");
  }
}

TrajLoss traj_loss(const Trajectory& pred, const Trajectory& target) {
  if (pred.size() != kFutureWaypoints || target.size() != kFutureWaypoints) {
    throw std::invalid_argument("trajectory loss needs two 8-waypoint trajectories");
  }
  TrajLoss out;
  const double n = static_cast<double>(kFutureWaypoints);
  for (std::size_t k = 0; k < kFutureWaypoints; ++k) {
    const double dx = pred[k].x - target[k].x;
    const double dy = pred[k].y - target[k].y;
    out.loss += (dx * dx + dy * dy) / n;
    out.grad(static_cast<Eigen::Index>(k), 0) = 2.0 * dx / n;
    out.grad(static_cast<Eigen::Index>(k), 1) = 2.0 * dy / n;
  }
  return out;
}

TextLoss text_loss(const MetaLogits& logits, const MetaActions& target) {
  TextLoss out;
  const int window = kSpeedClasses + kDirectionClasses;
  const DrivingCommand* windows[2] = {&target.short_term, &target.long_term};
  for (int w = 0; w < 2; ++w) {
    const int base = w * window;
    out.loss += cross_entropy(logits, base, kSpeedClasses, speed_index(windows[w]->speed_decision), out.grad);
    out.loss += cross_entropy(logits, base + kSpeedClasses, kDirectionClasses,
                              direction_index(windows[w]->direction_decision), out.grad);
  }
  return out;
}

SftSample make_sample(const CspRecord& record, bool with_analysis) {
  const NegativeAnalysisBlock* analysis =
      with_analysis && record.analysis.has_value() ? &*record.analysis : nullptr;
  return {encode_features(record.scene, analysis), record.tau_pos, record.cot.meta_actions};
}

StepResult joint_step(std::span<const SftSample> batch, PolicyParams& params, const SftConfig& config) {
  if (batch.empty()) {
    throw std::invalid_argument("empty batch");
  }
  StepResult res;
  double text_sum = 0.0, traj_sum = 0.0;
  for (const SftSample& s : batch) {
    const ForwardCache cache = forward(s.features, params, FeatureVec::Zero());
    const PolicyOutput out = act(cache);
    const TextLoss text = text_loss(out.meta_logits, s.meta);
    const TrajLoss traj = traj_loss(out.trajectory, s.target);
    text_sum += text.loss;
    traj_sum += traj.loss;

    OutputGrad g_text;
    g_text.meta = text.grad;
    res.text_grad += backward(cache, params, g_text);
    OutputGrad g_traj;
    g_traj.waypoints = traj.grad;
    res.traj_grad += backward(cache, params, g_traj);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  res.text_grad *= inv;
  res.traj_grad *= inv;
  const double l_text = text_sum * inv;
  const double l_traj = traj_sum * inv;

  double alpha = config.alpha;
  if (config.adaptive_alpha) {
    const double ratio = std::sqrt(res.text_grad.squared_norm()) / (std::sqrt(res.traj_grad.squared_norm()) + kNormGuard);
    alpha = std::clamp(ratio, kAlphaMin, kAlphaMax);
  }
  const double total = l_text + alpha * l_traj;
  if (!std::isfinite(total)) {
    throw std::runtime_error("training diverged: non-finite loss");
  }

  PolicyParams grad = res.traj_grad;
  grad *= alpha;
  grad += res.text_grad;
  update(params, grad, config.lr);

  res.trace.loss_total = total;
  res.trace.loss_text = l_text;
  res.trace.loss_traj = l_traj;
  res.trace.alpha = alpha;
  res.trace.grad_norm = std::sqrt(grad.squared_norm());
  return res;
}

std::vector<Label> stage2_schedule(std::size_t length, double mix_ratio) {
  std::vector<Label> out;
  out.reserve(length);
  for (std::size_t j = 0; j < length; ++j) {
    const bool pos = std::floor(static_cast<double>(j + 1) * mix_ratio) > std::floor(static_cast<double>(j) * mix_ratio);
    out.push_back(pos ? Label::Pos : Label::Neg);
  }
  return out;
}

SftResult train_stage1(std::span<const CspRecord> dataset, PolicyParams params, const SftConfig& config) {
  validate(config);
  std::vector<SftSample> samples;
  for (const CspRecord& r : dataset) {
    if (r.label.value == Label::Pos) {
      samples.push_back(make_sample(r, false));
    }
  }
  if (samples.empty()) {
    throw std::invalid_argument("stage-1 training needs at least one positive record");
  }

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(samples.size());
  SftResult res;
  std::size_t step = 0;
  std::vector<SftSample> batch;
  for (int epoch = 0; epoch < config.epochs_stage1; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) {
      order[i] = i;
    }
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i) {
        batch.push_back(samples[order[i]]);
      }
      StepResult sr = joint_step(batch, params, config);
      sr.trace.step = step++;
      sr.trace.stage = 1;
      res.trace.push_back(sr.trace);
    }
  }
  res.params = std::move(params);
  return res;
}

SftResult train_stage2(std::span<const CspRecord> dataset, PolicyParams params, const SftConfig& config) {
  validate(config);
  std::vector<const CspRecord*> pos, neg;
  for (const CspRecord& r : dataset) {
    (r.label.value == Label::Pos ? pos : neg).push_back(&r);
  }
  if (pos.empty() || neg.empty()) {
    throw std::invalid_argument("stage-2 training needs both positive and negative records");
  }

  std::mt19937_64 rng(config.seed + 1);
  Cursor pos_cursor(pos, rng);
  Cursor neg_cursor(neg, rng);
  const std::size_t per_epoch = pos.size() + neg.size();
  const std::size_t batches = (per_epoch + config.batch_size - 1) / config.batch_size;
  const std::vector<Label> schedule = stage2_schedule(batches * config.batch_size, config.mix_ratio);

  SftResult res;
  std::size_t step = 0;
  std::vector<SftSample> batch;
  for (int epoch = 0; epoch < config.epochs_stage2; ++epoch) {
    for (std::size_t b = 0; b < batches; ++b) {
      batch.clear();
      for (std::size_t j = b * config.batch_size; j < (b + 1) * config.batch_size; ++j) {
        if (schedule[j] == Label::Pos) {
          batch.push_back(make_sample(pos_cursor.next(), false));
        } else {
          batch.push_back(make_sample(neg_cursor.next(), true));
        }
      }
      StepResult sr = joint_step(batch, params, config);
      sr.trace.step = step++;
      sr.trace.stage = 2;
      res.trace.push_back(sr.trace);
    }
  }
  res.params = std::move(params);
  return res;
}

}  // namespace cfplan
