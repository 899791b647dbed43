#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <type_traits>
#include <vector>

#include "bnn/error.hpp"
#include "bnn/layers.hpp"
#include "bnn/model.hpp"
#include "bnn/tensor.hpp"

namespace bnn {

using Rng = std::mt19937_64;

/// Samples stacked along axis 0 with one class index per sample.
template <typename T>
struct Dataset {
  Tensor<T> samples;
  std::vector<std::uint32_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  bool empty() const noexcept { return labels.empty(); }

  Shape sample_shape() const {
    return Shape(samples.shape().begin() + 1, samples.shape().end());
  }

  std::size_t sample_size() const {
    return size() ? samples.size() / size() : 0;
  }

  std::uint32_t num_classes() const {
    return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  }

  void validate() const {
    if (samples.rank() < 1 || samples.dim(0) != labels.size()) {
      throw ShapeError("dataset has " + std::to_string(labels.size()) +
                       " labels for samples " + shape_string(samples.shape()));
    }
  }

  Tensor<T> gather(std::span<const std::size_t> idx) const {
    Shape shape = samples.shape();
    shape[0] = idx.size();
    Tensor<T> out(shape);
    const std::size_t stride = sample_size();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      std::copy_n(samples.ptr() + idx[i] * stride, stride, out.ptr() + i * stride);
    }
    return out;
  }

  std::vector<std::uint32_t> gather_labels(std::span<const std::size_t> idx) const {
    std::vector<std::uint32_t> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = labels[idx[i]];
    return out;
  }

  /// Subset in the given order.
  Dataset subset(std::span<const std::size_t> idx) const {
    return {gather(idx), gather_labels(idx)};
  }
};

// ---------------------------------------------------------------------------
// Optimizers.

template <typename T>
struct AdamState {
  Tensor<T> m, v;
  std::uint64_t t = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update.
template <typename T>
void adam_step(Tensor<T>& param, const Tensor<T>& grad, AdamState<T>& s) {
  require_same_shape(param, grad, "adam_step");
  if (s.m.shape() != param.shape()) {
    if (s.t != 0) throw ShapeError("adam_step: moment shape does not match parameter");
    s.m = Tensor<T>(param.shape());
    s.v = Tensor<T>(param.shape());
  }
  s.t += 1;
  const double c1 = 1.0 - std::pow(s.beta1, double(s.t));
  const double c2 = 1.0 - std::pow(s.beta2, double(s.t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    const double m = s.beta1 * double(s.m[i]) + (1.0 - s.beta1) * g;
    const double v = s.beta2 * double(s.v[i]) + (1.0 - s.beta2) * g * g;
    s.m[i] = T(m);
    s.v[i] = T(v);
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    param[i] = T(double(param[i]) - s.lr * m_hat / (std::sqrt(v_hat) + s.eps));
  }
}

template <typename T>
struct SgdMomentumState {
  Tensor<T> velocity;
  double lr = 1e-2;
  double momentum = 0.9;
};

/// v <- momentum * v - lr * g; param <- param + v.
template <typename T>
void sgd_momentum_step(Tensor<T>& param, const Tensor<T>& grad, SgdMomentumState<T>& s) {
  require_same_shape(param, grad, "sgd_momentum_step");
  if (s.velocity.shape() != param.shape()) {
    if (!s.velocity.empty()) {
      throw ShapeError("sgd_momentum_step: velocity shape does not match parameter");
    }
    s.velocity = Tensor<T>(param.shape());
  }
  for (std::size_t i = 0; i < param.size(); ++i) {
    s.velocity[i] = T(s.momentum * double(s.velocity[i]) - s.lr * double(grad[i]));
    param[i] += s.velocity[i];
  }
}

/// Clamps every binary-layer latent weight into [-1, 1].
template <typename T>
void clip_binary_latents(Model<T>& model) {
  for (auto& p : model.params()) {
    if (!p.binary_latent) continue;
    for (auto& w : p.value->data()) w = std::clamp(w, T{-1}, T{1});
  }
}

enum class OptimizerKind { kAdam, kSgdMomentum };

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 42;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  std::optional<double> lr;  // defaults: Adam 1e-3, SGD 1e-2
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double momentum = 0.9;
  bool clip_binary_weights = true;

  double learning_rate() const {
    return lr.value_or(optimizer == OptimizerKind::kAdam ? 1e-3 : 1e-2);
  }
};

/// Per-parameter optimizer state for one model, in `Model::params()` order.
template <typename T>
class Optimizer {
 public:
  explicit Optimizer(const TrainConfig& cfg) : cfg_(cfg) {}

  void step(Model<T>& model) {
    auto params = model.params();
    if (cfg_.optimizer == OptimizerKind::kAdam) {
      if (adam_.empty()) {
        adam_.resize(params.size());
        for (auto& s : adam_) {
          s.lr = cfg_.learning_rate();
          s.beta1 = cfg_.beta1;
          s.beta2 = cfg_.beta2;
          s.eps = cfg_.adam_eps;
        }
      }
      if (adam_.size() != params.size()) throw StateError("optimizer bound to another model");
      for (std::size_t i = 0; i < params.size(); ++i)
        adam_step(*params[i].value, *params[i].grad, adam_[i]);
    } else {
      if (sgd_.empty()) {
        sgd_.resize(params.size());
        for (auto& s : sgd_) {
          s.lr = cfg_.learning_rate();
          s.momentum = cfg_.momentum;
        }
      }
      if (sgd_.size() != params.size()) throw StateError("optimizer bound to another model");
      for (std::size_t i = 0; i < params.size(); ++i)
        sgd_momentum_step(*params[i].value, *params[i].grad, sgd_[i]);
    }
    if (cfg_.clip_binary_weights) clip_binary_latents(model);
  }

  const TrainConfig& config() const noexcept { return cfg_; }

 private:
  TrainConfig cfg_;
  std::vector<AdamState<T>> adam_;
  std::vector<SgdMomentumState<T>> sgd_;
};

// ---------------------------------------------------------------------------
// Metrics.

struct Metrics {
  double loss = 0;
  double top1 = 0;
  double top5 = 0;
};

/// True when `label` ranks within the k largest logits of `row`
/// (ties go to the lower class index).
template <typename T>
bool in_top_k(std::span<const T> row, std::uint32_t label, std::size_t k) {
  const T target = row[label];
  std::size_t ahead = 0;
  for (std::size_t c = 0; c < row.size(); ++c) {
    if (row[c] > target || (row[c] == target && c < label)) ++ahead;
  }
  return ahead < k;
}

template <typename T>
double topk_accuracy(const Tensor<T>& logits, std::span<const std::uint32_t> labels,
                     std::size_t k) {
  require_rank(logits, 2, "topk_accuracy");
  const std::size_t classes = logits.dim(1);
  if (k == 0 || k > classes) {
    throw ShapeError("topk_accuracy: k=" + std::to_string(k) + " outside [1, " +
                     std::to_string(classes) + "]");
  }
  if (labels.size() != logits.dim(0)) throw ShapeError("topk_accuracy: label count");
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) throw ShapeError("topk_accuracy: label out of range");
    hits += in_top_k(logits.data().subspan(i * classes, classes), labels[i], k);
  }
  return double(hits) / double(labels.size());
}

/// Running sums for metrics over several batches.
struct MetricsAccumulator {
  double loss_sum = 0;
  std::size_t top1_hits = 0;
  std::size_t top5_hits = 0;
  std::size_t count = 0;

  template <typename T>
  void add(const Tensor<T>& logits, std::span<const std::uint32_t> labels, double mean_loss) {
    const std::size_t classes = logits.dim(1);
    const std::size_t k5 = std::min<std::size_t>(5, classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto row = logits.data().subspan(i * classes, classes);
      top1_hits += in_top_k(row, labels[i], 1);
      top5_hits += in_top_k(row, labels[i], k5);
    }
    loss_sum += mean_loss * double(labels.size());
    count += labels.size();
  }

  Metrics finish() const {
    if (count == 0) return {};
    return {loss_sum / double(count), double(top1_hits) / double(count),
            double(top5_hits) / double(count)};
  }
};

// ---------------------------------------------------------------------------
// Training loop.

/// Optional per-batch input transform (random crops, a frozen extractor, ...)
/// and a callback run after every optimizer step.
template <typename T>
struct TrainHooks {
  std::function<Tensor<T>(Tensor<T>, Rng&)> transform;
  std::function<void(const Model<T>&)> after_step;
};

/// Fisher-Yates permutation of [0, n).
inline std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(idx[i - 1], idx[pick(rng)]);
  }
  return idx;
}

/// Batch boundaries over n samples; a trailing singleton batch is merged into
/// its predecessor so batch norm always sees at least two samples.
inline std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n,
                                                                     std::size_t batch) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch)
    out.emplace_back(start, std::min(n, start + batch));
  if (out.size() > 1 && out.back().second - out.back().first == 1) {
    out[out.size() - 2].second = n;
    out.pop_back();
  }
  return out;
}

/// One shuffled pass (epoch index `epoch`, zero-based). The shuffle RNG is
/// seeded with config.seed + epoch, so runs are reproducible.
template <typename T>
Metrics train_epoch(Model<T>& model, Optimizer<T>& opt, const Dataset<T>& data,
                    const TrainConfig& cfg, std::size_t epoch,
                    const TrainHooks<T>& hooks = {}) {
  if (data.empty()) throw ShapeError("train_epoch: empty dataset");
  data.validate();
  if (cfg.batch_size < 1) throw ShapeError("train_epoch: batch_size must be >= 1");
  Rng rng(cfg.seed + epoch);
  const std::vector<std::size_t> order = shuffled_indices(data.size(), rng);
  MetricsAccumulator acc;
  for (const auto& [begin, end] : batch_ranges(data.size(), cfg.batch_size)) {
    const std::span<const std::size_t> idx(order.data() + begin, end - begin);
    Tensor<T> x = data.gather(idx);
    const std::vector<std::uint32_t> y = data.gather_labels(idx);
    if (hooks.transform) x = hooks.transform(std::move(x), rng);
    model.zero_grad();
    const Tensor<T> logits = model.forward(std::move(x), Mode::kTrain);
    LossResult<T> lr = softmax_cross_entropy(logits, std::span<const std::uint32_t>(y));
    if (!std::isfinite(double(lr.loss))) {
      throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                         ", batch starting at " + std::to_string(begin));
    }
    acc.add(logits, std::span<const std::uint32_t>(y), double(lr.loss));
    model.backward(std::move(lr.grad_logits));
    opt.step(model);
    if (hooks.after_step) hooks.after_step(model);
  }
  model.clear_cache();
  return acc.finish();
}

/// Inference-mode metrics over the whole set. Parameters and running
/// statistics are untouched.
template <typename T>
Metrics evaluate(const Model<T>& model, const Dataset<T>& data,
                 const std::function<Tensor<T>(Tensor<T>)>& transform = {},
                 std::size_t batch = 256) {
  if (data.empty()) throw ShapeError("evaluate: empty dataset");
  data.validate();
  MetricsAccumulator acc;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch) {
    const std::size_t end = std::min(data.size(), start + batch);
    idx.resize(end - start);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
    Tensor<T> x = data.gather(idx);
    if (transform) x = transform(std::move(x));
    const Tensor<T> logits = model.infer(std::move(x));
    const std::vector<std::uint32_t> y = data.gather_labels(idx);
    const LossResult<T> lr = softmax_cross_entropy(logits, std::span<const std::uint32_t>(y));
    acc.add(logits, std::span<const std::uint32_t>(y), double(lr.loss));
  }
  return acc.finish();
}

/// One row of a training log.
struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  Metrics train;
  std::optional<Metrics> val;
};

/// Runs `cfg.epochs` epochs with a fresh optimizer, evaluating on `val` (if
/// given) after each one.
template <typename T>
std::vector<EpochRecord> fit(Model<T>& model, const Dataset<T>& train,
                             const std::type_identity_t<Dataset<T>>* val,
                             const TrainConfig& cfg, const TrainHooks<T>& hooks = {},
                             const std::function<Tensor<T>(Tensor<T>)>& eval_transform = {},
                             const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  Optimizer<T> opt(cfg);
  std::vector<EpochRecord> history;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    EpochRecord rec;
    rec.epoch = e + 1;
    rec.train = train_epoch(model, opt, train, cfg, e, hooks);
    if (val) rec.val = evaluate(model, *val, eval_transform);
    if (on_epoch) on_epoch(rec);
    history.push_back(rec);
  }
  return history;
}

/// Logits for every sample, in order.
template <typename T>
Tensor<T> predict(const Model<T>& model, const Tensor<T>& samples, std::size_t batch = 256) {
  const std::size_t n = samples.dim(0);
  const std::size_t stride = n ? samples.size() / n : 0;
  Tensor<T> out;
  std::vector<T> all;
  std::size_t classes = 0;
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t end = std::min(n, start + batch);
    Shape shape = samples.shape();
    shape[0] = end - start;
    Tensor<T> x(shape, std::vector<T>(samples.ptr() + start * stride,
                                      samples.ptr() + end * stride));
    const Tensor<T> logits = model.infer(std::move(x));
    classes = logits.dim(1);
    all.insert(all.end(), logits.data().begin(), logits.data().end());
  }
  return Tensor<T>({n, classes}, std::move(all));
}

}  // namespace bnn
