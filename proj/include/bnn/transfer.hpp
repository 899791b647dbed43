#pragma once

#include <cstring>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bnn/bitmatrix.hpp"
#include "bnn/error.hpp"
#include "bnn/io.hpp"
#include "bnn/model.hpp"
#include "bnn/modelio.hpp"
#include "bnn/preprocess.hpp"
#include "bnn/training.hpp"

namespace bnn {

/// Frozen extractor prefix plus trainable head suffix of one model.
struct SplitModel {
  Model<float> extractor;  // inference only, never updated
  Model<float> head;
  std::size_t split_index = 0;
  Shape sample_shape;  // per-sample input shape of the extractor

  /// Per-sample shape of the extractor output (the head's input).
  Shape feature_shape() const {
    Shape s = sample_shape;
    s.insert(s.begin(), 1);
    s = extractor.output_shape(s);
    s.erase(s.begin());
    return s;
  }

  Model<float> combined() const {
    std::vector<Layer<float>> layers = extractor.layers();
    layers.insert(layers.end(), head.layers().begin(), head.layers().end());
    return Model<float>(std::move(layers));
  }

  Tensor<float> infer(const Tensor<float>& x) const { return head.infer(extractor.infer(x)); }
};

/// Layers [0, split_index) become the frozen extractor; the rest is the head.
/// The head must keep at least one layer.
inline SplitModel split_model(const Model<float>& model, std::size_t split_index,
                              Shape sample_shape) {
  if (model.empty() || split_index >= model.size()) {
    throw ShapeError("split index " + std::to_string(split_index) + " out of range for " +
                     std::to_string(model.size()) + " layers");
  }
  SplitModel s;
  s.split_index = split_index;
  s.sample_shape = std::move(sample_shape);
  const auto& layers = model.layers();
  s.extractor = Model<float>({layers.begin(), layers.begin() + static_cast<std::ptrdiff_t>(split_index)});
  s.head = Model<float>({layers.begin() + static_cast<std::ptrdiff_t>(split_index), layers.end()});
  s.extractor.clear_cache();
  return s;
}

/// The last layer alone forms the head.
inline std::size_t last_layer_split(const Model<float>& model) {
  if (model.empty()) throw ShapeError("cannot split an empty model");
  return model.size() - 1;
}

// ---------------------------------------------------------------------------

/// Extractor outputs for a dataset, tagged with the extractor's fingerprint.
struct FeatureCache {
  Tensor<float> features;  // N x feature shape
  std::vector<std::uint32_t> labels;
  std::string fingerprint;

  std::size_t size() const noexcept { return labels.size(); }
  Dataset<float> as_dataset() const { return {features, labels}; }
};

/// Throws kFingerprintMismatch unless `cache` came from `extractor`.
inline void check_provenance(const FeatureCache& cache, const Model<float>& extractor) {
  const std::string fp = fingerprint(extractor);
  if (cache.fingerprint != fp) {
    throw FormatError(FormatErrc::kFingerprintMismatch,
                      "feature cache was built by extractor " + cache.fingerprint +
                          ", current extractor is " + fp);
  }
}

/// Center-crop evaluation preprocessing for N x C x H x W batches.
inline std::function<Tensor<float>(Tensor<float>)> eval_transform(
    const std::optional<PreprocessConfig>& pre) {
  if (!pre) return {};
  PreprocessConfig cfg = *pre;
  cfg.train_mode = false;
  return [cfg](Tensor<float> x) { return preprocess_batch(x, cfg); };
}

/// Random-crop training preprocessing.
inline std::function<Tensor<float>(Tensor<float>, Rng&)> train_transform(
    const std::optional<PreprocessConfig>& pre) {
  if (!pre) return {};
  PreprocessConfig cfg = *pre;
  return [cfg](Tensor<float> x, Rng& rng) { return preprocess_batch(x, cfg, &rng); };
}

inline FeatureCache extract_features(const Model<float>& extractor, const Dataset<float>& data,
                                     const std::optional<PreprocessConfig>& pre = std::nullopt,
                                     std::size_t batch = 256) {
  data.validate();
  const auto transform = eval_transform(pre);
  FeatureCache cache;
  cache.labels = data.labels;
  cache.fingerprint = fingerprint(extractor);
  std::vector<float> all;
  Shape feature_shape;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch) {
    const std::size_t end = std::min(data.size(), start + batch);
    idx.resize(end - start);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
    Tensor<float> x = data.gather(idx);
    if (transform) x = transform(std::move(x));
    const Tensor<float> f = extractor.infer(std::move(x));
    feature_shape = f.shape();
    all.insert(all.end(), f.data().begin(), f.data().end());
  }
  if (feature_shape.empty()) throw ShapeError("extract_features: empty dataset");
  feature_shape[0] = data.size();
  cache.features = Tensor<float>(feature_shape, std::move(all));
  return cache;
}

// FeatureCache file (.bnnf), little-endian:
//   "BNNF" | u16 version | 64-byte hex fingerprint | u8 rank | u32 dims[rank]
//   | u8 enc (0 = f32, 1 = packed ±1 rows) | features | u32 labels[N]
inline constexpr char kFeatureMagic[4] = {'B', 'N', 'N', 'F'};
inline constexpr std::uint16_t kFeatureFormatVersion = 1;

inline Bytes save_feature_cache(const FeatureCache& cache) {
  if (cache.fingerprint.size() != 64) throw ShapeError("feature cache fingerprint must be 64 hex chars");
  ByteWriter w;
  w.str(std::string_view(kFeatureMagic, 4));
  w.u16(kFeatureFormatVersion);
  w.str(cache.fingerprint);
  const Shape& shape = cache.features.shape();
  w.u8(static_cast<std::uint8_t>(shape.size()));
  for (auto d : shape) w.u32(static_cast<std::uint32_t>(d));
  const std::size_t n = cache.size();
  const std::size_t dim = n ? cache.features.size() / n : 0;
  if (n && is_pm1(cache.features)) {
    w.u8(1);
    const BitMatrix packed = pack_signs(cache.features.reshaped({n, dim}));
    for (auto word : packed.words()) w.u64(word);
  } else {
    w.u8(0);
    for (float v : cache.features.data()) w.f32(v);
  }
  for (auto l : cache.labels) w.u32(l);
  return std::move(w).bytes();
}

inline FeatureCache load_feature_cache(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (std::memcmp(r.take(4).data(), kFeatureMagic, 4) != 0) {
    throw FormatError(FormatErrc::kBadMagic, "not a feature cache");
  }
  const std::uint16_t version = r.u16();
  if (version == 0 || version > kFeatureFormatVersion) {
    throw FormatError(FormatErrc::kVersionMismatch, "feature cache version " + std::to_string(version));
  }
  FeatureCache cache;
  const auto fp = r.take(64);
  cache.fingerprint.assign(fp.begin(), fp.end());
  const std::size_t rank = r.u8();
  if (rank < 1) throw FormatError(FormatErrc::kMalformed, "feature cache rank 0");
  r.require(rank, 4);
  Shape shape(rank);
  std::size_t total = 1;
  for (auto& d : shape) {
    d = r.u32();
    if (d == 0 || total > r.remaining() * 64 / d) {
      throw FormatError(FormatErrc::kTruncated, "feature cache shorter than its extents");
    }
    total *= d;
  }
  const std::size_t n = shape[0], dim = total / n;
  const std::uint8_t enc = r.u8();
  if (enc == 1) {
    const std::size_t words = n * BitMatrix::words_for(dim);
    r.require(words, 8);
    std::vector<std::uint64_t> data(words);
    for (auto& v : data) v = r.u64();
    try {
      cache.features = unpack<float>(BitMatrix::from_words(n, dim, std::move(data))).reshaped(shape);
    } catch (const ShapeError& e) {
      throw FormatError(FormatErrc::kMalformed, e.what());
    }
  } else if (enc == 0) {
    r.require(total, 4);
    std::vector<float> data(total);
    for (auto& v : data) v = r.f32();
    cache.features = Tensor<float>(shape, std::move(data));
  } else {
    throw FormatError(FormatErrc::kMalformed, "unknown feature encoding");
  }
  r.require(n, 4);
  cache.labels.resize(n);
  for (auto& l : cache.labels) l = r.u32();
  if (!r.at_end()) throw FormatError(FormatErrc::kMalformed, "trailing bytes after feature cache");
  return cache;
}

// ---------------------------------------------------------------------------

enum class HeadKind { kBinary, kFloat };

inline const char* head_kind_name(HeadKind k) { return k == HeadKind::kBinary ? "binary" : "float"; }

/// Replaces the head's final classifier with a fresh BinaryDense (binary) or
/// Dense (float) layer producing `classes` logits. Earlier head layers are
/// kept as they are.
inline void reset_head(SplitModel& split, HeadKind kind, std::size_t classes, Rng& rng) {
  auto& layers = split.head.layers();
  if (layers.empty()) throw ShapeError("head has no layers");
  const LayerKind last = kind_of(layers.back());
  if (last != LayerKind::kDense && last != LayerKind::kBinaryDense) {
    throw ShapeError(std::string("head must end in a dense layer, found ") + kind_name(last));
  }
  const std::size_t in = last == LayerKind::kDense
                             ? std::get<DenseLayer<float>>(layers.back()).in_features
                             : std::get<BinaryDenseLayer<float>>(layers.back()).in_features;
  if (kind == HeadKind::kBinary)
    layers.back() = make_binary_dense<float>(in, classes, rng);
  else
    layers.back() = make_dense<float>(in, classes, rng);
}

struct HeadResult {
  std::vector<EpochRecord> history;
  Metrics train;                // final inference-mode metrics on the training features
  std::optional<Metrics> val;
};

namespace detail {

inline void check_head_config(const SplitModel& split, HeadKind kind, const TrainConfig& cfg,
                              const Shape& feature_sample_shape) {
  if (kind == HeadKind::kBinary && cfg.optimizer != OptimizerKind::kAdam) {
    throw StateError("binary heads are trained with Adam");
  }
  Shape s = feature_sample_shape;
  s.insert(s.begin(), 2);
  split.head.output_shape(s);  // throws ShapeError on a dimension mismatch
}

}  // namespace detail

/// Re-initializes the classifier as `kind` and trains only the head on cached
/// features. The extractor is not touched.
inline HeadResult retrain_head(SplitModel& split, const FeatureCache& train, HeadKind kind,
                               std::size_t classes, const TrainConfig& cfg,
                               const FeatureCache* val = nullptr,
                               const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  check_provenance(train, split.extractor);
  if (val) check_provenance(*val, split.extractor);
  Rng init(cfg.seed);
  reset_head(split, kind, classes, init);
  const Dataset<float> tr = train.as_dataset();
  detail::check_head_config(split, kind, cfg, tr.sample_shape());
  std::optional<Dataset<float>> va;
  if (val) va = val->as_dataset();
  HeadResult res;
  res.history = fit(split.head, tr, va ? &*va : nullptr, cfg, {}, {}, on_epoch);
  res.train = evaluate(split.head, tr);
  if (va) res.val = evaluate(split.head, *va);
  return res;
}

/// Same as retrain_head but runs the frozen extractor on every batch instead
/// of reading a cache.
inline HeadResult retrain_head_online(SplitModel& split, const Dataset<float>& train,
                                      HeadKind kind, std::size_t classes, const TrainConfig& cfg,
                                      const Dataset<float>* val = nullptr) {
  Rng init(cfg.seed);
  reset_head(split, kind, classes, init);
  detail::check_head_config(split, kind, cfg, split.feature_shape());
  const Model<float>& extractor = split.extractor;
  TrainHooks<float> hooks;
  hooks.transform = [&extractor](Tensor<float> x, Rng&) { return extractor.infer(std::move(x)); };
  const std::function<Tensor<float>(Tensor<float>)> eval = [&extractor](Tensor<float> x) {
    return extractor.infer(std::move(x));
  };
  HeadResult res;
  res.history = fit(split.head, train, val, cfg, hooks, eval);
  res.train = evaluate(split.head, train, eval);
  if (val) res.val = evaluate(split.head, *val, eval);
  return res;
}

}  // namespace bnn
