#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bnn/error.hpp"
#include "bnn/layers.hpp"
#include "bnn/tensor.hpp"

namespace bnn {

/// On-disk kind tags; values are part of the .bnnx format.
enum class LayerKind : std::uint8_t {
  kBinaryDense = 1,
  kBinaryConv2d = 2,
  kDense = 3,
  kBatchNorm = 4,
  kSign = 5,
  kMaxPool2d = 6,
  kFlatten = 7,
};

inline const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::kBinaryDense: return "BinaryDense";
    case LayerKind::kBinaryConv2d: return "BinaryConv2d";
    case LayerKind::kDense: return "Dense";
    case LayerKind::kBatchNorm: return "BatchNorm";
    case LayerKind::kSign: return "Sign";
    case LayerKind::kMaxPool2d: return "MaxPool2d";
    case LayerKind::kFlatten: return "Flatten";
  }
  return "?";
}

// Alternative order must follow LayerKind numbering (index + 1 == tag).
template <typename T>
using Layer = std::variant<BinaryDenseLayer<T>, BinaryConv2dLayer<T>,
                           DenseLayer<T>, BatchNormLayer<T>, SignLayer<T>,
                           MaxPool2dLayer<T>, FlattenLayer<T>>;

template <typename T>
LayerKind kind_of(const Layer<T>& layer) {
  return static_cast<LayerKind>(layer.index() + 1);
}

template <typename T>
bool is_binary(const Layer<T>& layer) {
  const LayerKind k = kind_of(layer);
  return k == LayerKind::kBinaryDense || k == LayerKind::kBinaryConv2d;
}

/// Ordered stack of layers. Copyable value type; copying also copies caches.
template <typename T>
class Model {
 public:
  Model() = default;
  explicit Model(std::vector<Layer<T>> layers) : layers_(std::move(layers)) {}

  std::vector<Layer<T>>& layers() & noexcept { return layers_; }
  const std::vector<Layer<T>>& layers() const& noexcept { return layers_; }
  std::vector<Layer<T>> layers() && noexcept { return std::move(layers_); }
  std::size_t size() const noexcept { return layers_.size(); }
  bool empty() const noexcept { return layers_.empty(); }
  void add(Layer<T> layer) { layers_.push_back(std::move(layer)); }

  Tensor<T> forward(Tensor<T> x, Mode mode) {
    for (auto& layer : layers_)
      x = std::visit([&](auto& l) { return l.forward(x, mode); }, layer);
    return x;
  }

  /// Cache-free inference; safe to call concurrently.
  Tensor<T> infer(Tensor<T> x) const {
    for (const auto& layer : layers_)
      x = std::visit([&](const auto& l) { return l.infer(x); }, layer);
    return x;
  }

  /// Backpropagates through every layer; returns the gradient at the input.
  Tensor<T> backward(Tensor<T> grad) {
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
      grad = std::visit([&](auto& l) { return l.backward(grad); }, *it);
    return grad;
  }

  Shape output_shape(Shape in) const {
    for (const auto& layer : layers_)
      in = std::visit([&](const auto& l) { return l.output_shape(in); }, layer);
    return in;
  }

  std::vector<ParamRef<T>> params() {
    std::vector<ParamRef<T>> out;
    for (auto& layer : layers_)
      std::visit([&](auto& l) { l.collect_params(out); }, layer);
    return out;
  }

  void zero_grad() {
    for (auto& p : params()) p.grad->fill(T{0});
  }

  void clear_cache() {
    for (auto& layer : layers_) std::visit([](auto& l) { l.clear_cache(); }, layer);
  }

 private:
  std::vector<Layer<T>> layers_;
};

// ---------------------------------------------------------------------------
// Architecture strings: comma-separated tokens, e.g.
//   "bconv:16:3:1:1,bn,sign,maxpool:2,flatten,bdense:128,bn,sign,dense:10"
//
//   bconv:OUT:K[:STRIDE[:PAD]]   binary convolution, K x K kernel
//   bdense:OUT                   binary dense
//   dense:OUT                    float dense with bias
//   bn                           batch norm over the current channel axis
//   sign                         sign activation (STE in training)
//   maxpool:W[:STRIDE]           max pooling, stride defaults to W
//   flatten                      N x ... -> N x features

struct LayerSpec {
  LayerKind kind;
  std::vector<std::size_t> args;
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::size_t parse_count(std::string_view s, std::string_view token,
                               bool allow_zero = false) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || (v == 0 && !allow_zero)) {
    throw ShapeError("invalid number '" + std::string(s) + "' in arch token '" +
                     std::string(token) + "'");
  }
  return v;
}

}  // namespace detail

inline std::vector<LayerSpec> parse_arch(std::string_view arch) {
  std::vector<LayerSpec> specs;
  for (std::string_view token : detail::split(arch, ',')) {
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    const auto parts = detail::split(token, ':');
    const std::string_view name = parts[0];
    std::vector<std::size_t> args;
    for (std::size_t i = 1; i < parts.size(); ++i)
      args.push_back(detail::parse_count(parts[i], token, name == "bconv" && i == 4));
    auto arity = [&](std::size_t lo, std::size_t hi) {
      if (args.size() < lo || args.size() > hi) {
        throw ShapeError("wrong argument count in arch token '" +
                         std::string(token) + "'");
      }
    };
    LayerKind kind;
    if (name == "bconv") {
      arity(2, 4);
      kind = LayerKind::kBinaryConv2d;
    } else if (name == "bdense") {
      arity(1, 1);
      kind = LayerKind::kBinaryDense;
    } else if (name == "dense") {
      arity(1, 1);
      kind = LayerKind::kDense;
    } else if (name == "bn") {
      arity(0, 0);
      kind = LayerKind::kBatchNorm;
    } else if (name == "sign") {
      arity(0, 0);
      kind = LayerKind::kSign;
    } else if (name == "maxpool") {
      arity(1, 2);
      kind = LayerKind::kMaxPool2d;
    } else if (name == "flatten") {
      arity(0, 0);
      kind = LayerKind::kFlatten;
    } else {
      throw ShapeError("unknown arch token '" + std::string(token) + "'");
    }
    specs.push_back({kind, std::move(args)});
  }
  return specs;
}

/// Glorot-uniform bound; binary latents are additionally kept inside [-1, 1].
inline double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / double(fan_in + fan_out));
}

template <typename T, typename Rng>
void fill_uniform(Tensor<T>& t, double limit, Rng& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& v : t.data()) v = T(dist(rng));
}

template <typename T, typename Rng>
BinaryDenseLayer<T> make_binary_dense(std::size_t in, std::size_t out, Rng& rng) {
  BinaryDenseLayer<T> l(in, out);
  fill_uniform(l.latent, std::min(1.0, glorot_limit(in, out)), rng);
  return l;
}

template <typename T, typename Rng>
DenseLayer<T> make_dense(std::size_t in, std::size_t out, Rng& rng) {
  DenseLayer<T> l(in, out);
  fill_uniform(l.weight, glorot_limit(in, out), rng);
  return l;
}

template <typename T, typename Rng>
BinaryConv2dLayer<T> make_binary_conv(const ConvGeometry& g, Rng& rng) {
  BinaryConv2dLayer<T> l(g);
  const std::size_t area = g.kernel_h * g.kernel_w;
  fill_uniform(l.latent,
               std::min(1.0, glorot_limit(g.in_channels * area, g.out_channels * area)),
               rng);
  return l;
}

/// Instantiates `specs` for per-sample input shape `sample_shape`
/// (C x H x W for images, D for vectors).
template <typename T, typename Rng>
Model<T> build_model(const std::vector<LayerSpec>& specs, const Shape& sample_shape,
                     Rng& rng) {
  Shape shape = sample_shape;
  shape.insert(shape.begin(), 1);
  Model<T> model;
  for (const LayerSpec& s : specs) {
    Layer<T> layer;
    switch (s.kind) {
      case LayerKind::kBinaryConv2d: {
        if (shape.size() != 4) {
          throw ShapeError("bconv needs image input, current shape " + shape_string(shape));
        }
        ConvGeometry g;
        g.in_channels = shape[1];
        g.out_channels = s.args[0];
        g.kernel_h = g.kernel_w = s.args[1];
        g.stride = s.args.size() > 2 ? s.args[2] : 1;
        g.padding = s.args.size() > 3 ? s.args[3] : 0;
        layer = make_binary_conv<T>(g, rng);
        break;
      }
      case LayerKind::kBinaryDense:
      case LayerKind::kDense: {
        if (shape.size() != 2) {
          throw ShapeError("dense layer needs N x D input (add 'flatten'), current shape " +
                           shape_string(shape));
        }
        if (s.kind == LayerKind::kDense)
          layer = make_dense<T>(shape[1], s.args[0], rng);
        else
          layer = make_binary_dense<T>(shape[1], s.args[0], rng);
        break;
      }
      case LayerKind::kBatchNorm:
        if (shape.size() < 2) throw ShapeError("bn needs a channel axis");
        layer = BatchNormLayer<T>(shape[1]);
        break;
      case LayerKind::kSign:
        layer = SignLayer<T>{};
        break;
      case LayerKind::kMaxPool2d:
        layer = MaxPool2dLayer<T>(s.args[0], s.args.size() > 1 ? s.args[1] : s.args[0]);
        break;
      case LayerKind::kFlatten:
        layer = FlattenLayer<T>{};
        break;
    }
    shape = std::visit([&](const auto& l) { return l.output_shape(shape); }, layer);
    model.add(std::move(layer));
  }
  return model;
}

template <typename T, typename Rng>
Model<T> build_model(std::string_view arch, const Shape& sample_shape, Rng& rng) {
  return build_model<T>(parse_arch(arch), sample_shape, rng);
}

}  // namespace bnn
