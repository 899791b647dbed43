#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "bnn/bitmatrix.hpp"
#include "bnn/error.hpp"
#include "bnn/tensor.hpp"

namespace bnn {

enum class Mode { kTrain, kInfer };

/// A trainable tensor and its gradient accumulator. Latent weights of binary
/// layers are flagged so the optimizer can clip them to [-1, 1].
template <typename T>
struct ParamRef {
  Tensor<T>* value;
  Tensor<T>* grad;
  bool binary_latent;
};

// ---------------------------------------------------------------------------
// Sign activation and its straight-through estimator.

template <typename T>
Tensor<T> sign_forward(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] >= T{0} ? T{1} : T{-1};
  return out;
}

/// Hard-tanh gated identity: grad passes where |x| <= 1 (boundary included).
template <typename T>
Tensor<T> sign_backward_ste(const Tensor<T>& x_saved, const Tensor<T>& grad_out) {
  require_same_shape(x_saved, grad_out, "sign_backward_ste");
  Tensor<T> grad_in(grad_out.shape());
  for (std::size_t i = 0; i < grad_out.size(); ++i) {
    grad_in[i] = std::abs(x_saved[i]) <= T{1} ? grad_out[i] : T{0};
  }
  return grad_in;
}

template <typename T>
struct SignLayer {
  std::optional<Tensor<T>> saved_input;

  Shape output_shape(const Shape& in) const { return in; }
  Tensor<T> infer(const Tensor<T>& x) const { return sign_forward(x); }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    if (mode == Mode::kTrain) saved_input = x; else saved_input.reset();
    return sign_forward(x);
  }
  Tensor<T> backward(const Tensor<T>& grad_out) {
    if (!saved_input) throw StateError("Sign backward without training forward");
    return sign_backward_ste(*saved_input, grad_out);
  }
  void clear_cache() { saved_input.reset(); }
  void collect_params(std::vector<ParamRef<T>>&) {}
};

// ---------------------------------------------------------------------------
// Binary dense layer: latent real weights (out x in), binarized on every
// forward. The latent matrix is stored pre-transposed for binary_gemm.

template <typename T>
struct BinaryDenseLayer {
  std::size_t in_features = 0;
  std::size_t out_features = 0;
  Tensor<T> latent;       // out x in, kept in [-1, 1] by the optimizer
  Tensor<T> grad_latent;  // out x in
  std::optional<Tensor<T>> saved_input;

  BinaryDenseLayer() = default;
  BinaryDenseLayer(std::size_t in, std::size_t out)
      : in_features(in),
        out_features(out),
        latent({out, in}),
        grad_latent({out, in}) {}

  Tensor<T> binarized_weights() const { return sign_forward(latent); }
  BitMatrix packed_weights() const { return pack_signs(latent); }

  Shape output_shape(const Shape& in) const {
    if (in.size() != 2 || in[1] != in_features) {
      throw ShapeError("BinaryDense(" + std::to_string(in_features) +
                       ") got input " + shape_string(in));
    }
    return {in[0], out_features};
  }

  /// XNOR path for ±1 inputs, float path (binarized weights) otherwise.
  /// Both give identical values on ±1 inputs.
  Tensor<T> infer(const Tensor<T>& x) const {
    output_shape(x.shape());
    if (is_pm1(x)) return binary_gemm<T>(pack_signs(x), packed_weights());
    return gemm_nt(x, binarized_weights());
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    Tensor<T> y = infer(x);
    if (mode == Mode::kTrain) saved_input = x; else saved_input.reset();
    return y;
  }

  /// grad_in = grad_out * W_b; the latent weight receives dL/dW_b directly.
  Tensor<T> backward(const Tensor<T>& grad_out) {
    if (!saved_input) {
      throw StateError("BinaryDense backward without training forward");
    }
    if (grad_out.rank() != 2 || grad_out.dim(0) != saved_input->dim(0) ||
        grad_out.dim(1) != out_features) {
      throw ShapeError("BinaryDense backward: grad shape " +
                       shape_string(grad_out.shape()));
    }
    Tensor<T> gw = gemm_tn(grad_out, *saved_input);
    for (std::size_t i = 0; i < gw.size(); ++i) grad_latent[i] += gw[i];
    return float_gemm(grad_out, binarized_weights());
  }

  void clear_cache() { saved_input.reset(); }
  void collect_params(std::vector<ParamRef<T>>& out) {
    out.push_back({&latent, &grad_latent, true});
  }
};

// ---------------------------------------------------------------------------
// Binary convolution realized as im2col + GEMM. For ±1 inputs the padded
// patch matrix is binarized, so padding cells count as +1 (sign(0) = +1);
// real-valued inputs (first layer) keep literal zero padding.

template <typename T>
struct BinaryConv2dLayer {
  ConvGeometry geometry;
  Tensor<T> latent;       // out_channels x (in_channels * kh * kw)
  Tensor<T> grad_latent;
  std::optional<Tensor<T>> saved_patches;  // patches actually multiplied
  Shape saved_input_shape;

  BinaryConv2dLayer() = default;
  explicit BinaryConv2dLayer(const ConvGeometry& g)
      : geometry(g),
        latent({g.out_channels, g.patch_size()}),
        grad_latent({g.out_channels, g.patch_size()}) {}

  Tensor<T> binarized_weights() const { return sign_forward(latent); }
  BitMatrix packed_weights() const { return pack_signs(latent); }

  Shape output_shape(const Shape& in) const { return geometry.output_shape(in); }

  Tensor<T> infer(const Tensor<T>& x) const { return run(x, nullptr); }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    Tensor<T> patches;
    Tensor<T> y = run(x, mode == Mode::kTrain ? &patches : nullptr);
    if (mode == Mode::kTrain) {
      saved_patches = std::move(patches);
      saved_input_shape = x.shape();
    } else {
      clear_cache();
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) {
    if (!saved_patches) {
      throw StateError("BinaryConv2d backward without training forward");
    }
    const Shape expected = geometry.output_shape(saved_input_shape);
    if (grad_out.shape() != expected) {
      throw ShapeError("BinaryConv2d backward: grad shape " +
                       shape_string(grad_out.shape()) + ", expected " +
                       shape_string(expected));
    }
    const Tensor<T> grad_rows = nchw_to_rows(grad_out);
    Tensor<T> gw = gemm_tn(grad_rows, *saved_patches);
    for (std::size_t i = 0; i < gw.size(); ++i) grad_latent[i] += gw[i];
    return col2im(float_gemm(grad_rows, binarized_weights()), geometry,
                  saved_input_shape);
  }

  void clear_cache() {
    saved_patches.reset();
    saved_input_shape.clear();
  }
  void collect_params(std::vector<ParamRef<T>>& out) {
    out.push_back({&latent, &grad_latent, true});
  }

 private:
  Tensor<T> run(const Tensor<T>& x, Tensor<T>* patches_out) const {
    const Shape out_shape = geometry.output_shape(x.shape());
    Tensor<T> patches = im2col(x, geometry);
    Tensor<T> rows;
    if (is_pm1(x)) {
      const BitMatrix packed = pack_signs(patches);
      rows = binary_gemm<T>(packed, packed_weights());
      if (patches_out) *patches_out = unpack<T>(packed);
    } else {
      rows = gemm_nt(patches, binarized_weights());
      if (patches_out) *patches_out = std::move(patches);
    }
    return rows_to_nchw(rows, out_shape[0], out_shape[2], out_shape[3]);
  }
};

// ---------------------------------------------------------------------------
// Float dense layer (the software-side head of variant (b)).

template <typename T>
struct DenseLayer {
  std::size_t in_features = 0;
  std::size_t out_features = 0;
  Tensor<T> weight;  // out x in
  Tensor<T> bias;    // out
  Tensor<T> grad_weight;
  Tensor<T> grad_bias;
  std::optional<Tensor<T>> saved_input;

  DenseLayer() = default;
  DenseLayer(std::size_t in, std::size_t out)
      : in_features(in),
        out_features(out),
        weight({out, in}),
        bias({out}),
        grad_weight({out, in}),
        grad_bias({out}) {}

  Shape output_shape(const Shape& in) const {
    if (in.size() != 2 || in[1] != in_features) {
      throw ShapeError("Dense(" + std::to_string(in_features) + ") got input " +
                       shape_string(in));
    }
    return {in[0], out_features};
  }

  Tensor<T> infer(const Tensor<T>& x) const {
    output_shape(x.shape());
    Tensor<T> y = gemm_nt(x, weight);
    for (std::size_t i = 0; i < y.dim(0); ++i)
      for (std::size_t j = 0; j < out_features; ++j) y.at(i, j) += bias[j];
    return y;
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    Tensor<T> y = infer(x);
    if (mode == Mode::kTrain) saved_input = x; else saved_input.reset();
    return y;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) {
    if (!saved_input) throw StateError("Dense backward without training forward");
    if (grad_out.rank() != 2 || grad_out.dim(0) != saved_input->dim(0) ||
        grad_out.dim(1) != out_features) {
      throw ShapeError("Dense backward: grad shape " +
                       shape_string(grad_out.shape()));
    }
    Tensor<T> gw = gemm_tn(grad_out, *saved_input);
    for (std::size_t i = 0; i < gw.size(); ++i) grad_weight[i] += gw[i];
    for (std::size_t i = 0; i < grad_out.dim(0); ++i)
      for (std::size_t j = 0; j < out_features; ++j)
        grad_bias[j] += grad_out.at(i, j);
    return float_gemm(grad_out, weight);
  }

  void clear_cache() { saved_input.reset(); }
  void collect_params(std::vector<ParamRef<T>>& out) {
    out.push_back({&weight, &grad_weight, false});
    out.push_back({&bias, &grad_bias, false});
  }
};

// ---------------------------------------------------------------------------
// Power-of-two approximation and shift-based batch norm folding.

/// sign(x) * 2^round(log2|x|); ap2(0) = 0.
template <typename T>
T ap2(T x) {
  if (x == T{0}) return T{0};
  const auto e = static_cast<int>(std::lround(std::log2(std::abs(x))));
  return std::copysign(std::ldexp(T{1}, e), x);
}

/// Per-channel scale collapsed to ±2^exponent (or zero) plus an offset.
/// Applying it needs one ldexp per element and no multiplier.
template <typename T>
struct ShiftScale {
  std::int32_t exponent = 0;
  std::int8_t sign = 1;  // -1, 0 or +1
  T offset = T{0};

  T apply(T x) const {
    return sign == 0 ? offset : T(sign) * std::ldexp(x, exponent) + offset;
  }
  friend bool operator==(const ShiftScale&, const ShiftScale&) = default;
};

// ---------------------------------------------------------------------------
// Batch normalization over the channel axis (axis 1) of N x C or N x C x H x W.

template <typename T>
struct BatchNormLayer {
  static constexpr double kDefaultEps = 1e-5;
  static constexpr double kDefaultMomentum = 0.9;

  std::size_t channels = 0;
  T eps = T(kDefaultEps);
  T momentum = T(kDefaultMomentum);  // running <- momentum*running + (1-momentum)*batch
  Tensor<T> gamma, beta, running_mean, running_var;
  Tensor<T> grad_gamma, grad_beta;
  // Shift-mode inference replaces the exact affine map when enabled.
  std::vector<ShiftScale<T>> shift;
  bool shift_mode = false;

  struct Cache {
    Tensor<T> x_hat;
    std::vector<T> inv_std;
  };
  std::optional<Cache> saved;

  BatchNormLayer() = default;
  explicit BatchNormLayer(std::size_t c)
      : channels(c),
        gamma({c}, T{1}),
        beta({c}),
        running_mean({c}),
        running_var({c}, T{1}),
        grad_gamma({c}),
        grad_beta({c}) {}

  bool has_stats() const { return running_var.size() == channels && channels > 0; }

  Shape output_shape(const Shape& in) const {
    check_input(in);
    return in;
  }

  Tensor<T> infer(const Tensor<T>& x) const {
    check_input(x.shape());
    const std::size_t n = x.dim(0), inner = inner_size(x.shape());
    Tensor<T> y(x.shape());
    if (shift_mode) {
      if (shift.size() != channels) throw StateError("BatchNorm shift table missing");
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t c = 0; c < channels; ++c) {
          const std::size_t base = (b * channels + c) * inner;
          for (std::size_t i = 0; i < inner; ++i)
            y[base + i] = shift[c].apply(x[base + i]);
        }
      return y;
    }
    if (!has_stats()) throw StateError("BatchNorm has no running statistics");
    for (std::size_t c = 0; c < channels; ++c) {
      const T inv_std = T{1} / std::sqrt(running_var[c] + eps);
      for (std::size_t b = 0; b < n; ++b) {
        const std::size_t base = (b * channels + c) * inner;
        for (std::size_t i = 0; i < inner; ++i) {
          y[base + i] =
              gamma[c] * (x[base + i] - running_mean[c]) * inv_std + beta[c];
        }
      }
    }
    return y;
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    if (mode == Mode::kInfer) {
      saved.reset();
      return infer(x);
    }
    check_input(x.shape());
    if (shift_mode || !has_stats()) {
      throw StateError("BatchNorm in shift mode cannot be trained");
    }
    const std::size_t n = x.dim(0), inner = inner_size(x.shape());
    const std::size_t count = n * inner;
    if (n < 2) throw StateError("BatchNorm training needs a batch of at least 2");
    Cache cache{Tensor<T>(x.shape()), std::vector<T>(channels)};
    Tensor<T> y(x.shape());
    for (std::size_t c = 0; c < channels; ++c) {
      double sum = 0;
      for (std::size_t b = 0; b < n; ++b) {
        const std::size_t base = (b * channels + c) * inner;
        for (std::size_t i = 0; i < inner; ++i) sum += x[base + i];
      }
      const double mean = sum / double(count);
      double sq = 0;
      for (std::size_t b = 0; b < n; ++b) {
        const std::size_t base = (b * channels + c) * inner;
        for (std::size_t i = 0; i < inner; ++i) {
          const double d = double(x[base + i]) - mean;
          sq += d * d;
        }
      }
      const double var = sq / double(count);
      const T inv_std = T(1.0 / std::sqrt(var + double(eps)));
      cache.inv_std[c] = inv_std;
      for (std::size_t b = 0; b < n; ++b) {
        const std::size_t base = (b * channels + c) * inner;
        for (std::size_t i = 0; i < inner; ++i) {
          const T xh = (x[base + i] - T(mean)) * inv_std;
          cache.x_hat[base + i] = xh;
          y[base + i] = gamma[c] * xh + beta[c];
        }
      }
      const double unbiased = count > 1 ? var * double(count) / double(count - 1) : var;
      running_mean[c] = momentum * running_mean[c] + (T{1} - momentum) * T(mean);
      running_var[c] = momentum * running_var[c] + (T{1} - momentum) * T(unbiased);
    }
    saved = std::move(cache);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) {
    if (!saved) throw StateError("BatchNorm backward without training forward");
    require_same_shape(grad_out, saved->x_hat, "BatchNorm backward");
    const std::size_t n = grad_out.dim(0), inner = inner_size(grad_out.shape());
    const T count = T(n * inner);
    Tensor<T> grad_in(grad_out.shape());
    for (std::size_t c = 0; c < channels; ++c) {
      T sum_g = 0, sum_gx = 0;
      for (std::size_t b = 0; b < n; ++b) {
        const std::size_t base = (b * channels + c) * inner;
        for (std::size_t i = 0; i < inner; ++i) {
          sum_g += grad_out[base + i];
          sum_gx += grad_out[base + i] * saved->x_hat[base + i];
        }
      }
      grad_beta[c] += sum_g;
      grad_gamma[c] += sum_gx;
      const T k = gamma[c] * saved->inv_std[c] / count;
      for (std::size_t b = 0; b < n; ++b) {
        const std::size_t base = (b * channels + c) * inner;
        for (std::size_t i = 0; i < inner; ++i) {
          grad_in[base + i] = k * (count * grad_out[base + i] - sum_g -
                                   saved->x_hat[base + i] * sum_gx);
        }
      }
    }
    return grad_in;
  }

  void clear_cache() { saved.reset(); }
  void collect_params(std::vector<ParamRef<T>>& out) {
    if (shift_mode) return;
    out.push_back({&gamma, &grad_gamma, false});
    out.push_back({&beta, &grad_beta, false});
  }

 private:
  static std::size_t inner_size(const Shape& s) {
    return s.size() == 4 ? s[2] * s[3] : 1;
  }
  void check_input(const Shape& s) const {
    if ((s.size() != 2 && s.size() != 4) || s[1] != channels) {
      throw ShapeError("BatchNorm(" + std::to_string(channels) +
                       ") got input " + shape_string(s));
    }
  }
};

/// Replaces each channel's scale gamma/sqrt(var+eps) by ap2(scale) and sets
/// offset = beta - ap2(scale) * mean.
template <typename T>
std::vector<ShiftScale<T>> fold_bn_to_shift(const BatchNormLayer<T>& bn) {
  if (!bn.has_stats()) throw StateError("fold_bn_to_shift: no running statistics");
  std::vector<ShiftScale<T>> out(bn.channels);
  for (std::size_t c = 0; c < bn.channels; ++c) {
    const T var = bn.running_var[c];
    if (!(var > T{0})) {
      throw StateError("fold_bn_to_shift: non-positive variance in channel " +
                       std::to_string(c));
    }
    const T scale = bn.gamma[c] / std::sqrt(var + bn.eps);
    const T q = ap2(scale);
    ShiftScale<T> s;
    if (q == T{0}) {
      s.sign = 0;
    } else {
      s.sign = q > 0 ? 1 : -1;
      s.exponent = static_cast<std::int32_t>(std::lround(std::log2(std::abs(q))));
    }
    s.offset = bn.beta[c] - q * bn.running_mean[c];
    out[c] = s;
  }
  return out;
}

/// Switches a batch-norm layer to shift-mode inference.
template <typename T>
void enable_shift_mode(BatchNormLayer<T>& bn) {
  bn.shift = fold_bn_to_shift(bn);
  bn.shift_mode = true;
}

// ---------------------------------------------------------------------------
// Max pooling over square windows of N x C x H x W.

template <typename T>
struct MaxPool2dLayer {
  std::size_t window = 2;
  std::size_t stride = 2;
  std::vector<std::size_t> saved_argmax;  // flat input index per output cell
  Shape saved_input_shape;
  bool cached = false;

  MaxPool2dLayer() = default;
  MaxPool2dLayer(std::size_t win, std::size_t str) : window(win), stride(str) {}

  std::size_t extent(std::size_t in) const {
    if (window == 0 || stride == 0 || in < window || (in - window) % stride != 0) {
      throw ShapeError("MaxPool window " + std::to_string(window) + " stride " +
                       std::to_string(stride) + " does not tile extent " +
                       std::to_string(in));
    }
    return (in - window) / stride + 1;
  }

  Shape output_shape(const Shape& in) const {
    if (in.size() != 4) throw ShapeError("MaxPool expects NxCxHxW, got " + shape_string(in));
    return {in[0], in[1], extent(in[2]), extent(in[3])};
  }

  Tensor<T> infer(const Tensor<T>& x) const { return run(x, nullptr); }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    if (mode == Mode::kTrain) {
      std::vector<std::size_t> idx;
      Tensor<T> y = run(x, &idx);
      saved_argmax = std::move(idx);
      saved_input_shape = x.shape();
      cached = true;
      return y;
    }
    clear_cache();
    return run(x, nullptr);
  }

  /// Each output gradient goes to its window's argmax (lowest index on ties).
  Tensor<T> backward(const Tensor<T>& grad_out) {
    if (!cached) throw StateError("MaxPool backward without training forward");
    if (grad_out.size() != saved_argmax.size()) {
      throw ShapeError("MaxPool backward: grad shape " + shape_string(grad_out.shape()));
    }
    Tensor<T> grad_in(saved_input_shape);
    for (std::size_t i = 0; i < grad_out.size(); ++i)
      grad_in[saved_argmax[i]] += grad_out[i];
    return grad_in;
  }

  void clear_cache() {
    saved_argmax.clear();
    saved_input_shape.clear();
    cached = false;
  }
  void collect_params(std::vector<ParamRef<T>>&) {}

 private:
  Tensor<T> run(const Tensor<T>& x, std::vector<std::size_t>* argmax) const {
    const Shape out_shape = output_shape(x.shape());
    const std::size_t planes = x.dim(0) * x.dim(1);
    const std::size_t h = x.dim(2), w = x.dim(3);
    const std::size_t ho = out_shape[2], wo = out_shape[3];
    Tensor<T> y(out_shape);
    if (argmax) argmax->resize(y.size());
    std::size_t o = 0;
    for (std::size_t p = 0; p < planes; ++p) {
      const std::size_t base = p * h * w;
      for (std::size_t oy = 0; oy < ho; ++oy) {
        for (std::size_t ox = 0; ox < wo; ++ox, ++o) {
          std::size_t best = base + oy * stride * w + ox * stride;
          for (std::size_t ky = 0; ky < window; ++ky) {
            for (std::size_t kx = 0; kx < window; ++kx) {
              const std::size_t idx = base + (oy * stride + ky) * w + ox * stride + kx;
              if (x[idx] > x[best]) best = idx;
            }
          }
          y[o] = x[best];
          if (argmax) (*argmax)[o] = best;
        }
      }
    }
    return y;
  }
};

// ---------------------------------------------------------------------------

template <typename T>
struct FlattenLayer {
  Shape saved_input_shape;

  Shape output_shape(const Shape& in) const {
    if (in.empty()) throw ShapeError("Flatten of a rank-0 tensor");
    std::size_t rest = 1;
    for (std::size_t i = 1; i < in.size(); ++i) rest *= in[i];
    return {in[0], rest};
  }
  Tensor<T> infer(const Tensor<T>& x) const { return x.reshaped(output_shape(x.shape())); }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    if (mode == Mode::kTrain) saved_input_shape = x.shape(); else saved_input_shape.clear();
    return infer(x);
  }
  Tensor<T> backward(const Tensor<T>& grad_out) {
    if (saved_input_shape.empty()) throw StateError("Flatten backward without training forward");
    return grad_out.reshaped(saved_input_shape);
  }
  void clear_cache() { saved_input_shape.clear(); }
  void collect_params(std::vector<ParamRef<T>>&) {}
};

// ---------------------------------------------------------------------------

template <typename T>
struct LossResult {
  T loss;
  Tensor<T> grad_logits;
};

/// Mean softmax cross-entropy over the batch; grad = (softmax - onehot) / batch.
template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits,
                                    std::span<const std::uint32_t> labels) {
  require_rank(logits, 2, "softmax_cross_entropy");
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  if (labels.size() != batch) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                     " labels for batch of " + std::to_string(batch));
  }
  LossResult<T> r{T{0}, Tensor<T>(logits.shape())};
  double total = 0;
  for (std::size_t i = 0; i < batch; ++i) {
    if (labels[i] >= classes) {
      throw ShapeError("label " + std::to_string(labels[i]) + " out of range for " +
                       std::to_string(classes) + " classes");
    }
    const T* row = logits.ptr() + i * classes;
    const T mx = *std::max_element(row, row + classes);
    double z = 0;
    for (std::size_t c = 0; c < classes; ++c) z += std::exp(double(row[c] - mx));
    const double log_z = std::log(z);
    total += log_z - double(row[labels[i]] - mx);
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = std::exp(double(row[c] - mx) - log_z);
      r.grad_logits.at(i, c) =
          T((p - (c == labels[i] ? 1.0 : 0.0)) / double(batch));
    }
  }
  r.loss = T(total / double(batch));
  return r;
}

}  // namespace bnn
