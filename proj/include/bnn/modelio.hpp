#pragma once

// .bnnx model container. All integers little-endian.
//
//   "BNNX" | u16 format_version | u32 layer_count | records...
//
// Each record starts with a u8 kind tag (LayerKind) followed by:
//   BinaryDense   u32 in, u32 out, u8 enc, weights (out rows x in)
//   BinaryConv2d  u32 cin, cout, kh, kw, stride, pad, u8 enc,
//                 weights (cout rows x cin*kh*kw)
//   Dense         u32 in, u32 out, f32 weight[out*in], f32 bias[out]
//   BatchNorm     u32 channels, f32 eps, f32 momentum, u8 enc,
//                   enc 0: f32 gamma[c], beta[c], mean[c], var[c]
//                   enc 1: per channel i8 sign, i32 exponent, f32 offset
//   Sign, Flatten (no payload)
//   MaxPool2d     u32 window, u32 stride
//
// Binary weight encodings: 0 = latent f32 row-major, 1 = packed BitMatrix
// words (u64, LSB-first, zero tails), one row per output unit.

#include <cstdint>
#include <span>
#include <string>

#include "bnn/bitmatrix.hpp"
#include "bnn/error.hpp"
#include "bnn/io.hpp"
#include "bnn/model.hpp"

namespace bnn {

inline constexpr char kModelMagic[4] = {'B', 'N', 'N', 'X'};
inline constexpr std::uint16_t kModelFormatVersion = 1;
inline constexpr std::size_t kModelHeaderSize = 4 + 2 + 4;

enum class WeightEncoding : std::uint8_t { kLatent = 0, kPacked = 1 };

namespace detail {

inline void write_floats(ByteWriter& w, const Tensor<float>& t) {
  for (const float v : t.data()) w.f32(v);
}

inline void write_binary_weights(ByteWriter& w, const Tensor<float>& latent, WeightEncoding enc) {
  w.u8(static_cast<std::uint8_t>(enc));
  if (enc == WeightEncoding::kLatent) {
    write_floats(w, latent);
  } else {
    const BitMatrix packed = pack_signs(latent);
    for (const std::uint64_t word : packed.words()) w.u64(word);
  }
}

inline std::size_t checked_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > (std::size_t{1} << 40) / a) {
    throw FormatError(FormatErrc::kMalformed, "layer extents overflow");
  }
  return a * b;
}

inline std::uint32_t positive(ByteReader& r, const char* what) {
  const std::uint32_t v = r.u32();
  if (v == 0) throw FormatError(FormatErrc::kMalformed, std::string(what) + " is zero");
  return v;
}

inline Tensor<float> read_floats(ByteReader& r, Shape shape) {
  const std::size_t n = shape_size(shape);
  r.require(n, 4);
  std::vector<float> data(n);
  for (auto& v : data) v = r.f32();
  return Tensor<float>(std::move(shape), std::move(data));
}

inline Tensor<float> read_binary_weights(ByteReader& r, std::size_t rows, std::size_t cols) {
  const std::uint8_t enc = r.u8();
  if (enc == static_cast<std::uint8_t>(WeightEncoding::kLatent)) return read_floats(r, {rows, cols});
  if (enc != static_cast<std::uint8_t>(WeightEncoding::kPacked)) {
    throw FormatError(FormatErrc::kMalformed, "unknown weight encoding " + std::to_string(enc));
  }
  const std::size_t words = checked_mul(rows, BitMatrix::words_for(cols));
  r.require(words, 8);
  std::vector<std::uint64_t> data(words);
  for (auto& v : data) v = r.u64();
  try {
    return unpack<float>(BitMatrix::from_words(rows, cols, std::move(data)));
  } catch (const ShapeError& e) {
    throw FormatError(FormatErrc::kMalformed, e.what());
  }
}

}  // namespace detail

/// Serializes `model`. kLatent keeps the real master weights (resumable
/// training); kPacked stores only binarized weights (inference blob).
/// Batch-norm layers in shift mode are written as their shift tables.
inline Bytes save_model(const Model<float>& model, WeightEncoding enc = WeightEncoding::kLatent) {
  ByteWriter w;
  w.raw(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(kModelMagic), 4));
  w.u16(kModelFormatVersion);
  w.u32(static_cast<std::uint32_t>(model.size()));
  for (const auto& layer : model.layers()) {
    w.u8(static_cast<std::uint8_t>(kind_of(layer)));
    std::visit(
        [&](const auto& l) {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, BinaryDenseLayer<float>>) {
            w.u32(static_cast<std::uint32_t>(l.in_features));
            w.u32(static_cast<std::uint32_t>(l.out_features));
            detail::write_binary_weights(w, l.latent, enc);
          } else if constexpr (std::is_same_v<L, BinaryConv2dLayer<float>>) {
            const ConvGeometry& g = l.geometry;
            for (std::size_t v : {g.in_channels, g.out_channels, g.kernel_h, g.kernel_w,
                                  g.stride, g.padding})
              w.u32(static_cast<std::uint32_t>(v));
            detail::write_binary_weights(w, l.latent, enc);
          } else if constexpr (std::is_same_v<L, DenseLayer<float>>) {
            w.u32(static_cast<std::uint32_t>(l.in_features));
            w.u32(static_cast<std::uint32_t>(l.out_features));
            detail::write_floats(w, l.weight);
            detail::write_floats(w, l.bias);
          } else if constexpr (std::is_same_v<L, BatchNormLayer<float>>) {
            w.u32(static_cast<std::uint32_t>(l.channels));
            w.f32(l.eps);
            w.f32(l.momentum);
            if (l.shift_mode) {
              w.u8(1);
              for (const auto& s : l.shift) {
                w.i8(s.sign);
                w.i32(s.exponent);
                w.f32(s.offset);
              }
            } else {
              w.u8(0);
              detail::write_floats(w, l.gamma);
              detail::write_floats(w, l.beta);
              detail::write_floats(w, l.running_mean);
              detail::write_floats(w, l.running_var);
            }
          } else if constexpr (std::is_same_v<L, MaxPool2dLayer<float>>) {
            w.u32(static_cast<std::uint32_t>(l.window));
            w.u32(static_cast<std::uint32_t>(l.stride));
          }
        },
        layer);
  }
  return std::move(w).bytes();
}

inline Model<float> load_model(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const auto magic = r.take(4);
  if (std::memcmp(magic.data(), kModelMagic, 4) != 0) {
    throw FormatError(FormatErrc::kBadMagic, "not a .bnnx model");
  }
  const std::uint16_t version = r.u16();
  if (version == 0 || version > kModelFormatVersion) {
    throw FormatError(FormatErrc::kVersionMismatch,
                      "format version " + std::to_string(version) + ", reader supports " +
                          std::to_string(kModelFormatVersion));
  }
  const std::uint32_t count = r.u32();
  r.require(count);  // every record holds at least its tag byte
  Model<float> model;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint8_t tag = r.u8();
    switch (static_cast<LayerKind>(tag)) {
      case LayerKind::kBinaryDense: {
        const std::uint32_t in = detail::positive(r, "BinaryDense in");
        const std::uint32_t out = detail::positive(r, "BinaryDense out");
        detail::checked_mul(in, out);
        Tensor<float> weights = detail::read_binary_weights(r, out, in);
        BinaryDenseLayer<float> l(in, out);
        l.latent = std::move(weights);
        model.add(std::move(l));
        break;
      }
      case LayerKind::kBinaryConv2d: {
        ConvGeometry g;
        g.in_channels = detail::positive(r, "conv in_channels");
        g.out_channels = detail::positive(r, "conv out_channels");
        g.kernel_h = detail::positive(r, "conv kernel_h");
        g.kernel_w = detail::positive(r, "conv kernel_w");
        g.stride = detail::positive(r, "conv stride");
        g.padding = r.u32();
        detail::checked_mul(detail::checked_mul(detail::checked_mul(g.in_channels, g.kernel_h),
                                                g.kernel_w),
                            g.out_channels);
        Tensor<float> weights = detail::read_binary_weights(r, g.out_channels, g.patch_size());
        BinaryConv2dLayer<float> l(g);
        l.latent = std::move(weights);
        model.add(std::move(l));
        break;
      }
      case LayerKind::kDense: {
        const std::uint32_t in = detail::positive(r, "Dense in");
        const std::uint32_t out = detail::positive(r, "Dense out");
        r.require(detail::checked_mul(in, out), 4);
        DenseLayer<float> l(in, out);
        l.weight = detail::read_floats(r, {out, in});
        l.bias = detail::read_floats(r, {out});
        model.add(std::move(l));
        break;
      }
      case LayerKind::kBatchNorm: {
        const std::uint32_t c = detail::positive(r, "BatchNorm channels");
        r.require(c, 4);
        BatchNormLayer<float> l(c);
        l.eps = r.f32();
        l.momentum = r.f32();
        const std::uint8_t enc = r.u8();
        if (enc == 0) {
          l.gamma = detail::read_floats(r, {c});
          l.beta = detail::read_floats(r, {c});
          l.running_mean = detail::read_floats(r, {c});
          l.running_var = detail::read_floats(r, {c});
        } else if (enc == 1) {
          r.require(c, 9);
          l.shift.resize(c);
          for (auto& s : l.shift) {
            s.sign = r.i8();
            if (s.sign < -1 || s.sign > 1) {
              throw FormatError(FormatErrc::kMalformed, "shift sign out of range");
            }
            s.exponent = r.i32();
            if (s.exponent < -1000 || s.exponent > 1000) {
              throw FormatError(FormatErrc::kMalformed, "shift exponent out of range");
            }
            s.offset = r.f32();
          }
          l.shift_mode = true;
          l.gamma = l.beta = l.running_mean = l.running_var = Tensor<float>();
        } else {
          throw FormatError(FormatErrc::kMalformed, "unknown BatchNorm encoding");
        }
        model.add(std::move(l));
        break;
      }
      case LayerKind::kSign:
        model.add(SignLayer<float>{});
        break;
      case LayerKind::kMaxPool2d: {
        const std::uint32_t window = detail::positive(r, "MaxPool window");
        const std::uint32_t stride = detail::positive(r, "MaxPool stride");
        model.add(MaxPool2dLayer<float>(window, stride));
        break;
      }
      case LayerKind::kFlatten:
        model.add(FlattenLayer<float>{});
        break;
      default:
        throw FormatError(FormatErrc::kUnknownKind, "layer kind tag " + std::to_string(tag));
    }
  }
  if (!r.at_end()) throw FormatError(FormatErrc::kMalformed, "trailing bytes after last layer");
  return model;
}

/// Inference-only encoding of an extractor: packed binary weights, batch
/// norm as stored (stats, or shift tables when in shift mode).
inline Bytes encode_extractor(const Model<float>& extractor) {
  return save_model(extractor, WeightEncoding::kPacked);
}

/// SHA-256 of the extractor's inference encoding.
inline std::string fingerprint(const Model<float>& extractor) {
  return sha256_hex(encode_extractor(extractor));
}

}  // namespace bnn
