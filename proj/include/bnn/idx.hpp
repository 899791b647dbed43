#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

#include "bnn/error.hpp"
#include "bnn/io.hpp"
#include "bnn/tensor.hpp"

namespace bnn {

/// IDX element type codes (third magic byte).
enum class IdxType : std::uint8_t {
  kU8 = 0x08,
  kI8 = 0x09,
  kI16 = 0x0B,
  kI32 = 0x0C,
  kF32 = 0x0D,
  kF64 = 0x0E,
};

inline std::size_t idx_element_size(IdxType t) {
  switch (t) {
    case IdxType::kU8:
    case IdxType::kI8: return 1;
    case IdxType::kI16: return 2;
    case IdxType::kI32:
    case IdxType::kF32: return 4;
    case IdxType::kF64: return 8;
  }
  return 0;
}

/// Parsed IDX stream. Extents and payload values are big-endian on disk.
struct IdxDataset {
  IdxType type = IdxType::kU8;
  std::vector<std::uint32_t> dims;
  Bytes payload;

  std::size_t count() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }

  double value(std::size_t i) const {
    const std::uint8_t* p = payload.data() + i * idx_element_size(type);
    auto be = [p](std::size_t n) {
      std::uint64_t v = 0;
      for (std::size_t k = 0; k < n; ++k) v = (v << 8) | p[k];
      return v;
    };
    switch (type) {
      case IdxType::kU8: return p[0];
      case IdxType::kI8: return static_cast<std::int8_t>(p[0]);
      case IdxType::kI16: return static_cast<std::int16_t>(be(2));
      case IdxType::kI32: return static_cast<std::int32_t>(be(4));
      case IdxType::kF32: {
        const auto bits = static_cast<std::uint32_t>(be(4));
        float f;
        std::memcpy(&f, &bits, 4);
        return f;
      }
      case IdxType::kF64: {
        const std::uint64_t bits = be(8);
        double d;
        std::memcpy(&d, &bits, 8);
        return d;
      }
    }
    return 0;
  }

  /// Values as a tensor with the file's extents; u8 maps to [0, 1] via 1/255.
  template <typename T = float>
  Tensor<T> to_tensor() const {
    Shape shape(dims.begin(), dims.end());
    Tensor<T> out(shape);
    const double scale = type == IdxType::kU8 ? 1.0 / 255.0 : 1.0;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = T(value(i) * scale);
    return out;
  }

  /// Rank-1 integer payload as class indices.
  std::vector<std::uint32_t> to_labels() const {
    if (dims.size() != 1) throw ShapeError("label file must be rank 1");
    if (type == IdxType::kF32 || type == IdxType::kF64) {
      throw FormatError(FormatErrc::kUnsupportedType, "labels must be integers");
    }
    std::vector<std::uint32_t> out(dims[0]);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double v = value(i);
      if (v < 0) throw FormatError(FormatErrc::kMalformed, "negative label");
      out[i] = static_cast<std::uint32_t>(v);
    }
    return out;
  }
};

inline IdxDataset parse_idx(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const auto magic = r.take(4);
  if (magic[0] != 0 || magic[1] != 0) {
    throw FormatError(FormatErrc::kBadMagic, "IDX magic must start with two zero bytes");
  }
  IdxDataset ds;
  switch (magic[2]) {
    case 0x08: case 0x09: case 0x0B: case 0x0C: case 0x0D: case 0x0E:
      ds.type = static_cast<IdxType>(magic[2]);
      break;
    default:
      throw FormatError(FormatErrc::kUnsupportedType,
                        "IDX type code " + std::to_string(magic[2]));
  }
  const std::size_t rank = magic[3];
  if (rank == 0) throw FormatError(FormatErrc::kMalformed, "IDX with zero dimensions");
  r.require(rank, 4);
  std::size_t count = 1;
  const std::size_t elem = idx_element_size(ds.type);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::uint32_t d = r.u32_be();
    ds.dims.push_back(d);
    if (d != 0 && count > r.remaining() / d) {
      throw FormatError(FormatErrc::kTruncated, "IDX payload shorter than its extents");
    }
    count *= d;
  }
  r.require(count, elem);
  const auto payload = r.take(count * elem);
  ds.payload.assign(payload.begin(), payload.end());
  if (!r.at_end()) {
    throw FormatError(FormatErrc::kMalformed, "trailing bytes after IDX payload");
  }
  return ds;
}

/// Serializes a big-endian IDX stream; `payload` must already be big-endian.
inline Bytes write_idx(IdxType type, std::span<const std::uint32_t> dims,
                       std::span<const std::uint8_t> payload) {
  ByteWriter w;
  w.u8(0);
  w.u8(0);
  w.u8(static_cast<std::uint8_t>(type));
  w.u8(static_cast<std::uint8_t>(dims.size()));
  std::size_t count = 1;
  for (auto d : dims) {
    w.u8(std::uint8_t(d >> 24));
    w.u8(std::uint8_t(d >> 16));
    w.u8(std::uint8_t(d >> 8));
    w.u8(std::uint8_t(d));
    count *= d;
  }
  if (payload.size() != count * idx_element_size(type)) {
    throw ShapeError("write_idx: payload does not match extents");
  }
  w.raw(payload);
  return std::move(w).bytes();
}

inline Bytes write_idx_u8(std::span<const std::uint32_t> dims, std::span<const std::uint8_t> payload) {
  return write_idx(IdxType::kU8, dims, payload);
}

}  // namespace bnn
