#pragma once

#include <cctype>
#include <cstdint>
#include <span>
#include <string>

#include "bnn/error.hpp"
#include "bnn/io.hpp"
#include "bnn/tensor.hpp"

namespace bnn {

/// Binary netpbm image: P5 (gray) or P6 (RGB) with maxval 255.
struct PnmImage {
  std::size_t channels = 1;
  std::size_t width = 0;
  std::size_t height = 0;
  unsigned maxval = 255;
  Bytes pixels;  // interleaved, row-major

  /// C x H x W in [0, 1].
  template <typename T = float>
  Tensor<T> to_tensor() const {
    Tensor<T> out({channels, height, width});
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x)
        for (std::size_t c = 0; c < channels; ++c)
          out[(c * height + y) * width + x] =
              T(pixels[(y * width + x) * channels + c] / 255.0);
    return out;
  }
};

namespace detail {

class PnmHeaderReader {
 public:
  explicit PnmHeaderReader(std::span<const std::uint8_t> b) : b_(b) {}

  // Skips whitespace and '#' comments running to end of line.
  void skip_space() {
    while (pos_ < b_.size()) {
      if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n' && b_[pos_] != '\r') ++pos_;
      } else if (std::isspace(b_[pos_])) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  std::size_t number(const char* what) {
    skip_space();
    if (pos_ >= b_.size()) {
      throw FormatError(FormatErrc::kTruncated, std::string("PNM header ends before ") + what);
    }
    if (!std::isdigit(b_[pos_])) {
      throw FormatError(FormatErrc::kMalformed, std::string("PNM ") + what + " is not a number");
    }
    std::size_t v = 0;
    while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
      v = v * 10 + (b_[pos_++] - '0');
      if (v > (std::size_t{1} << 31)) {
        throw FormatError(FormatErrc::kMalformed, std::string("PNM ") + what + " too large");
      }
    }
    return v;
  }

  std::size_t& pos() { return pos_; }
  std::span<const std::uint8_t> bytes() const { return b_; }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline PnmImage parse_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2) throw FormatError(FormatErrc::kTruncated, "PNM shorter than its magic");
  if (bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw FormatError(FormatErrc::kUnsupportedType, "only binary P5/P6 netpbm is supported");
  }
  PnmImage img;
  img.channels = bytes[1] == '5' ? 1 : 3;
  detail::PnmHeaderReader r(bytes);
  r.pos() = 2;
  if (r.pos() < bytes.size() && !std::isspace(bytes[r.pos()]) && bytes[r.pos()] != '#') {
    throw FormatError(FormatErrc::kMalformed, "PNM magic not followed by whitespace");
  }
  img.width = r.number("width");
  img.height = r.number("height");
  const std::size_t maxval = r.number("maxval");
  if (img.width == 0 || img.height == 0) {
    throw FormatError(FormatErrc::kMalformed, "PNM with zero extent");
  }
  if (maxval != 255) {
    throw FormatError(FormatErrc::kUnsupportedType,
                      "PNM maxval " + std::to_string(maxval) + " (only 255 supported)");
  }
  img.maxval = 255;
  // Exactly one whitespace byte separates maxval from the raster.
  if (r.pos() >= bytes.size()) throw FormatError(FormatErrc::kTruncated, "PNM header has no raster");
  if (!std::isspace(bytes[r.pos()])) {
    throw FormatError(FormatErrc::kMalformed, "PNM maxval not followed by whitespace");
  }
  ++r.pos();
  const std::size_t need = img.width * img.height * img.channels;
  if (bytes.size() - r.pos() < need) {
    throw FormatError(FormatErrc::kTruncated, "PNM raster has " +
                                                  std::to_string(bytes.size() - r.pos()) +
                                                  " of " + std::to_string(need) + " bytes");
  }
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(r.pos()),
                    bytes.begin() + static_cast<std::ptrdiff_t>(r.pos() + need));
  return img;
}

inline Bytes write_pnm(const PnmImage& img) {
  if (img.channels != 1 && img.channels != 3) throw ShapeError("PNM needs 1 or 3 channels");
  if (img.pixels.size() != img.width * img.height * img.channels) {
    throw ShapeError("PNM pixel count does not match extents");
  }
  ByteWriter w;
  w.str(img.channels == 1 ? "P5\n" : "P6\n");
  w.str(std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n");
  w.raw(img.pixels);
  return std::move(w).bytes();
}

}  // namespace bnn
