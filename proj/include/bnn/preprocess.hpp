#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "bnn/error.hpp"
#include "bnn/tensor.hpp"

namespace bnn {

/// Bilinear resize of a C x H x W image with half-pixel centers. Equal sizes
/// reproduce the input exactly, and constant images stay constant.
template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& image, std::size_t out_h, std::size_t out_w) {
  require_rank(image, 3, "resize_bilinear");
  if (out_h == 0 || out_w == 0) throw ShapeError("resize_bilinear: zero output extent");
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (h == 0 || w == 0) throw ShapeError("resize_bilinear: empty image");

  struct Tap {
    std::size_t lo, hi;
    T frac;
  };
  auto taps = [](std::size_t in, std::size_t out) {
    std::vector<Tap> t(out);
    const double scale = double(in) / double(out);
    for (std::size_t o = 0; o < out; ++o) {
      double src = (double(o) + 0.5) * scale - 0.5;
      src = std::clamp(src, 0.0, double(in - 1));
      const auto lo = static_cast<std::size_t>(std::floor(src));
      const std::size_t hi = std::min(lo + 1, in - 1);
      t[o] = {lo, hi, T(src - double(lo))};
    }
    return t;
  };
  const std::vector<Tap> ty = taps(h, out_h), tx = taps(w, out_w);

  Tensor<T> out({c, out_h, out_w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    const T* plane = image.ptr() + ch * h * w;
    for (std::size_t y = 0; y < out_h; ++y) {
      const T* r0 = plane + ty[y].lo * w;
      const T* r1 = plane + ty[y].hi * w;
      for (std::size_t x = 0; x < out_w; ++x) {
        const Tap& t = tx[x];
        // a + f*(b - a) keeps constants exact.
        const T top = r0[t.lo] + t.frac * (r0[t.hi] - r0[t.lo]);
        const T bottom = r1[t.lo] + t.frac * (r1[t.hi] - r1[t.lo]);
        out[(ch * out_h + y) * out_w + x] = top + ty[y].frac * (bottom - top);
      }
    }
  }
  return out;
}

/// Scales so the longest side equals `target`; the other side becomes
/// round(aspect * target), at least 1.
template <typename T>
Tensor<T> resize_longest(const Tensor<T>& image, std::size_t target) {
  require_rank(image, 3, "resize_longest");
  const std::size_t h = image.dim(1), w = image.dim(2);
  if (h == 0 || w == 0) throw ShapeError("resize_longest: empty image");
  const std::size_t longest = std::max(h, w);
  auto scaled = [&](std::size_t side) {
    return std::max<std::size_t>(1, std::lround(double(side) * double(target) / double(longest)));
  };
  const std::size_t nh = h == longest ? target : scaled(h);
  const std::size_t nw = w == longest ? target : scaled(w);
  return resize_bilinear(image, nh, nw);
}

/// Scales so the shortest side equals `target`.
template <typename T>
Tensor<T> resize_shortest(const Tensor<T>& image, std::size_t target) {
  require_rank(image, 3, "resize_shortest");
  const std::size_t h = image.dim(1), w = image.dim(2);
  if (h == 0 || w == 0) throw ShapeError("resize_shortest: empty image");
  const std::size_t shortest = std::min(h, w);
  auto scaled = [&](std::size_t side) {
    return std::max<std::size_t>(1, std::lround(double(side) * double(target) / double(shortest)));
  };
  const std::size_t nh = h == shortest ? target : scaled(h);
  const std::size_t nw = w == shortest ? target : scaled(w);
  return resize_bilinear(image, nh, nw);
}

enum class CropMode { kCenter, kRandom };

struct CropOffset {
  std::size_t y = 0, x = 0;
  friend bool operator==(const CropOffset&, const CropOffset&) = default;
};

/// Top-left corner of a size x size crop. Center offsets round down.
template <typename Rng>
CropOffset crop_offset(std::size_t h, std::size_t w, std::size_t size, CropMode mode,
                       Rng* rng) {
  if (h < size || w < size) {
    throw ShapeError("crop of " + std::to_string(size) + " from " + std::to_string(h) +
                     "x" + std::to_string(w) + " image");
  }
  if (mode == CropMode::kCenter) return {(h - size) / 2, (w - size) / 2};
  if (!rng) throw StateError("random crop without an RNG");
  std::uniform_int_distribution<std::size_t> dy(0, h - size), dx(0, w - size);
  const std::size_t y = dy(*rng);
  return {y, dx(*rng)};
}

template <typename T>
Tensor<T> crop_at(const Tensor<T>& image, std::size_t size, CropOffset off) {
  const std::size_t c = image.dim(0), w = image.dim(2);
  Tensor<T> out({c, size, size});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < size; ++y)
      std::copy_n(image.ptr() + (ch * image.dim(1) + off.y + y) * w + off.x, size,
                  out.ptr() + (ch * size + y) * size);
  return out;
}

template <typename T, typename Rng = std::mt19937_64>
Tensor<T> crop(const Tensor<T>& image, std::size_t size, CropMode mode, Rng* rng = nullptr) {
  require_rank(image, 3, "crop");
  return crop_at(image, size, crop_offset(image.dim(1), image.dim(2), size, mode, rng));
}

enum class ResizeRule { kLongest, kShortest };

/// Resize-then-crop pipeline. With the longest-side rule the short side can
/// fall below the crop; the image is then upscaled just enough and a warning
/// is recorded.
struct PreprocessConfig {
  std::size_t resize_long = 256;
  std::size_t crop = 224;
  bool train_mode = false;  // random crops instead of center crops
  ResizeRule rule = ResizeRule::kLongest;

  void validate() const {
    if (crop == 0 || resize_long == 0) throw ShapeError("preprocess sizes must be positive");
    if (crop > resize_long) throw ShapeError("crop exceeds resize target");
  }
};

template <typename T, typename Rng = std::mt19937_64>
Tensor<T> preprocess(const Tensor<T>& image, const PreprocessConfig& cfg, Rng* rng = nullptr,
                     std::vector<std::string>* warnings = nullptr) {
  cfg.validate();
  Tensor<T> resized = cfg.rule == ResizeRule::kLongest ? resize_longest(image, cfg.resize_long)
                                                       : resize_shortest(image, cfg.resize_long);
  const std::size_t h = resized.dim(1), w = resized.dim(2);
  if (std::min(h, w) < cfg.crop) {
    const double f = double(cfg.crop) / double(std::min(h, w));
    const std::size_t nh = std::max<std::size_t>(cfg.crop, std::lround(double(h) * f));
    const std::size_t nw = std::max<std::size_t>(cfg.crop, std::lround(double(w) * f));
    if (warnings) {
      warnings->push_back("resized image " + std::to_string(h) + "x" + std::to_string(w) +
                          " is smaller than crop " + std::to_string(cfg.crop) +
                          "; upscaled to " + std::to_string(nh) + "x" + std::to_string(nw));
    }
    resized = resize_bilinear(image, nh, nw);
  }
  return crop(resized, cfg.crop, cfg.train_mode ? CropMode::kRandom : CropMode::kCenter, rng);
}

/// Applies `preprocess` to every image of an N x C x H x W batch.
template <typename T, typename Rng = std::mt19937_64>
Tensor<T> preprocess_batch(const Tensor<T>& batch, const PreprocessConfig& cfg,
                           Rng* rng = nullptr, std::vector<std::string>* warnings = nullptr) {
  require_rank(batch, 4, "preprocess_batch");
  const std::size_t n = batch.dim(0), c = batch.dim(1);
  const std::size_t stride = c * batch.dim(2) * batch.dim(3);
  std::vector<T> out;
  for (std::size_t i = 0; i < n; ++i) {
    Tensor<T> img({c, batch.dim(2), batch.dim(3)},
                  std::vector<T>(batch.ptr() + i * stride, batch.ptr() + (i + 1) * stride));
    const Tensor<T> p = preprocess(img, cfg, rng, warnings);
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  return Tensor<T>({n, c, cfg.crop, cfg.crop}, std::move(out));
}

}  // namespace bnn
