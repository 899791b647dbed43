#pragma once

// Procedural 28x28 glyph images in ten classes, used as a desk-scale
// stand-in for MNIST-style IDX data. Each class is a fixed set of strokes on
// a seven-segment-like layout plus class-specific diagonals; every sample
// gets its own affine jitter, stroke width, endpoint wobble, clutter and
// pixel noise.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "bnn/idx.hpp"
#include "bnn/training.hpp"

namespace bnn::synth {

inline constexpr std::size_t kSide = 28;
inline constexpr std::size_t kClasses = 10;

struct Stroke {
  float x0, y0, x1, y1;
};

struct GlyphOptions {
  double max_rotation_deg = 20.0;
  double min_scale = 0.75;
  double max_scale = 1.15;
  double max_shift_px = 4.0;
  double min_width_px = 1.0;
  double max_width_px = 2.2;
  double wobble = 0.1;        // endpoint jitter, unit square
  double clutter_prob = 0.9;  // chance of one random distractor stroke
  double noise_sigma = 0.25;
};

/// Strokes of class `label` in the unit square (y grows downward).
inline std::vector<Stroke> glyph_strokes(std::size_t label) {
  constexpr float l = 0.28f, r = 0.72f, t = 0.15f, m = 0.5f, b = 0.85f;
  const Stroke a{l, t, r, t}, bb{r, t, r, m}, c{r, m, r, b}, d{l, b, r, b}, e{l, m, l, b},
      f{l, t, l, m}, g{l, m, r, m};
  switch (label) {
    case 0: return {a, bb, c, d, e, f, {l, b, r, t}};
    case 1: return {bb, c, {0.55f, 0.22f, r, t}};
    case 2: return {a, bb, g, e, d};
    case 3: return {a, bb, g, c, d};
    case 4: return {f, g, bb, c};
    case 5: return {a, f, g, c, d};
    case 6: return {a, f, g, e, d, c};
    case 7: return {a, {r, t, 0.45f, b}};
    case 8: return {a, bb, c, d, e, f, g};
    case 9: return {a, bb, c, f, g};
    default: return {};
  }
}

namespace detail {

inline double segment_distance(double px, double py, const Stroke& s) {
  const double dx = s.x1 - s.x0, dy = s.y1 - s.y0;
  const double len2 = dx * dx + dy * dy;
  double u = len2 > 0 ? ((px - s.x0) * dx + (py - s.y0) * dy) / len2 : 0.0;
  u = std::clamp(u, 0.0, 1.0);
  const double cx = s.x0 + u * dx - px, cy = s.y0 + u * dy - py;
  return std::sqrt(cx * cx + cy * cy);
}

}  // namespace detail

/// Renders one sample as 28*28 bytes (row-major, 0 = background).
template <typename Rng>
std::array<std::uint8_t, kSide * kSide> render_glyph(std::size_t label, Rng& rng,
                                                     const GlyphOptions& opt = {}) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  std::vector<Stroke> strokes = glyph_strokes(label);
  for (auto& s : strokes) {
    s.x0 += float(between(-opt.wobble, opt.wobble));
    s.y0 += float(between(-opt.wobble, opt.wobble));
    s.x1 += float(between(-opt.wobble, opt.wobble));
    s.y1 += float(between(-opt.wobble, opt.wobble));
  }
  if (unit(rng) < opt.clutter_prob) {
    const double cx = unit(rng), cy = unit(rng), ang = between(0, 2 * M_PI), len = between(0.1, 0.3);
    strokes.push_back({float(cx), float(cy), float(cx + len * std::cos(ang)),
                       float(cy + len * std::sin(ang))});
  }

  const double rot = between(-opt.max_rotation_deg, opt.max_rotation_deg) * M_PI / 180.0;
  const double scale = between(opt.min_scale, opt.max_scale);
  const double shx = between(-opt.max_shift_px, opt.max_shift_px);
  const double shy = between(-opt.max_shift_px, opt.max_shift_px);
  const double width = between(opt.min_width_px, opt.max_width_px);
  const double cr = std::cos(rot), sr = std::sin(rot);
  const double half = double(kSide) / 2.0;

  // Map strokes to pixel space.
  for (auto& s : strokes) {
    auto map = [&](float& x, float& y) {
      const double ux = (x - 0.5) * double(kSide) * scale, uy = (y - 0.5) * double(kSide) * scale;
      x = float(cr * ux - sr * uy + half + shx);
      y = float(sr * ux + cr * uy + half + shy);
    };
    map(s.x0, s.y0);
    map(s.x1, s.y1);
  }

  std::normal_distribution<double> noise(0.0, opt.noise_sigma);
  std::array<std::uint8_t, kSide * kSide> img{};
  for (std::size_t y = 0; y < kSide; ++y) {
    for (std::size_t x = 0; x < kSide; ++x) {
      const double px = double(x) + 0.5, py = double(y) + 0.5;
      double dist = 1e9;
      for (const auto& s : strokes) dist = std::min(dist, detail::segment_distance(px, py, s));
      double v = std::clamp(width / 2.0 + 0.5 - dist, 0.0, 1.0);
      v = std::clamp(v + noise(rng), 0.0, 1.0);
      img[y * kSide + x] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  }
  return img;
}

/// Raw u8 images and labels, ready for IDX encoding.
struct GlyphSet {
  std::vector<std::uint8_t> pixels;  // n * 28 * 28
  std::vector<std::uint8_t> labels;

  std::size_t size() const noexcept { return labels.size(); }

  Bytes images_idx() const {
    const std::array<std::uint32_t, 3> dims{static_cast<std::uint32_t>(size()), kSide, kSide};
    return write_idx_u8(dims, pixels);
  }
  Bytes labels_idx() const {
    const std::array<std::uint32_t, 1> dims{static_cast<std::uint32_t>(size())};
    return write_idx_u8(dims, labels);
  }

  /// N x 1 x 28 x 28 in [0, 1].
  Dataset<float> to_dataset() const {
    Dataset<float> ds;
    ds.samples = Tensor<float>({size(), 1, kSide, kSide});
    for (std::size_t i = 0; i < pixels.size(); ++i) ds.samples[i] = float(pixels[i] / 255.0);
    ds.labels.assign(labels.begin(), labels.end());
    return ds;
  }
};

/// `n` samples with labels cycling through `classes` (all ten if empty),
/// deterministic in `seed`.
inline GlyphSet make_glyphs(std::size_t n, std::uint64_t seed,
                            std::vector<std::size_t> classes = {},
                            const GlyphOptions& opt = {}) {
  if (classes.empty())
    for (std::size_t c = 0; c < kClasses; ++c) classes.push_back(c);
  std::mt19937_64 rng(seed);
  GlyphSet set;
  set.pixels.reserve(n * kSide * kSide);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = classes[i % classes.size()];
    const auto img = render_glyph(label, rng, opt);
    set.pixels.insert(set.pixels.end(), img.begin(), img.end());
    set.labels.push_back(static_cast<std::uint8_t>(label));
  }
  return set;
}

}  // namespace bnn::synth
