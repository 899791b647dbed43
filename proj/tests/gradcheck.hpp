#pragma once

// Finite-difference harness for every backward pass. Each check builds a
// scalar loss <r, f(x)> with a random upstream r, evaluates f with a naive
// loop oracle, and compares central differences to the layer's backward.
// Binary layers are checked against their surrogate: the binarized weights
// are frozen and treated as continuous.

#include <string>
#include <vector>

#include "test_util.hpp"

namespace bnn::test {

struct GradCheck {
  std::string name;
  double rel_err;
};

inline std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// x W^T + b with plain loops.
inline Tensor<double> naive_affine(const Tensor<double>& x, const Tensor<double>& w,
                                   const Tensor<double>* b) {
  Tensor<double> y({x.dim(0), w.dim(0)});
  for (std::size_t i = 0; i < x.dim(0); ++i)
    for (std::size_t o = 0; o < w.dim(0); ++o) {
      double s = b ? (*b)[o] : 0.0;
      for (std::size_t k = 0; k < x.dim(1); ++k) s += x.at(i, k) * w.at(o, k);
      y.at(i, o) = s;
    }
  return y;
}

inline Tensor<double> naive_maxpool(const Tensor<double>& x, std::size_t win, std::size_t stride) {
  const std::size_t ho = (x.dim(2) - win) / stride + 1, wo = (x.dim(3) - win) / stride + 1;
  Tensor<double> y({x.dim(0), x.dim(1), ho, wo});
  for (std::size_t n = 0; n < x.dim(0); ++n)
    for (std::size_t c = 0; c < x.dim(1); ++c)
      for (std::size_t oy = 0; oy < ho; ++oy)
        for (std::size_t ox = 0; ox < wo; ++ox) {
          double m = -1e300;
          for (std::size_t ky = 0; ky < win; ++ky)
            for (std::size_t kx = 0; kx < win; ++kx)
              m = std::max(m, x.at(n, c, oy * stride + ky, ox * stride + kx));
          y.at(n, c, oy, ox) = m;
        }
  return y;
}

/// Mean cross-entropy via log-sum-exp, written independently of the library.
inline double naive_cross_entropy(const Tensor<double>& logits,
                                  const std::vector<std::uint32_t>& labels) {
  double total = 0;
  for (std::size_t i = 0; i < logits.dim(0); ++i) {
    double mx = -1e300;
    for (std::size_t c = 0; c < logits.dim(1); ++c) mx = std::max(mx, logits.at(i, c));
    double z = 0;
    for (std::size_t c = 0; c < logits.dim(1); ++c) z += std::exp(logits.at(i, c) - mx);
    total += mx + std::log(z) - logits.at(i, labels[i]);
  }
  return total / double(logits.dim(0));
}

inline double check_dense(Rng& rng) {
  const std::size_t n = pick(rng, 1, 4), in = pick(rng, 1, 5), out = pick(rng, 1, 5);
  DenseLayer<double> layer(in, out);
  layer.weight = random_tensor<double>({out, in}, rng);
  layer.bias = random_tensor<double>({out}, rng);
  const auto x = random_tensor<double>({n, in}, rng);
  const auto r = random_tensor<double>({n, out}, rng);
  layer.forward(x, Mode::kTrain);
  const auto gx = layer.backward(r);

  const auto fx = [&](const Tensor<double>& v) { return dot(r, naive_affine(v, layer.weight, &layer.bias)); };
  const auto fw = [&](const Tensor<double>& v) { return dot(r, naive_affine(x, v, &layer.bias)); };
  const auto fb = [&](const Tensor<double>& v) { return dot(r, naive_affine(x, layer.weight, &v)); };
  return std::max({rel_error(gx, numeric_grad(fx, x)),
                   rel_error(layer.grad_weight, numeric_grad(fw, layer.weight)),
                   rel_error(layer.grad_bias, numeric_grad(fb, layer.bias))});
}

inline double check_binary_dense(Rng& rng) {
  const std::size_t n = pick(rng, 1, 4), in = pick(rng, 1, 5), out = pick(rng, 1, 5);
  BinaryDenseLayer<double> layer(in, out);
  layer.latent = random_tensor<double>({out, in}, rng);
  const auto wb = sign_forward(layer.latent);
  const auto x = random_tensor<double>({n, in}, rng, -2.0, 2.0);
  const auto r = random_tensor<double>({n, out}, rng);
  layer.forward(x, Mode::kTrain);
  const auto gx = layer.backward(r);

  const auto fx = [&](const Tensor<double>& v) { return dot(r, naive_affine(v, wb, nullptr)); };
  const auto fw = [&](const Tensor<double>& v) { return dot(r, naive_affine(x, v, nullptr)); };
  return std::max(rel_error(gx, numeric_grad(fx, x)),
                  rel_error(layer.grad_latent, numeric_grad(fw, wb)));
}

inline double check_binary_conv(Rng& rng) {
  ConvGeometry g;
  g.in_channels = pick(rng, 1, 3);
  g.out_channels = pick(rng, 1, 3);
  g.kernel_h = g.kernel_w = pick(rng, 1, 3);
  g.padding = pick(rng, 0, 1);
  const std::size_t side = pick(rng, std::max<std::size_t>(3, g.kernel_h), 5);
  g.stride = (side + 2 * g.padding - g.kernel_h) % 2 == 0 ? pick(rng, 1, 2) : 1;
  BinaryConv2dLayer<double> layer(g);
  layer.latent = random_tensor<double>({g.out_channels, g.patch_size()}, rng);
  const auto wb = sign_forward(layer.latent);
  const auto x = random_tensor<double>({pick(rng, 1, 4), g.in_channels, side, side}, rng, -2.0, 2.0);
  const auto y = layer.forward(x, Mode::kTrain);
  const auto r = random_tensor<double>(y.shape(), rng);
  const auto gx = layer.backward(r);

  const auto fx = [&](const Tensor<double>& v) { return dot(r, naive_conv(v, wb, g)); };
  const auto fw = [&](const Tensor<double>& v) { return dot(r, naive_conv(x, v, g)); };
  return std::max(rel_error(gx, numeric_grad(fx, x)),
                  rel_error(layer.grad_latent, numeric_grad(fw, wb)));
}

inline double check_batchnorm(Rng& rng, bool spatial) {
  const std::size_t n = pick(rng, 2, 4), c = pick(rng, 1, 3);
  Shape shape{n, c};
  if (spatial) {
    shape.push_back(pick(rng, 1, 5));
    shape.push_back(pick(rng, 1, 5));
  }
  BatchNormLayer<double> layer(c);
  layer.gamma = random_tensor<double>({c}, rng, 0.5, 1.5);
  layer.beta = random_tensor<double>({c}, rng);
  const auto x = random_tensor<double>(shape, rng, -2.0, 2.0);
  const auto r = random_tensor<double>(shape, rng);

  // Oracle: batch statistics in plain loops, biased variance.
  const auto normalize = [&](const Tensor<double>& v, const Tensor<double>& gamma,
                             const Tensor<double>& beta) {
    const std::size_t inner = v.size() / (n * c);
    Tensor<double> y(v.shape());
    for (std::size_t ch = 0; ch < c; ++ch) {
      double mean = 0, var = 0;
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t i = 0; i < inner; ++i) mean += v[(b * c + ch) * inner + i];
      mean /= double(n * inner);
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t i = 0; i < inner; ++i) var += std::pow(v[(b * c + ch) * inner + i] - mean, 2);
      var /= double(n * inner);
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t i = 0; i < inner; ++i) {
          const std::size_t k = (b * c + ch) * inner + i;
          y[k] = gamma[ch] * (v[k] - mean) / std::sqrt(var + 1e-5) + beta[ch];
        }
    }
    return y;
  };
  layer.forward(x, Mode::kTrain);
  const auto gx = layer.backward(r);
  const auto fx = [&](const Tensor<double>& v) { return dot(r, normalize(v, layer.gamma, layer.beta)); };
  const auto fg = [&](const Tensor<double>& v) { return dot(r, normalize(x, v, layer.beta)); };
  const auto fb = [&](const Tensor<double>& v) { return dot(r, normalize(x, layer.gamma, v)); };
  return std::max({rel_error(gx, numeric_grad(fx, x)),
                   rel_error(layer.grad_gamma, numeric_grad(fg, layer.gamma)),
                   rel_error(layer.grad_beta, numeric_grad(fb, layer.beta))});
}

inline double check_maxpool(Rng& rng) {
  const std::size_t win = pick(rng, 1, 2), stride = pick(rng, 1, 2);
  const std::size_t hw = win + stride * pick(rng, 1, (5 - win) / stride);
  MaxPool2dLayer<double> layer(win, stride);
  const auto x = random_tensor<double>({pick(rng, 1, 4), pick(rng, 1, 3), hw, hw}, rng);
  const auto y = layer.forward(x, Mode::kTrain);
  const auto r = random_tensor<double>(y.shape(), rng);
  const auto gx = layer.backward(r);
  const auto fx = [&](const Tensor<double>& v) { return dot(r, naive_maxpool(v, win, stride)); };
  return rel_error(gx, numeric_grad(fx, x, 1e-7));
}

inline double check_softmax_ce(Rng& rng) {
  const std::size_t n = pick(rng, 1, 4), classes = pick(rng, 2, 6);
  const auto logits = random_tensor<double>({n, classes}, rng, -3.0, 3.0);
  std::vector<std::uint32_t> labels(n);
  for (auto& l : labels) l = std::uint32_t(pick(rng, 0, classes - 1));
  const auto res = softmax_cross_entropy(logits, std::span<const std::uint32_t>(labels));
  const auto f = [&](const Tensor<double>& v) { return naive_cross_entropy(v, labels); };
  return rel_error(res.grad_logits, numeric_grad(f, logits));
}

/// Worst relative error per backward kind over `trials` random shapes.
inline std::vector<GradCheck> run_gradchecks(Rng& rng, int trials) {
  std::vector<GradCheck> out = {{"dense", 0},       {"binary_dense", 0}, {"binary_conv", 0},
                                {"batchnorm_2d", 0}, {"batchnorm_4d", 0}, {"maxpool", 0},
                                {"softmax_ce", 0}};
  for (int t = 0; t < trials; ++t) {
    out[0].rel_err = std::max(out[0].rel_err, check_dense(rng));
    out[1].rel_err = std::max(out[1].rel_err, check_binary_dense(rng));
    out[2].rel_err = std::max(out[2].rel_err, check_binary_conv(rng));
    out[3].rel_err = std::max(out[3].rel_err, check_batchnorm(rng, false));
    out[4].rel_err = std::max(out[4].rel_err, check_batchnorm(rng, true));
    out[5].rel_err = std::max(out[5].rel_err, check_maxpool(rng));
    out[6].rel_err = std::max(out[6].rel_err, check_softmax_ce(rng));
  }
  return out;
}

}  // namespace bnn::test
