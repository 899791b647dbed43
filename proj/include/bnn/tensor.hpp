#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bnn/error.hpp"

namespace bnn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  return os.str();
}

/// Dense row-major tensor (last axis fastest). FloatTensor is Tensor<float>;
/// the double instantiation exists for gradient checking.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T{})
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

  Tensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_size(shape_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_string(shape_));
    }
  }

  /// Rank-2 literal, e.g. `Tensor<float>::matrix({{1, 2}, {3, 4}})`.
  static Tensor matrix(std::initializer_list<std::initializer_list<T>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<T> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw ShapeError("ragged matrix literal");
      data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() & noexcept { return data_; }
  std::span<const T> data() const& noexcept { return data_; }
  std::span<const T> data() && = delete;
  T* ptr() noexcept { return data_.data(); }
  const T* ptr() const noexcept { return data_.data(); }
  const std::vector<T>& values() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  T& at(std::size_t i, std::size_t j) {
    assert(shape_.size() == 2);
    return data_[i * shape_[1] + j];
  }
  const T& at(std::size_t i, std::size_t j) const {
    assert(shape_.size() == 2);
    return data_[i * shape_[1] + j];
  }
  T& at(std::size_t c, std::size_t h, std::size_t w) {
    assert(shape_.size() == 3);
    return data_[(c * shape_[1] + h) * shape_[2] + w];
  }
  const T& at(std::size_t c, std::size_t h, std::size_t w) const {
    assert(shape_.size() == 3);
    return data_[(c * shape_[1] + h) * shape_[2] + w];
  }
  T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    assert(shape_.size() == 4);
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  const T& at(std::size_t n, std::size_t c, std::size_t h,
              std::size_t w) const {
    assert(shape_.size() == 4);
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  Tensor reshaped(Shape shape) const& {
    Tensor out = *this;
    return std::move(out).reshaped(std::move(shape));
  }
  Tensor reshaped(Shape shape) && {
    if (shape_size(shape) != data_.size()) {
      throw ShapeError("cannot reshape " + shape_string(shape_) + " to " +
                       shape_string(shape));
    }
    shape_ = std::move(shape);
    return std::move(*this);
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  template <typename U>
  Tensor<U> cast() const {
    return Tensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

using FloatTensor = Tensor<float>;

template <typename T>
void require_rank(const Tensor<T>& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " +
                     std::to_string(rank) + ", got shape " +
                     shape_string(t.shape()));
  }
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b,
                        const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape " + shape_string(a.shape()) +
                     " vs " + shape_string(b.shape()));
  }
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& m) {
  require_rank(m, 2, "transpose");
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  Tensor<T> out({cols, rows});
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out.at(j, i) = m.at(i, j);
  return out;
}

namespace detail {

// C(m x n) += A(m x k) * B(k x n), all row-major. The inner loop runs over
// contiguous rows of B and C so it vectorizes without reassociation.
template <typename T>
void gemm_nn_accumulate(std::size_t m, std::size_t k, std::size_t n,
                        const T* a, const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    const T* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      if (av == T{0}) continue;
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace detail

/// Standard matrix product A(m x k) * B(k x n).
template <typename T>
Tensor<T> float_gemm(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a, 2, "float_gemm lhs");
  require_rank(b, 2, "float_gemm rhs");
  if (a.dim(1) != b.dim(0)) {
    throw ShapeError("float_gemm: inner dimensions " + shape_string(a.shape()) +
                     " * " + shape_string(b.shape()));
  }
  Tensor<T> c({a.dim(0), b.dim(1)});
  detail::gemm_nn_accumulate(a.dim(0), a.dim(1), b.dim(1), a.ptr(), b.ptr(),
                             c.ptr());
  return c;
}

/// A(m x k) * B(n x k)^T.
template <typename T>
Tensor<T> gemm_nt(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(b, 2, "gemm_nt rhs");
  return float_gemm(a, transpose(b));
}

/// A(k x m)^T * B(k x n).
template <typename T>
Tensor<T> gemm_tn(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a, 2, "gemm_tn lhs");
  require_rank(b, 2, "gemm_tn rhs");
  if (a.dim(0) != b.dim(0)) {
    throw ShapeError("gemm_tn: leading dimensions " + shape_string(a.shape()) +
                     " vs " + shape_string(b.shape()));
  }
  const std::size_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
  Tensor<T> c({m, n});
  for (std::size_t p = 0; p < k; ++p) {
    const T* arow = a.ptr() + p * m;
    const T* brow = b.ptr() + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const T av = arow[i];
      if (av == T{0}) continue;
      T* crow = c.ptr() + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

struct ConvGeometry {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t patch_size() const { return in_channels * kernel_h * kernel_w; }

  /// Output extent along one axis; throws unless the window tiles exactly.
  std::size_t output_extent(std::size_t in, std::size_t kernel) const {
    if (stride == 0) throw ShapeError("convolution stride must be >= 1");
    const std::size_t padded = in + 2 * padding;
    if (padded < kernel || (padded - kernel) % stride != 0) {
      throw ShapeError("convolution window " + std::to_string(kernel) +
                       " stride " + std::to_string(stride) + " pad " +
                       std::to_string(padding) +
                       " does not tile input extent " + std::to_string(in));
    }
    return (padded - kernel) / stride + 1;
  }

  Shape output_shape(const Shape& input) const {
    if (input.size() != 4 || input[1] != in_channels) {
      throw ShapeError("convolution expects Nx" + std::to_string(in_channels) +
                       "xHxW input, got " + shape_string(input));
    }
    return {input[0], out_channels, output_extent(input[2], kernel_h),
            output_extent(input[3], kernel_w)};
  }

  friend bool operator==(const ConvGeometry&, const ConvGeometry&) = default;
};

/// Unfolds N x C x H x W into (N*Ho*Wo) x (C*kh*kw). Columns run channel-major,
/// then kernel row, then kernel column. Padding cells are literal zeros.
template <typename T>
Tensor<T> im2col(const Tensor<T>& x, const ConvGeometry& g) {
  const Shape out_shape = g.output_shape(x.shape());
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t ho = out_shape[2], wo = out_shape[3];
  const std::size_t cols = g.patch_size();
  Tensor<T> out({n * ho * wo, cols});
  T* dst = out.ptr();
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          const T* plane = x.ptr() + (b * c + ch) * h * w;
          for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
            const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - pad;
            for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
              const auto ix =
                  static_cast<std::ptrdiff_t>(ox * g.stride + kx) - pad;
              const bool inside = iy >= 0 && ix >= 0 &&
                                  iy < static_cast<std::ptrdiff_t>(h) &&
                                  ix < static_cast<std::ptrdiff_t>(w);
              *dst++ = inside ? plane[iy * static_cast<std::ptrdiff_t>(w) + ix]
                              : T{0};
            }
          }
        }
      }
    }
  }
  return out;
}

/// Adjoint of im2col: scatter-adds patch rows back onto an input-shaped
/// tensor. Contributions that land in padding are dropped.
template <typename T>
Tensor<T> col2im(const Tensor<T>& cols, const ConvGeometry& g,
                 const Shape& input_shape) {
  const Shape out_shape = g.output_shape(input_shape);
  const std::size_t n = input_shape[0], c = input_shape[1],
                    h = input_shape[2], w = input_shape[3];
  const std::size_t ho = out_shape[2], wo = out_shape[3];
  if (cols.rank() != 2 || cols.dim(0) != n * ho * wo ||
      cols.dim(1) != g.patch_size()) {
    throw ShapeError("col2im: columns " + shape_string(cols.shape()) +
                     " do not match input " + shape_string(input_shape));
  }
  Tensor<T> out(input_shape);
  const T* src = cols.ptr();
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          T* plane = out.ptr() + (b * c + ch) * h * w;
          for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
            const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - pad;
            for (std::size_t kx = 0; kx < g.kernel_w; ++kx, ++src) {
              const auto ix =
                  static_cast<std::ptrdiff_t>(ox * g.stride + kx) - pad;
              if (iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(h) &&
                  ix < static_cast<std::ptrdiff_t>(w)) {
                plane[iy * static_cast<std::ptrdiff_t>(w) + ix] += *src;
              }
            }
          }
        }
      }
    }
  }
  return out;
}

/// (N*Ho*Wo) x C rows -> N x C x Ho x Wo.
template <typename T>
Tensor<T> rows_to_nchw(const Tensor<T>& rows, std::size_t n, std::size_t ho,
                       std::size_t wo) {
  const std::size_t c = rows.dim(1);
  Tensor<T> out({n, c, ho, wo});
  const std::size_t plane = ho * wo;
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t p = 0; p < plane; ++p)
      for (std::size_t ch = 0; ch < c; ++ch)
        out[(b * c + ch) * plane + p] = rows[(b * plane + p) * c + ch];
  return out;
}

/// N x C x Ho x Wo -> (N*Ho*Wo) x C rows.
template <typename T>
Tensor<T> nchw_to_rows(const Tensor<T>& x) {
  require_rank(x, 4, "nchw_to_rows");
  const std::size_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  Tensor<T> out({n * plane, c});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t p = 0; p < plane; ++p)
        out[(b * plane + p) * c + ch] = x[(b * c + ch) * plane + p];
  return out;
}

}  // namespace bnn
