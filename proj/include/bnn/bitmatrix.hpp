#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bnn/error.hpp"
#include "bnn/tensor.hpp"

namespace bnn {

/// Row-major matrix of ±1 values, one bit per element. Element j of a row
/// lives at bit (j % 64) of word j / 64, LSB first; 1 encodes +1 and 0
/// encodes -1. Bits past `cols()` in the last word of each row are zero.
class BitMatrix {
 public:
  static constexpr std::size_t kWordBits = 64;

  BitMatrix() = default;

  /// All elements -1.
  BitMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows),
        cols_(cols),
        words_per_row_(words_for(cols)),
        words_(rows * words_per_row_, 0) {}

  /// Adopts packed words; rejects dirty tail bits.
  static BitMatrix from_words(std::size_t rows, std::size_t cols,
                              std::vector<std::uint64_t> words) {
    BitMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.words_per_row_ = words_for(cols);
    if (words.size() != rows * m.words_per_row_) {
      throw ShapeError("BitMatrix word count does not match " +
                       std::to_string(rows) + "x" + std::to_string(cols));
    }
    m.words_ = std::move(words);
    if (!m.tails_clean()) throw ShapeError("BitMatrix tail bits are not zero");
    return m;
  }

  static constexpr std::size_t words_for(std::size_t cols) {
    return (cols + kWordBits - 1) / kWordBits;
  }

  /// Mask of valid bits in the last word of a row.
  std::uint64_t tail_mask() const noexcept {
    const std::size_t rem = cols_ % kWordBits;
    return rem == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << rem) - 1;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t words_per_row() const noexcept { return words_per_row_; }

  std::span<const std::uint64_t> words() const noexcept { return words_; }
  std::span<const std::uint64_t> row(std::size_t i) const {
    return std::span<const std::uint64_t>(words_).subspan(i * words_per_row_,
                                                          words_per_row_);
  }

  bool get(std::size_t i, std::size_t j) const {
    return (words_[i * words_per_row_ + j / kWordBits] >> (j % kWordBits)) & 1u;
  }

  void set(std::size_t i, std::size_t j, bool plus_one) {
    std::uint64_t& w = words_[i * words_per_row_ + j / kWordBits];
    const std::uint64_t bit = std::uint64_t{1} << (j % kWordBits);
    w = plus_one ? (w | bit) : (w & ~bit);
  }

  bool tails_clean() const noexcept {
    if (words_per_row_ == 0) return true;
    const std::uint64_t dirty = ~tail_mask();
    for (std::size_t i = 0; i < rows_; ++i) {
      if (words_[i * words_per_row_ + words_per_row_ - 1] & dirty) return false;
    }
    return true;
  }

  friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t words_per_row_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Deterministic sign binarization with sign(0) = +1.
template <typename T>
BitMatrix pack_signs(const Tensor<T>& m) {
  if (m.rank() != 2) {
    throw ShapeError("pack_signs expects a rank-2 tensor, got " +
                     shape_string(m.shape()));
  }
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  const std::size_t wpr = BitMatrix::words_for(cols);
  std::vector<std::uint64_t> words(rows * wpr, 0);
  for (std::size_t i = 0; i < rows; ++i) {
    const T* src = m.ptr() + i * cols;
    std::uint64_t* dst = words.data() + i * wpr;
    for (std::size_t j = 0; j < cols; ++j) {
      dst[j / 64] |= std::uint64_t{src[j] >= T{0}} << (j % 64);
    }
  }
  return BitMatrix::from_words(rows, cols, std::move(words));
}

template <typename T = float>
Tensor<T> unpack(const BitMatrix& b) {
  Tensor<T> out({b.rows(), b.cols()});
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j)
      out.at(i, j) = b.get(i, j) ? T{1} : T{-1};
  return out;
}

namespace detail {

// Rows with zeroed tails agree on every padding bit, so counting mismatches
// over whole words gives d, and 2*popcount(xnor over n bits) - n = n - 2d.
inline std::int64_t xnor_dot_words(const std::uint64_t* a,
                                   const std::uint64_t* b, std::size_t words,
                                   std::size_t n) {
  std::int64_t mismatches = 0;
  for (std::size_t w = 0; w < words; ++w) mismatches += std::popcount(a[w] ^ b[w]);
  return static_cast<std::int64_t>(n) - 2 * mismatches;
}

}  // namespace detail

/// Exact ±1 dot product of two packed rows of logical length n.
inline std::int64_t xnor_dot(std::span<const std::uint64_t> a,
                             std::span<const std::uint64_t> b, std::size_t n) {
  const std::size_t words = BitMatrix::words_for(n);
  if (a.size() != words || b.size() != words) {
    throw ShapeError("xnor_dot: rows of " + std::to_string(a.size()) + " and " +
                     std::to_string(b.size()) + " words for length " +
                     std::to_string(n));
  }
  return detail::xnor_dot_words(a.data(), b.data(), words, n);
}

/// Largest inner dimension whose integer results stay exact in float.
inline constexpr std::size_t kMaxBinaryInner = std::size_t{1} << 24;

/// C(m x n) = A(m x k) * Bt(n x k)^T over ±1 values via XOR + popcount.
/// Bt is the right operand stored transposed, so both stream row-wise.
template <typename T = float>
Tensor<T> binary_gemm(const BitMatrix& a, const BitMatrix& bt) {
  if (a.cols() != bt.cols()) {
    throw ShapeError("binary_gemm: inner dimensions " +
                     std::to_string(a.cols()) + " vs " +
                     std::to_string(bt.cols()));
  }
  if (a.cols() > kMaxBinaryInner) {
    throw ShapeError("binary_gemm: inner dimension exceeds 2^24");
  }
  const std::size_t m = a.rows(), n = bt.rows(), k = a.cols();
  const std::size_t words = a.words_per_row();
  Tensor<T> c({m, n});
  const std::uint64_t* aw = a.words().data();
  const std::uint64_t* bw = bt.words().data();
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint64_t* arow = aw + i * words;
    T* crow = c.ptr() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      crow[j] = static_cast<T>(
          detail::xnor_dot_words(arow, bw + j * words, words, k));
    }
  }
  return c;
}

/// True when every element is exactly +1 or -1.
template <typename T>
bool is_pm1(const Tensor<T>& t) {
  for (const T v : t.data())
    if (v != T{1} && v != T{-1}) return false;
  return true;
}

}  // namespace bnn
