#include <gtest/gtest.h>

#include "test_util.hpp"

namespace bnn {
namespace {

using test::random_pm1;
using test::random_tensor;
using test::shared_rng;

TEST(PackSigns, SignOfZeroIsPlusOne) {
  const BitMatrix b = pack_signs(FloatTensor::matrix({{0.5f, -0.3f, 0.0f}}));
  EXPECT_TRUE(b.get(0, 0));
  EXPECT_FALSE(b.get(0, 1));
  EXPECT_TRUE(b.get(0, 2));
  EXPECT_EQ(b.words()[0], 0b101u);
}

TEST(PackSigns, AllNegative) {
  const BitMatrix b = pack_signs(FloatTensor::matrix({{-1.0f, -1.0f}}));
  EXPECT_EQ(b.words()[0], 0u);
}

TEST(PackSigns, MatchesElementwiseSign) {
  const FloatTensor x = random_tensor({3, 70}, shared_rng());
  const FloatTensor back = unpack(pack_signs(x));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(back[i], x[i] >= 0 ? 1.0f : -1.0f);
}

TEST(PackSigns, RejectsWrongRank) {
  EXPECT_THROW(pack_signs(FloatTensor({2, 2, 2})), ShapeError);
  EXPECT_THROW(pack_signs(FloatTensor({4})), ShapeError);
}

TEST(PackSigns, TailBitsAreZero) {
  for (std::size_t cols : {1u, 63u, 64u, 65u, 127u, 130u}) {
    const BitMatrix b = pack_signs(FloatTensor({5, cols}, 1.0f));
    EXPECT_TRUE(b.tails_clean()) << cols;
    EXPECT_EQ(b.words_per_row(), (cols + 63) / 64);
  }
}

TEST(Unpack, SmallPattern) {
  BitMatrix b(1, 2);
  b.set(0, 0, true);
  EXPECT_EQ(unpack(b), FloatTensor::matrix({{1.0f, -1.0f}}));
}

TEST(Unpack, AllOnesAcrossWordBoundary) {
  BitMatrix b(2, 65);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 65; ++j) b.set(i, j, true);
  const FloatTensor t = unpack(b);
  EXPECT_EQ(t.shape(), (Shape{2, 65}));
  for (float v : t.data()) EXPECT_EQ(v, 1.0f);
  EXPECT_TRUE(b.tails_clean());
}

TEST(Unpack, RoundTripIsIdentity) {
  Rng& rng = shared_rng();
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<std::size_t> d(1, 200);
    const BitMatrix b = pack_signs(random_tensor({d(rng), d(rng)}, rng));
    EXPECT_EQ(pack_signs(unpack(b)), b);
  }
}

TEST(BitMatrix, FromWordsRejectsDirtyTail) {
  EXPECT_THROW(BitMatrix::from_words(1, 3, {0b1000}), ShapeError);
  EXPECT_NO_THROW(BitMatrix::from_words(1, 3, {0b111}));
  EXPECT_THROW(BitMatrix::from_words(2, 3, {0}), ShapeError);
}

std::int64_t xnor_of(const FloatTensor& a, const FloatTensor& b) {
  const BitMatrix pa = pack_signs(a), pb = pack_signs(b);
  return xnor_dot(pa.row(0), pb.row(0), a.dim(1));
}

TEST(XnorDot, MatchesFloatDotProduct) {
  EXPECT_EQ(xnor_of(FloatTensor::matrix({{1, -1, 1}}), FloatTensor::matrix({{1, 1, -1}})), -1);
}

TEST(XnorDot, SelfDotIsLength) {
  const FloatTensor a = random_pm1({1, 70}, shared_rng());
  EXPECT_EQ(xnor_of(a, a), 70);
}

TEST(XnorDot, ComplementIsMinusLength) {
  const FloatTensor a = random_pm1({1, 5}, shared_rng());
  FloatTensor b = a;
  for (auto& v : b.data()) v = -v;
  EXPECT_EQ(xnor_of(a, b), -5);
}

TEST(XnorDot, LengthMismatchThrows) {
  const BitMatrix a(1, 70), b(1, 130);
  EXPECT_THROW(xnor_dot(a.row(0), b.row(0), 70), ShapeError);
}

TEST(XnorDot, RangeAndParity) {
  Rng& rng = shared_rng();
  std::uniform_int_distribution<std::size_t> d(1, 300);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = d(rng);
    const auto r = xnor_of(random_pm1({1, n}, rng), random_pm1({1, n}, rng));
    EXPECT_LE(std::abs(r), static_cast<std::int64_t>(n));
    EXPECT_EQ((r - static_cast<std::int64_t>(n)) % 2, 0);
  }
}

TEST(BinaryGemm, WorkedExample) {
  const FloatTensor a = FloatTensor::matrix({{1, -1, 1}, {-1, -1, 1}});
  const FloatTensor b = FloatTensor::matrix({{1, -1}, {1, 1}, {-1, -1}});
  const FloatTensor expected = test::naive_matmul(a, b);
  EXPECT_EQ(expected, FloatTensor::matrix({{-1, -3}, {-3, -1}}));
  EXPECT_EQ(binary_gemm(pack_signs(a), pack_signs(transpose(b))), expected);
}

TEST(BinaryGemm, IdentityPatternGivesDiagonalK) {
  const std::size_t k = 67;
  const FloatTensor a = random_pm1({4, k}, shared_rng());
  const FloatTensor c = binary_gemm(pack_signs(a), pack_signs(a));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(c.at(i, i), float(k));
}

TEST(BinaryGemm, InnerMismatchThrows) {
  EXPECT_THROW(binary_gemm(BitMatrix(2, 10), BitMatrix(3, 11)), ShapeError);
}

TEST(BinaryGemm, RandomCasesMatchFloatOracle) {
  Rng& rng = shared_rng();
  std::uniform_int_distribution<std::size_t> d(1, 96);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = d(rng), k = d(rng) + 40, n = d(rng);
    const FloatTensor a = random_pm1({m, k}, rng), b = random_pm1({k, n}, rng);
    ASSERT_EQ(binary_gemm(pack_signs(a), pack_signs(transpose(b))), test::naive_matmul(a, b));
  }
}

TEST(FloatGemm, IdentityAndSmallProduct) {
  const FloatTensor m = FloatTensor::matrix({{1.5f, -2}, {3, 4}});
  EXPECT_EQ(float_gemm(FloatTensor::matrix({{1, 0}, {0, 1}}), m), m);
  EXPECT_EQ(float_gemm(FloatTensor::matrix({{1, 2}}), FloatTensor::matrix({{3}, {4}})),
            FloatTensor::matrix({{11}}));
}

TEST(FloatGemm, ShapeMismatchThrows) {
  EXPECT_THROW(float_gemm(FloatTensor({2, 3}), FloatTensor({2, 3})), ShapeError);
}

TEST(FloatGemm, AgreesWithBinaryGemmOnPm1) {
  Rng& rng = shared_rng();
  const FloatTensor a = random_pm1({9, 130}, rng), b = random_pm1({130, 7}, rng);
  EXPECT_EQ(float_gemm(a, b), binary_gemm(pack_signs(a), pack_signs(transpose(b))));
}

TEST(FloatGemm, TransposedVariantsMatchPlainProduct) {
  Rng& rng = shared_rng();
  const auto a = random_tensor<double>({5, 7}, rng), b = random_tensor<double>({6, 7}, rng);
  EXPECT_LT(test::rel_error(gemm_nt(a, b), float_gemm(a, transpose(b))), 1e-14);
  const auto c = random_tensor<double>({7, 5}, rng), e = random_tensor<double>({7, 3}, rng);
  EXPECT_LT(test::rel_error(gemm_tn(c, e), float_gemm(transpose(c), e)), 1e-14);
}

TEST(Im2col, PatchEnumeration) {
  FloatTensor x({1, 1, 3, 3});
  for (std::size_t i = 0; i < 9; ++i) x[i] = float(i + 1);
  ConvGeometry g{1, 1, 2, 2, 1, 0};
  const FloatTensor cols = im2col(x, g);
  ASSERT_EQ(cols.shape(), (Shape{4, 4}));
  // Oracle: enumerate the four windows by hand.
  const float expected[4][4] = {{1, 2, 4, 5}, {2, 3, 5, 6}, {4, 5, 7, 8}, {5, 6, 8, 9}};
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(cols.at(r, c), expected[r][c]);
}

TEST(Im2col, WholeInputWindowIsFlatInput) {
  FloatTensor x({1, 1, 2, 2}, std::vector<float>{1, 2, 3, 4});
  const FloatTensor cols = im2col(x, ConvGeometry{1, 1, 2, 2, 1, 0});
  EXPECT_EQ(cols, FloatTensor::matrix({{1, 2, 3, 4}}));
}

TEST(Im2col, NonIntegralExtentThrows) {
  EXPECT_THROW(im2col(FloatTensor({1, 1, 4, 4}), ConvGeometry{1, 1, 3, 3, 2, 0}), ShapeError);
  EXPECT_THROW(im2col(FloatTensor({1, 2, 4, 4}), ConvGeometry{1, 1, 3, 3, 1, 0}), ShapeError);
}

TEST(Im2col, ConvViaGemmMatchesNaiveConvolution) {
  Rng& rng = shared_rng();
  for (const ConvGeometry& g : {ConvGeometry{2, 3, 3, 3, 1, 1}, ConvGeometry{3, 2, 2, 2, 2, 0},
                                ConvGeometry{1, 4, 3, 3, 2, 1}}) {
    std::size_t side = 5;
    while ((side + 2 * g.padding - g.kernel_h) % g.stride) ++side;
    const auto x = random_tensor<double>({2, g.in_channels, side, side}, rng);
    const auto w = random_tensor<double>({g.out_channels, g.patch_size()}, rng);
    const Shape out = g.output_shape(x.shape());
    const auto y = rows_to_nchw(gemm_nt(im2col(x, g), w), out[0], out[2], out[3]);
    EXPECT_LT(test::rel_error(y, test::naive_conv(x, w, g)), 1e-12);
  }
}

TEST(Col2im, OverlapCounts) {
  ConvGeometry g{1, 1, 2, 2, 1, 0};
  const FloatTensor ones({1, 1, 3, 3}, 1.0f);
  const FloatTensor back = col2im(im2col(ones, g), g, ones.shape());
  // Oracle: cell (y, x) is covered by (#windows along y) * (#windows along x).
  auto cover = [](std::size_t i) { return i == 1 ? 2.0f : 1.0f; };
  for (std::size_t y = 0; y < 3; ++y)
    for (std::size_t x = 0; x < 3; ++x) EXPECT_EQ(back.at(0, 0, y, x), cover(y) * cover(x));
  EXPECT_EQ(back.at(0, 0, 1, 1), 4.0f);
}

TEST(Col2im, ZeroInZeroOut) {
  ConvGeometry g{2, 1, 3, 3, 1, 1};
  const FloatTensor z = col2im(FloatTensor({2 * 16, 18}), g, {2, 2, 4, 4});
  for (float v : z.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Col2im, ShapeMismatchThrows) {
  EXPECT_THROW(col2im(FloatTensor({3, 4}), ConvGeometry{1, 1, 2, 2, 1, 0}, {1, 1, 3, 3}),
               ShapeError);
}

TEST(Col2im, AdjointOfIm2col) {
  Rng& rng = shared_rng();
  for (const ConvGeometry& g : {ConvGeometry{2, 1, 3, 3, 1, 1}, ConvGeometry{3, 1, 2, 2, 2, 0},
                                ConvGeometry{1, 1, 3, 3, 2, 2}}) {
    std::size_t side = 6;
    while ((side + 2 * g.padding - g.kernel_h) % g.stride) ++side;
    const Shape in{2, g.in_channels, side, side};
    const auto x = random_tensor<double>(in, rng);
    const auto cols = im2col(x, g);
    const auto y = random_tensor<double>(cols.shape(), rng);
    const double lhs = test::dot(cols, y), rhs = test::dot(x, col2im(y, g, in));
    EXPECT_NEAR(lhs, rhs, 1e-6 * std::max(1.0, std::abs(lhs)));
  }
}

}  // namespace
}  // namespace bnn
