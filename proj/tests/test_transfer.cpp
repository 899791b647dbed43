#include <gtest/gtest.h>

#include "test_util.hpp"

namespace bnn {
namespace {

using test::random_tensor;

constexpr const char* kArch = "bconv:4:3:1:1,bn,sign,maxpool:2,flatten,bdense:16,bn,sign,dense:5";

Model<float> trained_model(std::uint64_t seed, const Dataset<float>& data) {
  Rng rng(seed);
  Model<float> m = build_model<float>(kArch, data.sample_shape(), rng);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 16;
  fit(m, data, nullptr, cfg);
  return m;
}

Dataset<float> glyphs(std::size_t n, std::uint64_t seed, std::vector<std::size_t> classes = {0, 1, 2, 3, 4}) {
  return synth::make_glyphs(n, seed, std::move(classes)).to_dataset();
}

TEST(Split, LastLayerHead) {
  const auto data = glyphs(40, 1);
  const Model<float> m = trained_model(1, data);
  const SplitModel s = split_model(m, last_layer_split(m), data.sample_shape());
  ASSERT_EQ(s.head.size(), 1u);
  EXPECT_EQ(kind_of(s.head.layers()[0]), LayerKind::kDense);
  EXPECT_EQ(s.feature_shape(), (Shape{16}));
}

TEST(Split, CompositionIsBitExact) {
  const auto data = glyphs(40, 2);
  const Model<float> m = trained_model(2, data);
  for (std::size_t k = 0; k < m.size(); ++k) {
    const SplitModel s = split_model(m, k, data.sample_shape());
    EXPECT_EQ(s.infer(data.samples), m.infer(data.samples)) << k;
    EXPECT_EQ(save_model(s.combined()), save_model(m));
  }
}

TEST(Split, ZeroIndexIsWholeModelAsHead) {
  const auto data = glyphs(20, 3);
  const Model<float> m = trained_model(3, data);
  const SplitModel s = split_model(m, 0, data.sample_shape());
  EXPECT_TRUE(s.extractor.empty());
  EXPECT_EQ(save_model(s.head), save_model(m));
}

TEST(Split, OutOfRangeThrows) {
  const auto data = glyphs(20, 3);
  const Model<float> m = trained_model(3, data);
  EXPECT_THROW(split_model(m, m.size(), data.sample_shape()), ShapeError);
}

TEST(Features, DeterministicAndTagged) {
  const auto data = glyphs(30, 4);
  const Model<float> m = trained_model(4, data);
  const SplitModel s = split_model(m, last_layer_split(m), data.sample_shape());
  const FeatureCache a = extract_features(s.extractor, data, std::nullopt, 7);
  const FeatureCache b = extract_features(s.extractor, data);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.fingerprint, fingerprint(s.extractor));
  EXPECT_EQ(a.features.shape(), (Shape{30, 16}));
  EXPECT_NO_THROW(check_provenance(a, s.extractor));
}

TEST(Features, StaleCacheIsRejected) {
  const auto data = glyphs(30, 5);
  const Model<float> m = trained_model(5, data), other = trained_model(6, data);
  const SplitModel s = split_model(m, last_layer_split(m), data.sample_shape());
  const SplitModel t = split_model(other, last_layer_split(other), data.sample_shape());
  const FeatureCache cache = extract_features(t.extractor, data);
  try {
    check_provenance(cache, s.extractor);
    FAIL() << "expected a fingerprint mismatch";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.code(), FormatErrc::kFingerprintMismatch);
  }
  SplitModel target = s;
  EXPECT_THROW(retrain_head(target, cache, HeadKind::kFloat, 5, TrainConfig{}), FormatError);
}

TEST(Features, FileRoundTrip) {
  const auto data = glyphs(25, 6);
  const Model<float> m = trained_model(6, data);
  for (std::size_t k : {last_layer_split(m), std::size_t{1}}) {
    const SplitModel s = split_model(m, k, data.sample_shape());
    const FeatureCache c = extract_features(s.extractor, data);
    const FeatureCache back = load_feature_cache(save_feature_cache(c));
    EXPECT_EQ(back.features, c.features);
    EXPECT_EQ(back.labels, c.labels);
    EXPECT_EQ(back.fingerprint, c.fingerprint);
  }
}

TEST(Features, PackedCacheIsSmaller) {
  const auto data = glyphs(25, 6);
  const Model<float> m = trained_model(6, data);
  const SplitModel s = split_model(m, last_layer_split(m), data.sample_shape());
  const FeatureCache c = extract_features(s.extractor, data);
  ASSERT_TRUE(is_pm1(c.features));
  EXPECT_LT(save_feature_cache(c).size(), c.features.size() * sizeof(float));
}

TEST(Features, TruncatedFileThrows) {
  const auto data = glyphs(10, 7);
  const Model<float> m = trained_model(7, data);
  const SplitModel s = split_model(m, last_layer_split(m), data.sample_shape());
  Bytes b = save_feature_cache(extract_features(s.extractor, data));
  b.resize(b.size() - 3);
  EXPECT_THROW(load_feature_cache(b), FormatError);
}

TEST(RetrainHead, CachedEqualsOnline) {
  const auto data = glyphs(100, 8);
  const Model<float> m = trained_model(8, data);
  SplitModel cached = split_model(m, last_layer_split(m), data.sample_shape());
  SplitModel online = cached;
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 10;
  const FeatureCache cache = extract_features(cached.extractor, data);
  const HeadResult a = retrain_head(cached, cache, HeadKind::kFloat, 5, cfg);
  const HeadResult b = retrain_head_online(online, data, HeadKind::kFloat, 5, cfg);
  EXPECT_EQ(save_model(cached.head), save_model(online.head));
  EXPECT_EQ(a.train.top1, b.train.top1);
}

TEST(RetrainHead, ExtractorUntouched) {
  const auto data = glyphs(60, 9);
  const Model<float> m = trained_model(9, data);
  SplitModel s = split_model(m, last_layer_split(m), data.sample_shape());
  const std::string before = fingerprint(s.extractor);
  TrainConfig cfg;
  cfg.epochs = 3;
  retrain_head(s, extract_features(s.extractor, data), HeadKind::kBinary, 5, cfg);
  EXPECT_EQ(fingerprint(s.extractor), before);
}

TEST(RetrainHead, SeparableFeaturesReachFullAccuracy) {
  // Class c has feature c set to +1 and every other feature -1.
  SplitModel s;
  s.extractor = Model<float>();
  s.head.add(DenseLayer<float>(6, 6));
  s.sample_shape = {6};
  FeatureCache cache;
  cache.fingerprint = fingerprint(s.extractor);
  cache.features = FloatTensor({60, 6}, -1.0f);
  for (std::size_t i = 0; i < 60; ++i) {
    cache.features.at(i, i % 6) = 1.0f;
    cache.labels.push_back(std::uint32_t(i % 6));
  }
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.batch_size = 10;
  cfg.lr = 1e-2;
  const HeadResult b = retrain_head(s, cache, HeadKind::kFloat, 6, cfg);
  EXPECT_EQ(b.train.top1, 1.0);
  const HeadResult a = retrain_head(s, cache, HeadKind::kBinary, 6, cfg);
  EXPECT_LE(a.train.top1, b.train.top1);
}

TEST(RetrainHead, BinaryHeadNeedsAdam) {
  const auto data = glyphs(20, 10);
  const Model<float> m = trained_model(10, data);
  SplitModel s = split_model(m, last_layer_split(m), data.sample_shape());
  TrainConfig cfg;
  cfg.optimizer = OptimizerKind::kSgdMomentum;
  EXPECT_THROW(retrain_head(s, extract_features(s.extractor, data), HeadKind::kBinary, 5, cfg),
               StateError);
}

TEST(RetrainHead, FeatureDimensionMismatchThrows) {
  const auto data = glyphs(20, 11);
  const Model<float> m = trained_model(11, data);
  SplitModel s = split_model(m, last_layer_split(m), data.sample_shape());
  FeatureCache cache = extract_features(s.extractor, data);
  cache.features = FloatTensor({20, 9});
  EXPECT_THROW(retrain_head(s, cache, HeadKind::kFloat, 5, TrainConfig{}), ShapeError);
}

TEST(Resize, LongestSide) {
  const FloatTensor img({3, 384, 512}, 0.25f);
  const FloatTensor out = resize_longest(img, 256);
  EXPECT_EQ(out.shape(), (Shape{3, 192, 256}));
  EXPECT_EQ(resize_longest(FloatTensor({1, 512, 384}), 256).shape(), (Shape{1, 256, 192}));
  EXPECT_EQ(resize_longest(FloatTensor({1, 1000, 3}), 256).shape(), (Shape{1, 256, 1}));
}

TEST(Resize, ConstantImageStaysExact) {
  const FloatTensor img({2, 37, 81}, 0.7310f);
  for (std::size_t t : {5u, 64u, 256u, 300u}) {
    const FloatTensor out = resize_longest(img, t);
    for (float v : out.data()) ASSERT_EQ(v, 0.7310f);
  }
}

TEST(Resize, IdentityAtTarget) {
  const FloatTensor img = random_tensor({3, 256, 200}, test::shared_rng());
  const FloatTensor out = resize_longest(img, 256);
  ASSERT_EQ(out.shape(), img.shape());
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(out[i], img[i], 1e-6);
}

TEST(Resize, HalfPixelDownscaleAverages) {
  // 2x downscale with half-pixel centers samples exactly between pixel pairs.
  const FloatTensor img({1, 1, 4}, std::vector<float>{0, 2, 4, 6});
  EXPECT_EQ(resize_bilinear(img, 1, 2), FloatTensor({1, 1, 2}, std::vector<float>{1, 5}));
}

TEST(Crop, CenterOffset) {
  Rng* none = nullptr;
  EXPECT_EQ(crop_offset(256, 256, 224, CropMode::kCenter, none), (CropOffset{16, 16}));
  EXPECT_EQ(crop_offset(256, 193, 192, CropMode::kCenter, none), (CropOffset{32, 0}));
}

TEST(Crop, CopiesTheRightWindow) {
  FloatTensor img({1, 4, 4});
  for (std::size_t i = 0; i < 16; ++i) img[i] = float(i);
  EXPECT_EQ(crop(img, 2, CropMode::kCenter), FloatTensor({1, 2, 2}, std::vector<float>{5, 6, 9, 10}));
}

TEST(Crop, RandomOffsetsStayInBounds) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const CropOffset o = crop_offset(40, 31, 28, CropMode::kRandom, &rng);
    EXPECT_LE(o.y, 12u);
    EXPECT_LE(o.x, 3u);
  }
}

TEST(Crop, TooLargeThrows) {
  Rng* none = nullptr;
  EXPECT_THROW(crop_offset(10, 20, 11, CropMode::kCenter, none), ShapeError);
  EXPECT_THROW(crop_offset(30, 30, 11, CropMode::kRandom, none), StateError);
}

TEST(Preprocess, PipelineShapesAndFallback) {
  PreprocessConfig cfg;
  std::vector<std::string> warnings;
  Rng* none = nullptr;
  EXPECT_EQ(preprocess(FloatTensor({3, 300, 300}, 0.5f), cfg, none, &warnings).shape(),
            (Shape{3, 224, 224}));
  EXPECT_TRUE(warnings.empty());
  // 512x384 -> 256x192 is narrower than the crop, so it is upscaled first.
  EXPECT_EQ(preprocess(FloatTensor({3, 384, 512}, 0.5f), cfg, none, &warnings).shape(),
            (Shape{3, 224, 224}));
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Preprocess, InvalidConfigThrows) {
  PreprocessConfig cfg;
  cfg.crop = 300;
  EXPECT_THROW(cfg.validate(), ShapeError);
}

}  // namespace
}  // namespace bnn
