#include <gtest/gtest.h>

#include <algorithm>

#include "helpers.hpp"
#include "rppg/augment.hpp"

using namespace rppg;
using rppg::test::random_clip;

namespace {

std::vector<std::vector<float>> frames_of(const RoiClip& c) {
  std::vector<std::vector<float>> out;
  const std::size_t fsz = c.frame_size();
  for (std::size_t f = 0; f < c.frame_count(); ++f)
    out.emplace_back(c.frames.data.begin() + static_cast<long>(f * fsz),
                     c.frames.data.begin() + static_cast<long>((f + 1) * fsz));
  return out;
}

std::vector<std::vector<float>> sorted_frames(const RoiClip& c) {
  auto f = frames_of(c);
  std::sort(f.begin(), f.end());
  return f;
}

AugParams params_of(AugKind kind) {
  AugParams p;
  p.kind = kind;
  return p;
}

float px(const RoiClip& c, std::size_t f, std::size_t y, std::size_t x, std::size_t ch) {
  return c.frames[((f * c.height() + y) * c.width() + x) * 3 + ch];
}

}  // namespace

TEST(Augment, Names) {
  for (const char* n : {"rot", "crop", "flip", "shuffle", "reorder", "reverse"}) {
    EXPECT_EQ(aug_name(parse_aug_kind(n)), n);
  }
  EXPECT_THROW(parse_aug_kind("jitter"), std::invalid_argument);
  EXPECT_TRUE(is_temporal(AugKind::Shuffle));
  EXPECT_FALSE(is_temporal(AugKind::Crop));
}

TEST(Augment, ReverseExample) {
  const RoiClip c = random_clip(3, 8, 8, 1);
  const auto in = frames_of(c), out = frames_of(apply_augmentation(c, params_of(AugKind::Reverse)));
  EXPECT_EQ(out, (std::vector<std::vector<float>>{in[2], in[1], in[0]}));
}

TEST(Augment, ReorderExample) {
  const RoiClip c = random_clip(4, 8, 8, 2);
  AugParams p = params_of(AugKind::Reorder);
  p.cut = 3;
  const auto in = frames_of(c), out = frames_of(apply_augmentation(c, p));
  EXPECT_EQ(out, (std::vector<std::vector<float>>{in[2], in[3], in[0], in[1]}));
}

TEST(Augment, FlipMovesColumns) {
  const RoiClip c = random_clip(2, 8, 8, 3);
  const RoiClip f = apply_augmentation(c, params_of(AugKind::Flip));
  for (std::size_t m = 0; m < 2; ++m)
    for (std::size_t y = 0; y < 8; ++y)
      for (std::size_t x = 0; x < 8; ++x)
        for (std::size_t ch = 0; ch < 3; ++ch) EXPECT_EQ(px(f, m, y, 7 - x, ch), px(c, m, y, x, ch));
}

TEST(Augment, CropHalfAtOrigin) {
  // Encode position in the pixel value so the resampled window is identifiable.
  RoiClip c = random_clip(1, 64, 64, 4);
  for (std::size_t y = 0; y < 64; ++y)
    for (std::size_t x = 0; x < 64; ++x)
      for (std::size_t ch = 0; ch < 3; ++ch) c.frames[(y * 64 + x) * 3 + ch] = static_cast<float>(x + 100 * y);
  AugParams p = params_of(AugKind::Crop);
  p.crop_scale = 0.5;
  const RoiClip out = apply_augmentation(c, p);
  EXPECT_EQ(out.frames.shape, c.frames.shape);
  float lo = 1e9f, hi = -1e9f;
  for (float v : out.frames.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_EQ(lo, 0.0f);
  EXPECT_EQ(hi, 31.0f + 100.0f * 31.0f);
  // Output pixel (2k, 2k) maps onto source (k - 0.25) clamped, so column 0 stays 0.
  EXPECT_EQ(px(out, 0, 0, 0, 0), 0.0f);
}

TEST(Augment, InvolutionsAreByteExact) {
  const RoiClip c = random_clip(5, 16, 16, 5);
  for (AugKind k : {AugKind::Flip, AugKind::Reverse}) {
    const RoiClip twice = apply_augmentation(apply_augmentation(c, params_of(k)), params_of(k));
    EXPECT_EQ(twice.frames.data, c.frames.data) << aug_name(k);
  }
}

TEST(Augment, TemporalKindsPreserveFrameMultiset) {
  const RoiClip c = random_clip(9, 8, 8, 6);
  Rng rng(7);
  for (AugKind k : {AugKind::Shuffle, AugKind::Reorder, AugKind::Reverse}) {
    for (int rep = 0; rep < 10; ++rep) {
      const RoiClip a = augment(c, k, rng);
      EXPECT_EQ(sorted_frames(a), sorted_frames(c)) << aug_name(k);
    }
  }
}

TEST(Augment, ReorderIsRecoverable) {
  for (std::size_t m : {2u, 3u, 8u, 17u}) {
    const RoiClip c = random_clip(m, 8, 8, 10 + m);
    for (std::size_t r = 2; r <= m; ++r) {
      AugParams p = params_of(AugKind::Reorder);
      p.cut = r;
      const RoiClip x1 = apply_augmentation(c, p);
      AugParams back = p;
      back.cut = m - r + 2;
      EXPECT_EQ(apply_augmentation(x1, back).frames.data, c.frames.data) << "M=" << m << " r=" << r;
    }
  }
}

TEST(Augment, RightAngleRotationsAreExactPermutations) {
  const RoiClip c = random_clip(2, 12, 12, 11);
  auto rot = [](const RoiClip& x, int a) {
    AugParams p = params_of(AugKind::Rotation);
    p.angle_deg = a;
    return apply_augmentation(x, p);
  };
  EXPECT_EQ(rot(c, 360).frames.data, c.frames.data);
  EXPECT_EQ(rot(rot(c, 90), 270).frames.data, c.frames.data);
  EXPECT_EQ(rot(rot(c, 90), 90).frames.data, rot(c, 180).frames.data);
  EXPECT_EQ(rot(rot(c, 180), 180).frames.data, c.frames.data);
  for (int a : {90, 180, 270}) EXPECT_EQ(sorted_frames(rot(c, a)).size(), 2u);
  // Pixel multiset of each frame is unchanged.
  for (int a : {90, 180, 270}) {
    auto x = rot(c, a).frames.data, y = c.frames.data;
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    EXPECT_EQ(x, y);
  }
}

TEST(Augment, RightAngleMatchesTheGeneralRotationDirection) {
  // A 1-degree step from 90 should stay close to the exact 90-degree permutation
  // at the frame centre, which pins down the rotation direction.
  RoiClip c = random_clip(1, 16, 16, 12);
  for (std::size_t y = 0; y < 16; ++y)
    for (std::size_t x = 0; x < 16; ++x)
      for (std::size_t ch = 0; ch < 3; ++ch) c.frames[(y * 16 + x) * 3 + ch] = static_cast<float>(x) / 16.0f;
  AugParams p90 = params_of(AugKind::Rotation), p91 = p90;
  p90.angle_deg = 90;
  p91.angle_deg = 91;
  const RoiClip a = apply_augmentation(c, p90), b = apply_augmentation(c, p91);
  for (std::size_t y = 5; y < 11; ++y)
    for (std::size_t x = 5; x < 11; ++x) EXPECT_NEAR(px(a, 0, y, x, 0), px(b, 0, y, x, 0), 0.02);
}

TEST(Augment, GeneralRotationFillsBlackCorners) {
  RoiClip c = random_clip(1, 16, 16, 13);
  for (auto& v : c.frames.data) v = 1.0f;
  AugParams p = params_of(AugKind::Rotation);
  p.angle_deg = 45;
  const RoiClip r = apply_augmentation(c, p);
  EXPECT_EQ(px(r, 0, 0, 0, 0), 0.0f);
  EXPECT_NEAR(px(r, 0, 8, 8, 1), 1.0f, 1e-6);
}

TEST(Augment, SampledParametersRespectRanges) {
  Rng rng(14);
  for (int i = 0; i < 500; ++i) {
    const AugParams r = sample_aug_params(AugKind::Rotation, 8, 32, 32, rng);
    EXPECT_GE(r.angle_deg, 1);
    EXPECT_LE(r.angle_deg, 360);
    const AugParams c = sample_aug_params(AugKind::Crop, 8, 32, 32, rng);
    EXPECT_GE(c.crop_scale, 0.25);
    EXPECT_LE(c.crop_scale, 0.75);
    const auto side = static_cast<std::size_t>(c.crop_scale * 32);
    EXPECT_LE(c.anchor_x, 32 - side);
    EXPECT_LE(c.anchor_y, 32 - side);
    const AugParams o = sample_aug_params(AugKind::Reorder, 8, 32, 32, rng);
    EXPECT_GE(o.cut, 2u);
    EXPECT_LE(o.cut, 8u);
  }
}

TEST(Augment, SeededAndShapePreserving) {
  const RoiClip c = random_clip(6, 16, 16, 15);
  for (AugKind k : {AugKind::Rotation, AugKind::Crop, AugKind::Flip, AugKind::Shuffle, AugKind::Reorder,
                    AugKind::Reverse}) {
    Rng a(99), b(99);
    const RoiClip x = augment(c, k, a), y = augment(c, k, b);
    EXPECT_EQ(x.frames.data, y.frames.data) << aug_name(k);
    EXPECT_EQ(x.frames.shape, c.frames.shape) << aug_name(k);
  }
  // Different seeds give different shuffles with high probability.
  Rng a(1), b(2);
  EXPECT_NE(augment(c, AugKind::Shuffle, a).frames.data, augment(c, AugKind::Shuffle, b).frames.data);
}

TEST(Augment, PositivePair) {
  const RoiClip c = random_clip(5, 8, 8, 16);
  Rng rng(17);
  const auto [x, xr] = make_positive_pair(c, AugKind::Reverse, rng);
  EXPECT_EQ(x.frames.data, c.frames.data);
  EXPECT_EQ(xr.frames.data, apply_augmentation(c, params_of(AugKind::Reverse)).frames.data);
  const auto [y, ys] = make_positive_pair(c, AugKind::Shuffle, rng);
  EXPECT_EQ(sorted_frames(ys), sorted_frames(y));
  const auto [z, zf] = make_positive_pair(c, AugKind::Flip, rng);
  EXPECT_EQ(apply_augmentation(zf, params_of(AugKind::Flip)).frames.data, z.frames.data);
}

TEST(Augment, DegenerateClipsAreRejected) {
  Rng rng(18);
  const RoiClip one = random_clip(1, 8, 8, 19);
  for (AugKind k : {AugKind::Shuffle, AugKind::Reorder, AugKind::Reverse}) EXPECT_THROW(augment(one, k, rng), std::invalid_argument);
  const RoiClip tiny = random_clip(4, 4, 4, 20);
  EXPECT_THROW(augment(tiny, AugKind::Flip, rng), std::invalid_argument);
  const RoiClip wide = random_clip(4, 8, 12, 21);
  EXPECT_THROW(augment(wide, AugKind::Rotation, rng), std::invalid_argument);
}
