#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "rppg/data.hpp"
#include "rppg/signal.hpp"

using namespace rppg;
using rppg::test::random_tensor;

namespace {

Video random_video(std::size_t t, std::size_t h, std::size_t w, std::uint64_t seed) {
  Rng rng(seed);
  Video v{random_tensor<float>({t, h, w, 3}, rng, 0.0, 1.0), 20.0f};
  return v;
}

Landmarks fixed_boxes(std::size_t frames, Box f, Box l, Box r) {
  Landmarks lm;
  for (std::size_t i = 0; i < frames; ++i) lm.push_back({i, f, l, r});
  return lm;
}

void paint(Video& v, const Box& b, std::array<float, 3> rgb) {
  const std::size_t h = v.frames.dim(1), w = v.frames.dim(2);
  for (std::size_t t = 0; t < v.frame_count(); ++t)
    for (long y = b.y; y < b.y + b.h; ++y)
      for (long x = b.x; x < b.x + b.w; ++x)
        for (std::size_t c = 0; c < 3; ++c)
          v.frames[((t * h + static_cast<std::size_t>(y)) * w + static_cast<std::size_t>(x)) * 3 + c] = rgb[c];
}

PpgRecord sine_ppg(double hz, double rate, double seconds) {
  PpgRecord p;
  p.rate = static_cast<float>(rate);
  const auto n = static_cast<std::size_t>(std::ceil(seconds * rate)) + 1;
  for (std::size_t i = 0; i < n; ++i)
    p.samples.push_back(static_cast<float>(std::sin(2 * std::numbers::pi * hz * static_cast<double>(i) / rate)));
  return p;
}

const Box kF{10, 4, 20, 8}, kL{6, 20, 10, 12}, kR{24, 20, 10, 12};

}  // namespace

TEST(Windows, CountExamples) {
  EXPECT_EQ(window_count(160, 128, 8), 5u);
  EXPECT_EQ(window_count(128, 128, 8), 1u);
  EXPECT_THROW(window_count(127, 128, 8), std::invalid_argument);
  const Video v = random_video(160, 4, 4, 1);
  const auto clips = window_clips(v, 128, 8, "vid");
  ASSERT_EQ(clips.size(), 5u);
  for (std::size_t i = 0; i < clips.size(); ++i) {
    EXPECT_EQ(clips[i].start, 8 * i);
    EXPECT_EQ(clips[i].source_id, "vid");
    EXPECT_EQ(clips[i].frame_count(), 128u);
  }
  // The last window ends on the last frame.
  EXPECT_EQ(clips[4].frames.data.back(), v.frames.data.back());
  EXPECT_EQ(clips[2].frames.data.front(), v.frames.data[16 * 4 * 4 * 3]);
  EXPECT_THROW(window_clips(random_video(127, 4, 4, 2)), std::invalid_argument);
}

TEST(Windows, CountMatchesEnumeration) {
  for (std::size_t m : {1u, 7u, 16u, 128u})
    for (std::size_t stride : {1u, 3u, 8u})
      for (std::size_t t = m; t < m + 40; ++t) {
        std::size_t n = 0;
        for (std::size_t s = 0; s + m <= t; s += stride) ++n;
        EXPECT_EQ(window_count(t, m, stride), n);
      }
}

TEST(CropRoi, FullModeShapeAndOrder) {
  Video v = random_video(3, 40, 40, 3);
  paint(v, kF, {1, 0, 0});
  paint(v, kL, {0, 1, 0});
  paint(v, kR, {0, 0, 1});
  const Video roi = crop_roi(v, fixed_boxes(3, kF, kL, kR));
  EXPECT_EQ(roi.frames.shape, (Shape{3, 64, 64, 3}));
  EXPECT_EQ(roi.fps, v.fps);
  // Forehead 20x8 becomes 160 wide at height 64; cheeks 10x12 become 53 each.
  // The composite of width 266 is squeezed to 64, so the forehead spans ~38 columns.
  auto at = [&](std::size_t x, std::size_t c) { return roi.frames[(32 * 64 + x) * 3 + c]; };
  EXPECT_NEAR(at(10, 0), 1.0f, 1e-5);
  EXPECT_NEAR(at(50, 1), 1.0f, 1e-5);
  EXPECT_NEAR(at(60, 2), 1.0f, 1e-5);
  for (float x : roi.frames.data) {
    EXPECT_GE(x, 0.0f);
    EXPECT_LE(x, 1.0f);
  }
}

TEST(CropRoi, SingleRegionModes) {
  Video v = random_video(2, 40, 40, 4);
  paint(v, kF, {0.25f, 0.5f, 0.75f});
  const Video fh = crop_roi(v, fixed_boxes(2, kF, kL, kR), RoiMode::ForeheadOnly);
  EXPECT_EQ(fh.frames.shape, (Shape{2, 64, 64, 3}));
  for (std::size_t i = 0; i < fh.frames.size(); i += 3) {
    EXPECT_NEAR(fh.frames[i], 0.25f, 1e-6);
    EXPECT_NEAR(fh.frames[i + 2], 0.75f, 1e-6);
  }
  const Video ch = crop_roi(v, fixed_boxes(2, kF, kL, kR), RoiMode::CheeksOnly, 32);
  EXPECT_EQ(ch.frames.shape, (Shape{2, 32, 32, 3}));
  EXPECT_EQ(parse_roi_mode("cheeks"), RoiMode::CheeksOnly);
  EXPECT_EQ(roi_mode_name(RoiMode::ForeheadOnly), "forehead");
}

TEST(CropRoi, Errors) {
  const Video v = random_video(2, 40, 40, 5);
  EXPECT_THROW(crop_roi(v, fixed_boxes(2, {10, 4, 0, 8}, kL, kR)), std::invalid_argument);
  EXPECT_THROW(crop_roi(v, fixed_boxes(2, kF, {35, 20, 10, 12}, kR)), std::out_of_range);
  EXPECT_THROW(crop_roi(v, fixed_boxes(1, kF, kL, kR)), std::out_of_range);
}

TEST(AlignPpg, RatesAndSpan) {
  const PpgRecord p = sine_ppg(1.2, 256.0, 8.0);
  const auto raw = resample_ppg(p, 0, 128, 20.0);
  ASSERT_EQ(raw.size(), 128u);
  // Linear interpolation at 256 Hz is within 1e-3 of the continuous sine.
  for (std::size_t k = 0; k < 128; ++k)
    EXPECT_NEAR(raw[k], std::sin(2 * std::numbers::pi * 1.2 * static_cast<double>(k) / 20.0), 1e-3);
  const PpgSegment seg = align_ppg(p, 8, 128, 20.0f);
  EXPECT_EQ(seg.samples.size(), 128u);
  EXPECT_EQ(seg.rate, 20.0f);
  EXPECT_EQ(seg.original_rate, 256.0f);
  double mean = 0.0, var = 0.0;
  for (float s : seg.samples) mean += s / 128.0;
  for (float s : seg.samples) var += (s - mean) * (s - mean) / 128.0;
  EXPECT_NEAR(mean, 0.0, 1e-6);
  EXPECT_NEAR(var, 1.0, 1e-5);
  // 6.4 s from frame 8 needs samples up to (8 + 127) / 20 = 6.75 s.
  EXPECT_THROW(resample_ppg(sine_ppg(1.2, 256.0, 6.7), 8, 128, 20.0), std::out_of_range);
  EXPECT_NO_THROW(resample_ppg(sine_ppg(1.2, 256.0, 6.75), 8, 128, 20.0));
}

TEST(AlignPpg, ConstantIsRejected) {
  PpgRecord p;
  p.rate = 20.0f;
  p.samples.assign(200, 0.4f);
  EXPECT_THROW(align_ppg(p, 0, 128, 20.0f), NumericError);
}

TEST(AlignPpg, DominantFrequencySurvives) {
  for (double hz : {0.9, 1.2, 1.75}) {
    for (double rate : {256.0, 60.0}) {
      const PpgSegment seg = align_ppg(sine_ppg(hz, rate, 7.0), 0, 128, 20.0f);
      RppgSignal s{std::vector<double>(seg.samples.begin(), seg.samples.end()), 20.0};
      EXPECT_LE(std::abs(estimate_hr(s) / 60.0 - hz), 20.0 / 4096) << hz << " " << rate;
    }
  }
}

TEST(Containers, ClipRoundTripIsBitExact) {
  Video v = random_video(4, 6, 5, 6);
  quantize_u8(v.frames);
  v.fps = 29.97f;
  const auto bytes = encode_clip(v);
  EXPECT_EQ(bytes.size(), 4 + 2 + 12 + 4 + 4u * 6 * 5 * 3);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "RPGC");
  const Video back = decode_clip(bytes);
  EXPECT_EQ(back.frames.shape, v.frames.shape);
  EXPECT_EQ(back.frames.data, v.frames.data);
  EXPECT_EQ(back.fps, v.fps);
  EXPECT_EQ(encode_clip(back), bytes);
}

TEST(Containers, PpgRoundTripIsBitExact) {
  Rng rng(7);
  PpgRecord p;
  p.rate = 256.0f;
  for (int i = 0; i < 300; ++i) p.samples.push_back(static_cast<float>(rng.normal()));
  const PpgRecord back = decode_ppg(encode_ppg(p));
  EXPECT_EQ(back.samples, p.samples);
  EXPECT_EQ(back.rate, p.rate);
}

TEST(Containers, CorruptionIsRejected) {
  Video v = random_video(2, 4, 4, 8);
  auto clip = encode_clip(v), ppg = encode_ppg(sine_ppg(1.0, 60.0, 2.0));
  for (auto* b : {&clip, &ppg}) {
    auto bad = *b;
    bad[1] = 'X';
    EXPECT_THROW(b == &clip ? (void)decode_clip(bad) : (void)decode_ppg(bad), FormatError);
    bad = *b;
    bad[4] = 7;
    EXPECT_THROW(b == &clip ? (void)decode_clip(bad) : (void)decode_ppg(bad), FormatError);
    bad = *b;
    bad.pop_back();
    EXPECT_THROW(b == &clip ? (void)decode_clip(bad) : (void)decode_ppg(bad), FormatError);
  }
  const auto dir = rppg::test::scratch_dir("containers");
  std::ofstream(dir / "empty.rpgc").close();
  EXPECT_THROW(read_clip(dir / "empty.rpgc"), FormatError);
  EXPECT_THROW(read_ppg(dir / "empty.rpgc"), FormatError);
  write_clip(dir / "v.rpgc", v);
  Video q = v;
  quantize_u8(q.frames);
  EXPECT_EQ(read_clip(dir / "v.rpgc").frames.data, q.frames.data);
}

TEST(Landmarks, ParseAndRoundTrip) {
  std::istringstream ok(
      "frame_index,forehead_x,forehead_y,forehead_w,forehead_h,left_cheek_x,left_cheek_y,left_cheek_w,"
      "left_cheek_h,right_cheek_x,right_cheek_y,right_cheek_w,right_cheek_h\n"
      "0,10,4,20,8,6,20,10,12,24,20,10,12\n"
      "1,11,4,20,8,6,21,10,12,24,20,10,12\n");
  const Landmarks lm = parse_landmarks(ok);
  ASSERT_EQ(lm.size(), 2u);
  EXPECT_EQ(lm[1].forehead.x, 11);
  EXPECT_EQ(lm[1].left_cheek.y, 21);
  EXPECT_EQ(lm[0].right_cheek.h, 12);
  const auto dir = rppg::test::scratch_dir("landmarks");
  write_landmarks(dir / "l.csv", lm);
  const Landmarks back = read_landmarks(dir / "l.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].forehead.x, 11);
  EXPECT_EQ(back[1].frame, 1u);

  std::istringstream no_header("0,10,4,20,8,6,20,10,12,24,20,10,12\n");
  EXPECT_THROW(parse_landmarks(no_header), FormatError);
  std::istringstream short_row("frame_index,a\n0,1,2,3\n");
  EXPECT_THROW(parse_landmarks(short_row), FormatError);
  std::istringstream bad_int(
      "frame_index\n0,10,4,20,8,6,20,10,12,24,20,10,1x\n");
  EXPECT_THROW(parse_landmarks(bad_int), FormatError);
}

TEST(LabelSubset, SizesAndDeterminism) {
  EXPECT_EQ(label_subset(100, 0.25, 1).size(), 25u);
  EXPECT_EQ(label_subset(100, 0.5, 1).size(), 50u);
  EXPECT_EQ(label_subset(180, 0.25, 1).size(), 45u);
  EXPECT_EQ(label_subset(10, 0.25, 1).size(), 3u);  // 2.5 rounds half away from zero
  const auto all = label_subset(37, 1.0, 9);
  ASSERT_EQ(all.size(), 37u);
  for (std::size_t i = 0; i < 37; ++i) EXPECT_EQ(all[i], i);
  EXPECT_EQ(label_subset(100, 0.25, 5), label_subset(100, 0.25, 5));
  EXPECT_NE(label_subset(100, 0.25, 5), label_subset(100, 0.25, 6));
  const auto s = label_subset(100, 0.5, 3);
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
  EXPECT_EQ(std::set<std::size_t>(s.begin(), s.end()).size(), s.size());
  EXPECT_THROW(label_subset(100, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(label_subset(100, 1.5, 1), std::invalid_argument);
  EXPECT_THROW(label_subset(1, 0.25, 1), std::invalid_argument);
  const std::vector<std::string> items = {"a", "b", "c", "d"};
  EXPECT_EQ(label_subset(items, 0.5, 2).size(), 2u);
}

TEST(LabelSubset, UniformAcrossSeeds) {
  const std::size_t n = 20, draws = 1000;
  std::vector<double> hits(n, 0.0);
  for (std::uint64_t seed = 0; seed < draws; ++seed)
    for (std::size_t i : label_subset(n, 0.25, seed)) hits[i] += 1;
  const double expect = draws * 5.0 / n;
  double chi2 = 0.0;
  for (double h : hits) chi2 += (h - expect) * (h - expect) / expect;
  // 0.999 quantile of chi-square with 19 degrees of freedom.
  EXPECT_LT(chi2, 43.82);
}

TEST(Manifest, RoundTripAndComments) {
  const auto dir = rppg::test::scratch_dir("manifest");
  const std::vector<ManifestEntry> m = {{"v1", "s1", "train", "v1.rpgs", {{0, "v1_w00000.rpgc"}, {8, "v1_w00008.rpgc"}}},
                                        {"v2", "s2", "test", "", {{0, "v2_w00000.rpgc"}}}};
  write_manifest(dir / "m.tsv", m);
  {
    std::ofstream app(dir / "m.tsv", std::ios::app);
    app << "# trailing comment\n";
  }
  const auto back = read_manifest(dir / "m.tsv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].clips.size(), 2u);
  EXPECT_EQ(back[0].clips[1].start, 8u);
  EXPECT_EQ(back[1].split, "test");
  EXPECT_THROW(read_manifest(dir / "none.tsv"), FormatError);

  const std::vector<RawEntry> raw = {{"v1", "s1", "train", "a.rpgc", "a.csv", "a.rpgs"}};
  write_raw_index(dir / "raw.tsv", raw);
  const auto rb = read_raw_index(dir / "raw.tsv");
  ASSERT_EQ(rb.size(), 1u);
  EXPECT_EQ(rb[0].landmarks_file, "a.csv");
}

namespace {

Dataset tiny_dataset() {
  Dataset ds;
  for (int v = 0; v < 3; ++v) {
    VideoRecord rec{"vid" + std::to_string(v), "subj" + std::to_string(v), v < 2 ? "train" : "test", {}, sine_ppg(1.0 + 0.1 * v, 256.0, 3.0)};
    Video video = random_video(24, 8, 8, 20 + static_cast<std::uint64_t>(v));
    quantize_u8(video.frames);
    rec.clips = window_clips(video, 16, 4, rec.video_id);
    ds.videos.push_back(std::move(rec));
  }
  return ds;
}

}  // namespace

TEST(DatasetIo, SaveLoadAndSplits) {
  const auto dir = rppg::test::scratch_dir("dataset");
  const Dataset ds = tiny_dataset();
  save_dataset(dir, ds);
  const Dataset back = load_dataset(dir / "manifest.tsv", LoadPpg::Yes);
  ASSERT_EQ(back.videos.size(), 3u);
  EXPECT_EQ(back.clip_count(), 9u);
  EXPECT_EQ(back.split("train").videos.size(), 2u);
  EXPECT_EQ(back.split("test").clip_count(), 3u);
  for (std::size_t v = 0; v < 3; ++v) {
    ASSERT_TRUE(back.videos[v].ppg.has_value());
    EXPECT_EQ(back.videos[v].ppg->samples, ds.videos[v].ppg->samples);
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_EQ(back.videos[v].clips[c].frames.data, ds.videos[v].clips[c].frames.data);
      EXPECT_EQ(back.videos[v].clips[c].start, 4 * c);
    }
  }
  EXPECT_EQ(back.all_clips().size(), 9u);
}

TEST(DatasetIo, UnlabeledLoadIgnoresPpgFiles) {
  const auto dir = rppg::test::scratch_dir("dataset_noppg");
  save_dataset(dir, tiny_dataset());
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().extension() == ".rpgs") std::filesystem::remove(e.path());
  const Dataset back = load_dataset(dir / "manifest.tsv", LoadPpg::No);
  EXPECT_EQ(back.clip_count(), 9u);
  for (const auto& v : back.videos) EXPECT_FALSE(v.ppg.has_value());
  EXPECT_THROW(load_dataset(dir / "manifest.tsv", LoadPpg::Yes), FormatError);
}

TEST(DatasetIo, SubjectDisjointness) {
  const Dataset ds = tiny_dataset();
  EXPECT_NO_THROW(require_subject_disjoint(ds.split("train"), ds.split("test")));
  Dataset leak = ds.split("test");
  leak.videos[0].subject_id = "subj0";
  EXPECT_THROW(require_subject_disjoint(ds.split("train"), leak), std::invalid_argument);
}
