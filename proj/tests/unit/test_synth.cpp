#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "rppg/signal.hpp"
#include "rppg/synth.hpp"

using namespace rppg;

namespace {

RppgSignal trace_of(const SynthVideo& sv, int channel = 1) {
  return {roi_mean_trace(sv, channel), sv.video.fps};
}

}  // namespace

TEST(Synth, SeventyTwoBpmTrace) {
  SynthSpec s;
  s.hr_bpm = 72.0;
  s.fps = 20.0f;
  s.noise_sigma = 0.0;
  const SynthVideo sv = synth_video(s);
  EXPECT_EQ(sv.video.frames.shape, (Shape{128, 64, 64, 3}));
  EXPECT_EQ(sv.landmarks.size(), 128u);
  EXPECT_NEAR(estimate_hr(trace_of(sv)), 72.0, 0.5);
  EXPECT_NEAR(estimate_hr(trace_of(sv, -1)), 72.0, 0.5);
  // Reference PPG carries the same rate.
  RppgSignal ref{std::vector<double>(sv.ppg.samples.begin(), sv.ppg.samples.end()), sv.ppg.rate};
  WelchOptions w;
  w.segment_len = ref.samples.size();
  w.fft_len = 1 << 16;  // 256 Hz needs finer padding than the 20 fps default
  EXPECT_NEAR(estimate_hr(ref, {HrBand{}, w}), 72.0, 0.5);
  EXPECT_GE(sv.ppg.samples.size(), static_cast<std::size_t>(6.35 * 256));
}

TEST(Synth, SweepOfRates) {
  for (double hr : {50.0, 63.0, 88.5, 110.0}) {
    SynthSpec s;
    s.hr_bpm = hr;
    s.seed = static_cast<std::uint64_t>(hr);
    EXPECT_NEAR(estimate_hr(trace_of(synth_video(s))), hr, 0.5) << hr;
  }
}

TEST(Synth, ZeroAmplitudeIsANegativeControl) {
  // With no pulse the trace is flat up to 8-bit rounding of a static image,
  // so any estimate is unrelated to the nominal rate.
  std::set<long> estimates;
  int failures = 0;
  for (double hr : {60.0, 80.0, 100.0}) {
    SynthSpec s;
    s.hr_bpm = hr;
    s.pulse_amplitude = 0.0;
    try {
      estimates.insert(std::lround(estimate_hr(trace_of(synth_video(s)))));
    } catch (const SpectrumError&) {
      ++failures;
    }
  }
  EXPECT_EQ(failures, 3);
  EXPECT_TRUE(estimates.empty());
}

TEST(Synth, SameSeedSameBytes) {
  SynthSpec s;
  s.noise_sigma = 0.02;
  s.motion_amplitude = 2.0;
  s.illumination_amplitude = 0.03;
  s.seed = 11;
  const SynthVideo a = synth_video(s), b = synth_video(s);
  EXPECT_EQ(a.video.frames.data, b.video.frames.data);
  EXPECT_EQ(a.ppg.samples, b.ppg.samples);
  s.seed = 12;
  EXPECT_NE(synth_video(s).video.frames.data, a.video.frames.data);
}

TEST(Synth, LandmarksTrackMotionAndStayInside) {
  SynthSpec s;
  s.motion_amplitude = 4.0;
  s.motion_hz = 0.5;
  const SynthVideo sv = synth_video(s);
  std::set<long> xs;
  for (const auto& fb : sv.landmarks) {
    for (const Box& b : {fb.forehead, fb.left_cheek, fb.right_cheek}) {
      EXPECT_GE(b.x, 0);
      EXPECT_GE(b.y, 0);
      EXPECT_LE(b.x + b.w, 64);
      EXPECT_LE(b.y + b.h, 64);
    }
    xs.insert(fb.forehead.x);
  }
  EXPECT_GT(xs.size(), 3u);
  // Noise-free frames with motion still give the right rate from the tracked boxes.
  EXPECT_NEAR(estimate_hr(trace_of(sv)), 72.0, 0.5);
}

TEST(Synth, InvalidSpecs) {
  SynthSpec s;
  s.hr_bpm = 30.0;
  EXPECT_THROW(synth_video(s), std::invalid_argument);
  s.hr_bpm = 250.0;
  EXPECT_THROW(synth_video(s), std::invalid_argument);
  s = {};
  s.width = 16;
  EXPECT_THROW(synth_video(s), std::invalid_argument);
}

TEST(SynthDataset, SplitsSubjectsAndRates) {
  SynthDatasetSpec spec;
  spec.train_videos = 3;
  spec.test_videos = 2;
  spec.base.frames = 80;
  spec.base.width = spec.base.height = 48;
  spec.roi_size = 32;
  spec.clip_length = 64;
  spec.stride = 8;
  spec.seed = 5;
  const auto items = make_synthetic_videos(spec);
  ASSERT_EQ(items.size(), 5u);
  std::set<std::string> subjects;
  for (std::size_t i = 0; i < items.size(); ++i) {
    EXPECT_EQ(items[i].entry.split, i < 3 ? "train" : "test");
    EXPECT_GE(items[i].spec.hr_bpm, 50.0);
    EXPECT_LE(items[i].spec.hr_bpm, 110.0);
    subjects.insert(items[i].entry.subject_id);
  }
  EXPECT_EQ(subjects.size(), 5u);
  const Dataset ds = make_synthetic_dataset(spec);
  EXPECT_EQ(ds.clip_count(), 5u * 3);
  EXPECT_EQ(ds.videos[0].clips[0].frames.shape, (Shape{64, 32, 32, 3}));
  EXPECT_NO_THROW(require_subject_disjoint(ds.split("train"), ds.split("test")));
  // Ingestion reproduces the in-memory dataset.
  EXPECT_EQ(ds.videos[1].clips[2].frames.data,
            ingest_video(items[1].entry, items[1].data.video, items[1].data.landmarks, items[1].data.ppg, 32, 64, 8)
                .clips[2]
                .frames.data);
}

TEST(SynthDataset, RawFilesRoundTrip) {
  SynthDatasetSpec spec;
  spec.train_videos = 1;
  spec.test_videos = 1;
  spec.base.frames = 64;
  spec.base.width = spec.base.height = 32;
  auto items = make_synthetic_videos(spec);
  const auto dir = rppg::test::scratch_dir("synth_raw");
  write_synthetic_raw(dir, items);
  const auto raw = read_raw_index(dir / "raw_index.tsv");
  ASSERT_EQ(raw.size(), 2u);
  const Video v = read_clip(dir / raw[0].video_file);
  EXPECT_EQ(v.frames.data, items[0].data.video.frames.data);
  EXPECT_EQ(read_landmarks(dir / raw[0].landmarks_file).size(), 64u);
  EXPECT_EQ(read_ppg(dir / raw[1].ppg_file).samples, items[1].data.ppg.samples);
}
