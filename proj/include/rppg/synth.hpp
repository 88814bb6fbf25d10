#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rppg/data.hpp"

namespace rppg {

/// One synthetic face video with a known pulse.
struct SynthSpec {
  double hr_bpm = 72.0;
  float fps = 20.0f;
  std::size_t frames = 128;
  std::size_t width = 64;
  std::size_t height = 64;
  std::array<double, 3> skin_rgb{0.72, 0.52, 0.42};
  double pulse_amplitude = 0.03;                    // relative brightness swing of the skin
  std::array<double, 3> pulse_weights{0.35, 1.0, 0.55};  // per channel, green strongest
  double noise_sigma = 0.0;                          // Gaussian pixel noise
  double texture_sigma = 0.04;                       // static multiplicative skin texture
  double motion_amplitude = 0.0;                     // pixels, integer offsets
  double motion_hz = 0.2;
  double illumination_amplitude = 0.0;               // white flicker, relative
  double illumination_hz = 2.5;
  double phase = 0.0;
  float ppg_rate = 256.0f;
  bool quantize = true;                              // round frames to 8-bit levels
  std::uint64_t seed = 0;
};

struct SynthVideo {
  Video video;
  Landmarks landmarks;
  PpgRecord ppg;  // clean sinusoid at ppg_rate
};

/// Throws std::invalid_argument for hr outside [42, 240] or a frame too small for the face.
SynthVideo synth_video(const SynthSpec& spec);

/// Per-frame mean over the three RoI boxes of channel `channel` (-1: all channels).
std::vector<double> roi_mean_trace(const SynthVideo& sv, int channel = -1);

struct SynthDatasetSpec {
  std::size_t train_videos = 20;
  std::size_t test_videos = 8;
  double hr_min = 50.0;
  double hr_max = 110.0;
  SynthSpec base;                 // hr, phase, skin and seed are drawn per video
  double skin_jitter = 0.05;
  // Flicker frequency is drawn in [lo, hi] Hz, away from the pulse.
  double illumination_hz_lo = 0.8;
  double illumination_hz_hi = 3.0;
  std::size_t roi_size = 64;
  std::size_t clip_length = 128;
  std::size_t stride = 8;
  std::uint64_t seed = 0;
};

struct SynthItem {
  RawEntry entry;        // ids and split; file names are filled by write_synthetic_raw
  SynthSpec spec;
  SynthVideo data;
};

/// Each video is its own subject. Splits are "train" then "test".
std::vector<SynthItem> make_synthetic_videos(const SynthDatasetSpec& spec);

/// Renders, crops (full RoI mode) and windows every video.
Dataset make_synthetic_dataset(const SynthDatasetSpec& spec);

/// Clips and PPG for one raw video, as ingestion produces them.
VideoRecord ingest_video(const RawEntry& entry, const Video& video, const Landmarks& landmarks,
                         const PpgRecord& ppg, std::size_t roi_size, std::size_t clip_length,
                         std::size_t stride, RoiMode mode = RoiMode::Full);

/// Writes raw videos (.rpgc), landmarks (.csv), PPG (.rpgs) and "raw_index.tsv".
void write_synthetic_raw(const std::filesystem::path& dir, std::vector<SynthItem>& items);

}  // namespace rppg
