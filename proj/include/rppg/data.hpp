#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rppg/clip.hpp"
#include "rppg/tensor.hpp"

namespace rppg {

/// Full-length frame sequence, [T,H,W,3] in [0,1].
struct Video {
  TensorF frames;
  float fps = 0.0f;

  std::size_t frame_count() const { return frames.rank() == 4 ? frames.dim(0) : 0; }
};

struct Box {
  long x = 0, y = 0, w = 0, h = 0;
};

struct FrameBoxes {
  std::size_t frame = 0;
  Box forehead, left_cheek, right_cheek;
};

using Landmarks = std::vector<FrameBoxes>;

enum class RoiMode { Full, CheeksOnly, ForeheadOnly };
std::string_view roi_mode_name(RoiMode mode);  // full | cheeks | forehead
RoiMode parse_roi_mode(std::string_view name);

/// Crops the RoI boxes of every frame and composes an out_size x out_size RoI
/// frame. Full mode scales each box to out_size rows (aspect kept) and joins
/// forehead | left cheek | right cheek left to right before the final resize.
Video crop_roi(const Video& video, const Landmarks& landmarks, RoiMode mode = RoiMode::Full,
               std::size_t out_size = 64);

std::size_t window_count(std::size_t frames, std::size_t length, std::size_t stride);

/// Sliding windows at starts 0, stride, 2*stride, ...
std::vector<RoiClip> window_clips(const Video& roi, std::size_t length = 128, std::size_t stride = 8,
                                  const std::string& source_id = {});

struct PpgRecord {
  std::vector<float> samples;
  float rate = 0.0f;
};

/// Ground-truth targets at the clip's frame times.
struct PpgSegment {
  std::vector<float> samples;
  float rate = 0.0f;           // fps of the clip
  float original_rate = 0.0f;  // sensor rate
};

/// Linear interpolation of the PPG at frame times (start + k) / fps, k < frames.
/// Throws std::out_of_range if the record does not cover the span.
std::vector<double> resample_ppg(const PpgRecord& ppg, std::size_t start_frame, std::size_t frames,
                                 double fps);

/// Resampled and z-score normalized. Throws NumericError for a zero-variance segment.
PpgSegment align_ppg(const PpgRecord& ppg, std::size_t start_frame, std::size_t frames, float fps);

// ".rpgc": "RPGC", u16 version, u32 M, H, W, f32 fps, u8 RGB row-major.
// ".rpgs": "RPGS", u16 version, f32 rate, u32 count, f32 samples.
inline constexpr std::uint16_t kContainerVersion = 1;

std::vector<std::uint8_t> encode_clip(const Video& video);
Video decode_clip(const std::vector<std::uint8_t>& bytes);
void write_clip(const std::filesystem::path& path, const Video& video);
Video read_clip(const std::filesystem::path& path);
void write_clip(const std::filesystem::path& path, const RoiClip& clip);

std::vector<std::uint8_t> encode_ppg(const PpgRecord& ppg);
PpgRecord decode_ppg(const std::vector<std::uint8_t>& bytes);
void write_ppg(const std::filesystem::path& path, const PpgRecord& ppg);
PpgRecord read_ppg(const std::filesystem::path& path);

/// Rounds values to the 8-bit levels the clip container stores.
void quantize_u8(TensorF& frames);

// Landmark CSV, header row required:
// frame_index,forehead_x,forehead_y,forehead_w,forehead_h,left_cheek_x,...,right_cheek_h
Landmarks parse_landmarks(std::istream& in);
Landmarks read_landmarks(const std::filesystem::path& path);
void write_landmarks(const std::filesystem::path& path, const Landmarks& landmarks);

/// round(fraction * n) distinct indices, sampled uniformly, returned ascending.
std::vector<std::size_t> label_subset(std::size_t n, double fraction, std::uint64_t seed);

template <typename Item>
std::vector<Item> label_subset(const std::vector<Item>& items, double fraction, std::uint64_t seed) {
  std::vector<Item> out;
  for (std::size_t i : label_subset(items.size(), fraction, seed)) out.push_back(items[i]);
  return out;
}

// Dataset manifest: tab-separated lines
//   video_id  subject_id  split  ppg_file  start:clip_file;start:clip_file;...
// Lines starting with '#' are comments; paths are relative to the manifest.
struct ClipRef {
  std::size_t start = 0;
  std::string file;
};

struct ManifestEntry {
  std::string video_id;
  std::string subject_id;
  std::string split;
  std::string ppg_file;
  std::vector<ClipRef> clips;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

// Raw index (input to ingestion): tab-separated
//   video_id  subject_id  split  video_file  landmarks_file  ppg_file
struct RawEntry {
  std::string video_id;
  std::string subject_id;
  std::string split;
  std::string video_file;
  std::string landmarks_file;
  std::string ppg_file;
};

std::vector<RawEntry> read_raw_index(const std::filesystem::path& path);
void write_raw_index(const std::filesystem::path& path, const std::vector<RawEntry>& entries);

struct VideoRecord {
  std::string video_id;
  std::string subject_id;
  std::string split;
  std::vector<RoiClip> clips;     // ordered by window start
  std::optional<PpgRecord> ppg;   // absent for unlabeled loads
};

struct Dataset {
  std::vector<VideoRecord> videos;

  Dataset split(std::string_view tag) const;
  std::vector<RoiClip> all_clips() const;
  std::size_t clip_count() const;
};

enum class LoadPpg { No, Yes };

/// Reads a manifest and its clip files. With LoadPpg::No no PPG file is opened.
Dataset load_dataset(const std::filesystem::path& manifest, LoadPpg ppg);

/// Writes clip files, PPG files and "manifest.tsv" into `dir`.
void save_dataset(const std::filesystem::path& dir, const Dataset& dataset);

/// Throws std::invalid_argument if a subject appears in both sets.
void require_subject_disjoint(const Dataset& train, const Dataset& test);

}  // namespace rppg
