#include "rppg/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "binary_io.hpp"
#include "rppg/image.hpp"
#include "rppg/rng.hpp"

namespace rppg {
namespace {

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

bool skip_line(const std::string& line) {
  return line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos;
}

std::string chomp(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
  return s;
}

void check_box(const Box& b, std::size_t h, std::size_t w, std::size_t frame, const char* which) {
  if (b.w <= 0 || b.h <= 0) {
    throw std::invalid_argument(std::string("degenerate ") + which + " box at frame " + std::to_string(frame));
  }
  if (b.x < 0 || b.y < 0 || static_cast<std::size_t>(b.x + b.w) > w || static_cast<std::size_t>(b.y + b.h) > h) {
    throw std::out_of_range(std::string(which) + " box outside frame " + std::to_string(frame));
  }
}

TensorF crop_box(const float* frame, std::size_t h, std::size_t w, const Box& b, std::size_t out_h,
                 std::size_t out_w) {
  return resize_window(frame, h, w, 3, static_cast<std::size_t>(b.x), static_cast<std::size_t>(b.y),
                       static_cast<std::size_t>(b.w), static_cast<std::size_t>(b.h), out_h, out_w);
}

std::size_t scaled_width(const Box& b, std::size_t rows) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(
                                      static_cast<double>(b.w) * static_cast<double>(rows) / static_cast<double>(b.h))));
}

}  // namespace

std::string_view roi_mode_name(RoiMode mode) {
  switch (mode) {
    case RoiMode::Full: return "full";
    case RoiMode::CheeksOnly: return "cheeks";
    case RoiMode::ForeheadOnly: return "forehead";
  }
  return "?";
}

RoiMode parse_roi_mode(std::string_view name) {
  for (RoiMode m : {RoiMode::Full, RoiMode::CheeksOnly, RoiMode::ForeheadOnly})
    if (roi_mode_name(m) == name) return m;
  throw std::invalid_argument("unknown RoI mode '" + std::string(name) + "' (expected full|cheeks|forehead)");
}

Video crop_roi(const Video& video, const Landmarks& landmarks, RoiMode mode, std::size_t out_size) {
  if (video.frames.rank() != 4 || video.frames.dim(3) != 3) throw ShapeError("crop_roi expects [T,H,W,3]");
  if (out_size == 0) throw std::invalid_argument("crop_roi output size must be positive");
  const std::size_t t = video.frame_count(), h = video.frames.dim(1), w = video.frames.dim(2);
  std::vector<const FrameBoxes*> by_frame(t, nullptr);
  for (const auto& fb : landmarks)
    if (fb.frame < t) by_frame[fb.frame] = &fb;

  Video out;
  out.fps = video.fps;
  out.frames = TensorF({t, out_size, out_size, 3});
  const std::size_t fsz = h * w * 3, osz = out_size * out_size * 3;
  for (std::size_t f = 0; f < t; ++f) {
    const FrameBoxes* fb = by_frame[f];
    if (!fb) throw std::out_of_range("landmarks missing frame " + std::to_string(f));
    const float* src = video.frames.data.data() + f * fsz;
    std::vector<const Box*> boxes;
    if (mode != RoiMode::CheeksOnly) boxes.push_back(&fb->forehead);
    if (mode != RoiMode::ForeheadOnly) {
      boxes.push_back(&fb->left_cheek);
      boxes.push_back(&fb->right_cheek);
    }
    static const char* names[] = {"forehead", "left cheek", "right cheek"};
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      check_box(*boxes[i], h, w, f, names[mode == RoiMode::CheeksOnly ? i + 1 : i]);
    }
    TensorF composed;
    if (boxes.size() == 1) {
      composed = crop_box(src, h, w, *boxes[0], out_size, out_size);
    } else {
      std::vector<TensorF> parts;
      for (const Box* b : boxes) parts.push_back(crop_box(src, h, w, *b, out_size, scaled_width(*b, out_size)));
      composed = resize_bilinear(concat_horizontal(parts), out_size, out_size);
    }
    std::copy(composed.data.begin(), composed.data.end(), out.frames.data.begin() + static_cast<long>(f * osz));
  }
  return out;
}

std::size_t window_count(std::size_t frames, std::size_t length, std::size_t stride) {
  if (length == 0 || stride == 0) throw std::invalid_argument("window length and stride must be positive");
  if (frames < length) {
    throw std::invalid_argument("video has " + std::to_string(frames) + " frames, fewer than the window length " +
                                std::to_string(length));
  }
  return (frames - length) / stride + 1;
}

std::vector<RoiClip> window_clips(const Video& roi, std::size_t length, std::size_t stride,
                                  const std::string& source_id) {
  const std::size_t count = window_count(roi.frame_count(), length, stride);
  const std::size_t fsz = roi.frames.dim(1) * roi.frames.dim(2) * roi.frames.dim(3);
  std::vector<RoiClip> clips;
  clips.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    RoiClip c;
    c.start = i * stride;
    c.fps = roi.fps;
    c.source_id = source_id;
    c.frames = TensorF({length, roi.frames.dim(1), roi.frames.dim(2), roi.frames.dim(3)});
    std::copy_n(roi.frames.data.begin() + static_cast<long>(c.start * fsz), length * fsz, c.frames.data.begin());
    clips.push_back(std::move(c));
  }
  return clips;
}

std::vector<double> resample_ppg(const PpgRecord& ppg, std::size_t start_frame, std::size_t frames,
                                 double fps) {
  if (!(fps > 0) || !(ppg.rate > 0)) throw std::invalid_argument("resample_ppg needs positive rates");
  if (ppg.samples.size() < 2) throw std::out_of_range("PPG record too short");
  const double last = static_cast<double>(ppg.samples.size() - 1);
  std::vector<double> out(frames);
  for (std::size_t k = 0; k < frames; ++k) {
    const double pos = static_cast<double>(start_frame + k) / fps * ppg.rate;
    if (pos > last + 1e-6) {
      throw std::out_of_range("PPG record does not cover frame " + std::to_string(start_frame + k));
    }
    const double clamped = std::min(pos, last);
    const auto lo = static_cast<std::size_t>(std::floor(clamped));
    const std::size_t hi = std::min(lo + 1, ppg.samples.size() - 1);
    const double a = clamped - static_cast<double>(lo);
    out[k] = (1 - a) * ppg.samples[lo] + a * ppg.samples[hi];
  }
  return out;
}

PpgSegment align_ppg(const PpgRecord& ppg, std::size_t start_frame, std::size_t frames, float fps) {
  const auto values = resample_ppg(ppg, start_frame, frames, fps);
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(values.size()));
  if (!(sd > 1e-12)) throw NumericError("PPG segment has zero variance; cannot normalize");
  PpgSegment seg;
  seg.rate = fps;
  seg.original_rate = ppg.rate;
  seg.samples.reserve(values.size());
  for (double v : values) seg.samples.push_back(static_cast<float>((v - mean) / sd));
  return seg;
}

void quantize_u8(TensorF& frames) {
  for (auto& v : frames.data) v = std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f) / 255.0f;
}

std::vector<std::uint8_t> encode_clip(const Video& video) {
  if (video.frames.rank() != 4 || video.frames.dim(3) != 3) throw ShapeError("clip container stores [M,H,W,3]");
  detail::ByteWriter w;
  w.magic("RPGC");
  w.u16(kContainerVersion);
  for (int i = 0; i < 3; ++i) w.u32(static_cast<std::uint32_t>(video.frames.dim(static_cast<std::size_t>(i))));
  w.f32(video.fps);
  auto& bytes = w.bytes();
  bytes.reserve(bytes.size() + video.frames.size());
  for (float v : video.frames.data) {
    bytes.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)));
  }
  return std::move(bytes);
}

Video decode_clip(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes, "clip container");
  r.expect_magic("RPGC");
  const auto version = r.u16();
  if (version != kContainerVersion) throw FormatError("clip container: unsupported version " + std::to_string(version));
  const std::size_t m = r.u32(), h = r.u32(), w = r.u32();
  Video v;
  v.fps = r.f32();
  const std::size_t n = m * h * w * 3;
  const std::uint8_t* p = r.raw(n);
  r.expect_end();
  v.frames = TensorF({m, h, w, 3});
  for (std::size_t i = 0; i < n; ++i) v.frames.data[i] = static_cast<float>(p[i]) / 255.0f;
  return v;
}

void write_clip(const std::filesystem::path& path, const Video& video) { detail::write_file(path, encode_clip(video)); }

Video read_clip(const std::filesystem::path& path) { return decode_clip(detail::read_file(path)); }

void write_clip(const std::filesystem::path& path, const RoiClip& clip) {
  write_clip(path, Video{clip.frames, clip.fps});
}

std::vector<std::uint8_t> encode_ppg(const PpgRecord& ppg) {
  detail::ByteWriter w;
  w.magic("RPGS");
  w.u16(kContainerVersion);
  w.f32(ppg.rate);
  w.u32(static_cast<std::uint32_t>(ppg.samples.size()));
  for (float v : ppg.samples) w.f32(v);
  return std::move(w.bytes());
}

PpgRecord decode_ppg(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes, "PPG container");
  r.expect_magic("RPGS");
  const auto version = r.u16();
  if (version != kContainerVersion) throw FormatError("PPG container: unsupported version " + std::to_string(version));
  PpgRecord p;
  p.rate = r.f32();
  const std::size_t n = r.u32();
  if (n * 4 != r.remaining()) throw FormatError("PPG container: truncated");
  p.samples.resize(n);
  for (auto& v : p.samples) v = r.f32();
  return p;
}

void write_ppg(const std::filesystem::path& path, const PpgRecord& ppg) { detail::write_file(path, encode_ppg(ppg)); }

PpgRecord read_ppg(const std::filesystem::path& path) { return decode_ppg(detail::read_file(path)); }

Landmarks parse_landmarks(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || chomp(line).rfind("frame_index", 0) != 0) {
    throw FormatError("landmarks CSV: missing header row");
  }
  Landmarks out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = chomp(line);
    if (line.empty()) continue;
    const auto cells = split_on(line, ',');
    if (cells.size() != 13) {
      throw FormatError("landmarks CSV line " + std::to_string(lineno) + ": expected 13 fields");
    }
    long v[13];
    for (int i = 0; i < 13; ++i) {
      try {
        std::size_t used = 0;
        v[i] = std::stol(cells[static_cast<std::size_t>(i)], &used);
        if (used != cells[static_cast<std::size_t>(i)].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw FormatError("landmarks CSV line " + std::to_string(lineno) + ": bad integer");
      }
    }
    if (v[0] < 0) throw FormatError("landmarks CSV: negative frame index");
    out.push_back({static_cast<std::size_t>(v[0]), {v[1], v[2], v[3], v[4]}, {v[5], v[6], v[7], v[8]},
                   {v[9], v[10], v[11], v[12]}});
  }
  return out;
}

Landmarks read_landmarks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return parse_landmarks(in);
}

void write_landmarks(const std::filesystem::path& path, const Landmarks& landmarks) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "frame_index";
  for (const char* region : {"forehead", "left_cheek", "right_cheek"})
    for (const char* f : {"x", "y", "w", "h"}) out << ',' << region << '_' << f;
  out << '\n';
  for (const auto& fb : landmarks) {
    out << fb.frame;
    for (const Box* b : {&fb.forehead, &fb.left_cheek, &fb.right_cheek})
      out << ',' << b->x << ',' << b->y << ',' << b->w << ',' << b->h;
    out << '\n';
  }
}

std::vector<std::size_t> label_subset(std::size_t n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0) throw std::invalid_argument("label fraction must be in (0, 1]");
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (k == 0) throw std::invalid_argument("label subset is empty");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  // Partial Fisher-Yates: the first k slots are a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.uniform_index(n - i)]);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest " + path.string());
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = chomp(line);
    if (skip_line(line)) continue;
    const auto cells = split_on(line, '\t');
    if (cells.size() != 5) throw FormatError("manifest line " + std::to_string(lineno) + ": expected 5 fields");
    ManifestEntry e{cells[0], cells[1], cells[2], cells[3], {}};
    for (const auto& ref : split_on(cells[4], ';')) {
      if (ref.empty()) continue;
      const auto colon = ref.find(':');
      if (colon == std::string::npos) throw FormatError("manifest line " + std::to_string(lineno) + ": bad clip ref");
      e.clips.push_back({static_cast<std::size_t>(std::stoul(ref.substr(0, colon))), ref.substr(colon + 1)});
    }
    out.push_back(std::move(e));
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "# rppg dataset manifest v1\n# video_id\tsubject_id\tsplit\tppg_file\tclips (start:file;...)\n";
  for (const auto& e : entries) {
    out << e.video_id << '\t' << e.subject_id << '\t' << e.split << '\t' << e.ppg_file << '\t';
    for (std::size_t i = 0; i < e.clips.size(); ++i) out << (i ? ";" : "") << e.clips[i].start << ':' << e.clips[i].file;
    out << '\n';
  }
}

std::vector<RawEntry> read_raw_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open raw index " + path.string());
  std::vector<RawEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = chomp(line);
    if (skip_line(line)) continue;
    const auto c = split_on(line, '\t');
    if (c.size() != 6) throw FormatError("raw index line " + std::to_string(lineno) + ": expected 6 fields");
    out.push_back({c[0], c[1], c[2], c[3], c[4], c[5]});
  }
  return out;
}

void write_raw_index(const std::filesystem::path& path, const std::vector<RawEntry>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "# rppg raw index v1\n# video_id\tsubject_id\tsplit\tvideo_file\tlandmarks_file\tppg_file\n";
  for (const auto& e : entries) {
    out << e.video_id << '\t' << e.subject_id << '\t' << e.split << '\t' << e.video_file << '\t'
        << e.landmarks_file << '\t' << e.ppg_file << '\n';
  }
}

Dataset Dataset::split(std::string_view tag) const {
  Dataset out;
  for (const auto& v : videos)
    if (v.split == tag) out.videos.push_back(v);
  return out;
}

std::vector<RoiClip> Dataset::all_clips() const {
  std::vector<RoiClip> out;
  for (const auto& v : videos) out.insert(out.end(), v.clips.begin(), v.clips.end());
  return out;
}

std::size_t Dataset::clip_count() const {
  std::size_t n = 0;
  for (const auto& v : videos) n += v.clips.size();
  return n;
}

Dataset load_dataset(const std::filesystem::path& manifest, LoadPpg ppg) {
  const auto dir = manifest.parent_path();
  Dataset ds;
  for (const auto& e : read_manifest(manifest)) {
    VideoRecord rec{e.video_id, e.subject_id, e.split, {}, std::nullopt};
    for (const auto& ref : e.clips) {
      Video v = read_clip(dir / ref.file);
      RoiClip c;
      c.frames = std::move(v.frames);
      c.fps = v.fps;
      c.source_id = e.video_id;
      c.start = ref.start;
      rec.clips.push_back(std::move(c));
    }
    std::sort(rec.clips.begin(), rec.clips.end(), [](const RoiClip& a, const RoiClip& b) { return a.start < b.start; });
    if (ppg == LoadPpg::Yes) rec.ppg = read_ppg(dir / e.ppg_file);
    ds.videos.push_back(std::move(rec));
  }
  std::sort(ds.videos.begin(), ds.videos.end(),
            [](const VideoRecord& a, const VideoRecord& b) { return a.video_id < b.video_id; });
  return ds;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
  std::filesystem::create_directories(dir);
  std::vector<ManifestEntry> entries;
  for (const auto& v : dataset.videos) {
    ManifestEntry e{v.video_id, v.subject_id, v.split, v.video_id + ".rpgs", {}};
    if (!v.ppg) throw std::invalid_argument("save_dataset: video " + v.video_id + " has no PPG");
    write_ppg(dir / e.ppg_file, *v.ppg);
    for (const auto& c : v.clips) {
      std::ostringstream name;
      name << v.video_id << "_w" << std::setw(5) << std::setfill('0') << c.start << ".rpgc";
      write_clip(dir / name.str(), c);
      e.clips.push_back({c.start, name.str()});
    }
    entries.push_back(std::move(e));
  }
  write_manifest(dir / "manifest.tsv", entries);
}

void require_subject_disjoint(const Dataset& train, const Dataset& test) {
  std::set<std::string> subjects;
  for (const auto& v : train.videos) subjects.insert(v.subject_id);
  for (const auto& v : test.videos) {
    if (subjects.count(v.subject_id)) {
      throw std::invalid_argument("subject " + v.subject_id + " appears in both train and test sets");
    }
  }
}

}  // namespace rppg
