#include "rppg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "rppg/rng.hpp"

namespace rppg {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct FaceLayout {
  long face_x0, face_y0, face_x1, face_y1;
  Box forehead, left_cheek, right_cheek;
};

long frac(std::size_t n, double f) { return static_cast<long>(std::lround(f * static_cast<double>(n))); }

FaceLayout layout_for(std::size_t w, std::size_t h) {
  FaceLayout f;
  f.face_x0 = frac(w, 0.2);
  f.face_x1 = frac(w, 0.8);
  f.face_y0 = frac(h, 0.1);
  f.face_y1 = frac(h, 0.92);
  f.forehead = {frac(w, 0.32), frac(h, 0.16), frac(w, 0.36), frac(h, 0.18)};
  f.left_cheek = {frac(w, 0.26), frac(h, 0.5), frac(w, 0.18), frac(h, 0.22)};
  f.right_cheek = {frac(w, 0.56), frac(h, 0.5), frac(w, 0.18), frac(h, 0.22)};
  return f;
}

Box shifted(Box b, long dx, long dy) {
  b.x += dx;
  b.y += dy;
  return b;
}

}  // namespace

SynthVideo synth_video(const SynthSpec& spec) {
  if (!(spec.hr_bpm >= 42.0 && spec.hr_bpm <= 240.0)) {
    throw std::invalid_argument("synthetic hr must lie in [42, 240] bpm");
  }
  if (!(spec.fps > 0) || spec.frames == 0 || !(spec.ppg_rate > 0)) {
    throw std::invalid_argument("synthetic video needs positive fps, frame count and PPG rate");
  }
  if (spec.width < 24 || spec.height < 24) throw std::invalid_argument("synthetic frame must be at least 24x24");
  const long max_shift = static_cast<long>(std::ceil(std::abs(spec.motion_amplitude)));
  if (max_shift > frac(spec.width, 0.08) || max_shift > frac(spec.height, 0.08)) {
    throw std::invalid_argument("motion amplitude would push the face out of frame");
  }

  const std::size_t W = spec.width, H = spec.height;
  const FaceLayout lay = layout_for(W, H);
  Rng rng(mix64(spec.seed));

  // Static texture in face coordinates so it moves with the face.
  const std::size_t tex_w = static_cast<std::size_t>(lay.face_x1 - lay.face_x0);
  const std::size_t tex_h = static_cast<std::size_t>(lay.face_y1 - lay.face_y0);
  std::vector<double> texture(tex_w * tex_h);
  for (auto& t : texture) t = 1.0 + spec.texture_sigma * rng.normal();
  const double background[3] = {0.18, 0.2, 0.24};

  SynthVideo out;
  out.video.fps = spec.fps;
  out.video.frames = TensorF({spec.frames, H, W, 3});
  const double f_hr = spec.hr_bpm / 60.0;
  auto& px = out.video.frames.data;
  for (std::size_t f = 0; f < spec.frames; ++f) {
    const double t = static_cast<double>(f) / spec.fps;
    const double pulse = std::sin(kTwoPi * f_hr * t + spec.phase);
    const double light = 1.0 + spec.illumination_amplitude * std::sin(kTwoPi * spec.illumination_hz * t);
    const long dx = std::lround(spec.motion_amplitude * std::sin(kTwoPi * spec.motion_hz * t));
    const long dy = std::lround(0.5 * spec.motion_amplitude * std::sin(kTwoPi * spec.motion_hz * t + 1.0));
    double skin[3];
    for (int c = 0; c < 3; ++c) skin[c] = spec.skin_rgb[c] * (1.0 + spec.pulse_amplitude * spec.pulse_weights[c] * pulse);

    for (std::size_t y = 0; y < H; ++y) {
      for (std::size_t x = 0; x < W; ++x) {
        const long u = static_cast<long>(x) - dx, v = static_cast<long>(y) - dy;
        const bool face = u >= lay.face_x0 && u < lay.face_x1 && v >= lay.face_y0 && v < lay.face_y1;
        const double tex =
            face ? texture[static_cast<std::size_t>(v - lay.face_y0) * tex_w + static_cast<std::size_t>(u - lay.face_x0)]
                 : 1.0;
        float* p = px.data() + ((f * H + y) * W + x) * 3;
        for (int c = 0; c < 3; ++c) {
          double val = (face ? skin[c] * tex : background[c]) * light;
          if (spec.noise_sigma > 0) val += spec.noise_sigma * rng.normal();
          p[c] = static_cast<float>(std::clamp(val, 0.0, 1.0));
        }
      }
    }
    out.landmarks.push_back({f, shifted(lay.forehead, dx, dy), shifted(lay.left_cheek, dx, dy),
                             shifted(lay.right_cheek, dx, dy)});
  }
  if (spec.quantize) quantize_u8(out.video.frames);

  // PPG covers every frame time, plus one sample of slack for interpolation.
  const double duration = static_cast<double>(spec.frames) / spec.fps;
  const auto n_ppg = static_cast<std::size_t>(std::ceil(duration * spec.ppg_rate)) + 1;
  out.ppg.rate = spec.ppg_rate;
  out.ppg.samples.resize(n_ppg);
  for (std::size_t i = 0; i < n_ppg; ++i) {
    out.ppg.samples[i] =
        static_cast<float>(std::sin(kTwoPi * f_hr * static_cast<double>(i) / spec.ppg_rate + spec.phase));
  }
  return out;
}

std::vector<double> roi_mean_trace(const SynthVideo& sv, int channel) {
  const auto& fr = sv.video.frames;
  const std::size_t H = fr.dim(1), W = fr.dim(2);
  std::vector<double> trace;
  for (const auto& fb : sv.landmarks) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const Box* b : {&fb.forehead, &fb.left_cheek, &fb.right_cheek}) {
      for (long y = b->y; y < b->y + b->h; ++y) {
        for (long x = b->x; x < b->x + b->w; ++x) {
          const float* p = fr.data.data() + ((fb.frame * H + static_cast<std::size_t>(y)) * W + static_cast<std::size_t>(x)) * 3;
          for (int c = 0; c < 3; ++c) {
            if (channel >= 0 && c != channel) continue;
            sum += p[c];
            ++count;
          }
        }
      }
    }
    trace.push_back(sum / static_cast<double>(count));
  }
  return trace;
}

std::vector<SynthItem> make_synthetic_videos(const SynthDatasetSpec& spec) {
  if (!(spec.hr_min >= 42.0 && spec.hr_max <= 240.0 && spec.hr_min <= spec.hr_max)) {
    throw std::invalid_argument("synthetic HR range must lie in [42, 240]");
  }
  std::vector<SynthItem> items;
  const std::size_t total = spec.train_videos + spec.test_videos;
  for (std::size_t i = 0; i < total; ++i) {
    Rng rng(derive_seed(spec.seed, 0x5e7d, i));
    SynthItem item;
    std::ostringstream id;
    id << "syn" << std::setw(3) << std::setfill('0') << i;
    item.entry.video_id = id.str();
    item.entry.subject_id = "subj_" + id.str();
    item.entry.split = i < spec.train_videos ? "train" : "test";

    SynthSpec s = spec.base;
    s.hr_bpm = rng.uniform(spec.hr_min, spec.hr_max);
    s.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (auto& c : s.skin_rgb) c = std::clamp(c + spec.skin_jitter * (2.0 * rng.uniform() - 1.0), 0.05, 0.95);
    // Keep the flicker at least 0.3 Hz away from the pulse so the two stay separable.
    do {
      s.illumination_hz = rng.uniform(spec.illumination_hz_lo, spec.illumination_hz_hi);
    } while (std::abs(s.illumination_hz - s.hr_bpm / 60.0) < 0.3);
    s.seed = rng.next_u64();
    item.spec = s;
    item.data = synth_video(s);
    items.push_back(std::move(item));
  }
  return items;
}

VideoRecord ingest_video(const RawEntry& entry, const Video& video, const Landmarks& landmarks,
                         const PpgRecord& ppg, std::size_t roi_size, std::size_t clip_length,
                         std::size_t stride, RoiMode mode) {
  VideoRecord rec;
  rec.video_id = entry.video_id;
  rec.subject_id = entry.subject_id;
  rec.split = entry.split;
  const Video roi = crop_roi(video, landmarks, mode, roi_size);
  rec.clips = window_clips(roi, clip_length, stride, entry.video_id);
  // Resampled crops are requantized so in-memory clips match what the container stores.
  for (auto& c : rec.clips) quantize_u8(c.frames);
  rec.ppg = ppg;
  return rec;
}

Dataset make_synthetic_dataset(const SynthDatasetSpec& spec) {
  Dataset ds;
  for (const auto& item : make_synthetic_videos(spec)) {
    ds.videos.push_back(ingest_video(item.entry, item.data.video, item.data.landmarks, item.data.ppg,
                                     spec.roi_size, spec.clip_length, spec.stride));
  }
  return ds;
}

void write_synthetic_raw(const std::filesystem::path& dir, std::vector<SynthItem>& items) {
  std::filesystem::create_directories(dir);
  std::vector<RawEntry> index;
  for (auto& item : items) {
    auto& e = item.entry;
    e.video_file = e.video_id + "_video.rpgc";
    e.landmarks_file = e.video_id + "_landmarks.csv";
    e.ppg_file = e.video_id + "_ppg.rpgs";
    write_clip(dir / e.video_file, item.data.video);
    write_landmarks(dir / e.landmarks_file, item.data.landmarks);
    write_ppg(dir / e.ppg_file, item.data.ppg);
    index.push_back(e);
  }
  write_raw_index(dir / "raw_index.tsv", index);
}

}  // namespace rppg
