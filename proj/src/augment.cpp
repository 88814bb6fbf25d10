#include "rppg/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "rppg/image.hpp"

namespace rppg {
namespace {

constexpr std::size_t kChannels = 3;

void check_clip(const RoiClip& clip, AugKind kind) {
  if (clip.frames.rank() != 4 || clip.frames.dim(3) != kChannels) {
    throw ShapeError("augment expects [M,H,W,3] frames, got " + to_string(clip.frames.shape));
  }
  if (is_temporal(kind)) {
    if (clip.frame_count() < 2) throw std::invalid_argument("temporal augmentation needs M >= 2");
  } else if (clip.height() != clip.width() || clip.height() < 8) {
    throw std::invalid_argument("spatial augmentation needs square frames of side >= 8");
  }
}

// Bilinear read with zeros outside the image.
float sample_zero_pad(const float* frame, std::size_t h, std::size_t w, double x, double y,
                      std::size_t c) {
  const double fx = std::floor(x), fy = std::floor(y);
  const long x0 = static_cast<long>(fx), y0 = static_cast<long>(fy);
  const double ax = x - fx, ay = y - fy;
  auto px = [&](long xi, long yi) -> double {
    if (xi < 0 || yi < 0 || xi >= static_cast<long>(w) || yi >= static_cast<long>(h)) return 0.0;
    return frame[(static_cast<std::size_t>(yi) * w + static_cast<std::size_t>(xi)) * kChannels + c];
  };
  const double top = px(x0, y0) * (1 - ax) + px(x0 + 1, y0) * ax;
  const double bottom = px(x0, y0 + 1) * (1 - ax) + px(x0 + 1, y0 + 1) * ax;
  return static_cast<float>(top * (1 - ay) + bottom * ay);
}

RoiClip rotate(const RoiClip& clip, int angle_deg) {
  RoiClip out = clip;
  const std::size_t m = clip.frame_count(), h = clip.height(), w = clip.width();
  const std::size_t fsz = clip.frame_size();
  const int quarter = ((angle_deg % 360) + 360) % 360;
  if (quarter % 90 == 0) {
    // Exact index permutation for right angles (square frames).
    for (std::size_t f = 0; f < m; ++f) {
      const float* src = clip.frames.data.data() + f * fsz;
      float* dst = out.frames.data.data() + f * fsz;
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          std::size_t sx = x, sy = y;
          switch (quarter) {
            case 90: sx = y; sy = w - 1 - x; break;
            case 180: sx = w - 1 - x; sy = h - 1 - y; break;
            case 270: sx = w - 1 - y; sy = x; break;
            default: break;
          }
          std::copy_n(src + (sy * w + sx) * kChannels, kChannels, dst + (y * w + x) * kChannels);
        }
    }
    return out;
  }
  const double rad = angle_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(rad), sn = std::sin(rad);
  const double cx = (static_cast<double>(w) - 1) / 2, cy = (static_cast<double>(h) - 1) / 2;
  for (std::size_t f = 0; f < m; ++f) {
    const float* src = clip.frames.data.data() + f * fsz;
    float* dst = out.frames.data.data() + f * fsz;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
        const double sx = cx + cs * dx + sn * dy;
        const double sy = cy - sn * dx + cs * dy;
        for (std::size_t c = 0; c < kChannels; ++c)
          dst[(y * w + x) * kChannels + c] = sample_zero_pad(src, h, w, sx, sy, c);
      }
  }
  return out;
}

std::size_t crop_extent(double scale, std::size_t side) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(scale * static_cast<double>(side))));
}

RoiClip crop(const RoiClip& clip, const AugParams& p) {
  const std::size_t m = clip.frame_count(), h = clip.height(), w = clip.width();
  const std::size_t cw = crop_extent(p.crop_scale, w), ch = crop_extent(p.crop_scale, h);
  if (p.anchor_x + cw > w || p.anchor_y + ch > h) throw std::invalid_argument("crop anchor out of range");
  RoiClip out = clip;
  const std::size_t fsz = clip.frame_size();
  for (std::size_t f = 0; f < m; ++f) {
    TensorF r = resize_window(clip.frames.data.data() + f * fsz, h, w, kChannels, p.anchor_x,
                              p.anchor_y, cw, ch, h, w);
    std::copy(r.data.begin(), r.data.end(), out.frames.data.begin() + static_cast<long>(f * fsz));
  }
  return out;
}

RoiClip flip(const RoiClip& clip) {
  RoiClip out = clip;
  const std::size_t m = clip.frame_count(), h = clip.height(), w = clip.width();
  const std::size_t fsz = clip.frame_size();
  for (std::size_t f = 0; f < m; ++f)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        std::copy_n(clip.frames.data.data() + f * fsz + (y * w + (w - 1 - x)) * kChannels, kChannels,
                    out.frames.data.data() + f * fsz + (y * w + x) * kChannels);
  return out;
}

RoiClip permute_frames(const RoiClip& clip, const std::vector<std::size_t>& map) {
  RoiClip out = clip;
  const std::size_t fsz = clip.frame_size();
  for (std::size_t k = 0; k < map.size(); ++k)
    std::copy_n(clip.frames.data.data() + map[k] * fsz, fsz, out.frames.data.data() + k * fsz);
  return out;
}

}  // namespace

std::string_view aug_name(AugKind kind) {
  switch (kind) {
    case AugKind::Rotation: return "rot";
    case AugKind::Crop: return "crop";
    case AugKind::Flip: return "flip";
    case AugKind::Shuffle: return "shuffle";
    case AugKind::Reorder: return "reorder";
    case AugKind::Reverse: return "reverse";
  }
  return "?";
}

AugKind parse_aug_kind(std::string_view name) {
  for (AugKind k : {AugKind::Rotation, AugKind::Crop, AugKind::Flip, AugKind::Shuffle,
                    AugKind::Reorder, AugKind::Reverse}) {
    if (aug_name(k) == name) return k;
  }
  throw std::invalid_argument("unknown augmentation '" + std::string(name) +
                              "' (expected crop|rot|flip|shuffle|reorder|reverse)");
}

bool is_temporal(AugKind kind) {
  return kind == AugKind::Shuffle || kind == AugKind::Reorder || kind == AugKind::Reverse;
}

AugParams sample_aug_params(AugKind kind, std::size_t frames, std::size_t height,
                            std::size_t width, Rng& rng) {
  AugParams p;
  p.kind = kind;
  switch (kind) {
    case AugKind::Rotation:
      p.angle_deg = static_cast<int>(rng.uniform_int(1, 360));
      break;
    case AugKind::Crop: {
      p.crop_scale = rng.uniform(0.25, 0.75);
      const std::size_t cw = crop_extent(p.crop_scale, width), ch = crop_extent(p.crop_scale, height);
      p.anchor_x = static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(width - cw)));
      p.anchor_y = static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(height - ch)));
      break;
    }
    case AugKind::Flip:
      break;
    case AugKind::Shuffle: {
      p.permutation.resize(frames);
      std::iota(p.permutation.begin(), p.permutation.end(), std::size_t{0});
      for (std::size_t i = frames; i > 1; --i) std::swap(p.permutation[i - 1], p.permutation[rng.uniform_index(i)]);
      break;
    }
    case AugKind::Reorder:
      if (frames < 2) throw std::invalid_argument("reorder needs M >= 2");
      p.cut = static_cast<std::size_t>(rng.uniform_int(2, static_cast<long>(frames)));
      break;
    case AugKind::Reverse:
      break;
  }
  return p;
}

std::vector<std::size_t> temporal_index_map(const AugParams& p, std::size_t m) {
  std::vector<std::size_t> map(m);
  switch (p.kind) {
    case AugKind::Shuffle:
      if (p.permutation.size() != m) throw std::invalid_argument("shuffle permutation length mismatch");
      map = p.permutation;
      break;
    case AugKind::Reorder: {
      if (p.cut < 2 || p.cut > m) throw std::invalid_argument("reorder cut must be in 2..M");
      // [x_b, x_a] with x_b = frames cut..M (1-based), x_a = 1..cut-1.
      const std::size_t tail = m - (p.cut - 1);
      for (std::size_t k = 0; k < m; ++k) map[k] = k < tail ? p.cut - 1 + k : k - tail;
      break;
    }
    case AugKind::Reverse:
      for (std::size_t k = 0; k < m; ++k) map[k] = m - 1 - k;
      break;
    default:
      throw std::invalid_argument("not a temporal augmentation");
  }
  return map;
}

RoiClip apply_augmentation(const RoiClip& clip, const AugParams& params) {
  check_clip(clip, params.kind);
  switch (params.kind) {
    case AugKind::Rotation: return rotate(clip, params.angle_deg);
    case AugKind::Crop: return crop(clip, params);
    case AugKind::Flip: return flip(clip);
    default: return permute_frames(clip, temporal_index_map(params, clip.frame_count()));
  }
}

RoiClip augment(const RoiClip& clip, AugKind kind, Rng& rng) {
  check_clip(clip, kind);
  const AugParams p = sample_aug_params(kind, clip.frame_count(), clip.height(), clip.width(), rng);
  return apply_augmentation(clip, p);
}

std::pair<RoiClip, RoiClip> make_positive_pair(const RoiClip& clip, AugKind kind, Rng& rng) {
  return {clip, augment(clip, kind, rng)};
}

}  // namespace rppg
