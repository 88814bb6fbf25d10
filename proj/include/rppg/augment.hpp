#pragma once

#include <string_view>
#include <utility>
#include <vector>

#include "rppg/clip.hpp"
#include "rppg/rng.hpp"

namespace rppg {

enum class AugKind { Rotation, Crop, Flip, Shuffle, Reorder, Reverse };

/// CLI spelling: rot|crop|flip|shuffle|reorder|reverse.
std::string_view aug_name(AugKind kind);
AugKind parse_aug_kind(std::string_view name);
bool is_temporal(AugKind kind);

/// Concrete draw of one augmentation. Only the fields used by `kind` are meaningful.
struct AugParams {
  AugKind kind = AugKind::Flip;
  int angle_deg = 0;           // Rotation, 1..360
  double crop_scale = 0.0;     // Crop, [0.25, 0.75]
  std::size_t anchor_x = 0;    // Crop, 0..W - floor(scale*W)
  std::size_t anchor_y = 0;    // Crop, 0..H - floor(scale*H)
  std::size_t cut = 0;         // Reorder, 1-based start of the tail segment, 2..M
  std::vector<std::size_t> permutation;  // Shuffle, output frame k = input frame permutation[k]
};

AugParams sample_aug_params(AugKind kind, std::size_t frames, std::size_t height,
                            std::size_t width, Rng& rng);

/// Deterministic application of drawn parameters.
RoiClip apply_augmentation(const RoiClip& clip, const AugParams& params);

RoiClip augment(const RoiClip& clip, AugKind kind, Rng& rng);

/// (x, x') for contrastive pre-training; x is returned unchanged.
std::pair<RoiClip, RoiClip> make_positive_pair(const RoiClip& clip, AugKind kind, Rng& rng);

/// Frame index map for the temporal kinds: output frame k reads input frame map[k].
std::vector<std::size_t> temporal_index_map(const AugParams& params, std::size_t frames);

}  // namespace rppg
