#pragma once

#include <cstddef>
#include <string>

#include "rppg/tensor.hpp"

namespace rppg {

/// Fixed-length window of RoI frames, [M,H,W,3] with values in [0,1].
struct RoiClip {
  TensorF frames;
  float fps = 0.0f;
  std::string source_id;
  std::size_t start = 0;  // first frame index within the source video

  std::size_t frame_count() const { return frames.rank() == 4 ? frames.dim(0) : 0; }
  std::size_t height() const { return frames.dim(1); }
  std::size_t width() const { return frames.dim(2); }
  std::size_t frame_size() const { return frames.dim(1) * frames.dim(2) * frames.dim(3); }
};

}  // namespace rppg
