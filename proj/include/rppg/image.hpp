#pragma once

#include <cstddef>

#include "rppg/tensor.hpp"

namespace rppg {

/// Bilinear resize of a sub-window [x0, x0+w) x [y0, y0+h) of an [H,W,C] image
/// to [out_h, out_w, C]. Sample positions follow the half-pixel-center convention
/// and clamp at the window border.
TensorF resize_window(const float* image, std::size_t height, std::size_t width,
                      std::size_t channels, std::size_t x0, std::size_t y0, std::size_t w,
                      std::size_t h, std::size_t out_h, std::size_t out_w);

TensorF resize_bilinear(const TensorF& image, std::size_t out_h, std::size_t out_w);

/// Places [H,Wi,C] images side by side; all heights and channel counts must agree.
TensorF concat_horizontal(const std::vector<TensorF>& images);

}  // namespace rppg
