#include "rppg/image.hpp"

#include <algorithm>
#include <cmath>

namespace rppg {

TensorF resize_window(const float* image, std::size_t height, std::size_t width,
                      std::size_t channels, std::size_t x0, std::size_t y0, std::size_t w,
                      std::size_t h, std::size_t out_h, std::size_t out_w) {
  if (w == 0 || h == 0 || out_h == 0 || out_w == 0) throw ShapeError("resize of empty window");
  if (x0 + w > width || y0 + h > height) throw ShapeError("resize window outside image");
  TensorF out({out_h, out_w, channels});
  const double sx = static_cast<double>(w) / static_cast<double>(out_w);
  const double sy = static_cast<double>(h) / static_cast<double>(out_h);
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    const double fy = std::clamp((oy + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
    const std::size_t y_lo = static_cast<std::size_t>(fy);
    const std::size_t y_hi = std::min(y_lo + 1, h - 1);
    const float ay = static_cast<float>(fy - static_cast<double>(y_lo));
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      const double fx = std::clamp((ox + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
      const std::size_t x_lo = static_cast<std::size_t>(fx);
      const std::size_t x_hi = std::min(x_lo + 1, w - 1);
      const float ax = static_cast<float>(fx - static_cast<double>(x_lo));
      const float* p00 = image + ((y0 + y_lo) * width + x0 + x_lo) * channels;
      const float* p01 = image + ((y0 + y_lo) * width + x0 + x_hi) * channels;
      const float* p10 = image + ((y0 + y_hi) * width + x0 + x_lo) * channels;
      const float* p11 = image + ((y0 + y_hi) * width + x0 + x_hi) * channels;
      float* dst = out.data.data() + (oy * out_w + ox) * channels;
      for (std::size_t c = 0; c < channels; ++c) {
        const float top = p00[c] + ax * (p01[c] - p00[c]);
        const float bottom = p10[c] + ax * (p11[c] - p10[c]);
        dst[c] = top + ay * (bottom - top);
      }
    }
  }
  return out;
}

TensorF resize_bilinear(const TensorF& image, std::size_t out_h, std::size_t out_w) {
  if (image.rank() != 3) throw ShapeError("resize_bilinear expects [H,W,C]");
  return resize_window(image.data.data(), image.dim(0), image.dim(1), image.dim(2), 0, 0,
                       image.dim(1), image.dim(0), out_h, out_w);
}

TensorF concat_horizontal(const std::vector<TensorF>& images) {
  if (images.empty()) throw ShapeError("concat_horizontal of nothing");
  const std::size_t h = images[0].dim(0), c = images[0].dim(2);
  std::size_t total_w = 0;
  for (const auto& im : images) {
    if (im.rank() != 3 || im.dim(0) != h || im.dim(2) != c) {
      throw ShapeError("concat_horizontal: mismatched image " + to_string(im.shape));
    }
    total_w += im.dim(1);
  }
  TensorF out({h, total_w, c});
  for (std::size_t y = 0; y < h; ++y) {
    std::size_t x_off = 0;
    for (const auto& im : images) {
      const std::size_t w = im.dim(1);
      std::copy_n(im.data.data() + y * w * c, w * c, out.data.data() + (y * total_w + x_off) * c);
      x_off += w;
    }
  }
  return out;
}

}  // namespace rppg
