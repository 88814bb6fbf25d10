#pragma once

#include <filesystem>
#include <string>

#include "rppg/clip.hpp"
#include "rppg/rng.hpp"
#include "rppg/tensor.hpp"

namespace rppg::test {

template <typename T>
Tensor<T> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.data) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

inline RoiClip random_clip(std::size_t m, std::size_t h, std::size_t w, std::uint64_t seed) {
  Rng rng(seed);
  RoiClip c;
  c.frames = random_tensor<float>({m, h, w, 3}, rng, 0.0, 1.0);
  c.fps = 20.0f;
  c.source_id = "clip";
  return c;
}

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("rppg_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace rppg::test
