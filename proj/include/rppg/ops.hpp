#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "rppg/tensor.hpp"

namespace rppg {

using Dims3 = std::array<std::size_t, 3>;  // (t, h, w)

/// Stride-1 3D convolution, channels-last.
/// input [N,T,H,W,Cin], kernel [kt,kh,kw,Cin,Cout], bias [Cout].
/// Output dims are D + 2*pad - k + 1 on each of T, H, W.
template <typename T>
Var<T> conv3d(const Var<T>& input, const Var<T>& kernel, const Var<T>& bias, Dims3 padding);

/// Non-overlapping average pooling; window equals stride, trailing remainder is dropped.
template <typename T>
Var<T> avg_pool3d(const Var<T>& input, Dims3 window);

enum class BnMode { Train, Eval };

struct BatchNormOptions {
  double eps = 1e-5;
  double momentum = 0.1;
};

/// Per-channel normalization over every non-channel element of `input`
/// (last dim is the channel). Train mode uses biased batch statistics and
/// folds them into the running buffers; eval mode reads the buffers.
/// The running variance is tracked unbiased.
template <typename T>
Var<T> batch_norm(const Var<T>& input, const Var<T>& gamma, const Var<T>& beta,
                  Tensor<T>& running_mean, Tensor<T>& running_var, BnMode mode,
                  BatchNormOptions options = {});

template <typename T>
Var<T> relu(const Var<T>& input);

/// Same affine map on the last axis at every leading index: [..., Cin] -> [..., Cout].
template <typename T>
Var<T> dense_per_step(const Var<T>& input, const Var<T>& weight, const Var<T>& bias);

/// Mean over H and W with the singleton dims squeezed: [N,T,H,W,C] -> [N,T,C].
template <typename T>
Var<T> global_spatial_avg(const Var<T>& input);

/// [N,T,C] -> [N,C].
template <typename T>
Var<T> temporal_mean(const Var<T>& input);

template <typename T>
Var<T> reshape(const Var<T>& input, Shape shape);

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> scale(const Var<T>& a, T factor);

/// Sum of all elements as a scalar [1].
template <typename T>
Var<T> sum(const Var<T>& a);

/// Differentiable function of several tensors, used by the gradient checker.
using DiffFn = std::function<VarD(const std::vector<VarD>&)>;

struct FiniteDiffOptions {
  double epsilon = 1e-5;
  // Coordinates sampled per input; 0 checks every coordinate.
  std::size_t samples_per_input = 0;
  std::uint64_t seed = 1;
  // Relative error is |a - n| / max(|a|, |n|, floor).
  double floor = 1e-3;
};

/// Compares reverse-mode gradients of sum(R * f(inputs)), R fixed random
/// weights, against central differences. Returns the max relative error.
double finite_diff_check(const DiffFn& fn, const std::vector<TensorD>& inputs,
                         FiniteDiffOptions options = {});

}  // namespace rppg
