#pragma once

#include <array>
#include <span>
#include <vector>

#include "rppg/models.hpp"
#include "rppg/tensor.hpp"

namespace rppg {

/// aᵀb / (|a| |b|). Throws std::invalid_argument on a zero-norm input.
template <typename T>
T cosine_similarity(std::span<const T> a, std::span<const T> b);

/// Rows of `z` ([2N, D]) with their positive partners and temperature.
template <typename T>
struct ContrastiveBatch {
  Var<T> z;
  std::vector<std::size_t> partner;  // partner[partner[m]] == m, partner[m] != m
  T tau = T(0.1);
};

/// Standard layout: rows 0..N-1 are the clips, rows N..2N-1 their augmentations.
std::vector<std::size_t> paired_halves(std::size_t two_n);

/// Normalized-temperature cross entropy, averaged over all 2N anchors.
template <typename T>
Var<T> ntxent_loss(const ContrastiveBatch<T>& batch);

/// Symmetrized negative cosine between predictions and stop-gradient
/// projections, averaged over pairs. p, z: [2N, D]; partner as above.
/// No gradient reaches `z` through this term.
template <typename T>
Var<T> simsiam_loss(const Var<T>& p, const Var<T>& z, const std::vector<std::size_t>& partner);

/// Single-pair form: ½D(p_m, sg(z_n)) + ½D(p_n, sg(z_m)); all arguments [D].
template <typename T>
Var<T> simsiam_loss(const Var<T>& p_m, const Var<T>& z_m, const Var<T>& p_n, const Var<T>& z_n);

/// Mean over elements of ½d²/β for |d| < β, else |d| − ½β, with d = pred − target.
template <typename T>
Var<T> smooth_l1(const Var<T>& pred, const Tensor<T>& target, T beta);

struct Stage2LossConfig {
  double beta = 1.0;
  double alpha = 0.5;
  std::vector<int> taps{kTapLayers.begin(), kTapLayers.end()};
};

/// L(P_out, P_gt) + alpha * Σ_taps L(P_i, P_gt). target: [N,T], matching each signal.
VarF stage2_loss(const RppgOutputs& outputs, const TensorF& target, const Stage2LossConfig& cfg);

}  // namespace rppg
