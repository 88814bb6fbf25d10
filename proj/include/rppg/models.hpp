#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "rppg/ops.hpp"
#include "rppg/params.hpp"
#include "rppg/rng.hpp"

namespace rppg {

enum class EncoderVariant { Conv3D, Conv2Plus1D };
enum class HeadKind { None, SimClr, SimSiam };

std::string_view variant_name(EncoderVariant v);  // "3d" | "2plus1d"
EncoderVariant parse_variant(std::string_view name);  // also accepts "2+1d"
std::string_view head_name(HeadKind h);           // "none" | "simclr" | "simsiam"
HeadKind parse_head(std::string_view name);

inline constexpr std::size_t kEmbeddingDim = 64;
inline constexpr int kConvLayers = 8;
/// Intermediate layers whose readouts feed the auxiliary stage-2 terms.
inline constexpr std::array<int, 3> kTapLayers = {5, 6, 7};

/// Width of the intermediate map of a (2+1)D block that keeps the parameter
/// count of the t x d x d 3D convolution it replaces.
int midplane_channels(int t, int d, int c_in, int c_out);

/// Channel plan of conv layers 1..8: (c_in, c_out).
std::array<std::pair<int, int>, kConvLayers> conv_channel_plan();

struct LayerTrace {
  std::string name;
  Shape shape;  // per sample (batch dim dropped)
};

struct EncoderOutput {
  VarF features;                        // [N,T,64], after global pooling + squeeze
  std::map<int, VarF> layer_activations;  // conv layer index -> [N,T,H,W,C], taps only
  std::vector<LayerTrace> trace;
};

/// Conv stack (layers 1..8 with batch norm) plus the per-step "out" readout.
ParamSet build_encoder(EncoderVariant variant, Rng& rng);
void add_projection_head(ParamSet& params, HeadKind head, Rng& rng);
/// One per-step dense C->1 readout per tap layer ("tap5", "tap6", "tap7").
void add_readout_heads(ParamSet& params, Rng& rng);

/// clips: [N,T,H,W,3]. Train mode updates the batch-norm running buffers in `params`.
EncoderOutput run_encoder(const ParamSet& params, EncoderVariant variant, const VarF& clips,
                          BnMode mode, bool keep_taps = false, bool keep_trace = false);

/// Clip embedding h: temporal mean of the squeezed feature map, [N,64].
VarF encode(const ParamSet& params, EncoderVariant variant, const VarF& clips, BnMode mode);
/// SimCLR head 64->64->16 or SimSiam head 64->64->32->32, ReLU between layers.
VarF project(const ParamSet& params, HeadKind head, const VarF& h);
/// SimSiam predictor 32->8->32.
VarF predict(const ParamSet& params, const VarF& z);

struct RppgOutputs {
  VarF p_out;                 // [N,T]
  std::map<int, VarF> taps;   // layer -> [N,T]
};

RppgOutputs estimate_rppg(const ParamSet& params, EncoderVariant variant, const VarF& clips,
                          BnMode mode);

struct Model {
  EncoderVariant variant = EncoderVariant::Conv3D;
  HeadKind head = HeadKind::None;
  bool readouts = false;
  ParamSet params;
};

Model make_model(EncoderVariant variant, HeadKind head, bool readouts, std::uint64_t seed);

/// Writes `path` (RPGW) and the plain-text sidecar `path` + ".meta".
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

}  // namespace rppg
