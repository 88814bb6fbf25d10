#include "rppg/models.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rppg {
namespace {

TensorF he_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  TensorF t(std::move(shape));
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& v : t.data) v = static_cast<float>(rng.uniform(-bound, bound));
  return t;
}

void add_conv(ParamSet& p, const std::string& conv, const std::string& bn, Shape kernel, Rng& rng) {
  const std::size_t fan_in = kernel[0] * kernel[1] * kernel[2] * kernel[3];
  const std::size_t cout = kernel[4];
  p.add(conv + ".weight", he_uniform(std::move(kernel), fan_in, rng));
  p.add(conv + ".bias", TensorF({cout}));
  p.add(bn + ".gamma", TensorF({cout}, 1.0f));
  p.add(bn + ".beta", TensorF({cout}));
  p.add(bn + ".running_mean", TensorF({cout}), false);
  p.add(bn + ".running_var", TensorF({cout}, 1.0f), false);
}

void add_dense(ParamSet& p, const std::string& name, std::size_t cin, std::size_t cout, Rng& rng) {
  p.add(name + ".weight", he_uniform({cin, cout}, cin, rng));
  p.add(name + ".bias", TensorF({cout}));
}

VarF dense(const ParamSet& p, const std::string& name, const VarF& x) {
  return dense_per_step(x, p.at(name + ".weight"), p.at(name + ".bias"));
}

// conv -> ReLU -> batch norm, in that order.
VarF conv_unit(const ParamSet& p, const std::string& conv, const std::string& bn, const VarF& x,
               Dims3 pad, BnMode mode) {
  VarF y = conv3d(x, p.at(conv + ".weight"), p.at(conv + ".bias"), pad);
  y = relu(y);
  return batch_norm(y, p.at(bn + ".gamma"), p.at(bn + ".beta"), p.buffer(bn + ".running_mean"),
                    p.buffer(bn + ".running_var"), mode);
}

std::string layer_label(int layer) {
  if (layer == 1) return "Conv1";
  const int block = layer <= 3 ? 1 : layer <= 5 ? 2 : 3;
  const int first = block == 1 ? 2 : block == 2 ? 4 : 6;
  return "ConvBlock" + std::to_string(block) + "/" + std::to_string(layer - first + 1);
}

Shape per_sample(const Shape& s) { return Shape(s.begin() + 1, s.end()); }

}  // namespace

std::string_view variant_name(EncoderVariant v) {
  return v == EncoderVariant::Conv3D ? "3d" : "2plus1d";
}

EncoderVariant parse_variant(std::string_view name) {
  if (name == "3d") return EncoderVariant::Conv3D;
  if (name == "2plus1d" || name == "2+1d") return EncoderVariant::Conv2Plus1D;
  throw std::invalid_argument("unknown encoder '" + std::string(name) + "' (expected 3d|2plus1d)");
}

std::string_view head_name(HeadKind h) {
  switch (h) {
    case HeadKind::None: return "none";
    case HeadKind::SimClr: return "simclr";
    case HeadKind::SimSiam: return "simsiam";
  }
  return "?";
}

HeadKind parse_head(std::string_view name) {
  if (name == "none") return HeadKind::None;
  if (name == "simclr") return HeadKind::SimClr;
  if (name == "simsiam") return HeadKind::SimSiam;
  throw std::invalid_argument("unknown head '" + std::string(name) + "'");
}

int midplane_channels(int t, int d, int c_in, int c_out) {
  if (t <= 0 || d <= 0 || c_in <= 0 || c_out <= 0) {
    throw std::invalid_argument("midplane_channels arguments must be positive");
  }
  const long long num = 1LL * t * d * d * c_in * c_out;
  const long long den = 1LL * d * d * c_in + 1LL * t * c_out;
  return static_cast<int>(num / den);
}

std::array<std::pair<int, int>, kConvLayers> conv_channel_plan() {
  return {{{3, 16}, {16, 32}, {32, 32}, {32, 64}, {64, 64}, {64, 64}, {64, 64}, {64, 64}}};
}

ParamSet build_encoder(EncoderVariant variant, Rng& rng) {
  ParamSet p;
  const auto plan = conv_channel_plan();
  add_conv(p, "enc.conv1", "enc.bn1", {1, 5, 5, 3, 16}, rng);
  for (int layer = 2; layer <= kConvLayers; ++layer) {
    const auto [cin, cout] = plan[layer - 1];
    const std::string i = std::to_string(layer);
    const auto ci = static_cast<std::size_t>(cin), co = static_cast<std::size_t>(cout);
    if (variant == EncoderVariant::Conv3D) {
      add_conv(p, "enc.conv" + i, "enc.bn" + i, {3, 3, 3, ci, co}, rng);
    } else {
      const auto mid = static_cast<std::size_t>(midplane_channels(3, 3, cin, cout));
      add_conv(p, "enc.conv" + i + "s", "enc.bn" + i + "s", {1, 3, 3, ci, mid}, rng);
      add_conv(p, "enc.conv" + i + "t", "enc.bn" + i + "t", {3, 1, 1, mid, co}, rng);
    }
  }
  add_dense(p, "out", kEmbeddingDim, 1, rng);
  return p;
}

void add_projection_head(ParamSet& p, HeadKind head, Rng& rng) {
  switch (head) {
    case HeadKind::None:
      break;
    case HeadKind::SimClr:
      add_dense(p, "proj.fc1", kEmbeddingDim, 64, rng);
      add_dense(p, "proj.fc2", 64, 16, rng);
      break;
    case HeadKind::SimSiam:
      add_dense(p, "proj.fc1", kEmbeddingDim, 64, rng);
      add_dense(p, "proj.fc2", 64, 32, rng);
      add_dense(p, "proj.fc3", 32, 32, rng);
      add_dense(p, "pred.fc1", 32, 8, rng);
      add_dense(p, "pred.fc2", 8, 32, rng);
      break;
  }
}

void add_readout_heads(ParamSet& p, Rng& rng) {
  const auto plan = conv_channel_plan();
  for (int layer : kTapLayers) {
    add_dense(p, "tap" + std::to_string(layer), static_cast<std::size_t>(plan[layer - 1].second), 1, rng);
  }
}

EncoderOutput run_encoder(const ParamSet& p, EncoderVariant variant, const VarF& clips, BnMode mode,
                          bool keep_taps, bool keep_trace) {
  if (clips.shape().size() != 5 || clips.dim(4) != 3) {
    throw ShapeError("encoder input must be [N,T,H,W,3], got " + to_string(clips.shape()));
  }
  EncoderOutput out;
  auto record = [&](const std::string& name, const Shape& s) {
    if (keep_trace) out.trace.push_back({name, per_sample(s)});
  };
  record("Input", clips.shape());

  VarF x = conv_unit(p, "enc.conv1", "enc.bn1", clips, {0, 1, 1}, mode);
  record(layer_label(1), x.shape());
  int pool = 0;
  for (int layer = 1; layer <= kConvLayers; ++layer) {
    if (layer > 1) {
      const std::string i = std::to_string(layer);
      if (variant == EncoderVariant::Conv3D) {
        x = conv_unit(p, "enc.conv" + i, "enc.bn" + i, x, {1, 1, 1}, mode);
        record(layer_label(layer), x.shape());
      } else {
        x = conv_unit(p, "enc.conv" + i + "s", "enc.bn" + i + "s", x, {0, 1, 1}, mode);
        record(layer_label(layer) + "s", x.shape());
        x = conv_unit(p, "enc.conv" + i + "t", "enc.bn" + i + "t", x, {1, 0, 0}, mode);
        record(layer_label(layer) + "t", x.shape());
      }
    }
    if (keep_taps) {
      for (int tap : kTapLayers)
        if (tap == layer) out.layer_activations.emplace(layer, x);
    }
    if (layer == 1 || layer == 3 || layer == 5) {
      x = avg_pool3d(x, {1, 2, 2});
      record("AvgPool" + std::to_string(++pool), x.shape());
    }
  }
  out.features = global_spatial_avg(x);
  if (keep_trace) {
    const Shape& f = out.features.shape();
    out.trace.push_back({"GlobalAvgPool", {f[1], 1, 1, f[2]}});
    record("Squeeze", f);
  }
  return out;
}

VarF encode(const ParamSet& params, EncoderVariant variant, const VarF& clips, BnMode mode) {
  return temporal_mean(run_encoder(params, variant, clips, mode).features);
}

VarF project(const ParamSet& p, HeadKind head, const VarF& h) {
  if (h.shape().empty() || h.shape().back() != kEmbeddingDim) {
    throw ShapeError("project expects [...,64], got " + to_string(h.shape()));
  }
  switch (head) {
    case HeadKind::SimClr:
      return dense(p, "proj.fc2", relu(dense(p, "proj.fc1", h)));
    case HeadKind::SimSiam:
      return dense(p, "proj.fc3", relu(dense(p, "proj.fc2", relu(dense(p, "proj.fc1", h)))));
    case HeadKind::None:
      break;
  }
  throw std::invalid_argument("project called without a projection head");
}

VarF predict(const ParamSet& p, const VarF& z) {
  if (z.shape().empty() || z.shape().back() != 32) {
    throw ShapeError("predict expects [...,32], got " + to_string(z.shape()));
  }
  return dense(p, "pred.fc2", relu(dense(p, "pred.fc1", z)));
}

RppgOutputs estimate_rppg(const ParamSet& p, EncoderVariant variant, const VarF& clips, BnMode mode) {
  for (int layer : kTapLayers) {
    if (!p.contains("tap" + std::to_string(layer) + ".weight")) {
      throw std::invalid_argument("estimate_rppg: missing readout head tap" + std::to_string(layer));
    }
  }
  EncoderOutput enc = run_encoder(p, variant, clips, mode, /*keep_taps=*/true);
  const std::size_t n = clips.dim(0), t = clips.dim(1);
  RppgOutputs out;
  out.p_out = reshape(dense(p, "out", enc.features), {n, t});
  for (auto& [layer, act] : enc.layer_activations) {
    VarF pooled = global_spatial_avg(act);
    out.taps.emplace(layer, reshape(dense(p, "tap" + std::to_string(layer), pooled), {n, t}));
  }
  return out;
}

Model make_model(EncoderVariant variant, HeadKind head, bool readouts, std::uint64_t seed) {
  Rng rng(seed);
  Model m;
  m.variant = variant;
  m.head = head;
  m.readouts = readouts;
  m.params = build_encoder(variant, rng);
  add_projection_head(m.params, head, rng);
  if (readouts) add_readout_heads(m.params, rng);
  return m;
}

void save_model(const std::filesystem::path& path, const Model& model) {
  write_checkpoint(path, model.params);
  std::ofstream meta(path.string() + ".meta", std::ios::trunc);
  if (!meta) throw FormatError("cannot write " + path.string() + ".meta");
  meta << "format=rpgw-meta-1\n"
       << "encoder=" << variant_name(model.variant) << "\n"
       << "head=" << head_name(model.head) << "\n"
       << "readouts=" << (model.readouts ? 1 : 0) << "\n";
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream meta(path.string() + ".meta");
  if (!meta) throw FormatError("missing checkpoint metadata " + path.string() + ".meta");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(meta, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (kv["format"] != "rpgw-meta-1") throw FormatError("unknown checkpoint metadata format");
  Model m = make_model(parse_variant(kv.at("encoder")), parse_head(kv.at("head")),
                       kv["readouts"] == "1", 0);
  load_params(m.params, read_checkpoint(path));
  return m;
}

}  // namespace rppg
