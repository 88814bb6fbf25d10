#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rppg/augment.hpp"
#include "rppg/data.hpp"
#include "rppg/losses.hpp"
#include "rppg/models.hpp"
#include "rppg/signal.hpp"

namespace rppg {

enum class Method { SimClr, SimSiam, Supervised };
std::string_view method_name(Method m);  // simclr | simsiam | supervised
Method parse_method(std::string_view name);

struct StageConfig {
  std::size_t epochs = 0;
  std::size_t batch = 0;
  double lr = 0.0;
};

struct RunConfig {
  EncoderVariant encoder = EncoderVariant::Conv3D;
  Method method = Method::SimClr;
  AugKind aug = AugKind::Flip;
  StageConfig stage1{50, 16, 1e-4};
  StageConfig stage2{10, 8, 2e-4};
  double beta = 1.0;
  double alpha = 0.5;
  double tau = 0.1;
  double label_fraction = 1.0;
  std::uint64_t seed = 0;
  std::size_t clip_length = 128;
  std::size_t roi_size = 64;
  std::size_t stride = 8;

  /// Throws std::invalid_argument on a non-positive or out-of-range field.
  void validate() const;
};

RunConfig full_preset();
/// 64-frame 32x32 clips and 5 + 5 epochs, sized for a laptop CPU.
RunConfig desk_preset();
RunConfig preset_by_name(std::string_view name);  // desk | full

/// key=value pairs whose keys are the CLI flag names.
std::map<std::string, std::string> config_to_kv(const RunConfig& cfg);
/// Starts from `base`; unknown keys throw std::invalid_argument.
RunConfig config_from_kv(const std::map<std::string, std::string>& kv, RunConfig base = {});
std::string config_to_text(const RunConfig& cfg);
void write_config(const std::filesystem::path& path, const RunConfig& cfg);
RunConfig read_config(const std::filesystem::path& path, RunConfig base = {});
/// 16 hex digits of FNV-1a over config_to_text.
std::string config_hash(const RunConfig& cfg);

std::string git_describe();
/// Writes "config.txt" and "run_info.json" (config, seed, hash, git describe, command) into `dir`.
void write_run_info(const std::filesystem::path& dir, const RunConfig& cfg, const std::string& command);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;
  double wall_seconds = 0.0;
};

struct TrainLog {
  std::string stage;  // pretrain | finetune
  std::vector<EpochRecord> epochs;
  std::uint64_t seed = 0;
  std::string config_hash;

  std::string to_json() const;
};

struct TrainResult {
  Model model;
  TrainLog log;
};

/// Stage 1 on unlabeled clips. Writes stage1_last.rpgw, stage1_best.rpgw and
/// stage1_log.json into `out_dir` every epoch when it is non-empty.
TrainResult pretrain(const RunConfig& cfg, const std::vector<RoiClip>& clips,
                     const std::filesystem::path& out_dir = {});

struct LabeledClip {
  RoiClip clip;
  PpgSegment target;
};

/// Clips of every video that carries PPG, paired with their aligned targets.
std::vector<LabeledClip> labeled_clips(const Dataset& dataset);

/// Stage 2. Without `init` the encoder starts from random weights, which is the
/// supervised baseline. Projection and predictor heads of `init` are dropped.
TrainResult finetune(const RunConfig& cfg, const std::vector<LabeledClip>& labeled,
                     const Model* init = nullptr, const std::filesystem::path& out_dir = {});

/// Per-step rPPG waveform of every clip, eval-mode batch norm.
std::vector<std::vector<float>> predict_waveforms(const Model& model, const std::vector<RoiClip>& clips,
                                                  std::size_t batch = 8);

/// Per-video HR from clip-averaged estimates, against the estimator applied to the
/// reference PPG resampled over the frames the clips cover. waves[v][c] belongs
/// to test.videos[v].clips[c].
EvalReport evaluate_waveforms(const Dataset& test, const std::vector<std::vector<std::vector<float>>>& waves,
                              const HrOptions& hr = {});

/// evaluate_waveforms on the model's predictions. If `train` is given, subject
/// disjointness is asserted first.
EvalReport evaluate(const Model& model, const Dataset& test, const Dataset* train = nullptr,
                    const HrOptions& hr = {});

}  // namespace rppg
