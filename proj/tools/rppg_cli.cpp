// rppg: synthetic data, ingestion, two-stage training, evaluation and HR estimation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "rppg/pipeline.hpp"
#include "rppg/synth.hpp"

namespace fs = std::filesystem;
using namespace rppg;

namespace {

constexpr int kExitMissingData = 2;

struct MissingData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunFlags {
  std::string preset = "full";
  std::string config;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
};

void add_run_options(CLI::App* app, RunFlags& f) {
  app->add_option("--preset", f.preset, "Base settings: full | desk")->capture_default_str();
  app->add_option("--config", f.config, "key=value file; flags given on the command line win");
  const std::map<std::string, std::string> help = {
      {"encoder", "3d | 2plus1d"},
      {"method", "simclr | simsiam | supervised"},
      {"aug", "rot | crop | flip | shuffle | reorder | reverse"},
      {"pretrain-epochs", "Stage-1 epochs"},
      {"pretrain-batch", "Stage-1 clips per batch (2N views)"},
      {"pretrain-lr", "Stage-1 Adam learning rate"},
      {"finetune-epochs", "Stage-2 epochs"},
      {"finetune-batch", "Stage-2 batch size"},
      {"finetune-lr", "Stage-2 Adam learning rate"},
      {"beta", "Smooth L1 threshold"},
      {"alpha", "Weight of the intermediate readout terms"},
      {"tau", "NT-Xent temperature"},
      {"label-fraction", "Fraction of labeled clips used in stage 2, (0,1]"},
      {"seed", "Run seed"},
      {"clip-length", "Frames per clip"},
      {"roi-size", "RoI side in pixels"},
      {"stride", "Sliding-window stride in frames"},
  };
  for (const auto& [key, text] : help) f.options[key] = app->add_option("--" + key, f.values[key], text);
}

RunConfig resolve(const RunFlags& f) {
  RunConfig cfg = preset_by_name(f.preset);
  if (!f.config.empty()) cfg = read_config(f.config, cfg);
  std::map<std::string, std::string> given;
  for (const auto& [key, opt] : f.options)
    if (opt->count() > 0) given[key] = f.values.at(key);
  cfg = config_from_kv(given, cfg);
  cfg.validate();
  return cfg;
}

fs::path require_dir(const std::string& dir) {
  if (dir.empty() || !fs::is_directory(dir)) throw MissingData("data directory not found: " + dir);
  return dir;
}

fs::path manifest_in(const std::string& dir) {
  const fs::path m = require_dir(dir) / "manifest.tsv";
  if (!fs::exists(m)) throw MissingData("no manifest.tsv in " + dir);
  return m;
}

std::string command_line(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) s += (i ? " " : "") + std::string(argv[i]);
  return s;
}

std::string status_line(const TrainLog& log) {
  std::ostringstream os;
  os << log.stage << ": " << log.epochs.size() << " epochs, loss " << log.epochs.front().loss << " -> "
     << log.epochs.back().loss;
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Remote PPG heart-rate estimation with self-supervised pre-training"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  // synth
  auto* synth = app.add_subcommand("synth", "Render synthetic pulsatile face videos (raw input for ingest)");
  std::string synth_out;
  SynthDatasetSpec sds;
  sds.base.frames = 160;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--train", sds.train_videos, "Training videos")->capture_default_str();
  synth->add_option("--test", sds.test_videos, "Test videos")->capture_default_str();
  synth->add_option("--frames", sds.base.frames, "Frames per video")->capture_default_str();
  synth->add_option("--fps", sds.base.fps, "Frame rate")->capture_default_str();
  synth->add_option("--width", sds.base.width, "Frame width")->capture_default_str();
  synth->add_option("--height", sds.base.height, "Frame height")->capture_default_str();
  synth->add_option("--hr-min", sds.hr_min, "Lowest HR, bpm")->capture_default_str();
  synth->add_option("--hr-max", sds.hr_max, "Highest HR, bpm")->capture_default_str();
  synth->add_option("--pulse-amplitude", sds.base.pulse_amplitude, "Relative skin pulse swing")->capture_default_str();
  synth->add_option("--noise", sds.base.noise_sigma, "Pixel noise sigma")->capture_default_str();
  synth->add_option("--motion", sds.base.motion_amplitude, "Head motion amplitude, pixels")->capture_default_str();
  synth->add_option("--illumination", sds.base.illumination_amplitude, "White flicker amplitude")->capture_default_str();
  synth->add_option("--seed", sds.seed, "Dataset seed")->capture_default_str();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Crop RoIs, cut sliding windows and write a clip dataset");
  std::string raw_dir, ingest_out, roi_mode = "full";
  RunFlags ingest_flags;
  ingest->add_option("--raw", raw_dir, "Directory with raw_index.tsv")->required();
  ingest->add_option("--out", ingest_out, "Output dataset directory")->required();
  ingest->add_option("--roi-mode", roi_mode, "full | cheeks | forehead")->capture_default_str();
  add_run_options(ingest, ingest_flags);

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "Stage 1: self-supervised pre-training on unlabeled clips");
  std::string pre_data, pre_out, pre_split = "train";
  RunFlags pre_flags;
  pre->add_option("--data", pre_data, "Dataset directory (manifest.tsv)")->required();
  pre->add_option("--out", pre_out, "Run directory")->required();
  pre->add_option("--split", pre_split, "Split tag to train on")->capture_default_str();
  add_run_options(pre, pre_flags);

  // finetune
  auto* fine = app.add_subcommand("finetune", "Stage 2: supervised fine-tuning (random init = supervised baseline)");
  std::string fine_data, fine_out, fine_init, fine_split = "train";
  RunFlags fine_flags;
  fine->add_option("--data", fine_data, "Dataset directory (manifest.tsv)")->required();
  fine->add_option("--out", fine_out, "Run directory")->required();
  fine->add_option("--init", fine_init, "Stage-1 checkpoint; omit for random init");
  fine->add_option("--split", fine_split, "Split tag to train on")->capture_default_str();
  add_run_options(fine, fine_flags);

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a fine-tuned checkpoint on the test split");
  std::string eval_ckpt, eval_data, eval_out, eval_split = "test";
  eval->add_option("--checkpoint", eval_ckpt, "Stage-2 checkpoint (.rpgw)")->required();
  eval->add_option("--data", eval_data, "Dataset directory (manifest.tsv)")->required();
  eval->add_option("--split", eval_split, "Split tag to evaluate")->capture_default_str();
  eval->add_option("--out", eval_out, "Report path (JSON); printed to stdout if omitted");

  // estimate
  auto* est = app.add_subcommand("estimate", "Estimate HR of one clip file");
  std::string est_ckpt, est_clip, est_wave;
  est->add_option("--checkpoint", est_ckpt, "Stage-2 checkpoint (.rpgw)")->required();
  est->add_option("--clip", est_clip, "Clip container (.rpgc)")->required();
  est->add_option("--waveform", est_wave, "Write the rPPG waveform as CSV");

  CLI11_PARSE(app, argc, argv);
  const std::string cmd = command_line(argc, argv);

  try {
    if (*synth) {
      auto items = make_synthetic_videos(sds);
      write_synthetic_raw(synth_out, items);
      std::cout << "wrote " << items.size() << " videos to " << synth_out << "\n";
    } else if (*ingest) {
      const RunConfig cfg = resolve(ingest_flags);
      const fs::path raw = require_dir(raw_dir);
      if (!fs::exists(raw / "raw_index.tsv")) throw MissingData("no raw_index.tsv in " + raw_dir);
      const RoiMode mode = parse_roi_mode(roi_mode);
      Dataset ds;
      for (const auto& e : read_raw_index(raw / "raw_index.tsv")) {
        ds.videos.push_back(ingest_video(e, read_clip(raw / e.video_file), read_landmarks(raw / e.landmarks_file),
                                         read_ppg(raw / e.ppg_file), cfg.roi_size, cfg.clip_length, cfg.stride,
                                         mode));
      }
      std::sort(ds.videos.begin(), ds.videos.end(),
                [](const VideoRecord& a, const VideoRecord& b) { return a.video_id < b.video_id; });
      save_dataset(ingest_out, ds);
      write_run_info(ingest_out, cfg, cmd);
      std::cout << "ingested " << ds.videos.size() << " videos, " << ds.clip_count() << " clips\n";
    } else if (*pre) {
      const RunConfig cfg = resolve(pre_flags);
      // Stage 1 is label-free: the dataset is loaded without opening any PPG file.
      const Dataset ds = load_dataset(manifest_in(pre_data), LoadPpg::No).split(pre_split);
      write_run_info(pre_out, cfg, cmd);
      const auto res = pretrain(cfg, ds.all_clips(), pre_out);
      std::cout << status_line(res.log) << "\n";
    } else if (*fine) {
      const RunConfig cfg = resolve(fine_flags);
      const Dataset ds = load_dataset(manifest_in(fine_data), LoadPpg::Yes).split(fine_split);
      write_run_info(fine_out, cfg, cmd);
      std::optional<Model> init;
      if (!fine_init.empty()) init = load_model(fine_init);
      const auto res = finetune(cfg, labeled_clips(ds), init ? &*init : nullptr, fine_out);
      std::cout << status_line(res.log) << "\n";
    } else if (*eval) {
      const fs::path manifest = manifest_in(eval_data);
      const Dataset all = load_dataset(manifest, LoadPpg::Yes);
      const Dataset test = all.split(eval_split);
      Dataset rest;
      for (const auto& v : all.videos)
        if (v.split != eval_split) rest.videos.push_back(v);
      const Model model = load_model(eval_ckpt);
      const EvalReport rep = evaluate(model, test, &rest);
      if (eval_out.empty()) {
        std::cout << report_to_json(rep) << "\n";
      } else {
        write_report(eval_out, rep);
        std::cout << "MAE " << rep.mae << " RMSE " << rep.rmse << " R " << rep.r << "\n";
      }
    } else if (*est) {
      if (!fs::exists(est_clip)) throw MissingData("clip not found: " + est_clip);
      const Model model = load_model(est_ckpt);
      const Video v = read_clip(est_clip);
      const RoiClip clip{v.frames, v.fps, fs::path(est_clip).stem().string(), 0};
      const auto wave = predict_waveforms(model, {clip}).front();
      if (!est_wave.empty()) {
        std::ofstream out(est_wave, std::ios::trunc);
        out << "frame,rppg\n";
        for (std::size_t i = 0; i < wave.size(); ++i) out << i << ',' << wave[i] << '\n';
      }
      std::cout << "HR " << estimate_hr({{wave.begin(), wave.end()}, v.fps}) << " bpm\n";
    }
  } catch (const MissingData& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissingData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
