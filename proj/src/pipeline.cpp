#include "rppg/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

namespace rppg {
namespace {

using Clock = std::chrono::steady_clock;

TensorF stack_clips(const std::vector<const RoiClip*>& clips) {
  if (clips.empty()) throw std::invalid_argument("empty clip batch");
  const Shape& s = clips.front()->frames.shape;
  Shape out{clips.size()};
  out.insert(out.end(), s.begin(), s.end());
  TensorF t(out);
  const std::size_t per = clips.front()->frames.size();
  for (std::size_t i = 0; i < clips.size(); ++i) {
    if (clips[i]->frames.shape != s) {
      throw ShapeError("clip " + std::to_string(i) + " has shape " + to_string(clips[i]->frames.shape) +
                       ", batch expects " + to_string(s));
    }
    std::copy(clips[i]->frames.data.begin(), clips[i]->frames.data.end(),
              t.data.begin() + static_cast<long>(i * per));
  }
  return t;
}

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
  return order;
}

void check_geometry(const RunConfig& cfg, const RoiClip& clip) {
  if (clip.frame_count() != cfg.clip_length || clip.height() != cfg.roi_size || clip.width() != cfg.roi_size) {
    throw ShapeError("clip shape " + to_string(clip.frames.shape) + " does not match the configured " +
                     std::to_string(cfg.clip_length) + "x" + std::to_string(cfg.roi_size) + "x" +
                     std::to_string(cfg.roi_size) + " geometry");
  }
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text << "\n";
}

// Saves last and best-by-loss checkpoints plus the log after an epoch.
void checkpoint_epoch(const std::filesystem::path& dir, const std::string& prefix, const Model& model,
                      const TrainLog& log, double& best_loss) {
  if (dir.empty()) return;
  std::filesystem::create_directories(dir);
  save_model(dir / (prefix + "_last.rpgw"), model);
  const double loss = log.epochs.back().loss;
  if (loss < best_loss) {
    best_loss = loss;
    save_model(dir / (prefix + "_best.rpgw"), model);
  }
  write_text(dir / (prefix + "_log.json"), log.to_json());
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::SimClr: return "simclr";
    case Method::SimSiam: return "simsiam";
    case Method::Supervised: return "supervised";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::SimClr, Method::SimSiam, Method::Supervised})
    if (method_name(m) == name) return m;
  throw std::invalid_argument("unknown method '" + std::string(name) + "' (expected simclr|simsiam|supervised)");
}

std::string TrainLog::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "rppg-train-log-1";
  j["stage"] = stage;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  auto& e = j["epochs"] = nlohmann::ordered_json::array();
  for (const auto& r : epochs) e.push_back({{"epoch", r.epoch}, {"loss", r.loss}, {"wall_seconds", r.wall_seconds}});
  return j.dump(2);
}

TrainResult pretrain(const RunConfig& cfg, const std::vector<RoiClip>& clips, const std::filesystem::path& out_dir) {
  cfg.validate();
  if (cfg.method == Method::Supervised) {
    throw std::invalid_argument("method 'supervised' has no pre-training stage");
  }
  const std::size_t n = cfg.stage1.batch;
  if (clips.size() < 2 * n) {
    throw std::invalid_argument("pre-training needs at least " + std::to_string(2 * n) + " clips, got " +
                                std::to_string(clips.size()));
  }
  for (const auto& c : clips) check_geometry(cfg, c);

  const HeadKind head = cfg.method == Method::SimClr ? HeadKind::SimClr : HeadKind::SimSiam;
  TrainResult res{make_model(cfg.encoder, head, false, derive_seed(cfg.seed, 1)), {}};
  // The per-step readout is not part of the stage-1 objective.
  res.model.params.set_trainable_prefix("out.", false);
  res.log.stage = "pretrain";
  res.log.seed = cfg.seed;
  res.log.config_hash = config_hash(cfg);

  AdamState adam;
  adam.options.lr = cfg.stage1.lr;
  const auto partner = paired_halves(2 * n);
  double best = INFINITY;
  for (std::size_t epoch = 1; epoch <= cfg.stage1.epochs; ++epoch) {
    const auto t0 = Clock::now();
    Rng order_rng(derive_seed(cfg.seed, 10, epoch));
    const auto order = shuffled(clips.size(), order_rng);
    const std::size_t steps = clips.size() / n;
    double total = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      Rng aug_rng(derive_seed(cfg.seed, 20 + epoch, s));
      std::vector<RoiClip> views;
      views.reserve(n);
      std::vector<const RoiClip*> batch;
      for (std::size_t i = 0; i < n; ++i) batch.push_back(&clips[order[s * n + i]]);
      for (std::size_t i = 0; i < n; ++i) views.push_back(augment(*batch[i], cfg.aug, aug_rng));
      for (const auto& v : views) batch.push_back(&v);

      const VarF input(stack_clips(batch));
      const VarF h = encode(res.model.params, cfg.encoder, input, BnMode::Train);
      const VarF z = project(res.model.params, head, h);
      VarF loss;
      if (head == HeadKind::SimClr) {
        loss = ntxent_loss(ContrastiveBatch<float>{z, partner, static_cast<float>(cfg.tau)});
      } else {
        loss = simsiam_loss(predict(res.model.params, z), z, partner);
      }
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw NumericError("pre-training diverged: loss " + std::to_string(value) + " at epoch " +
                           std::to_string(epoch) + " step " + std::to_string(s + 1));
      }
      res.model.params.zero_grad();
      loss.backward();
      adam_step(res.model.params, adam);
      total += value;
    }
    res.log.epochs.push_back({epoch, total / static_cast<double>(steps), seconds_since(t0)});
    checkpoint_epoch(out_dir, "stage1", res.model, res.log, best);
  }
  res.model.params.set_trainable_prefix("out.", true);
  return res;
}

std::vector<LabeledClip> labeled_clips(const Dataset& dataset) {
  std::vector<LabeledClip> out;
  for (const auto& v : dataset.videos) {
    if (!v.ppg) continue;
    for (const auto& c : v.clips) out.push_back({c, align_ppg(*v.ppg, c.start, c.frame_count(), c.fps)});
  }
  return out;
}

TrainResult finetune(const RunConfig& cfg, const std::vector<LabeledClip>& labeled, const Model* init,
                     const std::filesystem::path& out_dir) {
  cfg.validate();
  if (labeled.empty()) throw std::invalid_argument("fine-tuning needs labeled clips");
  for (const auto& l : labeled) {
    check_geometry(cfg, l.clip);
    if (l.target.samples.size() != cfg.clip_length) throw ShapeError("target length does not match the clip length");
  }

  TrainResult res;
  if (init) {
    if (init->variant != cfg.encoder) {
      throw FormatError("checkpoint encoder '" + std::string(variant_name(init->variant)) +
                        "' does not match configured '" + std::string(variant_name(cfg.encoder)) + "'");
    }
    res.model.variant = init->variant;
    res.model.params = init->params.clone();
    res.model.params.remove_prefix("proj.");
    res.model.params.remove_prefix("pred.");
    res.model.params.set_trainable_prefix("out.", true);
    if (!res.model.params.contains("tap5.weight")) {
      Rng rng(derive_seed(cfg.seed, 2));
      add_readout_heads(res.model.params, rng);
    }
    res.model.readouts = true;
  } else {
    res.model = make_model(cfg.encoder, HeadKind::None, true, derive_seed(cfg.seed, 1));
  }
  res.log.stage = "finetune";
  res.log.seed = cfg.seed;
  res.log.config_hash = config_hash(cfg);

  const auto subset = label_subset(labeled.size(), cfg.label_fraction, derive_seed(cfg.seed, 3));
  Stage2LossConfig loss_cfg;
  loss_cfg.beta = cfg.beta;
  loss_cfg.alpha = cfg.alpha;

  AdamState adam;
  adam.options.lr = cfg.stage2.lr;
  const std::size_t n = cfg.stage2.batch, m = cfg.clip_length;
  double best = INFINITY;
  for (std::size_t epoch = 1; epoch <= cfg.stage2.epochs; ++epoch) {
    const auto t0 = Clock::now();
    Rng order_rng(derive_seed(cfg.seed, 30, epoch));
    const auto order = shuffled(subset.size(), order_rng);
    double total = 0.0;
    std::size_t steps = 0;
    for (std::size_t s = 0; s < order.size(); s += n) {
      const std::size_t count = std::min(n, order.size() - s);
      std::vector<const RoiClip*> batch;
      TensorF target({count, m});
      for (std::size_t i = 0; i < count; ++i) {
        const auto& l = labeled[subset[order[s + i]]];
        batch.push_back(&l.clip);
        std::copy(l.target.samples.begin(), l.target.samples.end(), target.data.begin() + static_cast<long>(i * m));
      }
      const RppgOutputs outputs = estimate_rppg(res.model.params, cfg.encoder, VarF(stack_clips(batch)), BnMode::Train);
      const VarF loss = stage2_loss(outputs, target, loss_cfg);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw NumericError("fine-tuning diverged: loss " + std::to_string(value) + " at epoch " +
                           std::to_string(epoch));
      }
      res.model.params.zero_grad();
      loss.backward();
      adam_step(res.model.params, adam);
      total += value;
      ++steps;
    }
    res.log.epochs.push_back({epoch, total / static_cast<double>(steps), seconds_since(t0)});
    checkpoint_epoch(out_dir, "stage2", res.model, res.log, best);
  }
  return res;
}

std::vector<std::vector<float>> predict_waveforms(const Model& model, const std::vector<RoiClip>& clips,
                                                  std::size_t batch) {
  if (!model.readouts && !model.params.contains("out.weight")) throw std::invalid_argument("model has no readout");
  if (batch == 0) throw std::invalid_argument("batch must be positive");
  std::vector<std::vector<float>> out;
  for (std::size_t s = 0; s < clips.size(); s += batch) {
    std::vector<const RoiClip*> group;
    for (std::size_t i = s; i < std::min(clips.size(), s + batch); ++i) group.push_back(&clips[i]);
    const auto res = estimate_rppg(model.params, model.variant, VarF(stack_clips(group)), BnMode::Eval);
    const std::size_t t = res.p_out.dim(1);
    const auto& v = res.p_out.value().data;
    for (std::size_t i = 0; i < group.size(); ++i) out.emplace_back(v.begin() + static_cast<long>(i * t), v.begin() + static_cast<long>((i + 1) * t));
  }
  return out;
}

EvalReport evaluate_waveforms(const Dataset& test, const std::vector<std::vector<std::vector<float>>>& waves,
                              const HrOptions& hr) {
  if (test.videos.empty()) throw std::invalid_argument("empty test set");
  if (waves.size() != test.videos.size()) throw std::invalid_argument("one waveform list per test video expected");
  std::vector<VideoHr> pairs;
  for (std::size_t vi = 0; vi < test.videos.size(); ++vi) {
    const auto& v = test.videos[vi];
    if (v.clips.empty()) throw std::invalid_argument("test video " + v.video_id + " has no clips");
    if (!v.ppg) throw std::invalid_argument("test video " + v.video_id + " has no PPG");
    if (waves[vi].size() != v.clips.size()) throw std::invalid_argument("waveform count differs from clip count");
    std::vector<RppgSignal> pred;
    std::size_t span = 0;
    for (std::size_t i = 0; i < v.clips.size(); ++i) {
      const auto& c = v.clips[i];
      pred.push_back({{waves[vi][i].begin(), waves[vi][i].end()}, c.fps});
      span = std::max(span, c.start + c.frame_count());
    }
    const double fps = v.clips.front().fps;
    try {
      // Reference HR: the same estimator over the whole span the clips cover.
      const RppgSignal gt{resample_ppg(*v.ppg, 0, span, fps), fps};
      pairs.push_back({v.video_id, video_hr(pred, hr), estimate_hr(gt, hr)});
    } catch (const SpectrumError& e) {
      throw SpectrumError("video " + v.video_id + ": " + e.what());
    }
  }
  return compute_metrics(std::move(pairs));
}

EvalReport evaluate(const Model& model, const Dataset& test, const Dataset* train, const HrOptions& hr) {
  if (test.videos.empty()) throw std::invalid_argument("empty test set");
  if (train) require_subject_disjoint(*train, test);
  std::vector<std::vector<std::vector<float>>> waves;
  for (const auto& v : test.videos) waves.push_back(predict_waveforms(model, v.clips));
  return evaluate_waveforms(test, waves, hr);
}

}  // namespace rppg
