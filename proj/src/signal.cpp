#include "rppg/signal.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <numeric>

#include "json.hpp"

namespace rppg {
namespace {

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

void check_pairs(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size()) throw std::invalid_argument("metric inputs differ in length");
  if (pred.empty()) throw std::invalid_argument("metric inputs are empty");
}

}  // namespace

Spectrum welch_psd(const RppgSignal& signal, WelchOptions options) {
  const std::size_t n = signal.samples.size();
  if (!(signal.rate > 0)) throw SpectrumError("signal rate must be positive");
  const std::size_t seg = options.segment_len ? options.segment_len : std::min<std::size_t>(128, n);
  if (seg < 2 || n < seg) throw SpectrumError("signal shorter than the Welch segment");
  if (options.overlap < 0 || options.overlap >= 1) throw SpectrumError("overlap must be in [0,1)");
  for (double v : signal.samples)
    if (!std::isfinite(v)) throw SpectrumError("non-finite sample in signal");

  const std::size_t nfft = next_pow2(std::max(options.fft_len, seg));
  const std::size_t step = std::max<std::size_t>(1, seg - static_cast<std::size_t>(std::floor(seg * options.overlap)));
  const std::size_t segments = (n - seg) / step + 1;
  const std::size_t bins = nfft / 2 + 1;

  std::vector<double> window(seg);
  double wsum2 = 0.0;
  for (std::size_t i = 0; i < seg; ++i) {
    // Periodic Hann, as in common spectral toolkits.
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(seg));
    wsum2 += window[i] * window[i];
  }

  std::unique_ptr<double, FftwFree> in(fftw_alloc_real(nfft));
  std::unique_ptr<fftw_complex, FftwFree> out(fftw_alloc_complex(bins));
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(nfft), in.get(), out.get(), FFTW_ESTIMATE);
  std::vector<double> power(bins, 0.0);
  for (std::size_t s = 0; s < segments; ++s) {
    const double* x = signal.samples.data() + s * step;
    const double mean = std::accumulate(x, x + seg, 0.0) / static_cast<double>(seg);
    std::fill_n(in.get(), nfft, 0.0);
    for (std::size_t i = 0; i < seg; ++i) in.get()[i] = (x[i] - mean) * window[i];
    fftw_execute(plan);
    for (std::size_t k = 0; k < bins; ++k) {
      const double re = out.get()[k][0], im = out.get()[k][1];
      power[k] += re * re + im * im;
    }
  }
  fftw_destroy_plan(plan);

  Spectrum spec;
  spec.freqs.resize(bins);
  spec.power.resize(bins);
  const double norm = 1.0 / (signal.rate * wsum2 * static_cast<double>(segments));
  for (std::size_t k = 0; k < bins; ++k) {
    spec.freqs[k] = static_cast<double>(k) * signal.rate / static_cast<double>(nfft);
    const bool edge = k == 0 || (nfft % 2 == 0 && k == bins - 1);
    spec.power[k] = power[k] * norm * (edge ? 1.0 : 2.0);
  }
  return spec;
}

double estimate_hr(const RppgSignal& signal, HrOptions options) {
  if (static_cast<double>(signal.samples.size()) < 2.0 * signal.rate) {
    throw SpectrumError("signal shorter than 2 s");
  }
  const Spectrum spec = welch_psd(signal, options.welch);
  double global = 0.0;
  for (std::size_t k = 1; k < spec.power.size(); ++k) global = std::max(global, spec.power[k]);
  std::size_t best = 0;
  double best_power = -1.0;
  for (std::size_t k = 0; k < spec.power.size(); ++k) {
    const double f = spec.freqs[k];
    if (f < options.band.low_hz || f > options.band.high_hz) continue;
    if (spec.power[k] > best_power) {
      best_power = spec.power[k];
      best = k;
    }
  }
  if (best_power < 0) throw SpectrumError("no spectral bins inside the HR band");
  if (!(global > 0) || best_power < options.min_relative_peak * global) {
    throw SpectrumError("no dominant in-band spectral component");
  }
  return 60.0 * spec.freqs[best];
}

double video_hr(const std::vector<RppgSignal>& clips, HrOptions options) {
  if (clips.empty()) throw std::invalid_argument("video_hr needs at least one clip");
  double total = 0.0;
  for (const auto& c : clips) total += estimate_hr(c, options);
  return total / static_cast<double>(clips.size());
}

double mean_absolute_error(std::span<const double> pred, std::span<const double> gt) {
  check_pairs(pred, gt);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - gt[i]);
  return s / static_cast<double>(pred.size());
}

double root_mean_square_error(std::span<const double> pred, std::span<const double> gt) {
  check_pairs(pred, gt);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - gt[i]) * (pred[i] - gt[i]);
  return std::sqrt(s / static_cast<double>(pred.size()));
}

double pearson_r(std::span<const double> pred, std::span<const double> gt) {
  check_pairs(pred, gt);
  const double n = static_cast<double>(pred.size());
  const double mp = std::accumulate(pred.begin(), pred.end(), 0.0) / n;
  const double mg = std::accumulate(gt.begin(), gt.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    sxy += (pred[i] - mp) * (gt[i] - mg);
    sxx += (pred[i] - mp) * (pred[i] - mp);
    syy += (gt[i] - mg) * (gt[i] - mg);
  }
  if (!(sxx > 0) || !(syy > 0)) throw std::invalid_argument("correlation undefined for zero-variance input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

EvalReport compute_metrics(std::vector<VideoHr> pairs) {
  if (pairs.size() < 2) throw std::invalid_argument("compute_metrics needs at least two videos");
  std::vector<double> pred, gt;
  for (const auto& p : pairs) {
    pred.push_back(p.hr_pred);
    gt.push_back(p.hr_gt);
  }
  EvalReport rep;
  rep.videos = std::move(pairs);
  rep.mae = mean_absolute_error(pred, gt);
  rep.rmse = root_mean_square_error(pred, gt);
  rep.r = pearson_r(pred, gt);

  auto& ba = rep.bland_altman;
  const double n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ba.mean.push_back(0.5 * (pred[i] + gt[i]));
    ba.diff.push_back(pred[i] - gt[i]);
  }
  ba.bias = std::accumulate(ba.diff.begin(), ba.diff.end(), 0.0) / n;
  double ss = 0.0;
  for (double d : ba.diff) ss += (d - ba.bias) * (d - ba.bias);
  ba.sd = std::sqrt(ss / (n - 1));
  ba.loa_lower = ba.bias - 1.96 * ba.sd;
  ba.loa_upper = ba.bias + 1.96 * ba.sd;
  return rep;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["format"] = "rppg-eval-report-1";
  auto& videos = j["videos"] = nlohmann::ordered_json::array();
  for (const auto& v : report.videos) {
    videos.push_back({{"video_id", v.video_id}, {"hr_pred", v.hr_pred}, {"hr_gt", v.hr_gt}});
  }
  j["mae"] = report.mae;
  j["rmse"] = report.rmse;
  j["r"] = report.r;
  const auto& ba = report.bland_altman;
  j["bland_altman"] = {{"mean", ba.mean},         {"diff", ba.diff},
                       {"bias", ba.bias},         {"sd", ba.sd},
                       {"loa_lower", ba.loa_lower}, {"loa_upper", ba.loa_upper}};
  return j.dump(2);
}

EvalReport report_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  EvalReport rep;
  for (const auto& v : j.at("videos")) {
    rep.videos.push_back({v.at("video_id").get<std::string>(), v.at("hr_pred").get<double>(),
                          v.at("hr_gt").get<double>()});
  }
  rep.mae = j.at("mae").get<double>();
  rep.rmse = j.at("rmse").get<double>();
  rep.r = j.at("r").get<double>();
  const auto& ba = j.at("bland_altman");
  rep.bland_altman.mean = ba.at("mean").get<std::vector<double>>();
  rep.bland_altman.diff = ba.at("diff").get<std::vector<double>>();
  rep.bland_altman.bias = ba.at("bias").get<double>();
  rep.bland_altman.sd = ba.at("sd").get<double>();
  rep.bland_altman.loa_lower = ba.at("loa_lower").get<double>();
  rep.bland_altman.loa_upper = ba.at("loa_upper").get<double>();
  return rep;
}

void write_report(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << report_to_json(report) << "\n";
}

}  // namespace rppg
