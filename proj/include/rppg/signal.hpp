#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rppg {

/// Per-frame waveform; rate is samples per second (the video fps).
struct RppgSignal {
  std::vector<double> samples;
  double rate = 0.0;
};

class SpectrumError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WelchOptions {
  std::size_t segment_len = 0;  // 0: min(128, signal length)
  double overlap = 0.5;
  std::size_t fft_len = 4096;   // raised to the next power of two >= segment_len
};

struct Spectrum {
  std::vector<double> freqs;  // Hz, 0 .. rate/2
  std::vector<double> power;  // one-sided density, >= 0
};

/// Averaged periodogram of mean-removed, Hann-windowed, overlapping segments.
Spectrum welch_psd(const RppgSignal& signal, WelchOptions options = {});

struct HrBand {
  double low_hz = 0.7;
  double high_hz = 4.0;
};

struct HrOptions {
  HrBand band;
  WelchOptions welch;
  // In-band peak must reach this fraction of the strongest non-DC bin.
  double min_relative_peak = 1e-3;
};

/// 60 x the frequency of the largest in-band Welch peak.
/// Throws SpectrumError when the signal is shorter than 2 s or carries no in-band power.
double estimate_hr(const RppgSignal& signal, HrOptions options = {});

/// Mean of per-clip estimates.
double video_hr(const std::vector<RppgSignal>& clips, HrOptions options = {});

struct VideoHr {
  std::string video_id;
  double hr_pred = 0.0;
  double hr_gt = 0.0;
};

struct BlandAltman {
  std::vector<double> mean;  // (pred + gt) / 2
  std::vector<double> diff;  // pred - gt
  double bias = 0.0;
  double sd = 0.0;           // sample SD of diff
  double loa_lower = 0.0;    // bias - 1.96 sd
  double loa_upper = 0.0;    // bias + 1.96 sd
};

struct EvalReport {
  std::vector<VideoHr> videos;
  double mae = 0.0;
  double rmse = 0.0;
  double r = 0.0;
  BlandAltman bland_altman;
};

double mean_absolute_error(std::span<const double> pred, std::span<const double> gt);
double root_mean_square_error(std::span<const double> pred, std::span<const double> gt);
/// Throws std::invalid_argument if either side has zero variance.
double pearson_r(std::span<const double> pred, std::span<const double> gt);

EvalReport compute_metrics(std::vector<VideoHr> pairs);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);
void write_report(const std::filesystem::path& path, const EvalReport& report);

}  // namespace rppg
