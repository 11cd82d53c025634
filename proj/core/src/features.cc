// core/src/features.cc

// Copyright 2026 The phonepool Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "phonepool/features.h"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>

#include "phonepool/error.h"
#include "phonepool/parallel.h"

namespace phonepool {

namespace {

// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex& FftwPlannerMutex() {
  static std::mutex mu;
  return mu;
}

int NextPowerOfTwo(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

bool IsPowerOfTwo(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

int FrontendConfig::WindowSamples(int sample_rate) const {
  return static_cast<int>(std::lround(sample_rate * window_ms / 1000.0));
}

int FrontendConfig::ShiftSamples(int sample_rate) const {
  return static_cast<int>(std::lround(sample_rate * shift_ms / 1000.0));
}

int FrontendConfig::FftSize(int sample_rate) const {
  return fft_size > 0 ? fft_size : NextPowerOfTwo(WindowSamples(sample_rate));
}

double FrontendConfig::HighFreq(int sample_rate) const {
  double nyquist = 0.5 * sample_rate;
  return high_freq_hz > 0.0 ? high_freq_hz : nyquist + high_freq_hz;
}

void FrontendConfig::Validate(int sample_rate) const {
  auto fail = [](const std::string& what) {
    throw ValidationError("invalid frontend configuration: " + what);
  };
  if (sample_rate <= 0) fail("sample rate must be positive");
  if (!(window_ms > 0.0)) fail("window_ms must be positive");
  if (!(shift_ms > 0.0)) fail("shift_ms must be positive");
  if (shift_ms > window_ms) fail("shift_ms exceeds window_ms");
  if (num_mel_bins < 2) fail("num_mel_bins must be at least 2");
  if (preemphasis < 0.0 || preemphasis >= 1.0) fail("preemphasis must lie in [0, 1)");
  if (!(log_floor > 0.0)) fail("log_floor must be positive");
  if (dither < 0.0) fail("dither must be non-negative");
  int window = WindowSamples(sample_rate);
  if (window < 2 || ShiftSamples(sample_rate) < 1) fail("window or shift shorter than one sample");
  int n_fft = FftSize(sample_rate);
  if (!IsPowerOfTwo(n_fft)) fail("fft_size must be a power of two");
  if (n_fft < window) fail("fft_size smaller than window length");
  double nyquist = 0.5 * sample_rate;
  double high = HighFreq(sample_rate);
  if (high > nyquist) {
    std::ostringstream os;
    os << "Nyquist frequency " << nyquist << " Hz is below the top mel edge " << high << " Hz";
    fail(os.str());
  }
  if (low_freq_hz < 0.0 || !(high > low_freq_hz)) fail("mel edges must satisfy 0 <= low < high");
}

int NumFrames(std::int64_t num_samples, int window_samples, int shift_samples) {
  if (num_samples < window_samples) return 0;
  return static_cast<int>((num_samples - window_samples) / shift_samples) + 1;
}

double MelScale(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double InverseMelScale(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

struct LogMelFrontend::FftPlan {
  explicit FftPlan(int n) : size(n) {
    std::lock_guard<std::mutex> lock(FftwPlannerMutex());
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
  }
  ~FftPlan() {
    std::lock_guard<std::mutex> lock(FftwPlannerMutex());
    fftw_destroy_plan(plan);
  }
  int size;
  fftw_plan plan;
};

LogMelFrontend::LogMelFrontend(const FrontendConfig& cfg, int sample_rate)
    : cfg_(cfg), sample_rate_(sample_rate) {
  cfg_.Validate(sample_rate);
  window_ = cfg_.WindowSamples(sample_rate);
  shift_ = cfg_.ShiftSamples(sample_rate);
  fft_size_ = cfg_.FftSize(sample_rate);

  window_fn_.resize(window_);
  for (int i = 0; i < window_; ++i) {
    window_fn_[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (window_ - 1));
  }

  // Triangles are laid out evenly on the mel axis between the two edges and
  // evaluated at each FFT bin's mel position.
  int num_fft_bins = fft_size_ / 2 + 1;
  int bins = cfg_.num_mel_bins;
  double mel_low = MelScale(cfg_.low_freq_hz);
  double mel_high = MelScale(cfg_.HighFreq(sample_rate));
  double mel_delta = (mel_high - mel_low) / (bins + 1);
  mel_weights_ = Matrix::Zero(bins, num_fft_bins);
  for (int b = 0; b < bins; ++b) {
    double left = mel_low + b * mel_delta;
    double center = left + mel_delta;
    double right = center + mel_delta;
    for (int k = 0; k < num_fft_bins; ++k) {
      double mel = MelScale(static_cast<double>(k) * sample_rate / fft_size_);
      if (mel > left && mel < right) {
        mel_weights_(b, k) = mel <= center ? (mel - left) / (center - left)
                                           : (right - mel) / (right - center);
      }
    }
  }
  plan_ = std::make_unique<FftPlan>(fft_size_);
}

LogMelFrontend::~LogMelFrontend() = default;

double LogMelFrontend::BinCenterHz(int bin) const {
  double mel_low = MelScale(cfg_.low_freq_hz);
  double mel_high = MelScale(cfg_.HighFreq(sample_rate_));
  double mel_delta = (mel_high - mel_low) / (cfg_.num_mel_bins + 1);
  return InverseMelScale(mel_low + (bin + 1) * mel_delta);
}

FeatureMatrix LogMelFrontend::Compute(const Waveform& wave) const {
  if (wave.sample_rate != sample_rate_) {
    std::ostringstream os;
    os << "sample rate " << wave.sample_rate << " does not match frontend rate " << sample_rate_;
    throw ValidationError(os.str());
  }
  int64_t n = static_cast<int64_t>(wave.samples.size());
  int frames = NumFrames(n, window_, shift_);
  if (frames == 0) {
    throw ValidationError("utterance too short: '" + wave.utterance_id + "' has " +
                          std::to_string(n) + " samples, window is " + std::to_string(window_));
  }

  int num_fft_bins = fft_size_ / 2 + 1;
  std::unique_ptr<double, decltype(&fftw_free)> in(fftw_alloc_real(fft_size_), &fftw_free);
  std::unique_ptr<fftw_complex, decltype(&fftw_free)> out(fftw_alloc_complex(num_fft_bins),
                                                          &fftw_free);
  std::mt19937_64 rng(cfg_.dither_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  FeatureMatrix result;
  result.utterance_id = wave.utterance_id;
  result.speaker_id = wave.speaker_id;
  result.data.resize(frames, cfg_.num_mel_bins);
  Vector power(num_fft_bins);
  double* buf = in.get();
  for (int f = 0; f < frames; ++f) {
    const double* frame = wave.samples.data() + static_cast<int64_t>(f) * shift_;
    for (int i = 0; i < window_; ++i) {
      buf[i] = frame[i];
      if (cfg_.dither > 0.0) buf[i] += cfg_.dither * gauss(rng);
    }
    for (int i = window_ - 1; i > 0; --i) buf[i] -= cfg_.preemphasis * buf[i - 1];
    buf[0] -= cfg_.preemphasis * buf[0];
    for (int i = 0; i < window_; ++i) buf[i] *= window_fn_[i];
    for (int i = window_; i < fft_size_; ++i) buf[i] = 0.0;

    fftw_execute_dft_r2c(plan_->plan, buf, out.get());
    for (int k = 0; k < num_fft_bins; ++k) {
      power[k] = out.get()[k][0] * out.get()[k][0] + out.get()[k][1] * out.get()[k][1];
    }
    Vector energies = mel_weights_ * power;
    for (int b = 0; b < cfg_.num_mel_bins; ++b) {
      result.data(f, b) = std::log(std::max(energies[b], cfg_.log_floor));
    }
  }
  return result;
}

FeatureMatrix ComputeLogMel(const Waveform& wave, const FrontendConfig& cfg) {
  if (wave.samples.empty()) throw ValidationError("utterance too short: empty waveform");
  LogMelFrontend frontend(cfg, wave.sample_rate);
  return frontend.Compute(wave);
}

std::vector<FeatureMatrix> ApplySpeakerCmvn(std::span<const FeatureMatrix> features,
                                            double var_floor, int jobs) {
  if (features.empty()) throw ValidationError("cmvn: empty input");
  const int dims = features.front().Dims();
  for (const auto& fm : features) {
    if (fm.Dims() != dims) {
      throw ValidationError("cmvn: dims mismatch for '" + fm.utterance_id + "': " +
                            std::to_string(fm.Dims()) + " vs " + std::to_string(dims));
    }
  }

  struct Stats {
    RowVector sum;
    RowVector sq_dev;
    RowVector mean;
    RowVector scale;
    std::int64_t count = 0;
  };
  std::map<std::string, Stats> by_speaker;
  for (const auto& fm : features) {
    Stats& s = by_speaker[fm.speaker_id];
    if (s.count == 0) {
      s.sum = RowVector::Zero(dims);
      s.sq_dev = RowVector::Zero(dims);
    }
    s.sum += fm.data.colwise().sum();
    s.count += fm.NumFrames();
  }
  for (auto& [spk, s] : by_speaker) {
    if (s.count == 0) throw ValidationError("cmvn: speaker '" + spk + "' has no frames");
    s.mean = s.sum / static_cast<double>(s.count);
  }
  // Second pass for the variance keeps cancellation error out of near-constant dims.
  for (const auto& fm : features) {
    Stats& s = by_speaker[fm.speaker_id];
    s.sq_dev += (fm.data.rowwise() - s.mean).array().square().matrix().colwise().sum();
  }
  for (auto& [spk, s] : by_speaker) {
    RowVector var = s.sq_dev / static_cast<double>(s.count);
    s.scale = (var.array() + var_floor).sqrt().inverse().matrix();
  }

  std::vector<FeatureMatrix> out(features.size());
  parallel_for(features.size(), jobs, [&](std::size_t i) {
    const FeatureMatrix& fm = features[i];
    const Stats& s = by_speaker.at(fm.speaker_id);
    out[i].utterance_id = fm.utterance_id;
    out[i].speaker_id = fm.speaker_id;
    out[i].data = ((fm.data.rowwise() - s.mean).array().rowwise() * s.scale.array()).matrix();
  });
  return out;
}

}  // namespace phonepool
