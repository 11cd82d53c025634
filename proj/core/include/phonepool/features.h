// core/include/phonepool/features.h

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

#ifndef PHONEPOOL_FEATURES_H_
#define PHONEPOOL_FEATURES_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "phonepool/matrix.h"

namespace phonepool {

struct Waveform {
  std::vector<double> samples;  // amplitude in [-1, 1]
  int sample_rate = 16000;
  std::string utterance_id;
  std::string speaker_id;
};

struct FrontendConfig {
  double window_ms = 25.0;
  double shift_ms = 10.0;
  int num_mel_bins = 40;
  int fft_size = 0;  // 0: smallest power of two >= window length
  double preemphasis = 0.97;
  double log_floor = 1e-10;
  double dither = 0.0;
  std::uint64_t dither_seed = 0;
  double low_freq_hz = 20.0;
  double high_freq_hz = 0.0;  // <= 0: offset from Nyquist

  int WindowSamples(int sample_rate) const;
  int ShiftSamples(int sample_rate) const;
  int FftSize(int sample_rate) const;
  double HighFreq(int sample_rate) const;
  /// Throws ValidationError on an inconsistent configuration.
  void Validate(int sample_rate) const;
};

struct FeatureMatrix {
  std::string utterance_id;
  std::string speaker_id;
  Matrix data;  // frames x dims

  int NumFrames() const { return static_cast<int>(data.rows()); }
  int Dims() const { return static_cast<int>(data.cols()); }
};

/// floor((num_samples - window) / shift) + 1, or 0 if shorter than a window.
int NumFrames(std::int64_t num_samples, int window_samples, int shift_samples);

double MelScale(double hz);
double InverseMelScale(double mel);

/// Log-Mel filterbank frontend. Holds the mel weights and an FFT plan for one
/// (config, sample rate) pair; Compute() is const and thread-safe.
class LogMelFrontend {
 public:
  LogMelFrontend(const FrontendConfig& cfg, int sample_rate);
  ~LogMelFrontend();
  LogMelFrontend(const LogMelFrontend&) = delete;
  LogMelFrontend& operator=(const LogMelFrontend&) = delete;

  FeatureMatrix Compute(const Waveform& wave) const;

  /// num_mel_bins x (fft_size/2 + 1) triangular weights on the power spectrum.
  const Matrix& MelWeights() const { return mel_weights_; }
  double BinCenterHz(int bin) const;
  int sample_rate() const { return sample_rate_; }
  const FrontendConfig& config() const { return cfg_; }

 private:
  struct FftPlan;

  FrontendConfig cfg_;
  int sample_rate_;
  int window_;
  int shift_;
  int fft_size_;
  std::vector<double> window_fn_;
  Matrix mel_weights_;
  std::unique_ptr<FftPlan> plan_;
};

FeatureMatrix ComputeLogMel(const Waveform& wave, const FrontendConfig& cfg);

inline constexpr double kCmvnVarianceFloor = 1e-10;

/// Per-speaker mean/variance normalization. Statistics are pooled over every
/// frame of every utterance sharing a speaker_id (population variance).
std::vector<FeatureMatrix> ApplySpeakerCmvn(std::span<const FeatureMatrix> features,
                                            double var_floor = kCmvnVarianceFloor,
                                            int jobs = 1);

}  // namespace phonepool

#endif  // PHONEPOOL_FEATURES_H_
