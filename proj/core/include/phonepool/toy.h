// core/include/phonepool/toy.h

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

#ifndef PHONEPOOL_TOY_H_
#define PHONEPOOL_TOY_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phonepool/alignment.h"
#include "phonepool/features.h"
#include "phonepool/nnet/model.h"
#include "phonepool/nnet/train.h"
#include "phonepool/textproc.h"

namespace phonepool {

/// Synthetic frames-to-words corpus: every source symbol has a fixed random
/// prototype vector and is emitted as a run of noisy copies of it; the
/// target is one word per symbol.
struct ToyCorpusConfig {
  int num_utterances = 3000;
  int num_symbols = 30;
  int dims = 40;
  int min_run = 5;
  int max_run = 12;
  int min_symbols = 4;  // symbols per utterance
  int max_symbols = 10;
  double prototype_std = 1.0;
  double noise_std = 1.0;
  double dev_fraction = 0.1;
  std::uint64_t seed = 1;

  void Validate() const;
};

struct ToyUtterance {
  FeatureMatrix features;
  FrameAlignment alignment;  // oracle, one symbol index per frame
  std::vector<int> symbols;
  std::string translation;
};

struct ToyCorpus {
  PhonemeInventory inventory;
  std::vector<std::string> words;  // word for each symbol
  std::vector<ToyUtterance> train;
  std::vector<ToyUtterance> dev;
};

/// Deterministic for a fixed config (including seed).
ToyCorpus GenerateToyCorpus(const ToyCorpusConfig& config);

/// Source representation fed to the encoder.
enum class SourceCondition { kFrames, kPooled, kStride };
std::string_view SourceConditionName(SourceCondition c);

struct CompareConfig {
  nnet::EncoderConfig encoder;
  nnet::DecoderConfig decoder;  // vocab_size is filled in from the corpus
  nnet::TrainConfig train;
  double threshold = 0.9;  // dev token accuracy
  int stride = 2;
  std::vector<SourceCondition> conditions{SourceCondition::kPooled, SourceCondition::kFrames,
                                          SourceCondition::kStride};

  /// Small settings suited to the toy corpus on one CPU core.
  static CompareConfig ToyDefaults();
};

struct ConditionResult {
  SourceCondition condition;
  double mean_source_length = 0.0;
  std::optional<int> epochs_to_threshold;
  double final_dev_accuracy = 0.0;
  double mean_epoch_seconds = 0.0;
  std::vector<nnet::EpochRecord> log;
};

struct ComparisonReport {
  int epochs = 0;
  double threshold = 0.0;
  std::vector<ConditionResult> results;

  const ConditionResult* Find(SourceCondition c) const;
};

std::vector<nnet::Example> MakeExamples(const std::vector<ToyUtterance>& utts,
                                        SourceCondition condition, const VocabSpec& vocab,
                                        int stride = 2);

ComparisonReport RunComparison(const ToyCorpus& corpus, const CompareConfig& config,
                               std::ostream* progress = nullptr);

/// Plain-text trend report. Wall-clock figures are left out when
/// `include_timing` is false so that reports are byte-reproducible.
std::string FormatReport(const ComparisonReport& report, bool include_timing = true);
nlohmann::json ReportToJson(const ComparisonReport& report, bool include_timing = true);

}  // namespace phonepool

#endif  // PHONEPOOL_TOY_H_
