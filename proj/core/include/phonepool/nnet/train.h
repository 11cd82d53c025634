// core/include/phonepool/nnet/train.h

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

#ifndef PHONEPOOL_NNET_TRAIN_H_
#define PHONEPOOL_NNET_TRAIN_H_

#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phonepool/matrix.h"
#include "phonepool/nnet/model.h"

namespace phonepool::nnet {

struct Example {
  std::string utterance_id;
  Matrix source;            // frames x input_dims
  std::vector<int> target;  // <s> ... </s>
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // mean smoothed CE per target token
  double dev_accuracy = 0.0;
  double lr = 0.0;          // rate used during this epoch
  double wall_seconds = 0.0;
  int num_batches = 0;
  bool lr_decayed = false;  // decay triggered after this epoch
};

nlohmann::json ToJson(const EpochRecord& r, bool include_timing = true);

/// Groups example indices into batches: sort by source length, then fill
/// each batch up to a frame budget of avg_batch_size * median length.
std::vector<std::vector<int>> MakeBatches(std::span<const int> source_lengths, int avg_batch_size);

/// Indices of examples whose source length is at most max_src_frames.
std::vector<int> FilterByLength(std::span<const Example> data, int max_src_frames);

/// Replaces decoder input tokens (never the leading <s>) with <unk> at `rate`.
std::vector<int> ApplyTokenDropout(const std::vector<int>& target, double rate, int unk_id,
                                   std::mt19937_64& rng);

/// Teacher-forced, eval-mode token accuracy (padding excluded).
double TokenAccuracy(Seq2SeqModel& model, std::span<const Example> data, int batch_size = 32);

struct TrainResult {
  std::vector<EpochRecord> log;
  int num_train_examples = 0;
  int num_filtered = 0;
};

/// Optional per-epoch hook; returning false stops training early.
using EpochCallback = std::function<bool(const EpochRecord&)>;

/// Adam with plateau decay, variational recurrent dropout, target token
/// dropout, label smoothing and fixed-norm target embeddings. Deterministic
/// for a fixed config.seed.
TrainResult Train(Seq2SeqModel& model, std::span<const Example> train, std::span<const Example> dev,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace phonepool::nnet

#endif  // PHONEPOOL_NNET_TRAIN_H_
