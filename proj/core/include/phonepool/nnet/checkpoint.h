// core/include/phonepool/nnet/checkpoint.h

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

#ifndef PHONEPOOL_NNET_CHECKPOINT_H_
#define PHONEPOOL_NNET_CHECKPOINT_H_

#include <cstdint>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "phonepool/nnet/model.h"
#include "phonepool/textproc.h"

namespace phonepool::nnet {

inline constexpr int kCheckpointVersion = 1;

/// A trained model with everything needed to decode: configs, seed, target
/// vocabulary (with merges for bpe) and every named tensor.
struct Checkpoint {
  EncoderConfig encoder;
  DecoderConfig decoder;
  TrainConfig train;
  std::uint64_t seed = 0;
  VocabSpec vocab;
  std::unique_ptr<Seq2SeqModel> model;
};

nlohmann::json CheckpointToJson(const Seq2SeqModel& model, const TrainConfig& train,
                                std::uint64_t seed, const VocabSpec& vocab);
Checkpoint CheckpointFromJson(const nlohmann::json& j);

void SaveCheckpoint(const std::string& path, const Seq2SeqModel& model, const TrainConfig& train,
                    std::uint64_t seed, const VocabSpec& vocab);
Checkpoint LoadCheckpoint(const std::string& path);

}  // namespace phonepool::nnet

#endif  // PHONEPOOL_NNET_CHECKPOINT_H_
