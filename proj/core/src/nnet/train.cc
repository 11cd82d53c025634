// core/src/nnet/train.cc

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

#include "phonepool/nnet/train.h"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "phonepool/error.h"
#include "phonepool/nnet/optim.h"
#include "phonepool/textproc.h"

namespace phonepool::nnet {

nlohmann::json ToJson(const EpochRecord& r, bool include_timing) {
  nlohmann::json j{{"epoch", r.epoch},           {"train_loss", r.train_loss},
                   {"dev_accuracy", r.dev_accuracy}, {"lr", r.lr},
                   {"num_batches", r.num_batches}, {"lr_decayed", r.lr_decayed}};
  if (include_timing) j["wall_seconds"] = r.wall_seconds;
  return j;
}

std::vector<std::vector<int>> MakeBatches(std::span<const int> source_lengths, int avg_batch_size) {
  std::vector<std::vector<int>> batches;
  if (source_lengths.empty()) return batches;
  std::vector<int> order(source_lengths.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return source_lengths[a] < source_lengths[b]; });
  std::vector<int> sorted(source_lengths.begin(), source_lengths.end());
  std::sort(sorted.begin(), sorted.end());
  const int median = sorted[sorted.size() / 2];
  const long budget = static_cast<long>(avg_batch_size) * std::max(median, 1);

  std::vector<int> current;
  long frames = 0;
  for (int idx : order) {
    if (!current.empty() && frames + source_lengths[idx] > budget) {
      batches.push_back(std::move(current));
      current.clear();
      frames = 0;
    }
    current.push_back(idx);
    frames += source_lengths[idx];
  }
  if (!current.empty()) batches.push_back(std::move(current));
  return batches;
}

std::vector<int> FilterByLength(std::span<const Example> data, int max_src_frames) {
  std::vector<int> kept;
  for (int i = 0; i < static_cast<int>(data.size()); ++i) {
    if (data[i].source.rows() <= max_src_frames) kept.push_back(i);
  }
  return kept;
}

std::vector<int> ApplyTokenDropout(const std::vector<int>& target, double rate, int unk_id,
                                   std::mt19937_64& rng) {
  std::vector<int> out(target);
  if (rate <= 0.0) return out;
  std::bernoulli_distribution drop(rate);
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (drop(rng)) out[i] = unk_id;
  }
  return out;
}

double TokenAccuracy(Seq2SeqModel& model, std::span<const Example> data, int batch_size) {
  if (data.empty()) return 0.0;
  long correct = 0;
  long total = 0;
  ForwardOptions opts;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    std::size_t end = std::min(data.size(), start + batch_size);
    std::vector<const Matrix*> src;
    std::vector<const std::vector<int>*> tgt;
    for (std::size_t i = start; i < end; ++i) {
      src.push_back(&data[i].source);
      tgt.push_back(&data[i].target);
    }
    Tape tape(false);
    auto loss = model.TeacherForcedLoss(tape, src, tgt, tgt, 0.0, opts);
    correct += loss.num_correct;
    total += loss.num_tokens;
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

TrainResult Train(Seq2SeqModel& model, std::span<const Example> train, std::span<const Example> dev,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.Validate();
  if (train.empty()) throw ValidationError("train: empty dataset");
  std::vector<int> kept = FilterByLength(train, config.max_src_frames);
  if (kept.empty()) throw ValidationError("train: all utterances filtered out by max_src_frames");

  TrainResult result;
  result.num_train_examples = static_cast<int>(kept.size());
  result.num_filtered = static_cast<int>(train.size() - kept.size());

  std::vector<int> lengths;
  for (int i : kept) lengths.push_back(static_cast<int>(train[i].source.rows()));
  std::vector<std::vector<int>> batches = MakeBatches(lengths, config.avg_batch_size);
  for (auto& b : batches) {
    for (int& i : b) i = kept[i];
  }

  std::mt19937_64 rng(config.seed);
  Adam adam(model.params().Trainable(), config.lr, config.adam_beta1, config.adam_beta2,
            config.adam_eps);
  PlateauSchedule schedule(config.lr, config.lr_decay, config.patience_initial,
                           config.patience_after);
  model.RenormalizeEmbeddings(config.embed_norm);

  ForwardOptions opts;
  opts.training = true;
  opts.recurrent_dropout = config.recurrent_dropout;
  opts.rng = &rng;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    std::shuffle(batches.begin(), batches.end(), rng);
    double loss_sum = 0.0;
    long tokens = 0;
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = adam.lr();
    for (const auto& batch : batches) {
      std::vector<const Matrix*> src;
      std::vector<const std::vector<int>*> tgt;
      std::vector<std::vector<int>> inputs;
      inputs.reserve(batch.size());
      for (int i : batch) {
        src.push_back(&train[i].source);
        tgt.push_back(&train[i].target);
        inputs.push_back(ApplyTokenDropout(train[i].target, config.target_token_dropout, Vocab::kUnk, rng));
      }
      std::vector<const std::vector<int>*> in_ptrs;
      for (const auto& v : inputs) in_ptrs.push_back(&v);

      Tape tape;
      auto loss = model.TeacherForcedLoss(tape, src, tgt, in_ptrs, config.label_smoothing, opts);
      Var mean_loss = tape.Scale(loss.loss_sum, 1.0 / std::max(loss.num_tokens, 1));
      model.params().ZeroGrad();
      tape.Backward(mean_loss);
      adam.Step();
      model.RenormalizeEmbeddings(config.embed_norm);
      loss_sum += tape.value(loss.loss_sum)(0, 0);
      tokens += loss.num_tokens;
      ++rec.num_batches;
    }
    if (!model.params().AllFinite()) throw Error("train: non-finite parameters after epoch " + std::to_string(epoch));
    rec.train_loss = tokens == 0 ? 0.0 : loss_sum / static_cast<double>(tokens);
    rec.dev_accuracy = TokenAccuracy(model, dev.empty() ? train : dev);
    rec.lr_decayed = schedule.Observe(rec.dev_accuracy);
    adam.set_lr(schedule.lr());
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(rec);
    if (on_epoch && !on_epoch(rec)) break;
  }
  return result;
}

}  // namespace phonepool::nnet
