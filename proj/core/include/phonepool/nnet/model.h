// core/include/phonepool/nnet/model.h

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

#ifndef PHONEPOOL_NNET_MODEL_H_
#define PHONEPOOL_NNET_MODEL_H_

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phonepool/matrix.h"
#include "phonepool/nnet/tape.h"

namespace phonepool::nnet {

enum class NormKind { kBatch, kLayer };

struct EncoderConfig {
  int input_dims = 40;
  int hidden = 512;     // BiLSTM output width; each direction gets hidden / 2
  int num_blocks = 2;   // LSTM/NiN blocks before the final BiLSTM
  bool downsample = true;
  NormKind norm = NormKind::kBatch;
  double norm_momentum = 0.1;
  double norm_eps = 1e-5;

  void Validate() const;
  /// Output length for an input of `steps` frames.
  int OutputLength(int steps) const;
};

struct DecoderConfig {
  int target_embed_dims = 64;
  int attn_hidden = 128;
  int hidden = 512;
  int decoder_layers = 1;
  int vocab_size = 0;

  void Validate() const;
};

struct TrainConfig {
  double recurrent_dropout = 0.2;
  double target_token_dropout = 0.1;
  double label_smoothing = 0.1;
  double embed_norm = 1.0;
  double lr = 0.0003;
  double lr_decay = 0.5;
  int patience_initial = 10;
  int patience_after = 5;
  int avg_batch_size = 36;
  int max_src_frames = 1500;
  int beam = 15;
  double len_norm_exp = 1.5;
  std::uint64_t seed = 1;
  int epochs = 30;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void Validate() const;
};

nlohmann::json ToJson(const EncoderConfig& c);
nlohmann::json ToJson(const DecoderConfig& c);
nlohmann::json ToJson(const TrainConfig& c);
EncoderConfig EncoderConfigFromJson(const nlohmann::json& j);
DecoderConfig DecoderConfigFromJson(const nlohmann::json& j);
TrainConfig TrainConfigFromJson(const nlohmann::json& j);

/// Ordered collection of named tensors.
class ParameterSet {
 public:
  Parameter& Add(std::string name, Matrix value, bool trainable = true);
  Parameter& Get(const std::string& name);
  const Parameter& Get(const std::string& name) const;
  std::vector<Parameter*> All();
  std::vector<const Parameter*> All() const;
  std::vector<Parameter*> Trainable();
  void ZeroGrad();
  bool AllFinite() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

/// Per-call switches for the stochastic parts of the forward pass.
struct ForwardOptions {
  bool training = false;
  double recurrent_dropout = 0.0;
  std::mt19937_64* rng = nullptr;  // required when recurrent_dropout > 0
};

/// Encoder output in time-major stacked layout: row t*B + b.
struct EncodedBatch {
  Var states;
  int steps = 0;
  int batch = 0;
  std::vector<int> lengths;
};

struct DecoderState {
  Var h;
  Var c;
  Var context;
};

struct AttentionResult {
  Vector context;
  Vector weights;
};

/// LSTM/NiN encoder, MLP attention and a one-layer input-feeding LSTM decoder.
class Seq2SeqModel {
 public:
  Seq2SeqModel(const EncoderConfig& enc, const DecoderConfig& dec, std::uint64_t seed);

  const EncoderConfig& encoder_config() const { return enc_; }
  const DecoderConfig& decoder_config() const { return dec_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  /// Rescales every target-embedding row to L2 norm `norm`.
  void RenormalizeEmbeddings(double norm);

  /// Batched encoder. Sources are frames x input_dims matrices.
  EncodedBatch Encode(Tape& tape, std::span<const Matrix* const> sources,
                      const ForwardOptions& opts);

  /// Keys for attention, precomputed once per encoded batch.
  Var AttentionKeys(Tape& tape, const EncodedBatch& enc);

  DecoderState InitialState(Tape& tape, int batch);

  /// One decoder step with input feeding: LSTM input is
  /// [embed(prev_tokens), state.context]; logits come from [h, new context].
  /// `recurrent_mask` (B x hidden, may be empty) is applied to h_{t-1}.
  DecoderState Step(Tape& tape, const EncodedBatch& enc, Var keys, std::span<const int> prev_tokens,
                    const DecoderState& state, const Matrix& recurrent_mask, Var* logits,
                    Matrix* attention_weights = nullptr);

  /// MLP attention for a single decoder state over enc_states (T x hidden).
  AttentionResult Attend(const Vector& dec_state, const Matrix& enc_states);

  /// Teacher-forced summed loss and token statistics over a batch. `targets`
  /// include <s> and </s>; `input_tokens` (same shapes) are the decoder inputs,
  /// possibly with token dropout applied.
  struct BatchLoss {
    Var loss_sum;
    int num_tokens = 0;
    int num_correct = 0;
  };
  BatchLoss TeacherForcedLoss(Tape& tape, std::span<const Matrix* const> sources,
                              std::span<const std::vector<int>* const> targets,
                              std::span<const std::vector<int>* const> input_tokens,
                              double smoothing, const ForwardOptions& opts);

 private:
  std::vector<Var> RunLstm(Tape& tape, const std::string& prefix, Var stacked_input, int steps,
                           int batch, std::span<const int> lengths, bool reverse,
                           const ForwardOptions& opts);
  Var BiLstm(Tape& tape, const std::string& prefix, Var stacked_input, int steps, int batch,
             std::span<const int> lengths, const ForwardOptions& opts);
  Var NinBlock(Tape& tape, int block, Var stacked, int& steps, int batch, std::vector<int>& lengths,
               const ForwardOptions& opts);
  Matrix DropoutMask(int rows, int cols, const ForwardOptions& opts) const;

  EncoderConfig enc_;
  DecoderConfig dec_;
  ParameterSet params_;
};

/// Row i is 1 if step (i / batch) < lengths[i % batch].
Vector StackedRowMask(int steps, int batch, std::span<const int> lengths);

}  // namespace phonepool::nnet

#endif  // PHONEPOOL_NNET_MODEL_H_
