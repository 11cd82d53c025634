// core/src/nnet/model.cc

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

#include "phonepool/nnet/model.h"

#include <algorithm>
#include <cmath>

#include "phonepool/error.h"

namespace phonepool::nnet {

namespace {

Matrix GlorotUniform(int rows, int cols, std::mt19937_64& rng) {
  double limit = std::sqrt(6.0 / (rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

std::string NormName(NormKind k) { return k == NormKind::kBatch ? "batch" : "layer"; }

}  // namespace

void EncoderConfig::Validate() const {
  if (input_dims < 1) throw ValidationError("encoder: input_dims must be positive");
  if (hidden < 2 || hidden % 2 != 0) throw ValidationError("encoder: hidden must be even and >= 2");
  if (num_blocks < 1) throw ValidationError("encoder: num_blocks must be at least 1");
  if (norm_momentum <= 0.0 || norm_momentum > 1.0) throw ValidationError("encoder: norm_momentum in (0, 1]");
  if (!(norm_eps > 0.0)) throw ValidationError("encoder: norm_eps must be positive");
}

int EncoderConfig::OutputLength(int steps) const {
  if (!downsample) return steps;
  for (int b = 0; b < num_blocks; ++b) steps = (steps + 1) / 2;
  return steps;
}

void DecoderConfig::Validate() const {
  if (target_embed_dims < 1 || attn_hidden < 1 || hidden < 1 || vocab_size < 1) {
    throw ValidationError("decoder: all sizes must be positive");
  }
  if (decoder_layers != 1) throw ValidationError("decoder: only one decoder layer is supported");
  if (vocab_size < 5) throw ValidationError("decoder: vocabulary must include the reserved tokens and one more");
}

void TrainConfig::Validate() const {
  auto rate = [](double r, const char* name) {
    if (r < 0.0 || r >= 1.0) throw ValidationError(std::string("train: ") + name + " must lie in [0, 1)");
  };
  rate(recurrent_dropout, "recurrent_dropout");
  rate(target_token_dropout, "target_token_dropout");
  rate(label_smoothing, "label_smoothing");
  if (!(lr > 0.0)) throw ValidationError("train: lr must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ValidationError("train: lr_decay must lie in (0, 1]");
  if (patience_initial < 1 || patience_after < 1) throw ValidationError("train: patience must be positive");
  if (avg_batch_size < 1) throw ValidationError("train: avg_batch_size must be positive");
  if (max_src_frames < 1) throw ValidationError("train: max_src_frames must be positive");
  if (beam < 1) throw ValidationError("train: beam must be positive");
  if (epochs < 1) throw ValidationError("train: epochs must be positive");
  if (!(embed_norm > 0.0)) throw ValidationError("train: embed_norm must be positive");
}

nlohmann::json ToJson(const EncoderConfig& c) {
  return {{"input_dims", c.input_dims}, {"hidden", c.hidden},
          {"num_blocks", c.num_blocks}, {"downsample", c.downsample},
          {"norm", NormName(c.norm)},   {"norm_momentum", c.norm_momentum},
          {"norm_eps", c.norm_eps}};
}

nlohmann::json ToJson(const DecoderConfig& c) {
  return {{"target_embed_dims", c.target_embed_dims},
          {"attn_hidden", c.attn_hidden},
          {"hidden", c.hidden},
          {"decoder_layers", c.decoder_layers},
          {"vocab_size", c.vocab_size}};
}

nlohmann::json ToJson(const TrainConfig& c) {
  return {{"recurrent_dropout", c.recurrent_dropout},
          {"target_token_dropout", c.target_token_dropout},
          {"label_smoothing", c.label_smoothing},
          {"embed_norm", c.embed_norm},
          {"lr", c.lr},
          {"lr_decay", c.lr_decay},
          {"patience_initial", c.patience_initial},
          {"patience_after", c.patience_after},
          {"avg_batch_size", c.avg_batch_size},
          {"max_src_frames", c.max_src_frames},
          {"beam", c.beam},
          {"len_norm_exp", c.len_norm_exp},
          {"seed", c.seed},
          {"epochs", c.epochs},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_eps", c.adam_eps}};
}

EncoderConfig EncoderConfigFromJson(const nlohmann::json& j) {
  EncoderConfig c;
  c.input_dims = j.at("input_dims").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.num_blocks = j.at("num_blocks").get<int>();
  c.downsample = j.at("downsample").get<bool>();
  std::string norm = j.at("norm").get<std::string>();
  if (norm != "batch" && norm != "layer") throw ValidationError("encoder: unknown norm '" + norm + "'");
  c.norm = norm == "batch" ? NormKind::kBatch : NormKind::kLayer;
  c.norm_momentum = j.at("norm_momentum").get<double>();
  c.norm_eps = j.at("norm_eps").get<double>();
  return c;
}

DecoderConfig DecoderConfigFromJson(const nlohmann::json& j) {
  DecoderConfig c;
  c.target_embed_dims = j.at("target_embed_dims").get<int>();
  c.attn_hidden = j.at("attn_hidden").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.decoder_layers = j.at("decoder_layers").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  return c;
}

TrainConfig TrainConfigFromJson(const nlohmann::json& j) {
  TrainConfig c;
  c.recurrent_dropout = j.at("recurrent_dropout").get<double>();
  c.target_token_dropout = j.at("target_token_dropout").get<double>();
  c.label_smoothing = j.at("label_smoothing").get<double>();
  c.embed_norm = j.at("embed_norm").get<double>();
  c.lr = j.at("lr").get<double>();
  c.lr_decay = j.at("lr_decay").get<double>();
  c.patience_initial = j.at("patience_initial").get<int>();
  c.patience_after = j.at("patience_after").get<int>();
  c.avg_batch_size = j.at("avg_batch_size").get<int>();
  c.max_src_frames = j.at("max_src_frames").get<int>();
  c.beam = j.at("beam").get<int>();
  c.len_norm_exp = j.at("len_norm_exp").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.epochs = j.at("epochs").get<int>();
  c.adam_beta1 = j.at("adam_beta1").get<double>();
  c.adam_beta2 = j.at("adam_beta2").get<double>();
  c.adam_eps = j.at("adam_eps").get<double>();
  return c;
}

Parameter& ParameterSet::Add(std::string name, Matrix value, bool trainable) {
  for (const auto& p : params_) {
    if (p->name == name) throw ValidationError("duplicate parameter '" + name + "'");
  }
  params_.push_back(std::make_unique<Parameter>(std::move(name), std::move(value), trainable));
  return *params_.back();
}

Parameter& ParameterSet::Get(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) return *p;
  }
  throw ValidationError("unknown parameter '" + name + "'");
}

const Parameter& ParameterSet::Get(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return *p;
  }
  throw ValidationError("unknown parameter '" + name + "'");
}

std::vector<Parameter*> ParameterSet::All() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterSet::All() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<Parameter*> ParameterSet::Trainable() {
  std::vector<Parameter*> out;
  for (auto& p : params_) {
    if (p->trainable) out.push_back(p.get());
  }
  return out;
}

void ParameterSet::ZeroGrad() {
  for (auto& p : params_) p->ZeroGrad();
}

bool ParameterSet::AllFinite() const {
  for (const auto& p : params_) {
    if (!p->value.allFinite()) return false;
  }
  return true;
}

Vector StackedRowMask(int steps, int batch, std::span<const int> lengths) {
  Vector mask(static_cast<Eigen::Index>(steps) * batch);
  for (int t = 0; t < steps; ++t) {
    for (int b = 0; b < batch; ++b) mask[t * batch + b] = t < lengths[b] ? 1.0 : 0.0;
  }
  return mask;
}

Seq2SeqModel::Seq2SeqModel(const EncoderConfig& enc, const DecoderConfig& dec, std::uint64_t seed)
    : enc_(enc), dec_(dec) {
  enc_.Validate();
  dec_.Validate();
  std::mt19937_64 rng(seed);
  const int h = enc_.hidden;
  auto add_lstm = [&](const std::string& prefix, int input, int hidden) {
    params_.Add(prefix + ".Wx", GlorotUniform(input, 4 * hidden, rng));
    params_.Add(prefix + ".Wh", GlorotUniform(hidden, 4 * hidden, rng));
    Matrix b = Matrix::Zero(1, 4 * hidden);
    b.middleCols(hidden, hidden).setOnes();  // forget gate
    params_.Add(prefix + ".b", std::move(b));
  };
  int in = enc_.input_dims;
  for (int l = 0; l <= enc_.num_blocks; ++l) {
    std::string p = "enc.l" + std::to_string(l);
    add_lstm(p + ".fwd", in, h / 2);
    add_lstm(p + ".bwd", in, h / 2);
    if (l == enc_.num_blocks) break;
    std::string n = "enc.nin" + std::to_string(l);
    int nin_in = enc_.downsample ? 2 * h : h;
    params_.Add(n + ".W", GlorotUniform(nin_in, h, rng));
    params_.Add(n + ".b", Matrix::Zero(1, h));
    params_.Add(n + ".gamma", Matrix::Ones(1, h));
    params_.Add(n + ".beta", Matrix::Zero(1, h));
    params_.Add(n + ".running_mean", Matrix::Zero(1, h), false);
    params_.Add(n + ".running_var", Matrix::Ones(1, h), false);
    in = h;
  }

  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix embed(dec_.vocab_size, dec_.target_embed_dims);
  for (Eigen::Index i = 0; i < embed.size(); ++i) embed.data()[i] = gauss(rng);
  params_.Add("dec.embed", std::move(embed));
  add_lstm("dec.lstm", dec_.target_embed_dims + h, dec_.hidden);
  params_.Add("att.Ws", GlorotUniform(dec_.hidden, dec_.attn_hidden, rng));
  params_.Add("att.b", Matrix::Zero(1, dec_.attn_hidden));
  params_.Add("att.Wh", GlorotUniform(h, dec_.attn_hidden, rng));
  params_.Add("att.v", GlorotUniform(dec_.attn_hidden, 1, rng));
  params_.Add("out.W", GlorotUniform(dec_.hidden + h, dec_.vocab_size, rng));
  params_.Add("out.b", Matrix::Zero(1, dec_.vocab_size));
  RenormalizeEmbeddings(1.0);
}

void Seq2SeqModel::RenormalizeEmbeddings(double norm) {
  Matrix& e = params_.Get("dec.embed").value;
  for (Eigen::Index r = 0; r < e.rows(); ++r) {
    double n = e.row(r).norm();
    if (n > 0.0) e.row(r) *= norm / n;
  }
}

Matrix Seq2SeqModel::DropoutMask(int rows, int cols, const ForwardOptions& opts) const {
  if (!opts.training || opts.recurrent_dropout <= 0.0) return Matrix();
  if (opts.rng == nullptr) throw ValidationError("dropout requires a random generator");
  std::bernoulli_distribution keep(1.0 - opts.recurrent_dropout);
  double scale = 1.0 / (1.0 - opts.recurrent_dropout);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = keep(*opts.rng) ? scale : 0.0;
  return m;
}

std::vector<Var> Seq2SeqModel::RunLstm(Tape& tape, const std::string& prefix, Var stacked_input,
                                       int steps, int batch, std::span<const int> lengths,
                                       bool reverse, const ForwardOptions& opts) {
  Var wx = tape.Param(params_.Get(prefix + ".Wx"));
  Var wh = tape.Param(params_.Get(prefix + ".Wh"));
  Var b = tape.Param(params_.Get(prefix + ".b"));
  const int hidden = static_cast<int>(tape.value(wh).rows());
  Var projected = tape.Affine(stacked_input, wx, b);
  Matrix mask = DropoutMask(batch, hidden, opts);

  Var h = tape.Constant(Matrix::Zero(batch, hidden));
  Var c = tape.Constant(Matrix::Zero(batch, hidden));
  std::vector<Var> outputs(steps);
  for (int k = 0; k < steps; ++k) {
    int t = reverse ? steps - 1 - k : k;
    Var h_in = mask.size() > 0 ? tape.MulConst(h, mask) : h;
    Var gates = tape.Add(tape.SliceRows(projected, t * batch, batch), tape.MatMul(h_in, wh));
    Var c_new = tape.LstmCell(gates, c);
    Var h_new = tape.LstmHidden(gates, c_new);
    std::vector<bool> valid(batch);
    bool all_valid = true;
    for (int i = 0; i < batch; ++i) {
      valid[i] = t < lengths[i];
      all_valid = all_valid && valid[i];
    }
    if (all_valid) {
      c = c_new;
      h = h_new;
      outputs[t] = h;
    } else {
      // Padded rows keep their previous state; in reverse they stay at zero
      // until the sequence's last real frame is reached.
      c = tape.SelectRows(valid, c_new, c);
      h = tape.SelectRows(valid, h_new, h);
      Vector row_mask(batch);
      for (int i = 0; i < batch; ++i) row_mask[i] = valid[i] ? 1.0 : 0.0;
      outputs[t] = tape.ScaleRows(h, row_mask);
    }
  }
  return outputs;
}

Var Seq2SeqModel::BiLstm(Tape& tape, const std::string& prefix, Var stacked_input, int steps,
                         int batch, std::span<const int> lengths, const ForwardOptions& opts) {
  std::vector<Var> fwd = RunLstm(tape, prefix + ".fwd", stacked_input, steps, batch, lengths, false, opts);
  std::vector<Var> bwd = RunLstm(tape, prefix + ".bwd", stacked_input, steps, batch, lengths, true, opts);
  std::vector<Var> rows(steps);
  for (int t = 0; t < steps; ++t) rows[t] = tape.ConcatCols(std::array{fwd[t], bwd[t]});
  return tape.ConcatRows(rows);
}

Var Seq2SeqModel::NinBlock(Tape& tape, int block, Var stacked, int& steps, int batch,
                           std::vector<int>& lengths, const ForwardOptions& opts) {
  const std::string n = "enc.nin" + std::to_string(block);
  Var x = stacked;
  if (enc_.downsample) {
    x = tape.PairConcatTime(stacked, steps, batch);
    steps = (steps + 1) / 2;
    for (int& len : lengths) len = (len + 1) / 2;
  }
  Var proj = tape.Affine(x, tape.Param(params_.Get(n + ".W")), tape.Param(params_.Get(n + ".b")));
  Vector row_mask = StackedRowMask(steps, batch, lengths);
  Var normed;
  if (enc_.norm == NormKind::kBatch) {
    normed = tape.BatchNorm(proj, tape.Param(params_.Get(n + ".gamma")),
                            tape.Param(params_.Get(n + ".beta")), row_mask, opts.training,
                            &params_.Get(n + ".running_mean"), &params_.Get(n + ".running_var"),
                            enc_.norm_momentum, enc_.norm_eps);
  } else {
    normed = tape.LayerNorm(proj, tape.Param(params_.Get(n + ".gamma")),
                            tape.Param(params_.Get(n + ".beta")), row_mask, enc_.norm_eps);
  }
  // Norm output is already zero on padded rows and ReLU keeps it there.
  return tape.Relu(normed);
}

EncodedBatch Seq2SeqModel::Encode(Tape& tape, std::span<const Matrix* const> sources,
                                  const ForwardOptions& opts) {
  if (sources.empty()) throw ValidationError("encoder: empty batch");
  const int batch = static_cast<int>(sources.size());
  std::vector<int> lengths(batch);
  int steps = 0;
  for (int b = 0; b < batch; ++b) {
    const Matrix& s = *sources[b];
    if (s.rows() == 0) throw ValidationError("encoder: empty input sequence");
    if (s.cols() != enc_.input_dims) {
      throw ValidationError("encoder: input dims " + std::to_string(s.cols()) + " != " +
                            std::to_string(enc_.input_dims));
    }
    lengths[b] = static_cast<int>(s.rows());
    steps = std::max(steps, lengths[b]);
  }
  Matrix stacked = Matrix::Zero(static_cast<Eigen::Index>(steps) * batch, enc_.input_dims);
  for (int b = 0; b < batch; ++b) {
    for (int t = 0; t < lengths[b]; ++t) stacked.row(t * batch + b) = sources[b]->row(t);
  }
  Var x = tape.Constant(std::move(stacked));
  for (int l = 0; l < enc_.num_blocks; ++l) {
    x = BiLstm(tape, "enc.l" + std::to_string(l), x, steps, batch, lengths, opts);
    x = NinBlock(tape, l, x, steps, batch, lengths, opts);
  }
  x = BiLstm(tape, "enc.l" + std::to_string(enc_.num_blocks), x, steps, batch, lengths, opts);
  return EncodedBatch{x, steps, batch, lengths};
}

Var Seq2SeqModel::AttentionKeys(Tape& tape, const EncodedBatch& enc) {
  return tape.MatMul(enc.states, tape.Param(params_.Get("att.Wh")));
}

DecoderState Seq2SeqModel::InitialState(Tape& tape, int batch) {
  return DecoderState{tape.Constant(Matrix::Zero(batch, dec_.hidden)),
                      tape.Constant(Matrix::Zero(batch, dec_.hidden)),
                      tape.Constant(Matrix::Zero(batch, enc_.hidden))};
}

DecoderState Seq2SeqModel::Step(Tape& tape, const EncodedBatch& enc, Var keys,
                                std::span<const int> prev_tokens, const DecoderState& state,
                                const Matrix& recurrent_mask, Var* logits,
                                Matrix* attention_weights) {
  if (static_cast<int>(prev_tokens.size()) != enc.batch) {
    throw ValidationError("decoder: token count does not match batch size");
  }
  for (int id : prev_tokens) {
    if (id < 0 || id >= dec_.vocab_size) {
      throw ValidationError("decoder: token id " + std::to_string(id) + " out of range");
    }
  }
  Var emb = tape.Embedding(tape.Param(params_.Get("dec.embed")), prev_tokens);
  Var x = tape.ConcatCols(std::array{emb, state.context});
  Var h_in = recurrent_mask.size() > 0 ? tape.MulConst(state.h, recurrent_mask) : state.h;
  Var gates = tape.Add(tape.Affine(x, tape.Param(params_.Get("dec.lstm.Wx")),
                                   tape.Param(params_.Get("dec.lstm.b"))),
                       tape.MatMul(h_in, tape.Param(params_.Get("dec.lstm.Wh"))));
  Var c = tape.LstmCell(gates, state.c);
  Var h = tape.LstmHidden(gates, c);
  Var query = tape.Affine(h, tape.Param(params_.Get("att.Ws")), tape.Param(params_.Get("att.b")));
  Var ctx = tape.AttentionCore(query, keys, enc.states, tape.Param(params_.Get("att.v")),
                               enc.lengths, attention_weights);
  if (logits != nullptr) {
    *logits = tape.Affine(tape.ConcatCols(std::array{h, ctx}), tape.Param(params_.Get("out.W")),
                          tape.Param(params_.Get("out.b")));
  }
  return DecoderState{h, c, ctx};
}

AttentionResult Seq2SeqModel::Attend(const Vector& dec_state, const Matrix& enc_states) {
  if (dec_state.size() != dec_.hidden || enc_states.cols() != enc_.hidden || enc_states.rows() == 0) {
    throw ValidationError("attention: inconsistent shapes");
  }
  Tape tape(false);
  EncodedBatch enc{tape.Constant(enc_states), static_cast<int>(enc_states.rows()), 1,
                   {static_cast<int>(enc_states.rows())}};
  Var keys = AttentionKeys(tape, enc);
  Var q = tape.Affine(tape.Constant(dec_state.transpose()), tape.Param(params_.Get("att.Ws")),
                      tape.Param(params_.Get("att.b")));
  Matrix weights;
  Var ctx = tape.AttentionCore(q, keys, enc.states, tape.Param(params_.Get("att.v")), enc.lengths,
                               &weights);
  return AttentionResult{tape.value(ctx).row(0).transpose(), weights.row(0).transpose()};
}

Seq2SeqModel::BatchLoss Seq2SeqModel::TeacherForcedLoss(
    Tape& tape, std::span<const Matrix* const> sources,
    std::span<const std::vector<int>* const> targets,
    std::span<const std::vector<int>* const> input_tokens, double smoothing,
    const ForwardOptions& opts) {
  const int batch = static_cast<int>(sources.size());
  if (static_cast<int>(targets.size()) != batch || static_cast<int>(input_tokens.size()) != batch) {
    throw ValidationError("loss: batch size mismatch");
  }
  int steps = 0;
  for (int b = 0; b < batch; ++b) {
    if (targets[b]->size() < 2 || input_tokens[b]->size() != targets[b]->size()) {
      throw ValidationError("loss: targets need <s> and </s> and matching decoder inputs");
    }
    steps = std::max(steps, static_cast<int>(targets[b]->size()) - 1);
  }
  EncodedBatch enc = Encode(tape, sources, opts);
  Var keys = AttentionKeys(tape, enc);
  DecoderState state = InitialState(tape, batch);
  Matrix mask = DropoutMask(batch, dec_.hidden, opts);

  std::vector<Var> all_logits;
  std::vector<int> gold;
  Vector row_mask(static_cast<Eigen::Index>(steps) * batch);
  std::vector<int> prev(batch);
  for (int j = 0; j < steps; ++j) {
    for (int b = 0; b < batch; ++b) {
      const int len = static_cast<int>(targets[b]->size()) - 1;
      bool valid = j < len;
      prev[b] = valid ? (*input_tokens[b])[j] : 0;
      gold.push_back(valid ? (*targets[b])[j + 1] : 0);
      row_mask[j * batch + b] = valid ? 1.0 : 0.0;
    }
    Var logits;
    state = Step(tape, enc, keys, prev, state, mask, &logits);
    all_logits.push_back(logits);
  }
  Var stacked = tape.ConcatRows(all_logits);
  BatchLoss result;
  result.loss_sum = tape.SmoothedCrossEntropy(stacked, gold, row_mask, smoothing);
  const Matrix& z = tape.value(stacked);
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    if (row_mask[r] == 0.0) continue;
    Eigen::Index arg = 0;
    z.row(r).maxCoeff(&arg);
    ++result.num_tokens;
    if (arg == gold[r]) ++result.num_correct;
  }
  return result;
}

}  // namespace phonepool::nnet
