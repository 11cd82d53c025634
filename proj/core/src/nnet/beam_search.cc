// core/src/nnet/beam_search.cc

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

#include "phonepool/nnet/beam_search.h"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "phonepool/error.h"
#include "phonepool/textproc.h"

namespace phonepool::nnet {

double LengthNormalizedScore(double log_prob, int length, double alpha) {
  if (length <= 0) throw ValidationError("length normalization needs a positive length");
  return log_prob / std::pow(static_cast<double>(length), alpha);
}

bool HypothesisBefore(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

namespace {

struct Active {
  std::vector<int> tokens;
  double log_prob = 0.0;
  RowVector h, c, context;
};

struct Candidate {
  double log_prob;
  int hyp;
  int token;
};

RowVector LogSoftmax(const RowVector& z) {
  const double m = z.maxCoeff();
  const double lse = m + std::log((z.array() - m).exp().sum());
  return (z.array() - lse).matrix();
}

// Replicates a single-utterance stacked matrix (T rows) for k hypotheses in
// time-major layout (row t*k + j).
Matrix Tile(const Matrix& m, int k) {
  Matrix out(m.rows() * k, m.cols());
  for (Eigen::Index t = 0; t < m.rows(); ++t) {
    for (int j = 0; j < k; ++j) out.row(t * k + j) = m.row(t);
  }
  return out;
}

}  // namespace

std::vector<Hypothesis> BeamSearch(Seq2SeqModel& model, const Matrix& source,
                                   const DecodeOptions& opts) {
  if (opts.beam < 1) throw ValidationError("beam size must be >= 1");
  const int vocab = model.decoder_config().vocab_size;
  const int hidden = model.decoder_config().hidden;
  const int enc_dims = model.encoder_config().hidden;

  Matrix enc_states;
  Matrix keys;
  {
    Tape tape(false);
    const Matrix* src[] = {&source};
    EncodedBatch enc = model.Encode(tape, src, ForwardOptions{});
    keys = tape.value(model.AttentionKeys(tape, enc));
    enc_states = tape.value(enc.states);
  }
  const int steps = static_cast<int>(enc_states.rows());
  const int max_len = opts.max_length > 0 ? opts.max_length : 3 * steps + 10;

  std::vector<Active> active(1);
  active[0].tokens = {Vocab::kBos};
  active[0].h = RowVector::Zero(hidden);
  active[0].c = RowVector::Zero(hidden);
  active[0].context = RowVector::Zero(enc_dims);
  std::vector<Hypothesis> finished;

  for (int len = 1; len <= max_len && !active.empty(); ++len) {
    const int k = static_cast<int>(active.size());
    Tape tape(false);
    EncodedBatch enc{tape.Constant(Tile(enc_states, k)), steps, k, std::vector<int>(k, steps)};
    Var key_var = tape.Constant(Tile(keys, k));
    Matrix h(k, hidden), c(k, hidden), ctx(k, enc_dims);
    std::vector<int> prev(k);
    for (int j = 0; j < k; ++j) {
      h.row(j) = active[j].h;
      c.row(j) = active[j].c;
      ctx.row(j) = active[j].context;
      prev[j] = active[j].tokens.back();
    }
    DecoderState state{tape.Constant(std::move(h)), tape.Constant(std::move(c)),
                       tape.Constant(std::move(ctx))};
    Var logits;
    DecoderState next = model.Step(tape, enc, key_var, prev, state, Matrix(), &logits);
    const Matrix& z = tape.value(logits);

    std::vector<Candidate> cands;
    cands.reserve(static_cast<std::size_t>(k) * vocab);
    for (int j = 0; j < k; ++j) {
      RowVector lp = LogSoftmax(z.row(j));
      for (int v = 0; v < vocab; ++v) {
        if (v == Vocab::kPad || v == Vocab::kBos) continue;
        cands.push_back({active[j].log_prob + lp[v], j, v});
      }
    }
    const std::size_t keep = std::min<std::size_t>(opts.beam, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + keep, cands.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
                        return std::tie(a.hyp, a.token) < std::tie(b.hyp, b.token);
                      });

    const Matrix& nh = tape.value(next.h);
    const Matrix& nc = tape.value(next.c);
    const Matrix& nctx = tape.value(next.context);
    std::vector<Active> survivors;
    for (std::size_t i = 0; i < keep; ++i) {
      const Candidate& cand = cands[i];
      const Active& parent = active[cand.hyp];
      if (cand.token == Vocab::kEos) {
        Hypothesis hyp;
        hyp.tokens.assign(parent.tokens.begin() + 1, parent.tokens.end());
        hyp.log_prob = cand.log_prob;
        hyp.length = len;
        hyp.score = LengthNormalizedScore(cand.log_prob, len, opts.len_norm_exp);
        hyp.finished = true;
        finished.push_back(std::move(hyp));
        continue;
      }
      Active a;
      a.tokens = parent.tokens;
      a.tokens.push_back(cand.token);
      a.log_prob = cand.log_prob;
      a.h = nh.row(cand.hyp);
      a.c = nc.row(cand.hyp);
      a.context = nctx.row(cand.hyp);
      survivors.push_back(std::move(a));
    }
    active = std::move(survivors);
    if (static_cast<int>(finished.size()) >= opts.beam) break;
  }

  if (finished.empty()) {
    for (const Active& a : active) {
      Hypothesis hyp;
      hyp.tokens.assign(a.tokens.begin() + 1, a.tokens.end());
      hyp.log_prob = a.log_prob;
      hyp.length = static_cast<int>(hyp.tokens.size());
      hyp.score = LengthNormalizedScore(a.log_prob, std::max(hyp.length, 1), opts.len_norm_exp);
      finished.push_back(std::move(hyp));
    }
  }
  std::sort(finished.begin(), finished.end(), HypothesisBefore);
  if (static_cast<int>(finished.size()) > opts.beam) finished.resize(opts.beam);
  return finished;
}

Hypothesis GreedyDecode(Seq2SeqModel& model, const Matrix& source, const DecodeOptions& opts) {
  const int vocab = model.decoder_config().vocab_size;
  Tape tape(false);
  const Matrix* src[] = {&source};
  EncodedBatch enc = model.Encode(tape, src, ForwardOptions{});
  Var keys = model.AttentionKeys(tape, enc);
  DecoderState state = model.InitialState(tape, 1);
  const int max_len = opts.max_length > 0 ? opts.max_length : 3 * enc.steps + 10;

  Hypothesis hyp;
  int prev = Vocab::kBos;
  for (int len = 1; len <= max_len; ++len) {
    Var logits;
    state = model.Step(tape, enc, keys, std::span<const int>(&prev, 1), state, Matrix(), &logits);
    RowVector lp = LogSoftmax(tape.value(logits).row(0));
    int best = -1;
    for (int v = 0; v < vocab; ++v) {
      if (v == Vocab::kPad || v == Vocab::kBos) continue;
      if (best < 0 || lp[v] > lp[best]) best = v;
    }
    hyp.log_prob += lp[best];
    hyp.length = len;
    if (best == Vocab::kEos) {
      hyp.finished = true;
      break;
    }
    hyp.tokens.push_back(best);
    prev = best;
  }
  hyp.score = LengthNormalizedScore(hyp.log_prob, hyp.length, opts.len_norm_exp);
  return hyp;
}

}  // namespace phonepool::nnet
