// core/src/nnet/grad_check.cc

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

#include "phonepool/nnet/grad_check.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <random>

#include "phonepool/nnet/model.h"

namespace phonepool::nnet {

GradCheckResult GradCheck(const std::string& name, const std::vector<Parameter*>& params,
                          const LossBuilder& build, double tolerance, double eps,
                          int max_entries_per_tensor) {
  GradCheckResult result;
  result.name = name;
  result.tolerance = tolerance;

  for (Parameter* p : params) p->ZeroGrad();
  {
    Tape tape;
    Var loss = build(tape);
    tape.Backward(loss);
  }
  for (Parameter* p : params) {
    if (!p->grad.allFinite()) result.nonfinite.push_back(p->name);
  }

  auto eval = [&]() {
    Tape tape(false);
    return tape.value(build(tape))(0, 0);
  };
  for (Parameter* p : params) {
    const Eigen::Index n = p->value.size();
    const Eigen::Index stride = std::max<Eigen::Index>(1, n / max_entries_per_tensor);
    for (Eigen::Index i = 0; i < n; i += stride) {
      double& x = p->value.data()[i];
      const double saved = x;
      x = saved + eps;
      const double up = eval();
      x = saved - eps;
      const double down = eval();
      x = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = p->grad.data()[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-4});
      const double rel = std::abs(analytic - numeric) / denom;
      if (!std::isfinite(rel) || rel > result.max_rel_error) {
        result.max_rel_error = std::isfinite(rel) ? rel : INFINITY;
        result.worst_tensor = p->name;
      }
      ++result.num_checked;
    }
  }
  result.passed = result.nonfinite.empty() && result.max_rel_error <= tolerance;
  return result;
}

namespace {

Matrix Random(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

std::vector<Parameter*> Ptrs(std::vector<std::unique_ptr<Parameter>>& v) {
  std::vector<Parameter*> out;
  for (auto& p : v) out.push_back(p.get());
  return out;
}

std::vector<Parameter*> WithPrefix(ParameterSet& set, const std::vector<std::string>& prefixes) {
  std::vector<Parameter*> out;
  for (Parameter* p : set.Trainable()) {
    for (const auto& pre : prefixes) {
      if (p->name.rfind(pre, 0) == 0) {
        out.push_back(p);
        break;
      }
    }
  }
  return out;
}

}  // namespace

std::vector<GradCheckResult> RunStandardGradChecks(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<GradCheckResult> results;

  {  // Attention: hidden 8, T' = 5, two queries with lengths 5 and 3.
    const int steps = 5, batch = 2, dims = 8, attn = 6;
    std::vector<std::unique_ptr<Parameter>> ps;
    ps.push_back(std::make_unique<Parameter>("query", Random(batch, attn, rng)));
    ps.push_back(std::make_unique<Parameter>("keys", Random(steps * batch, attn, rng)));
    ps.push_back(std::make_unique<Parameter>("values", Random(steps * batch, dims, rng)));
    ps.push_back(std::make_unique<Parameter>("v", Random(attn, 1, rng)));
    Matrix r = Random(batch, dims, rng);
    std::vector<int> lengths{5, 3};
    results.push_back(GradCheck("attention", Ptrs(ps), [&](Tape& t) {
      Var ctx = t.AttentionCore(t.Param(*ps[0]), t.Param(*ps[1]), t.Param(*ps[2]), t.Param(*ps[3]),
                                lengths);
      return t.Dot(ctx, r);
    }, 1e-4));
  }

  {  // LSTM cell: hidden 4.
    const int batch = 2, in = 3, h = 4;
    std::vector<std::unique_ptr<Parameter>> ps;
    ps.push_back(std::make_unique<Parameter>("x", Random(batch, in, rng)));
    ps.push_back(std::make_unique<Parameter>("h_prev", Random(batch, h, rng)));
    ps.push_back(std::make_unique<Parameter>("c_prev", Random(batch, h, rng)));
    ps.push_back(std::make_unique<Parameter>("Wx", Random(in, 4 * h, rng, 0.5)));
    ps.push_back(std::make_unique<Parameter>("Wh", Random(h, 4 * h, rng, 0.5)));
    ps.push_back(std::make_unique<Parameter>("b", Random(1, 4 * h, rng, 0.5)));
    Matrix r = Random(batch, 2 * h, rng);
    results.push_back(GradCheck("lstm_cell", Ptrs(ps), [&](Tape& t) {
      Var gates = t.Add(t.Affine(t.Param(*ps[0]), t.Param(*ps[3]), t.Param(*ps[5])),
                        t.MatMul(t.Param(*ps[1]), t.Param(*ps[4])));
      Var c = t.LstmCell(gates, t.Param(*ps[2]));
      Var hn = t.LstmHidden(gates, c);
      return t.Dot(t.ConcatCols(std::array{hn, c}), r);
    }, 1e-4));
  }

  {  // NiN block: pair concat, projection, batch norm (train mode), ReLU.
    const int steps = 5, batch = 2, h = 4;
    std::vector<std::unique_ptr<Parameter>> ps;
    ps.push_back(std::make_unique<Parameter>("x", Random(steps * batch, h, rng)));
    ps.push_back(std::make_unique<Parameter>("W", Random(2 * h, h, rng, 0.5)));
    ps.push_back(std::make_unique<Parameter>("b", Random(1, h, rng, 0.1)));
    ps.push_back(std::make_unique<Parameter>("gamma", Random(1, h, rng, 0.2)));
    ps.push_back(std::make_unique<Parameter>("beta", Random(1, h, rng, 0.2)));
    ps[3]->value.array() += 1.0;
    Parameter running_mean("running_mean", Matrix::Zero(1, h), false);
    Parameter running_var("running_var", Matrix::Ones(1, h), false);
    std::vector<int> lengths{5, 4};
    const int out_steps = (steps + 1) / 2;
    Vector mask = StackedRowMask(out_steps, batch, std::vector<int>{3, 2});
    Matrix r = Random(out_steps * batch, h, rng);
    results.push_back(GradCheck("nin_block", Ptrs(ps), [&](Tape& t) {
      Var x = t.PairConcatTime(t.Param(*ps[0]), steps, batch);
      Var proj = t.Affine(x, t.Param(*ps[1]), t.Param(*ps[2]));
      Var bn = t.BatchNorm(proj, t.Param(*ps[3]), t.Param(*ps[4]), mask, true, &running_mean,
                           &running_var, 0.1, 1e-5);
      return t.Dot(t.Relu(bn), r);
    }, 1e-3));
  }

  {  // Tiny encoder in training mode (batch statistics, no dropout).
    EncoderConfig ec;
    ec.input_dims = 3;
    ec.hidden = 4;
    DecoderConfig dc;
    dc.target_embed_dims = 3;
    dc.attn_hidden = 4;
    dc.hidden = 4;
    dc.vocab_size = 7;
    Seq2SeqModel model(ec, dc, seed + 1);
    Matrix s0 = Random(7, 3, rng), s1 = Random(5, 3, rng);
    ForwardOptions opts;
    opts.training = true;
    Matrix r;
    {
      Tape probe(false);
      const Matrix* src[] = {&s0, &s1};
      EncodedBatch e = model.Encode(probe, src, opts);
      r = Random(e.steps * e.batch, ec.hidden, rng);
    }
    results.push_back(GradCheck("encoder", WithPrefix(model.params(), {"enc."}), [&](Tape& t) {
      const Matrix* src[] = {&s0, &s1};
      return t.Dot(model.Encode(t, src, opts).states, r);
    }, 1e-3));
  }

  {  // One decoder step over fixed encoder states.
    EncoderConfig ec;
    ec.input_dims = 3;
    ec.hidden = 6;
    DecoderConfig dc;
    dc.target_embed_dims = 3;
    dc.attn_hidden = 5;
    dc.hidden = 4;
    dc.vocab_size = 7;
    Seq2SeqModel model(ec, dc, seed + 2);
    const int steps = 4, batch = 2;
    auto enc_states = std::make_unique<Parameter>("enc_states", Random(steps * batch, 6, rng));
    auto h0 = std::make_unique<Parameter>("h_prev", Random(batch, 4, rng));
    auto c0 = std::make_unique<Parameter>("c_prev", Random(batch, 4, rng));
    auto ctx0 = std::make_unique<Parameter>("ctx_prev", Random(batch, 6, rng));
    std::vector<Parameter*> ps = WithPrefix(model.params(), {"dec.", "att.", "out."});
    ps.insert(ps.end(), {enc_states.get(), h0.get(), c0.get(), ctx0.get()});
    std::vector<int> prev{4, 5};
    Matrix r = Random(batch, 7, rng);
    Matrix rh = Random(batch, 4, rng);
    results.push_back(GradCheck("decoder_step", ps, [&](Tape& t) {
      EncodedBatch enc{t.Param(*enc_states), steps, batch, {4, 3}};
      Var keys = model.AttentionKeys(t, enc);
      DecoderState st{t.Param(*h0), t.Param(*c0), t.Param(*ctx0)};
      Var logits;
      DecoderState next = model.Step(t, enc, keys, prev, st, Matrix(), &logits);
      return t.Add(t.Dot(logits, r), t.Dot(next.c, rh));
    }, 1e-4));
  }

  {  // Smoothed cross-entropy with a masked row.
    std::vector<std::unique_ptr<Parameter>> ps;
    ps.push_back(std::make_unique<Parameter>("logits", Random(4, 7, rng)));
    std::vector<int> gold{1, 6, 0, 3};
    Vector mask(4);
    mask << 1, 1, 0, 1;
    results.push_back(GradCheck("smoothed_loss", Ptrs(ps), [&](Tape& t) {
      return t.SmoothedCrossEntropy(t.Param(*ps[0]), gold, mask, 0.1);
    }, 1e-4));
  }
  return results;
}

}  // namespace phonepool::nnet
