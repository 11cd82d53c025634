// tests/nnet_test.cc

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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "phonepool/error.h"
#include "phonepool/nnet/beam_search.h"
#include "phonepool/nnet/checkpoint.h"
#include "phonepool/nnet/grad_check.h"
#include "phonepool/nnet/model.h"
#include "phonepool/nnet/optim.h"
#include "phonepool/nnet/tape.h"
#include "phonepool/nnet/train.h"
#include "phonepool/textproc.h"
#include "test_util.h"

namespace phonepool::nnet {
namespace {

using phonepool::testing::RandomMatrix;

EncoderConfig TinyEncoder(bool downsample = true) {
  EncoderConfig e;
  e.input_dims = 3;
  e.hidden = 4;
  e.num_blocks = 2;
  e.downsample = downsample;
  return e;
}

DecoderConfig TinyDecoder(int vocab = 7) {
  DecoderConfig d;
  d.target_embed_dims = 3;
  d.attn_hidden = 4;
  d.hidden = 5;
  d.vocab_size = vocab;
  return d;
}

// Independent log-softmax in long double.
std::vector<long double> LogSoftmax(const std::vector<double>& z) {
  long double m = *std::max_element(z.begin(), z.end());
  long double s = 0;
  for (double v : z) s += std::exp(static_cast<long double>(v) - m);
  std::vector<long double> out;
  for (double v : z) out.push_back(v - m - std::log(s));
  return out;
}

TEST(Tape, SquareSumGradient) {
  Parameter p("x", Matrix{{1.0, -2.0}, {0.5, 3.0}});
  Tape tape;
  Var x = tape.Param(p);
  tape.Backward(tape.Sum(tape.Mul(x, x)));
  EXPECT_TRUE(p.grad.isApprox(2.0 * p.value));
}

TEST(Tape, EvalTapeRecordsNoGradients) {
  Parameter p("x", Matrix::Ones(2, 2));
  Tape tape(false);
  Var y = tape.Sum(tape.Param(p));
  EXPECT_DOUBLE_EQ(tape.value(y)(0, 0), 4.0);
  EXPECT_FALSE(tape.recording());
}

TEST(GradCheck, StandardChecksPass) {
  auto results = RunStandardGradChecks();
  ASSERT_EQ(results.size(), 6u);
  std::set<std::string> names;
  for (const auto& r : results) {
    names.insert(r.name);
    EXPECT_TRUE(r.passed) << r.name << " rel error " << r.max_rel_error << " in " << r.worst_tensor;
    EXPECT_LE(r.max_rel_error, r.tolerance);
    EXPECT_TRUE(r.nonfinite.empty());
    EXPECT_GT(r.num_checked, 0);
  }
  EXPECT_EQ(names, (std::set<std::string>{"attention", "lstm_cell", "nin_block", "encoder",
                                          "decoder_step", "smoothed_loss"}));
}

TEST(GradCheck, DetectsWrongGradient) {
  // A loss whose gradient the tape cannot see: the Constant hides the
  // dependence on p, so numeric and analytic gradients disagree.
  Parameter p("p", Matrix{{0.3, -0.7}});
  auto res = GradCheck("broken", {&p}, [&](Tape& t) {
    Var a = t.Param(p);
    Var hidden = t.Constant(p.value.array().square().matrix());
    return t.Add(t.Sum(a), t.Sum(hidden));
  }, 1e-4);
  EXPECT_FALSE(res.passed);
}

TEST(Encoder, DownsamplingLaw) {
  for (bool down : {true, false}) {
    EncoderConfig ec = TinyEncoder(down);
    Seq2SeqModel model(ec, TinyDecoder(), 3);
    std::mt19937_64 rng(1);
    for (int t = 1; t <= 200; ++t) {
      const int expected = down ? (t + 3) / 4 : t;  // ceil(t / 4) with two halvings
      ASSERT_EQ(ec.OutputLength(t), expected) << t;
      Matrix src = RandomMatrix(t, 3, rng);
      std::vector<const Matrix*> srcs{&src};
      Tape tape(false);
      EncodedBatch enc = model.Encode(tape, srcs, ForwardOptions{});
      ASSERT_EQ(enc.steps, expected) << t;
      ASSERT_EQ(enc.lengths[0], expected) << t;
      ASSERT_EQ(tape.value(enc.states).rows(), expected);
    }
  }
}

TEST(Encoder, BatchedLengthsFollowLaw) {
  Seq2SeqModel model(TinyEncoder(), TinyDecoder(), 3);
  std::mt19937_64 rng(2);
  std::vector<Matrix> srcs{RandomMatrix(9, 3, rng), RandomMatrix(4, 3, rng), RandomMatrix(17, 3, rng)};
  std::vector<const Matrix*> ptrs{&srcs[0], &srcs[1], &srcs[2]};
  Tape tape(false);
  EncodedBatch enc = model.Encode(tape, ptrs, ForwardOptions{});
  EXPECT_EQ(enc.batch, 3);
  EXPECT_EQ(enc.steps, 5);
  EXPECT_EQ(enc.lengths, (std::vector<int>{3, 1, 5}));
  EXPECT_EQ(tape.value(enc.states).rows(), 15);
}

TEST(Encoder, EvalIsDeterministicAndBatchInvariant) {
  Seq2SeqModel model(TinyEncoder(), TinyDecoder(), 3);
  std::mt19937_64 rng(4);
  Matrix a = RandomMatrix(12, 3, rng), b = RandomMatrix(7, 3, rng);
  std::vector<const Matrix*> one{&a}, two{&a, &b};
  Tape t1(false), t2(false), t3(false);
  EncodedBatch e1 = model.Encode(t1, one, ForwardOptions{});
  EncodedBatch e2 = model.Encode(t2, one, ForwardOptions{});
  EncodedBatch e3 = model.Encode(t3, two, ForwardOptions{});
  EXPECT_TRUE(t1.value(e1.states) == t2.value(e2.states));
  for (int t = 0; t < e1.steps; ++t) {
    EXPECT_TRUE(t1.value(e1.states).row(t).isApprox(t3.value(e3.states).row(t * 2), 1e-12)) << t;
  }
}

TEST(Encoder, ConfigValidation) {
  EncoderConfig e = TinyEncoder();
  e.hidden = 5;
  EXPECT_THROW(e.Validate(), ValidationError);
  DecoderConfig d = TinyDecoder();
  d.decoder_layers = 2;
  EXPECT_THROW(d.Validate(), ValidationError);
  TrainConfig t;
  t.label_smoothing = 1.0;
  EXPECT_THROW(t.Validate(), ValidationError);
}

TEST(Attention, WeightsFormDistribution) {
  Seq2SeqModel model(TinyEncoder(), TinyDecoder(), 5);
  std::mt19937_64 rng(6);
  for (int t : {1, 2, 7, 30}) {
    Matrix enc = RandomMatrix(t, 4, rng);
    Vector q = RandomMatrix(5, 1, rng).col(0);
    AttentionResult r = model.Attend(q, enc);
    ASSERT_EQ(r.weights.size(), t);
    EXPECT_NEAR(r.weights.sum(), 1.0, 1e-12);
    EXPECT_GE(r.weights.minCoeff(), 0.0);
    Vector expected = enc.transpose() * r.weights;
    EXPECT_TRUE(r.context.isApprox(expected, 1e-12));
    if (t == 1) {
      EXPECT_DOUBLE_EQ(r.weights(0), 1.0);
      EXPECT_TRUE(r.context.isApprox(enc.row(0).transpose(), 1e-12));
    }
  }
}

TEST(Attention, ZeroScoringVectorIsUniform) {
  Seq2SeqModel model(TinyEncoder(), TinyDecoder(), 5);
  model.params().Get("att.v").value.setZero();
  std::mt19937_64 rng(7);
  Matrix enc = RandomMatrix(6, 4, rng);
  AttentionResult r = model.Attend(RandomMatrix(5, 1, rng).col(0), enc);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(r.weights(i), 1.0 / 6.0, 1e-12);
  EXPECT_TRUE(r.context.isApprox(enc.colwise().mean().transpose(), 1e-12));
}

struct StepOutput {
  Matrix logits;
  Matrix weights;
};

StepOutput RunStep(Seq2SeqModel& model, const Matrix& src, int prev) {
  std::vector<const Matrix*> srcs{&src};
  Tape tape(false);
  EncodedBatch enc = model.Encode(tape, srcs, ForwardOptions{});
  Var keys = model.AttentionKeys(tape, enc);
  DecoderState s = model.InitialState(tape, 1);
  std::vector<int> toks{prev};
  Var logits;
  Matrix w;
  model.Step(tape, enc, keys, toks, s, Matrix(), &logits, &w);
  return {tape.value(logits), w};
}

TEST(Decoder, LogitsShapeAndBias) {
  Seq2SeqModel model(TinyEncoder(), TinyDecoder(9), 8);
  std::mt19937_64 rng(8);
  Matrix src = RandomMatrix(10, 3, rng);
  StepOutput o = RunStep(model, src, Vocab::kBos);
  EXPECT_EQ(o.logits.rows(), 1);
  EXPECT_EQ(o.logits.cols(), 9);
  EXPECT_EQ(o.weights.cols(), 3);
  EXPECT_NEAR(o.weights.sum(), 1.0, 1e-12);

  model.params().Get("out.W").value.setZero();
  Matrix bias = RandomMatrix(1, 9, rng);
  model.params().Get("out.b").value = bias;
  o = RunStep(model, src, Vocab::kBos);
  EXPECT_TRUE(o.logits.isApprox(bias, 1e-15));
}

TEST(Decoder, EvalDeterminism) {
  Seq2SeqModel model(TinyEncoder(), TinyDecoder(), 8);
  std::mt19937_64 rng(9);
  Matrix src = RandomMatrix(10, 3, rng);
  EXPECT_TRUE(RunStep(model, src, 4).logits == RunStep(model, src, 4).logits);
  EXPECT_FALSE(RunStep(model, src, 4).logits == RunStep(model, src, 5).logits);
}

double SmoothedLoss(const Matrix& logits, const std::vector<int>& gold, double eps) {
  Tape tape(false);
  Var z = tape.Constant(logits);
  Vector mask = Vector::Ones(logits.rows());
  return tape.value(tape.SmoothedCrossEntropy(z, gold, mask, eps))(0, 0);
}

TEST(SmoothedLoss, UniformLogitsGiveLogV) {
  for (int v : {3, 7, 50}) {
    for (double eps : {0.0, 0.1, 0.3}) {
      EXPECT_NEAR(SmoothedLoss(Matrix::Constant(1, v, 0.7), {1}, eps), std::log(v), 1e-12);
    }
  }
}

TEST(SmoothedLoss, ZeroEpsilonIsCrossEntropy) {
  std::mt19937_64 rng(10);
  Matrix z = RandomMatrix(4, 6, rng, 2.0);
  std::vector<int> gold{0, 5, 2, 2};
  long double ce = 0;
  for (int r = 0; r < 4; ++r) {
    auto ls = LogSoftmax({z.row(r).data(), z.row(r).data() + 6});
    ce -= ls[gold[r]];
  }
  EXPECT_NEAR(SmoothedLoss(z, gold, 0.0), static_cast<double>(ce), 1e-12);
}

TEST(SmoothedLoss, HandValuesThreeClasses) {
  // q = (0.9, 0.05, 0.05) on gold 0.
  Matrix z{{2.0, 0.0, -1.0}};
  auto ls = LogSoftmax({2.0, 0.0, -1.0});
  long double expected = -(0.9L * ls[0] + 0.05L * ls[1] + 0.05L * ls[2]);
  EXPECT_NEAR(SmoothedLoss(z, {0}, 0.1), static_cast<double>(expected), 1e-12);
  // Frozen value.
  EXPECT_NEAR(SmoothedLoss(z, {0}, 0.1), 0.41984602, 1e-8);
}

TEST(SmoothedLoss, MinimizedAtSmoothedTarget) {
  // At logits = log q the loss equals H(q), the gradient vanishes and any
  // perturbation increases it.
  const double eps = 0.1;
  const int v = 5, gold = 2;
  Matrix q = Matrix::Constant(1, v, eps / (v - 1));
  q(0, gold) = 1.0 - eps;
  Matrix z = q.array().log().matrix();
  double h = -(q.array() * q.array().log()).sum();
  EXPECT_NEAR(SmoothedLoss(z, {gold}, eps), h, 1e-12);

  Parameter p("z", z);
  Tape tape;
  Vector mask = Vector::Ones(1);
  tape.Backward(tape.SmoothedCrossEntropy(tape.Param(p), std::vector<int>{gold}, mask, eps));
  EXPECT_LT(p.grad.cwiseAbs().maxCoeff(), 1e-12);

  std::mt19937_64 rng(11);
  for (int i = 0; i < 20; ++i) {
    Matrix dz = RandomMatrix(1, v, rng, 0.1);
    EXPECT_GT(SmoothedLoss(z + dz, {gold}, eps), h);
  }
}

TEST(SmoothedLoss, MaskedRowsIgnored) {
  Matrix z{{1.0, 2.0, 3.0}, {9.0, -9.0, 0.0}};
  Tape tape(false);
  Vector mask(2);
  mask << 1.0, 0.0;
  double masked = tape.value(tape.SmoothedCrossEntropy(tape.Constant(z), std::vector<int>{1, 1}, mask, 0.1))(0, 0);
  EXPECT_NEAR(masked, SmoothedLoss(z.topRows(1), {1}, 0.1), 1e-12);
}

TEST(Adam, MatchesHandComputation) {
  Parameter p("w", Matrix{{1.0, -2.0}});
  Adam adam({&p}, 0.1);
  const long double b1 = 0.9L, b2 = 0.999L, e = 1e-8L, lr = 0.1L;
  long double w[2] = {1.0L, -2.0L}, m[2] = {0, 0}, v[2] = {0, 0};
  const double grads[3][2] = {{0.5, -1.0}, {-0.25, 0.0}, {2.0, 0.1}};
  for (int t = 1; t <= 3; ++t) {
    p.grad = Matrix{{grads[t - 1][0], grads[t - 1][1]}};
    adam.Step();
    for (int i = 0; i < 2; ++i) {
      m[i] = b1 * m[i] + (1 - b1) * grads[t - 1][i];
      v[i] = b2 * v[i] + (1 - b2) * grads[t - 1][i] * grads[t - 1][i];
      long double mh = m[i] / (1 - std::pow(b1, t)), vh = v[i] / (1 - std::pow(b2, t));
      w[i] -= lr * mh / (std::sqrt(vh) + e);
      EXPECT_NEAR(p.value(0, i), static_cast<double>(w[i]), 1e-12) << t << " " << i;
    }
  }
  EXPECT_EQ(adam.steps(), 3);
}

TEST(PlateauSchedule, HalvesAfterPatience) {
  PlateauSchedule s(0.0003, 0.5, 10, 5);
  EXPECT_FALSE(s.Observe(0.5));
  for (int i = 1; i <= 9; ++i) EXPECT_FALSE(s.Observe(0.4)) << i;
  EXPECT_DOUBLE_EQ(s.lr(), 0.0003);
  EXPECT_TRUE(s.Observe(0.5));  // equal is not an improvement
  EXPECT_DOUBLE_EQ(s.lr(), 0.00015);
  for (int i = 1; i <= 4; ++i) EXPECT_FALSE(s.Observe(0.1));
  EXPECT_TRUE(s.Observe(0.1));
  EXPECT_DOUBLE_EQ(s.lr(), 0.000075);
  EXPECT_FALSE(s.Observe(0.6));
  EXPECT_EQ(s.epochs_without_improvement(), 0);
  EXPECT_EQ(s.num_decays(), 2);
}

// Small synthetic seq2seq task: target copies the sign pattern of segments.
std::vector<Example> TinyData(int n, std::uint64_t seed, int vocab = 7) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> len(1, 4), tok(4, vocab - 1), frames(2, 4);
  std::vector<Example> data;
  for (int i = 0; i < n; ++i) {
    Example ex;
    ex.utterance_id = "u" + std::to_string(i);
    ex.target.push_back(Vocab::kBos);
    std::vector<Matrix> parts;
    int total = 0;
    for (int l = len(rng); l > 0; --l) {
      int t = tok(rng);
      ex.target.push_back(t);
      int f = frames(rng);
      Matrix m = RandomMatrix(f, 3, rng, 0.1);
      m.col(t % 3).array() += 1.0;
      parts.push_back(m);
      total += f;
    }
    ex.target.push_back(Vocab::kEos);
    ex.source.resize(total, 3);
    int r = 0;
    for (auto& m : parts) {
      ex.source.middleRows(r, m.rows()) = m;
      r += m.rows();
    }
    data.push_back(std::move(ex));
  }
  return data;
}

TrainConfig TinyTrain(int epochs = 2) {
  TrainConfig c;
  c.epochs = epochs;
  c.lr = 0.01;
  c.avg_batch_size = 8;
  c.seed = 5;
  return c;
}

TEST(Train, EmbeddingNormsStayFixed) {
  auto data = TinyData(40, 1);
  Seq2SeqModel model(TinyEncoder(), TinyDecoder(), 2);
  TrainConfig cfg = TinyTrain(3);
  cfg.embed_norm = 1.0;
  int epochs = 0;
  Train(model, data, {}, cfg, [&](const EpochRecord&) {
    const Matrix& e = model.params().Get("dec.embed").value;
    for (Eigen::Index r = 0; r < e.rows(); ++r) EXPECT_NEAR(e.row(r).norm(), 1.0, 1e-9);
    ++epochs;
    return true;
  });
  EXPECT_EQ(epochs, 3);
}

TEST(Train, DeterministicForFixedSeed) {
  auto data = TinyData(40, 1);
  auto run = [&] {
    Seq2SeqModel model(TinyEncoder(), TinyDecoder(), 2);
    return Train(model, data, {}, TinyTrain(2));
  };
  TrainResult a = run(), b = run();
  ASSERT_EQ(a.log.size(), 2u);
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(a.log[i].train_loss, b.log[i].train_loss);
    EXPECT_EQ(a.log[i].dev_accuracy, b.log[i].dev_accuracy);
  }
  EXPECT_TRUE(std::isfinite(a.log[0].train_loss));
}

TEST(Train, LossDecreasesOnLearnableTask) {
  auto data = TinyData(60, 3);
  Seq2SeqModel model(TinyEncoder(), TinyDecoder(), 2);
  TrainResult r = Train(model, data, {}, TinyTrain(8));
  EXPECT_LT(r.log.back().train_loss, r.log.front().train_loss);
}

TEST(Train, CallbackCanStopEarly) {
  auto data = TinyData(20, 1);
  Seq2SeqModel model(TinyEncoder(), TinyDecoder(), 2);
  TrainResult r = Train(model, data, {}, TinyTrain(5), [](const EpochRecord& rec) { return rec.epoch < 2; });
  EXPECT_EQ(r.log.size(), 2u);
}

TEST(Train, LengthFilter) {
  std::vector<Example> data = TinyData(4, 1);
  Example longer{"long", Matrix::Zero(1501, 3), {Vocab::kBos, 4, Vocab::kEos}};
  Example edge{"edge", Matrix::Zero(1500, 3), {Vocab::kBos, 4, Vocab::kEos}};
  std::vector<Example> probe{longer, edge};
  EXPECT_EQ(FilterByLength(probe, 1500), (std::vector<int>{1}));

  data.push_back(longer);
  Seq2SeqModel model(TinyEncoder(), TinyDecoder(), 2);
  TrainResult r = Train(model, data, {}, TinyTrain(1));
  EXPECT_EQ(r.num_filtered, 1);
  EXPECT_EQ(r.num_train_examples, 4);

  std::vector<Example> only_long{longer};
  EXPECT_THROW(Train(model, only_long, {}, TinyTrain(1)), ValidationError);
  EXPECT_THROW(Train(model, std::vector<Example>{}, {}, TinyTrain(1)), ValidationError);
}

TEST(Train, MakeBatchesPartitionsAndRespectsBudget) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> len(1, 100);
  std::vector<int> lengths(300);
  for (int& l : lengths) l = len(rng);
  auto batches = MakeBatches(lengths, 10);
  std::vector<int> sorted = lengths;
  std::sort(sorted.begin(), sorted.end());
  const long budget = 10L * sorted[sorted.size() / 2];
  std::vector<int> seen;
  for (const auto& b : batches) {
    long frames = 0;
    for (int i : b) {
      frames += lengths[i];
      seen.push_back(i);
    }
    if (b.size() > 1) {
      EXPECT_LE(frames, budget);
    }
  }
  std::sort(seen.begin(), seen.end());
  std::vector<int> all(300);
  std::iota(all.begin(), all.end(), 0);
  EXPECT_EQ(seen, all);
  EXPECT_TRUE(MakeBatches(std::vector<int>{}, 4).empty());
}

TEST(Train, TokenDropout) {
  std::mt19937_64 rng(13);
  std::vector<int> t(2001, 5);
  t[0] = Vocab::kBos;
  EXPECT_EQ(ApplyTokenDropout(t, 0.0, Vocab::kUnk, rng), t);
  auto d = ApplyTokenDropout(t, 0.3, Vocab::kUnk, rng);
  EXPECT_EQ(d[0], Vocab::kBos);
  long dropped = std::count(d.begin(), d.end(), Vocab::kUnk);
  EXPECT_NEAR(dropped / 2000.0, 0.3, 0.04);
}

TEST(Beam, LengthNormalizedScore) {
  EXPECT_DOUBLE_EQ(LengthNormalizedScore(-4.0, 4, 0.5), -2.0);
  EXPECT_NEAR(LengthNormalizedScore(-4.0, 4, 1.5), -0.5, 1e-15);
  EXPECT_NEAR(LengthNormalizedScore(-5.0, 8, 1.5), -5.0 / std::pow(8.0, 1.5), 1e-15);
  EXPECT_NEAR(LengthNormalizedScore(-5.0, 8, 1.5), -0.2210, 5e-5);
  EXPECT_DOUBLE_EQ(LengthNormalizedScore(-5.0, 8, 0.0), -5.0);
  EXPECT_THROW(LengthNormalizedScore(-1.0, 0, 1.0), Error);
}

TEST(Beam, HypothesisOrdering) {
  Hypothesis a{{4, 5}, -1.0, 3, -0.5, true}, b{{4, 6}, -1.0, 3, -0.5, true}, c{{9}, -3.0, 2, -1.0, true};
  EXPECT_TRUE(HypothesisBefore(a, b));
  EXPECT_FALSE(HypothesisBefore(b, a));
  EXPECT_TRUE(HypothesisBefore(b, c));
  EXPECT_FALSE(HypothesisBefore(a, a));
}

double TeacherForcedLogProb(Seq2SeqModel& model, const Matrix& src, const std::vector<int>& tokens) {
  std::vector<int> t{Vocab::kBos};
  t.insert(t.end(), tokens.begin(), tokens.end());
  t.push_back(Vocab::kEos);
  std::vector<const Matrix*> srcs{&src};
  std::vector<const std::vector<int>*> tg{&t};
  Tape tape(false);
  auto loss = model.TeacherForcedLoss(tape, srcs, tg, tg, 0.0, ForwardOptions{});
  return -tape.value(loss.loss_sum)(0, 0);
}

TEST(Beam, BeamOneEqualsGreedy) {
  std::mt19937_64 rng(14);
  std::uniform_int_distribution<int> len(3, 12);
  for (int m = 0; m < 50; ++m) {
    Seq2SeqModel model(TinyEncoder(), TinyDecoder(8), 100 + m);
    Matrix src = RandomMatrix(len(rng), 3, rng);
    DecodeOptions opts;
    opts.beam = 1;
    opts.max_length = 12;
    auto beam = BeamSearch(model, src, opts);
    Hypothesis greedy = GreedyDecode(model, src, opts);
    ASSERT_FALSE(beam.empty());
    EXPECT_EQ(beam[0].tokens, greedy.tokens) << m;
    EXPECT_NEAR(beam[0].log_prob, greedy.log_prob, 1e-9) << m;
  }
}

TEST(Beam, ScoresAreConsistent) {
  std::mt19937_64 rng(15);
  for (int m = 0; m < 10; ++m) {
    Seq2SeqModel model(TinyEncoder(), TinyDecoder(6), 200 + m);
    Matrix src = RandomMatrix(8, 3, rng);
    DecodeOptions opts;
    opts.beam = 4;
    opts.max_length = 10;
    auto nbest = BeamSearch(model, src, opts);
    ASSERT_FALSE(nbest.empty());
    EXPECT_LE(nbest.size(), 4u);
    for (std::size_t i = 0; i < nbest.size(); ++i) {
      const auto& h = nbest[i];
      EXPECT_LE(h.log_prob, 0.0);
      EXPECT_NEAR(h.score, LengthNormalizedScore(h.log_prob, h.length, 1.5), 1e-12);
      for (int t : h.tokens) {
        EXPECT_NE(t, Vocab::kPad);
        EXPECT_NE(t, Vocab::kBos);
        EXPECT_NE(t, Vocab::kEos);
      }
      if (h.finished) {
        EXPECT_EQ(h.length, static_cast<int>(h.tokens.size()) + 1);
        EXPECT_NEAR(h.log_prob, TeacherForcedLogProb(model, src, h.tokens), 1e-9);
      }
      if (i > 0) {
        EXPECT_FALSE(HypothesisBefore(h, nbest[i - 1]));
      }
    }
  }
}

TEST(Beam, ZeroExponentRanksByRawLogProb) {
  std::mt19937_64 rng(16);
  Seq2SeqModel model(TinyEncoder(), TinyDecoder(6), 300);
  Matrix src = RandomMatrix(8, 3, rng);
  DecodeOptions opts;
  opts.beam = 5;
  opts.len_norm_exp = 0.0;
  opts.max_length = 8;
  auto nbest = BeamSearch(model, src, opts);
  for (std::size_t i = 1; i < nbest.size(); ++i) EXPECT_GE(nbest[i - 1].log_prob, nbest[i].log_prob);
  for (const auto& h : nbest) EXPECT_DOUBLE_EQ(h.score, h.log_prob);
}

TEST(Checkpoint, RoundTrip) {
  phonepool::testing::TempDir dir;
  std::vector<std::string> corpus{"a b c", "b c d"};
  VocabSpec spec = BuildVocabSpec(corpus, TargetUnit::kWords);
  DecoderConfig dc = TinyDecoder(spec.vocab.size());
  Seq2SeqModel model(TinyEncoder(), dc, 17);
  TrainConfig tc = TinyTrain(1);
  SaveCheckpoint(dir.File("m.json"), model, tc, 17, spec);
  Checkpoint ck = LoadCheckpoint(dir.File("m.json"));
  EXPECT_EQ(ck.seed, 17u);
  EXPECT_EQ(ck.vocab.vocab, spec.vocab);
  EXPECT_EQ(ck.decoder.vocab_size, dc.vocab_size);
  auto a = model.params().All();
  auto b = ck.model->params().All();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i]->name, b[i]->name);
    EXPECT_TRUE(a[i]->value == b[i]->value) << a[i]->name;
  }
  std::mt19937_64 rng(18);
  Matrix src = RandomMatrix(9, 3, rng);
  DecodeOptions opts;
  opts.beam = 3;
  opts.max_length = 6;
  EXPECT_EQ(BeamSearch(model, src, opts)[0].tokens, BeamSearch(*ck.model, src, opts)[0].tokens);
}

TEST(Checkpoint, RejectsTampering) {
  std::vector<std::string> corpus{"a b c"};
  VocabSpec spec = BuildVocabSpec(corpus, TargetUnit::kWords);
  Seq2SeqModel model(TinyEncoder(), TinyDecoder(spec.vocab.size()), 17);
  nlohmann::json j = CheckpointToJson(model, TinyTrain(1), 17, spec);
  EXPECT_NO_THROW(CheckpointFromJson(j));

  nlohmann::json bad_hash = j;
  bad_hash["vocab_hash"] = "0000000000000000";
  EXPECT_THROW(CheckpointFromJson(bad_hash), ValidationError);

  nlohmann::json missing = j;
  missing["tensors"].erase(missing["tensors"].begin());
  EXPECT_THROW(CheckpointFromJson(missing), ValidationError);

  nlohmann::json shape = j;
  shape["tensors"][0]["rows"] = shape["tensors"][0]["rows"].get<int>() + 1;
  EXPECT_THROW(CheckpointFromJson(shape), ValidationError);

  nlohmann::json format = j;
  format["format"] = "other";
  EXPECT_THROW(CheckpointFromJson(format), ValidationError);
}

}  // namespace
}  // namespace phonepool::nnet
