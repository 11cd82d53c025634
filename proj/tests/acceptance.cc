// tests/acceptance.cc

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

// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles/bpe_oracle.h"
#include "oracles/reference_frontend.h"
#include "oracles/segment_mean.h"
#include "phonepool/alignment.h"
#include "phonepool/corpusio.h"
#include "phonepool/features.h"
#include "phonepool/nnet/beam_search.h"
#include "phonepool/nnet/checkpoint.h"
#include "phonepool/nnet/grad_check.h"
#include "phonepool/pooling.h"
#include "phonepool/textproc.h"
#include "phonepool/toy.h"
#include "test_util.h"

namespace phonepool {
namespace {

using Clock = std::chrono::steady_clock;
using testing::RandomMatrix;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string Fmt(double v, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

Outcome PoolingOracle() {
  auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> len(1, 200), labels(1, 12), lab;
  double max_err = 0.0;
  bool structure_ok = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const int t = len(rng);
    const int num_labels = labels(rng);
    std::uniform_int_distribution<int> pick(0, num_labels - 1);
    std::uniform_int_distribution<int> run(1, 15);
    FrameAlignment ali{"u", {}};
    while (static_cast<int>(ali.labels.size()) < t) {
      int l = pick(rng);
      for (int k = run(rng); k > 0 && static_cast<int>(ali.labels.size()) < t; --k) ali.labels.push_back(l);
    }
    FeatureMatrix f{"u", "", RandomMatrix(t, 40, rng, 5.0)};
    PooledSequence pooled = PoolRuns(f, ali);
    std::vector<std::vector<double>> rows(t);
    for (int i = 0; i < t; ++i) rows[i].assign(f.data.row(i).data(), f.data.row(i).data() + 40);
    auto expected = oracle::BruteForceSegmentMeans(rows, ali.labels);
    if (pooled.segments.size() != expected.size()) {
      structure_ok = false;
      continue;
    }
    for (std::size_t s = 0; s < expected.size(); ++s) {
      const auto& seg = pooled.segments[s];
      if (seg.label != expected[s].label || seg.start_frame != expected[s].start ||
          seg.end_frame != expected[s].end) {
        structure_ok = false;
      }
      for (int d = 0; d < 40; ++d) max_err = std::max(max_err, std::abs(seg.vector[d] - expected[s].mean[d]));
    }
  }
  const double secs = Seconds(t0);
  return {structure_ok && max_err <= 1e-9 && secs < 10.0,
          "max_abs_err=" + Fmt(max_err) + " seconds=" + Fmt(secs, 3)};
}

Outcome FiftyFrameFixture() {
  const std::vector<int> runs{6, 7, 5, 8, 4, 9, 6, 5};
  const std::vector<int> syms{0, 1, 2, 3, 1, 2, 3, 0};
  FrameAlignment ali{"fig", {}};
  for (std::size_t i = 0; i < runs.size(); ++i) ali.labels.insert(ali.labels.end(), runs[i], syms[i]);
  std::mt19937_64 rng(7);
  FeatureMatrix f{"fig", "", RandomMatrix(static_cast<int>(ali.labels.size()), 40, rng)};
  PooledSequence pooled = PoolRuns(f, ali);
  std::vector<FrameAlignment> alis{ali};
  PoolingStats stats = CorpusStats(alis, {0});
  const bool ok = f.NumFrames() == 50 && pooled.segments.size() == 8 && stats.num_segments == 8 &&
                  std::abs(stats.reduction_ratio - 0.84) < 1e-12;
  return {ok, "frames=" + std::to_string(f.NumFrames()) + " segments=" +
                  std::to_string(pooled.segments.size()) + " reduction=" + Fmt(stats.reduction_ratio)};
}

Outcome CtcExpansion() {
  int cases = 0, bad = 0;
  for (int len = 1; len <= 50; ++len) {
    SplicedLabelSequence s{"u", {}};
    for (int i = 0; i < len; ++i) s.labels.push_back(i);
    for (int rem = 0; rem <= 2; ++rem) {
      const int n = kSpliceWidth * len + rem;
      FrameAlignment a = ExpandCtcLabels(s, n);
      ++cases;
      bool ok = static_cast<int>(a.labels.size()) == n;
      for (int f = 0; ok && f < n; ++f) {
        // Label i covers frames 3i..3i+2; the remainder extends the last label.
        const int owner = std::min(f / kSpliceWidth, len - 1);
        ok = a.labels[f] == owner;
      }
      if (!ok) ++bad;
    }
  }
  return {bad == 0, "cases=" + std::to_string(cases) + " mismatches=" + std::to_string(bad)};
}

Outcome FrontendOracle() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  FrontendConfig cfg;
  oracle::RefFrontendParams ref;
  double max_diff = 0.0;
  bool shapes = true;
  for (int trial = 0; trial < 10; ++trial) {
    Waveform w;
    w.samples.resize(16000);
    for (auto& s : w.samples) s = u(rng);
    FeatureMatrix fm = ComputeLogMel(w, cfg);
    auto expected = oracle::ReferenceLogMel(w.samples, ref);
    if (static_cast<int>(expected.size()) != fm.NumFrames()) {
      shapes = false;
      continue;
    }
    for (int f = 0; f < fm.NumFrames(); ++f) {
      for (int b = 0; b < fm.Dims(); ++b) max_diff = std::max(max_diff, std::abs(fm.data(f, b) - expected[f][b]));
    }
  }
  Waveform zero;
  zero.samples.assign(16000, 0.0);
  FeatureMatrix z = ComputeLogMel(zero, cfg);
  const bool floor_ok = z.NumFrames() > 0 && (z.data.array() == std::log(1e-10)).all();
  return {shapes && max_diff <= 1e-6 && floor_ok,
          "max_abs_diff=" + Fmt(max_diff) + " zero_signal_floor=" + (floor_ok ? "yes" : "no")};
}

Outcome Cmvn() {
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> frames(20, 150), utts(2, 6);
  std::vector<FeatureMatrix> in;
  std::vector<std::pair<int, int>> ranges;  // per speaker [begin, end) into `in`
  for (int s = 0; s < 5; ++s) {
    const int begin = static_cast<int>(in.size());
    for (int u = utts(rng); u > 0; --u) {
      Matrix m = RandomMatrix(frames(rng), 40, rng, 2.0 + s);
      m.array() += 5.0 * s - 7.0;
      in.push_back({"spk" + std::to_string(s) + "-" + std::to_string(u), "spk" + std::to_string(s), m});
    }
    ranges.emplace_back(begin, static_cast<int>(in.size()));
  }
  auto out = ApplySpeakerCmvn(in);
  double mean_err = 0.0, var_err = 0.0;
  for (auto [b, e] : ranges) {
    RowVector sum = RowVector::Zero(40), sq = RowVector::Zero(40);
    double n = 0.0;
    for (int i = b; i < e; ++i) {
      sum += out[i].data.colwise().sum();
      sq += out[i].data.array().square().matrix().colwise().sum();
      n += static_cast<double>(out[i].data.rows());
    }
    RowVector mean = sum / n;
    RowVector var = sq / n - mean.array().square().matrix();
    mean_err = std::max(mean_err, mean.cwiseAbs().maxCoeff());
    var_err = std::max(var_err, (var.array() - 1.0).abs().maxCoeff());
  }
  return {mean_err <= 1e-6 && var_err <= 1e-6,
          "max_mean_err=" + Fmt(mean_err) + " max_var_err=" + Fmt(var_err)};
}

Outcome GradChecks() {
  auto t0 = Clock::now();
  auto results = nnet::RunStandardGradChecks();
  const double secs = Seconds(t0);
  bool ok = results.size() == 6 && secs < 120.0;
  std::string detail;
  for (const auto& r : results) {
    // 1e-4 everywhere except where batch-norm training mode participates.
    const double limit = (r.name == "nin_block" || r.name == "encoder") ? 1e-3 : 1e-4;
    ok = ok && r.passed && r.max_rel_error <= limit && r.nonfinite.empty();
    detail += r.name + "=" + Fmt(r.max_rel_error, 3) + " ";
  }
  return {ok, detail + "seconds=" + Fmt(secs, 3)};
}

Outcome DownsamplingLaw() {
  int bad = 0;
  std::mt19937_64 rng(404);
  for (bool down : {true, false}) {
    nnet::EncoderConfig ec;
    ec.input_dims = 3;
    ec.hidden = 4;
    ec.num_blocks = 2;
    ec.downsample = down;
    nnet::DecoderConfig dc;
    dc.target_embed_dims = 2;
    dc.attn_hidden = 2;
    dc.hidden = 2;
    dc.vocab_size = 6;
    nnet::Seq2SeqModel model(ec, dc, 1);
    for (int t = 1; t <= 200; ++t) {
      const int half = (t + 1) / 2;
      const int expected = down ? (half + 1) / 2 : t;
      Matrix src = RandomMatrix(t, 3, rng);
      std::vector<const Matrix*> srcs{&src};
      nnet::Tape tape(false);
      nnet::EncodedBatch enc = model.Encode(tape, srcs, nnet::ForwardOptions{});
      if (ec.OutputLength(t) != expected || enc.steps != expected ||
          tape.value(enc.states).rows() != expected) {
        ++bad;
      }
    }
  }
  return {bad == 0, "lengths_checked=400 mismatches=" + std::to_string(bad)};
}

Outcome BeamSearchChecks() {
  std::mt19937_64 rng(505);
  std::uniform_int_distribution<int> len(3, 14);
  int mismatches = 0;
  for (int m = 0; m < 50; ++m) {
    nnet::EncoderConfig ec;
    ec.input_dims = 3;
    ec.hidden = 4;
    nnet::DecoderConfig dc;
    dc.target_embed_dims = 3;
    dc.attn_hidden = 4;
    dc.hidden = 5;
    dc.vocab_size = 8;
    nnet::Seq2SeqModel model(ec, dc, 1000 + m);
    Matrix src = RandomMatrix(len(rng), 3, rng);
    nnet::DecodeOptions opts;
    opts.beam = 1;
    auto beam = nnet::BeamSearch(model, src, opts);
    auto greedy = nnet::GreedyDecode(model, src, opts);
    if (beam.empty() || beam[0].tokens != greedy.tokens) ++mismatches;
  }
  // -4 over 4 tokens vs -5 over 8 tokens at exponent 1.5.
  const double s4 = nnet::LengthNormalizedScore(-4.0, 4, 1.5);
  const double s8 = nnet::LengthNormalizedScore(-5.0, 8, 1.5);
  nnet::Hypothesis a{{4, 4, 4}, -4.0, 4, s4, true}, b{{5, 5, 5, 5, 5, 5, 5}, -5.0, 8, s8, true};
  const bool hand = std::abs(s4 + 0.5) < 1e-12 && std::abs(s8 + 5.0 / (8.0 * std::sqrt(8.0))) < 1e-12 &&
                    nnet::HypothesisBefore(b, a) && !nnet::HypothesisBefore(a, b);
  return {mismatches == 0 && hand, "greedy_mismatches=" + std::to_string(mismatches) + "/50 score_len4=" +
                                       Fmt(s4) + " score_len8=" + Fmt(s8)};
}

Outcome BpeOracle() {
  std::vector<std::pair<std::string, long>> words{{"low", 5}, {"lower", 2}, {"newest", 6}, {"widest", 3}};
  auto expected = oracle::OracleBpeLearn(words, 3);
  std::map<std::string, std::int64_t> counts(words.begin(), words.end());
  MergeTable table = BpeLearnFromCounts(counts, 3);
  bool ok = expected.size() == 3 && table.size() == 3;
  std::string detail;
  for (std::size_t i = 0; ok && i < 3; ++i) {
    ok = table.merges()[i] == SymbolPair(expected[i].left, expected[i].right);
    detail += "(" + table.merges()[i].first + "," + table.merges()[i].second + ") ";
  }
  return {ok, detail};
}

// Zipf-distributed sentences over a syllabic pseudo-word lexicon.
std::vector<std::string> SyntheticText(int sentences, std::uint64_t seed) {
  static const char* kOnsets[] = {"b", "d", "k", "l", "m", "n", "p", "r", "s", "t", "ch", "gr"};
  static const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> on(0, 11), vo(0, 6), syl(1, 4), len(4, 16);
  std::vector<std::string> lexicon;
  for (int i = 0; i < 30000; ++i) {
    std::string w;
    for (int s = syl(rng); s > 0; --s) w += std::string(kOnsets[on(rng)]) + kVowels[vo(rng)];
    lexicon.push_back(w);
  }
  std::vector<double> weights;
  for (int r = 1; r <= 30000; ++r) weights.push_back(1.0 / r);
  std::discrete_distribution<int> zipf(weights.begin(), weights.end());
  std::vector<std::string> out;
  for (int s = 0; s < sentences; ++s) {
    std::string line;
    for (int n = len(rng); n > 0; --n) line += (line.empty() ? "" : " ") + lexicon[zipf(rng)];
    out.push_back(line);
  }
  return out;
}

Outcome TargetLengthOrdering() {
  std::vector<std::string> text = SyntheticText(20000, 606);
  auto mean_len = [&](TargetUnit unit, const MergeTable* merges) {
    double total = 0.0;
    for (const auto& s : text) total += static_cast<double>(Segment(s, unit, merges).size());
    return total / static_cast<double>(text.size());
  };
  MergeTable m10k = BpeLearn(text, 10000);
  MergeTable m1k = m10k.Prefix(1000);
  const double chars = mean_len(TargetUnit::kChars, nullptr);
  const double bpe1k = mean_len(TargetUnit::kBpe, &m1k);
  const double bpe10k = mean_len(TargetUnit::kBpe, &m10k);
  const double words = mean_len(TargetUnit::kWords, nullptr);
  return {chars > bpe1k && bpe1k >= bpe10k && bpe10k >= words,
          "chars=" + Fmt(chars, 4) + " bpe1k=" + Fmt(bpe1k, 4) + " bpe10k=" + Fmt(bpe10k, 4) +
              " words=" + Fmt(words, 4) + " merges_learned=" + std::to_string(m10k.size())};
}

Outcome RoundTrips() {
  testing::TempDir dir;
  std::mt19937_64 rng(707);
  std::vector<std::string> failed;

  {  // Archive: 9 significant digits are exact at single precision.
    std::uniform_int_distribution<int> rows(1, 50), cols(1, 40);
    std::vector<ArchiveEntry> entries;
    for (int i = 0; i < 50; ++i) {
      Matrix m = RandomMatrix(rows(rng), cols(rng), rng, 10.0);
      for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = static_cast<float>(m.data()[k]);
      entries.push_back({"utt" + std::to_string(i), m});
    }
    WriteArchive(dir.File("a.ark"), entries);
    auto back = ReadArchive(dir.File("a.ark"));
    bool ok = back.size() == entries.size();
    for (std::size_t i = 0; ok && i < back.size(); ++i) {
      ok = back[i].utterance_id == entries[i].utterance_id && back[i].matrix.rows() == entries[i].matrix.rows() &&
           back[i].matrix.cols() == entries[i].matrix.cols() &&
           back[i].matrix.cast<float>() == entries[i].matrix.cast<float>();
    }
    if (!ok) failed.push_back("archive");
  }
  {  // Alignment.
    PhonemeInventory inv({"sil", "a", "b", "c", "<blk>"});
    std::uniform_int_distribution<int> lab(0, 4), len(1, 300);
    std::vector<FrameAlignment> alis;
    for (int i = 0; i < 50; ++i) {
      FrameAlignment a{"utt" + std::to_string(i), {}};
      for (int n = len(rng); n > 0; --n) a.labels.push_back(lab(rng));
      alis.push_back(a);
    }
    WriteAlignments(dir.File("ali.txt"), alis, inv);
    if (ReadAlignments(dir.File("ali.txt"), inv) != alis) failed.push_back("alignment");
  }
  std::vector<std::string> text = SyntheticText(300, 708);
  MergeTable merges = BpeLearn(text, 400);
  {  // Merge table.
    WriteMergeTable(dir.File("merges.txt"), merges);
    if (!(ReadMergeTable(dir.File("merges.txt")) == merges)) failed.push_back("merge_table");
  }
  VocabSpec spec = BuildVocabSpec(text, TargetUnit::kBpe, merges);
  {  // Vocab.
    WriteVocab(dir.File("vocab.txt"), spec.vocab);
    Vocab back = ReadVocab(dir.File("vocab.txt"));
    if (!(back == spec.vocab) || back.Hash() != spec.vocab.Hash()) failed.push_back("vocab");
  }
  {  // Checkpoint with randomized weights.
    nnet::EncoderConfig ec;
    ec.input_dims = 5;
    ec.hidden = 6;
    nnet::DecoderConfig dc;
    dc.target_embed_dims = 4;
    dc.attn_hidden = 5;
    dc.hidden = 6;
    dc.vocab_size = spec.vocab.size();
    nnet::Seq2SeqModel model(ec, dc, 709);
    for (auto* p : model.params().All()) p->value = RandomMatrix(p->value.rows(), p->value.cols(), rng);
    nnet::TrainConfig tc;
    nnet::SaveCheckpoint(dir.File("model.json"), model, tc, 709, spec);
    nnet::Checkpoint ck = nnet::LoadCheckpoint(dir.File("model.json"));
    auto a = model.params().All();
    auto b = ck.model->params().All();
    bool ok = a.size() == b.size() && ck.seed == 709 && ck.vocab.vocab == spec.vocab && ck.vocab.merges &&
              *ck.vocab.merges == merges;
    for (std::size_t i = 0; ok && i < a.size(); ++i) ok = a[i]->name == b[i]->name && a[i]->value == b[i]->value;
    if (!ok) failed.push_back("checkpoint");
  }
  std::string detail = "archive alignment merge_table vocab checkpoint";
  if (!failed.empty()) {
    detail = "failed:";
    for (const auto& f : failed) detail += " " + f;
  }
  return {failed.empty(), detail};
}

struct ToyOutcomes {
  Outcome trend;
  Outcome stride;
};

ToyOutcomes ToyTrends() {
  auto t0 = Clock::now();
  ToyCorpusConfig cc;  // 3000 utterances, 30 symbols, 40 dims, runs of 5-12 frames
  ToyCorpus corpus = GenerateToyCorpus(cc);
  CompareConfig cfg = CompareConfig::ToyDefaults();
  ComparisonReport report = RunComparison(corpus, cfg, &std::cerr);
  const double secs = Seconds(t0);
  std::cerr << FormatReport(report);

  const ConditionResult* pooled = report.Find(SourceCondition::kPooled);
  const ConditionResult* frames = report.Find(SourceCondition::kFrames);
  const ConditionResult* stride = report.Find(SourceCondition::kStride);
  const int budget = report.epochs;
  // Never reaching the threshold counts as budget + 1 epochs.
  const int pe = pooled->epochs_to_threshold.value_or(budget + 1);
  const int fe = frames->epochs_to_threshold.value_or(budget + 1);
  const double ratio = pooled->mean_epoch_seconds / frames->mean_epoch_seconds;
  const bool reached = pooled->epochs_to_threshold.has_value();
  ToyOutcomes out;
  out.trend = {reached && 2 * pe <= fe && ratio <= 0.7 && secs < 900.0,
               "pooled_epochs=" + (reached ? std::to_string(pe) : std::string("none")) + " frames_epochs=" +
                   (frames->epochs_to_threshold ? std::to_string(fe) : std::string("none")) + " budget=" +
                   std::to_string(budget) + " time_ratio=" + Fmt(ratio, 3) + " total_seconds=" + Fmt(secs, 4)};
  out.stride = {pooled->final_dev_accuracy >= stride->final_dev_accuracy,
                "pooled_acc=" + Fmt(pooled->final_dev_accuracy, 4) +
                    " stride2_acc=" + Fmt(stride->final_dev_accuracy, 4) + " epochs=" + std::to_string(budget)};
  return out;
}

int Main() {
  int failures = 0;
  auto report = [&](const std::string& name, const Outcome& o) {
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    if (!o.pass) ++failures;
  };
  auto run = [&](const std::string& name, const std::function<Outcome()>& fn) {
    try {
      report(name, fn());
    } catch (const std::exception& e) {
      report(name, {false, std::string("exception: ") + e.what()});
    }
  };
  run("pooling_oracle", PoolingOracle);
  run("fifty_frame_fixture", FiftyFrameFixture);
  run("ctc_expansion", CtcExpansion);
  run("frontend_oracle", FrontendOracle);
  run("cmvn", Cmvn);
  run("gradient_checks", GradChecks);
  run("encoder_downsampling_law", DownsamplingLaw);
  run("beam_search", BeamSearchChecks);
  run("bpe_oracle", BpeOracle);
  try {
    ToyOutcomes toy = ToyTrends();
    report("toy_trend", toy.trend);
    report("stride_trend", toy.stride);
  } catch (const std::exception& e) {
    report("toy_trend", {false, std::string("exception: ") + e.what()});
    report("stride_trend", {false, "not run"});
  }
  run("target_length_ordering", TargetLengthOrdering);
  run("round_trips", RoundTrips);
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}

}  // namespace
}  // namespace phonepool

int main() { return phonepool::Main(); }
