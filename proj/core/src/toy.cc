// core/src/toy.cc

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

#include "phonepool/toy.h"

#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "phonepool/error.h"
#include "phonepool/pooling.h"

namespace phonepool {

void ToyCorpusConfig::Validate() const {
  if (num_utterances < 2) throw ValidationError("toy: need at least 2 utterances");
  if (num_symbols < 2) throw ValidationError("toy: need at least 2 symbols");
  if (dims < 1) throw ValidationError("toy: dims must be positive");
  if (min_run < 1 || max_run < min_run) throw ValidationError("toy: bad run length range");
  if (min_symbols < 1 || max_symbols < min_symbols) {
    throw ValidationError("toy: bad symbols-per-utterance range");
  }
  if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) {
    throw ValidationError("toy: dev_fraction must be in (0, 1)");
  }
  if (noise_std < 0.0 || prototype_std <= 0.0) throw ValidationError("toy: bad noise levels");
}

namespace {

std::string SymbolWord(int i) {
  static const char kOnsets[] = "bdgklmnprstvz";
  static const char kVowels[] = "aeiou";
  std::string w;
  const int n_on = sizeof(kOnsets) - 1;
  const int n_v = sizeof(kVowels) - 1;
  int x = i;
  do {
    w += kOnsets[x % n_on];
    x /= n_on;
    w += kVowels[x % n_v];
    x /= n_v;
  } while (x > 0);
  return w;
}

std::string Format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace

ToyCorpus GenerateToyCorpus(const ToyCorpusConfig& config) {
  config.Validate();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> proto_dist(0.0, config.prototype_std);
  std::normal_distribution<double> noise(0.0, config.noise_std);
  std::uniform_int_distribution<int> run_len(config.min_run, config.max_run);
  std::uniform_int_distribution<int> num_syms(config.min_symbols, config.max_symbols);
  std::uniform_int_distribution<int> pick(0, config.num_symbols - 1);

  ToyCorpus corpus;
  std::vector<std::string> symbols;
  for (int s = 0; s < config.num_symbols; ++s) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "s%02d", s);
    symbols.emplace_back(buf);
    corpus.words.push_back(SymbolWord(s));
  }
  corpus.inventory = PhonemeInventory(symbols);

  Matrix prototypes(config.num_symbols, config.dims);
  for (Eigen::Index i = 0; i < prototypes.size(); ++i) prototypes.data()[i] = proto_dist(rng);

  const int num_dev = std::max(1, static_cast<int>(config.num_utterances * config.dev_fraction));
  for (int u = 0; u < config.num_utterances; ++u) {
    ToyUtterance utt;
    char id[32];
    std::snprintf(id, sizeof(id), "toy%05d", u);
    utt.features.utterance_id = id;
    utt.features.speaker_id = "toy";
    utt.alignment.utterance_id = id;

    const int n = num_syms(rng);
    int prev = -1;
    std::vector<int> runs;
    for (int k = 0; k < n; ++k) {
      int s = pick(rng);
      while (s == prev) s = pick(rng);
      utt.symbols.push_back(s);
      runs.push_back(run_len(rng));
      prev = s;
    }
    const int frames = std::accumulate(runs.begin(), runs.end(), 0);
    utt.features.data.resize(frames, config.dims);
    int f = 0;
    for (int k = 0; k < n; ++k) {
      for (int r = 0; r < runs[k]; ++r, ++f) {
        for (int d = 0; d < config.dims; ++d) {
          utt.features.data(f, d) = prototypes(utt.symbols[k], d) + noise(rng);
        }
        utt.alignment.labels.push_back(utt.symbols[k]);
      }
      if (k > 0) utt.translation += ' ';
      utt.translation += corpus.words[utt.symbols[k]];
    }
    (u < config.num_utterances - num_dev ? corpus.train : corpus.dev).push_back(std::move(utt));
  }
  return corpus;
}

std::string_view SourceConditionName(SourceCondition c) {
  switch (c) {
    case SourceCondition::kFrames: return "frames";
    case SourceCondition::kPooled: return "pooled";
    case SourceCondition::kStride: return "stride";
  }
  return "unknown";
}

CompareConfig CompareConfig::ToyDefaults() {
  CompareConfig c;
  c.encoder.input_dims = 40;
  c.encoder.hidden = 32;
  c.encoder.num_blocks = 2;
  c.encoder.downsample = false;
  c.decoder.target_embed_dims = 16;
  c.decoder.attn_hidden = 32;
  c.decoder.hidden = 32;
  c.train.lr = 0.003;
  c.train.epochs = 20;
  c.train.avg_batch_size = 32;
  c.train.recurrent_dropout = 0.1;
  c.train.target_token_dropout = 0.1;
  c.train.seed = 1;
  return c;
}

const ConditionResult* ComparisonReport::Find(SourceCondition c) const {
  for (const auto& r : results) {
    if (r.condition == c) return &r;
  }
  return nullptr;
}

std::vector<nnet::Example> MakeExamples(const std::vector<ToyUtterance>& utts,
                                        SourceCondition condition, const VocabSpec& vocab,
                                        int stride) {
  std::vector<nnet::Example> out;
  out.reserve(utts.size());
  for (const auto& u : utts) {
    nnet::Example ex;
    ex.utterance_id = u.features.utterance_id;
    switch (condition) {
      case SourceCondition::kFrames:
        ex.source = u.features.data;
        break;
      case SourceCondition::kPooled:
        ex.source = PoolRuns(u.features, u.alignment).ToFeatureMatrix().data;
        break;
      case SourceCondition::kStride:
        ex.source = StrideDownsample(u.features, stride).data;
        break;
    }
    ex.target = Tokenize(u.translation, vocab);
    out.push_back(std::move(ex));
  }
  return out;
}

ComparisonReport RunComparison(const ToyCorpus& corpus, const CompareConfig& config,
                               std::ostream* progress) {
  if (corpus.train.empty() || corpus.dev.empty()) {
    throw ValidationError("compare: corpus needs train and dev utterances");
  }
  std::vector<std::string> texts;
  for (const auto& u : corpus.train) texts.push_back(u.translation);
  VocabSpec vocab = BuildVocabSpec(texts, TargetUnit::kWords);

  nnet::EncoderConfig enc = config.encoder;
  enc.input_dims = corpus.train.front().features.Dims();
  nnet::DecoderConfig dec = config.decoder;
  dec.vocab_size = vocab.vocab.size();

  ComparisonReport report;
  report.epochs = config.train.epochs;
  report.threshold = config.threshold;
  for (SourceCondition cond : config.conditions) {
    auto train = MakeExamples(corpus.train, cond, vocab, config.stride);
    auto dev = MakeExamples(corpus.dev, cond, vocab, config.stride);
    ConditionResult res;
    res.condition = cond;
    double total = 0.0;
    for (const auto& ex : train) total += static_cast<double>(ex.source.rows());
    res.mean_source_length = total / static_cast<double>(train.size());

    nnet::Seq2SeqModel model(enc, dec, config.train.seed);
    auto on_epoch = [&](const nnet::EpochRecord& r) {
      if (progress != nullptr) {
        *progress << SourceConditionName(cond) << " epoch " << r.epoch << " loss "
                  << Format("%.4f", r.train_loss) << " dev_acc " << Format("%.4f", r.dev_accuracy)
                  << " sec " << Format("%.2f", r.wall_seconds) << '\n';
        progress->flush();
      }
      return true;
    };
    nnet::TrainResult tr = nnet::Train(model, train, dev, config.train, on_epoch);
    res.log = tr.log;
    double secs = 0.0;
    for (const auto& r : tr.log) {
      secs += r.wall_seconds;
      if (!res.epochs_to_threshold && r.dev_accuracy >= config.threshold) {
        res.epochs_to_threshold = r.epoch;
      }
    }
    if (!tr.log.empty()) {
      res.final_dev_accuracy = tr.log.back().dev_accuracy;
      res.mean_epoch_seconds = secs / static_cast<double>(tr.log.size());
    }
    report.results.push_back(std::move(res));
  }
  return report;
}

std::string FormatReport(const ComparisonReport& report, bool include_timing) {
  std::ostringstream os;
  os << "epochs=" << report.epochs << " threshold=" << Format("%.3f", report.threshold) << '\n';
  for (const auto& r : report.results) {
    os << "condition=" << SourceConditionName(r.condition)
       << " mean_source_length=" << Format("%.2f", r.mean_source_length) << " epochs_to_threshold="
       << (r.epochs_to_threshold ? std::to_string(*r.epochs_to_threshold) : std::string("none"))
       << " final_dev_accuracy=" << Format("%.4f", r.final_dev_accuracy);
    if (include_timing) os << " mean_epoch_seconds=" << Format("%.3f", r.mean_epoch_seconds);
    os << '\n';
  }
  const ConditionResult* pooled = report.Find(SourceCondition::kPooled);
  const ConditionResult* frames = report.Find(SourceCondition::kFrames);
  if (pooled != nullptr && frames != nullptr && include_timing && frames->mean_epoch_seconds > 0.0) {
    os << "time_ratio_pooled_vs_frames="
       << Format("%.3f", pooled->mean_epoch_seconds / frames->mean_epoch_seconds) << '\n';
  }
  for (const auto& r : report.results) {
    os << "curve " << SourceConditionName(r.condition);
    for (const auto& e : r.log) os << ' ' << Format("%.4f", e.dev_accuracy);
    os << '\n';
  }
  return os.str();
}

nlohmann::json ReportToJson(const ComparisonReport& report, bool include_timing) {
  nlohmann::json j;
  j["epochs"] = report.epochs;
  j["threshold"] = report.threshold;
  nlohmann::json conds = nlohmann::json::array();
  for (const auto& r : report.results) {
    nlohmann::json c;
    c["condition"] = std::string(SourceConditionName(r.condition));
    c["mean_source_length"] = r.mean_source_length;
    c["epochs_to_threshold"] =
        r.epochs_to_threshold ? nlohmann::json(*r.epochs_to_threshold) : nlohmann::json(nullptr);
    c["final_dev_accuracy"] = r.final_dev_accuracy;
    if (include_timing) c["mean_epoch_seconds"] = r.mean_epoch_seconds;
    nlohmann::json log = nlohmann::json::array();
    for (const auto& e : r.log) log.push_back(nnet::ToJson(e, include_timing));
    c["log"] = std::move(log);
    conds.push_back(std::move(c));
  }
  j["conditions"] = std::move(conds);
  return j;
}

}  // namespace phonepool
