// tests/toy_test.cc

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

#include <set>

#include "phonepool/error.h"
#include "phonepool/pooling.h"
#include "phonepool/toy.h"

namespace phonepool {
namespace {

ToyCorpusConfig SmallConfig() {
  ToyCorpusConfig c;
  c.num_utterances = 60;
  c.num_symbols = 6;
  c.dims = 4;
  return c;
}

TEST(ToyCorpus, DeterministicForSeed) {
  ToyCorpus a = GenerateToyCorpus(SmallConfig());
  ToyCorpus b = GenerateToyCorpus(SmallConfig());
  ASSERT_EQ(a.train.size(), b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    EXPECT_TRUE(a.train[i].features.data == b.train[i].features.data);
    EXPECT_EQ(a.train[i].translation, b.train[i].translation);
  }
  ToyCorpusConfig other = SmallConfig();
  other.seed = 2;
  EXPECT_FALSE(GenerateToyCorpus(other).train[0].features.data == a.train[0].features.data);
}

TEST(ToyCorpus, StructuralInvariants) {
  ToyCorpusConfig cfg = SmallConfig();
  ToyCorpus c = GenerateToyCorpus(cfg);
  EXPECT_EQ(c.train.size() + c.dev.size(), 60u);
  EXPECT_EQ(c.dev.size(), 6u);
  EXPECT_EQ(c.inventory.size(), 6);
  EXPECT_EQ(c.words.size(), 6u);
  EXPECT_EQ(std::set<std::string>(c.words.begin(), c.words.end()).size(), 6u);
  std::set<std::string> ids;
  for (const auto* split : {&c.train, &c.dev}) {
    for (const auto& u : *split) {
      EXPECT_TRUE(ids.insert(u.features.utterance_id).second);
      ASSERT_EQ(u.features.NumFrames(), static_cast<int>(u.alignment.labels.size()));
      EXPECT_EQ(u.features.Dims(), 4);
      EXPECT_GE(u.symbols.size(), 4u);
      EXPECT_LE(u.symbols.size(), 10u);
      auto runs = LabelRuns(u.alignment.labels);
      ASSERT_EQ(runs.size(), u.symbols.size());
      std::string words;
      for (std::size_t i = 0; i < runs.size(); ++i) {
        EXPECT_EQ(runs[i].label, u.symbols[i]);
        EXPECT_GE(runs[i].length(), cfg.min_run);
        EXPECT_LE(runs[i].length(), cfg.max_run);
        if (i > 0) {
          EXPECT_NE(u.symbols[i], u.symbols[i - 1]);
        }
        words += (i ? " " : "") + c.words[u.symbols[i]];
      }
      EXPECT_EQ(u.translation, words);
    }
  }
}

TEST(ToyCorpus, ValidatesConfig) {
  ToyCorpusConfig c = SmallConfig();
  c.min_run = 0;
  EXPECT_THROW(GenerateToyCorpus(c), ValidationError);
  c = SmallConfig();
  c.max_symbols = 2;
  EXPECT_THROW(GenerateToyCorpus(c), ValidationError);
  c = SmallConfig();
  c.dev_fraction = 1.0;
  EXPECT_THROW(GenerateToyCorpus(c), ValidationError);
}

TEST(ToyExamples, ConditionsShapeSources) {
  ToyCorpus c = GenerateToyCorpus(SmallConfig());
  std::vector<std::string> text;
  for (const auto& u : c.train) text.push_back(u.translation);
  VocabSpec spec = BuildVocabSpec(text, TargetUnit::kWords);
  auto frames = MakeExamples(c.train, SourceCondition::kFrames, spec);
  auto pooled = MakeExamples(c.train, SourceCondition::kPooled, spec);
  auto stride = MakeExamples(c.train, SourceCondition::kStride, spec, 2);
  for (std::size_t i = 0; i < c.train.size(); ++i) {
    const int t = c.train[i].features.NumFrames();
    EXPECT_EQ(frames[i].source.rows(), t);
    EXPECT_EQ(pooled[i].source.rows(), static_cast<int>(c.train[i].symbols.size()));
    EXPECT_EQ(stride[i].source.rows(), (t + 1) / 2);
    EXPECT_EQ(frames[i].target, pooled[i].target);
    EXPECT_EQ(frames[i].target.size(), c.train[i].symbols.size() + 2);
  }
}

TEST(ToyComparison, ReproducibleReportWithoutTiming) {
  ToyCorpusConfig cc = SmallConfig();
  cc.num_utterances = 40;
  ToyCorpus corpus = GenerateToyCorpus(cc);
  CompareConfig cfg = CompareConfig::ToyDefaults();
  cfg.encoder.hidden = 8;
  cfg.decoder.hidden = 8;
  cfg.decoder.attn_hidden = 8;
  cfg.decoder.target_embed_dims = 4;
  cfg.train.epochs = 2;
  ComparisonReport a = RunComparison(corpus, cfg);
  ComparisonReport b = RunComparison(corpus, cfg);
  EXPECT_EQ(a.results.size(), 3u);
  EXPECT_EQ(FormatReport(a, false), FormatReport(b, false));
  EXPECT_EQ(ReportToJson(a, false), ReportToJson(b, false));
  const ConditionResult* pooled = a.Find(SourceCondition::kPooled);
  const ConditionResult* frames = a.Find(SourceCondition::kFrames);
  ASSERT_TRUE(pooled && frames);
  EXPECT_LT(pooled->mean_source_length, frames->mean_source_length);
  EXPECT_EQ(pooled->log.size(), 2u);
  EXPECT_EQ(FormatReport(a, false).find("seconds"), std::string::npos);
}

}  // namespace
}  // namespace phonepool
