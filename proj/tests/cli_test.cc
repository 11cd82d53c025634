// tests/cli_test.cc

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

#include <fstream>
#include <random>
#include <sstream>

#include "phonepool/cli.h"
#include "phonepool/corpusio.h"
#include "test_util.h"

namespace phonepool {
namespace {

using testing::TempDir;

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult RunCli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::Run(args, out, err);
  return {code, out.str(), err.str()};
}

// Eight runs, 50 frames: sil a b c a b c sil.
void WriteFiftyFrameFixture(const TempDir& dir) {
  const std::vector<int> runs{6, 7, 5, 8, 4, 9, 6, 5};
  const std::vector<std::string> syms{"sil", "a", "b", "c", "a", "b", "c", "sil"};
  std::string ali = "utt1";
  int frames = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (int k = 0; k < runs[i]; ++k) ali += " " + syms[i];
    frames += runs[i];
  }
  WriteTextFile(dir.File("ali.txt"), ali + "\n");
  WriteTextFile(dir.File("inv.txt"), "sil\na\nb\nc\n");
  Matrix m(frames, 3);
  for (int t = 0; t < frames; ++t) m.row(t) << t, 2.0 * t, 1.0;
  WriteArchive(dir.File("feats.ark"), {{"utt1", m}});
}

TEST(Cli, PoolFiftyFrameFixture) {
  TempDir dir;
  WriteFiftyFrameFixture(dir);
  auto r = RunCli({"pool", "--features", dir.File("feats.ark"), "--alignments", dir.File("ali.txt"),
                   "--inventory", dir.File("inv.txt"), "--out", dir.File("pooled.ark"), "--segments",
                   dir.File("seg.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("num_segments=8\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("reduction_ratio=0.84\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("silence_run_fraction=0.25\n"), std::string::npos) << r.out;
  auto pooled = ReadArchive(dir.File("pooled.ark"));
  ASSERT_EQ(pooled.size(), 1u);
  ASSERT_EQ(pooled[0].matrix.rows(), 8);
  // First run covers frames 0..5: mean of t is 2.5.
  EXPECT_DOUBLE_EQ(pooled[0].matrix(0, 0), 2.5);
  EXPECT_DOUBLE_EQ(pooled[0].matrix(0, 1), 5.0);
  EXPECT_EQ(ReadLines(dir.File("seg.txt"))[0],
            "utt1 sil:0:5 a:6:12 b:13:17 c:18:25 a:26:29 b:30:38 c:39:44 sil:45:49");
}

TEST(Cli, PoolBlankModeDropsSilenceRows) {
  TempDir dir;
  WriteFiftyFrameFixture(dir);
  WriteTextFile(dir.File("inv.txt"), "sil\na\nb\nc\n<blk>\n");
  auto r = RunCli({"pool", "--features", dir.File("feats.ark"), "--alignments", dir.File("ali.txt"),
                   "--inventory", dir.File("inv.txt"), "--out", dir.File("p.ark"), "--blank-mode",
                   "drop", "--stats", dir.File("stats.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(ReadArchive(dir.File("p.ark"))[0].matrix.rows(), 8);  // no blank frames present
  EXPECT_TRUE(r.out.empty());
}

TEST(Cli, StrideHalvesFrames) {
  TempDir dir;
  std::mt19937_64 rng(1);
  WriteArchive(dir.File("in.ark"), {{"u", testing::RandomMatrix(10, 2, rng)}});
  auto r = RunCli({"stride", "--in", dir.File("in.ark"), "--out", dir.File("out.ark"), "--n", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(ReadArchive(dir.File("out.ark"))[0].matrix.rows(), 5);
}

TEST(Cli, ConfigFileAndFlagPrecedence) {
  TempDir dir;
  std::mt19937_64 rng(1);
  WriteArchive(dir.File("in.ark"), {{"u", testing::RandomMatrix(10, 2, rng)}});
  WriteTextFile(dir.File("cfg.ini"), "[stride]\nn=5\n");
  auto r = RunCli({"--config", dir.File("cfg.ini"), "stride", "--in", dir.File("in.ark"), "--out",
                   dir.File("a.ark")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(ReadArchive(dir.File("a.ark"))[0].matrix.rows(), 2);
  r = RunCli({"--config", dir.File("cfg.ini"), "stride", "--in", dir.File("in.ark"), "--out",
              dir.File("b.ark"), "--n", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(ReadArchive(dir.File("b.ark"))[0].matrix.rows(), 5);
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  auto r = RunCli({"stride", "--in", dir.File("missing.ark"), "--out", dir.File("o.ark")});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("phonepool: ", 0), 0u) << r.err;

  WriteTextFile(dir.File("bad.ark"), "u  [\n  1 2\n  3 ]\n");
  r = RunCli({"stride", "--in", dir.File("bad.ark"), "--out", dir.File("o.ark")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("ragged row at line 3"), std::string::npos) << r.err;

  r = RunCli({"frobnicate"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("unknown subcommand 'frobnicate'"), std::string::npos) << r.err;

  r = RunCli({"stride", "--in"});
  EXPECT_EQ(r.code, 1);
  r = RunCli({});
  EXPECT_EQ(r.code, 1);
  r = RunCli({"--help"});
  EXPECT_EQ(r.code, 0);
}

TEST(Cli, PoolLengthMismatchIsValidationError) {
  TempDir dir;
  WriteFiftyFrameFixture(dir);
  WriteArchive(dir.File("short.ark"), {{"utt1", Matrix::Zero(49, 3)}});
  auto r = RunCli({"pool", "--features", dir.File("short.ark"), "--alignments", dir.File("ali.txt"),
                   "--inventory", dir.File("inv.txt"), "--out", dir.File("p.ark")});
  EXPECT_EQ(r.code, 1) << r.err;
}

TEST(Cli, StatsCommand) {
  TempDir dir;
  WriteFiftyFrameFixture(dir);
  auto r = RunCli({"stats", "--alignments", dir.File("ali.txt"), "--inventory", dir.File("inv.txt"),
                   "--json", dir.File("s.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("num_frames=50\n"), std::string::npos);
  std::ifstream js(dir.File("s.json"));
  auto j = nlohmann::json::parse(js);
  EXPECT_EQ(j["num_segments"], 8);
  EXPECT_DOUBLE_EQ(j["reduction_ratio"].get<double>(), 0.84);
}

TEST(Cli, BpeLearnAndApply) {
  TempDir dir;
  WriteTextFile(dir.File("text.txt"), "Low lower\nnewest, widest!\n");
  auto r = RunCli({"bpe-learn", "--text", dir.File("text.txt"), "--merges", "3", "--out",
                   dir.File("m.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(ReadMergeTable(dir.File("m.txt")).size(), 3u);
  r = RunCli({"bpe-apply", "--text", dir.File("text.txt"), "--merges", dir.File("m.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 2);
}

TEST(Cli, ToygenTrainDecode) {
  TempDir dir;
  auto r = RunCli({"toygen", "--out-dir", dir.File("toy"), "--num-utterances", "30", "--num-symbols",
                   "5", "--dims", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string toy = dir.File("toy");
  r = RunCli({"train", "--features", toy + "/train/feats.ark", "--text", toy + "/train/text",
              "--dev-features", toy + "/dev/feats.ark", "--dev-text", toy + "/dev/text", "--unit",
              "words", "--out", dir.File("model.json"), "--epochs", "2", "--hidden", "8",
              "--decoder-hidden", "8", "--attn-hidden", "8", "--embed-dims", "4", "--log",
              dir.File("log.jsonl"), "--omit-timing"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto log = ReadLines(dir.File("log.jsonl"));
  ASSERT_GE(log.size(), 2u);
  auto rec = nlohmann::json::parse(log[0]);
  EXPECT_EQ(rec["epoch"], 1);
  EXPECT_FALSE(rec.contains("wall_seconds"));

  r = RunCli({"decode", "--model", dir.File("model.json"), "--features", toy + "/dev/feats.ark",
              "--beam", "3", "--ref", toy + "/dev/text", "--json", dir.File("dec.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 3);
  EXPECT_NE(r.err.find("BLEU"), std::string::npos) << r.err;
}

TEST(Cli, GradCheckPasses) {
  auto r = RunCli({"gradcheck"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 6);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST(Cli, CompareIsReproducibleWithoutTiming) {
  std::vector<std::string> args{"compare", "--num-utterances", "30", "--num-symbols", "5", "--dims",
                                "4", "--epochs", "2", "--hidden", "8", "--decoder-hidden", "8",
                                "--attn-hidden", "8", "--embed-dims", "4", "--omit-timing"};
  auto a = RunCli(args), b = RunCli(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out.find("pooled"), std::string::npos);
}

}  // namespace
}  // namespace phonepool
