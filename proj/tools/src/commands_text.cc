// tools/src/commands_text.cc

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

#include <memory>
#include <sstream>

#include "commands.h"
#include "phonepool/corpusio.h"
#include "phonepool/error.h"
#include "phonepool/textproc.h"

namespace phonepool::cli {

namespace {

// Plain lines, or the text part of "utt-id text" lines when keyed.
std::vector<std::string> ReadTexts(const std::string& path, bool keyed) {
  std::vector<std::string> out;
  if (keyed) {
    for (auto& [k, v] : ReadKeyedLines(path)) out.push_back(NormalizeTarget(v));
  } else {
    for (auto& line : ReadLines(path)) out.push_back(NormalizeTarget(line));
  }
  return out;
}

}  // namespace

void RegisterTextCommands(CLI::App& app, Context& ctx) {
  {
    struct Opts {
      std::string text, out;
      int merges = 1000;
      bool keyed = false;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("bpe-learn", "Learn a byte-pair-encoding merge table");
    sub->add_option("--text", o->text, "Training text, one sentence per line")->required();
    sub->add_flag("--keyed", o->keyed, "Lines start with an utterance id");
    sub->add_option("--merges", o->merges, "Number of merges")->capture_default_str();
    sub->add_option("--out", o->out, "Merge table output")->required();
    sub->callback([o, &ctx] {
      if (o->merges < 0) throw ValidationError("bpe-learn: --merges must be >= 0");
      MergeTable table = BpeLearn(ReadTexts(o->text, o->keyed), o->merges);
      WriteMergeTable(o->out, table);
      ctx.err << "bpe-learn: learned " << table.size() << " merges\n";
    });
  }
  {
    struct Opts {
      std::string text, merges, out;
      bool keyed = false;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("bpe-apply", "Segment text with a learned merge table");
    sub->add_option("--text", o->text, "Input text, one sentence per line")->required();
    sub->add_flag("--keyed", o->keyed, "Lines start with an utterance id (kept in the output)");
    sub->add_option("--merges", o->merges, "Merge table")->required();
    sub->add_option("--out", o->out, "Output path (default: stdout)");
    sub->callback([o, &ctx] {
      MergeTable table = ReadMergeTable(o->merges);
      std::ostringstream os;
      auto segment = [&](const std::string& text) {
        auto pieces = Segment(NormalizeTarget(text), TargetUnit::kBpe, &table);
        for (std::size_t i = 0; i < pieces.size(); ++i) os << (i ? " " : "") << pieces[i];
      };
      if (o->keyed) {
        for (auto& [k, v] : ReadKeyedLines(o->text)) {
          os << k << ' ';
          segment(v);
          os << '\n';
        }
      } else {
        for (auto& line : ReadLines(o->text)) {
          segment(line);
          os << '\n';
        }
      }
      Emit(ctx, o->out, os.str());
    });
  }
}

}  // namespace phonepool::cli
