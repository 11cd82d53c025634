// core/include/phonepool/textproc.h

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

#ifndef PHONEPOOL_TEXTPROC_H_
#define PHONEPOOL_TEXTPROC_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace phonepool {

/// Lowercases, strips Unicode punctuation except the ASCII apostrophe
/// (U+2019 is folded into it first), collapses whitespace, and trims.
std::string NormalizeTarget(std::string_view text);

/// Splits UTF-8 text into code-point substrings.
std::vector<std::string> Utf8Chars(std::string_view text);

std::vector<std::string> SplitWords(std::string_view text);

inline constexpr std::string_view kEndOfWord = "</w>";

using SymbolPair = std::pair<std::string, std::string>;

/// Learned BPE merges in learning order.
class MergeTable {
 public:
  MergeTable() = default;
  explicit MergeTable(std::vector<SymbolPair> merges);

  const std::vector<SymbolPair>& merges() const { return merges_; }
  std::size_t size() const { return merges_.size(); }
  bool empty() const { return merges_.empty(); }
  /// Position in learning order, if present.
  std::optional<std::size_t> Rank(const SymbolPair& pair) const;
  void Append(SymbolPair pair);
  /// First `n` merges.
  MergeTable Prefix(std::size_t n) const;

  bool operator==(const MergeTable& other) const { return merges_ == other.merges_; }

 private:
  std::vector<SymbolPair> merges_;
  std::map<SymbolPair, std::size_t> rank_;
};

/// Greedy pair-merge learning over whitespace-separated words. The most
/// frequent adjacent pair is merged each round (frequency weighted by word
/// count); ties go to the lexicographically smallest pair. Stops early when
/// no pair is left.
MergeTable BpeLearn(std::span<const std::string> corpus, int num_merges);
MergeTable BpeLearnFromCounts(const std::map<std::string, std::int64_t>& word_counts,
                              int num_merges);

/// Characters of `word` with "</w>" attached to the last one, then merges in
/// learned order until none applies.
std::vector<std::string> BpeApply(std::string_view word, const MergeTable& merges);

enum class TargetUnit { kChars, kWords, kBpe };

std::optional<TargetUnit> ParseTargetUnit(std::string_view name);
std::string_view TargetUnitName(TargetUnit unit);

inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kBosToken = "<s>";
inline constexpr std::string_view kEosToken = "</s>";
inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kWordBoundaryToken = "<wb>";

/// Dense token <-> id map. Ids 0..3 are <pad>, <s>, </s>, <unk>.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  Vocab();
  /// Throws unless the first four tokens are the reserved ones and all are unique.
  explicit Vocab(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  int Id(std::string_view token) const;  // kUnk when absent
  bool Contains(std::string_view token) const;
  const std::string& Token(int id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  /// Appends if new; returns the id.
  int Add(std::string_view token);
  /// FNV-1a over the token list, hex.
  std::string Hash() const;

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

struct VocabSpec {
  TargetUnit unit = TargetUnit::kWords;
  std::optional<MergeTable> merges;  // required for kBpe
  Vocab vocab;
};

/// Token strings for normalized text (no <s>/</s>).
std::vector<std::string> Segment(std::string_view text, TargetUnit unit,
                                 const MergeTable* merges = nullptr);

/// Builds a VocabSpec whose vocabulary covers every token of `corpus`,
/// sorted after the reserved entries.
VocabSpec BuildVocabSpec(std::span<const std::string> corpus, TargetUnit unit,
                         std::optional<MergeTable> merges = std::nullopt);

/// <s> tokens... </s> as ids; unknown tokens map to <unk>.
std::vector<int> Tokenize(std::string_view text, const VocabSpec& spec);

/// Inverse of Tokenize for in-vocabulary text; reserved tokens are skipped.
std::string Detokenize(std::span<const int> ids, const VocabSpec& spec);

/// Corpus BLEU-4 (uniform weights, brevity penalty), in [0, 100].
double CorpusBleu(std::span<const std::vector<std::string>> hypotheses,
                  std::span<const std::vector<std::string>> references);

}  // namespace phonepool

#endif  // PHONEPOOL_TEXTPROC_H_
