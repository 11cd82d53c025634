// core/src/textproc.cc

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

#include "phonepool/textproc.h"

#include <unicode/uchar.h>
#include <unicode/locid.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>

#include "phonepool/error.h"

namespace phonepool {

std::string NormalizeTarget(std::string_view text) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  u.findAndReplace(icu::UnicodeString(static_cast<UChar32>(0x2019)),
                   icu::UnicodeString(static_cast<UChar32>(0x27)));
  u.toLower(icu::Locale::getRoot());

  icu::UnicodeString out;
  bool pending_space = false;
  for (int32_t i = 0; i < u.length();) {
    UChar32 c = u.char32At(i);
    i += U16_LENGTH(c);
    if (u_isUWhiteSpace(c)) {
      pending_space = !out.isEmpty();
      continue;
    }
    if (c != 0x27 && u_ispunct(c)) continue;
    if (pending_space) out.append(static_cast<UChar32>(0x20));
    pending_space = false;
    out.append(c);
  }
  std::string result;
  out.toUTF8String(result);
  return result;
}

std::vector<std::string> Utf8Chars(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = lead < 0x80 ? 1 : (lead >> 5) == 0x6 ? 2 : (lead >> 4) == 0xe ? 3
                                                           : (lead >> 3) == 0x1e ? 4 : 1;
    len = std::min(len, text.size() - i);
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

std::vector<std::string> SplitWords(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) words.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

MergeTable::MergeTable(std::vector<SymbolPair> merges) {
  for (auto& p : merges) Append(std::move(p));
}

std::optional<std::size_t> MergeTable::Rank(const SymbolPair& pair) const {
  auto it = rank_.find(pair);
  if (it == rank_.end()) return std::nullopt;
  return it->second;
}

void MergeTable::Append(SymbolPair pair) {
  if (pair.first.empty() || pair.second.empty()) throw ValidationError("merge table: empty symbol");
  if (!rank_.emplace(pair, merges_.size()).second) {
    throw ValidationError("merge table: duplicate pair '" + pair.first + " " + pair.second + "'");
  }
  merges_.push_back(std::move(pair));
}

MergeTable MergeTable::Prefix(std::size_t n) const {
  n = std::min(n, merges_.size());
  return MergeTable(std::vector<SymbolPair>(merges_.begin(), merges_.begin() + n));
}

namespace {

std::vector<std::string> InitialSymbols(std::string_view word) {
  std::vector<std::string> symbols = Utf8Chars(word);
  if (!symbols.empty()) symbols.back() += kEndOfWord;
  return symbols;
}

// Replaces every non-overlapping occurrence of `pair`, scanning left to right.
void MergePair(std::vector<std::string>& symbols, const SymbolPair& pair) {
  std::vector<std::string> out;
  out.reserve(symbols.size());
  for (std::size_t i = 0; i < symbols.size();) {
    if (i + 1 < symbols.size() && symbols[i] == pair.first && symbols[i + 1] == pair.second) {
      out.push_back(pair.first + pair.second);
      i += 2;
    } else {
      out.push_back(std::move(symbols[i]));
      ++i;
    }
  }
  symbols = std::move(out);
}

}  // namespace

MergeTable BpeLearnFromCounts(const std::map<std::string, std::int64_t>& word_counts,
                              int num_merges) {
  if (num_merges < 0) throw ValidationError("bpe: num_merges must be non-negative");
  struct Word {
    std::vector<std::string> symbols;
    std::int64_t count;
  };
  std::vector<Word> words;
  words.reserve(word_counts.size());
  for (const auto& [w, c] : word_counts) {
    if (!w.empty() && c > 0) words.push_back({InitialSymbols(w), c});
  }

  MergeTable table;
  for (int m = 0; m < num_merges; ++m) {
    std::map<SymbolPair, std::int64_t> pair_counts;
    for (const Word& w : words) {
      for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
        pair_counts[{w.symbols[i], w.symbols[i + 1]}] += w.count;
      }
    }
    if (pair_counts.empty()) break;
    // std::map iterates in lexicographic order, so the first maximum wins ties.
    auto best = pair_counts.begin();
    for (auto it = pair_counts.begin(); it != pair_counts.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    SymbolPair chosen = best->first;
    for (Word& w : words) MergePair(w.symbols, chosen);
    table.Append(std::move(chosen));
  }
  return table;
}

MergeTable BpeLearn(std::span<const std::string> corpus, int num_merges) {
  std::map<std::string, std::int64_t> counts;
  for (const std::string& line : corpus) {
    for (std::string& w : SplitWords(line)) ++counts[std::move(w)];
  }
  return BpeLearnFromCounts(counts, num_merges);
}

std::vector<std::string> BpeApply(std::string_view word, const MergeTable& merges) {
  std::vector<std::string> symbols = InitialSymbols(word);
  while (symbols.size() > 1) {
    std::optional<std::size_t> best_rank;
    std::size_t best_pos = 0;
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      auto r = merges.Rank({symbols[i], symbols[i + 1]});
      if (r && (!best_rank || *r < *best_rank)) {
        best_rank = r;
        best_pos = i;
      }
    }
    if (!best_rank) break;
    SymbolPair pair{symbols[best_pos], symbols[best_pos + 1]};
    MergePair(symbols, pair);
  }
  return symbols;
}

std::optional<TargetUnit> ParseTargetUnit(std::string_view name) {
  if (name == "chars") return TargetUnit::kChars;
  if (name == "words") return TargetUnit::kWords;
  if (name == "bpe") return TargetUnit::kBpe;
  return std::nullopt;
}

std::string_view TargetUnitName(TargetUnit unit) {
  switch (unit) {
    case TargetUnit::kChars:
      return "chars";
    case TargetUnit::kWords:
      return "words";
    case TargetUnit::kBpe:
      return "bpe";
  }
  return "words";
}

Vocab::Vocab()
    : Vocab(std::vector<std::string>{std::string(kPadToken), std::string(kBosToken),
                                     std::string(kEosToken), std::string(kUnkToken)}) {}

Vocab::Vocab(std::vector<std::string> tokens) {
  const std::string_view reserved[] = {kPadToken, kBosToken, kEosToken, kUnkToken};
  if (tokens.size() < 4) throw ValidationError("vocab: reserved tokens missing");
  for (int i = 0; i < 4; ++i) {
    if (tokens[i] != reserved[i]) {
      throw ValidationError("vocab: expected reserved token '" + std::string(reserved[i]) +
                            "' at id " + std::to_string(i));
    }
  }
  for (auto& t : tokens) {
    if (t.empty()) throw ValidationError("vocab: empty token");
    if (ids_.contains(t)) throw ValidationError("vocab: duplicate token '" + t + "'");
    ids_.emplace(t, static_cast<int>(tokens_.size()));
    tokens_.push_back(std::move(t));
  }
}

int Vocab::Id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocab::Contains(std::string_view token) const { return ids_.contains(std::string(token)); }

int Vocab::Add(std::string_view token) {
  auto [it, inserted] = ids_.emplace(std::string(token), size());
  if (inserted) tokens_.emplace_back(token);
  return it->second;
}

std::string Vocab::Hash() const {
  std::uint64_t h = 14695981039346656037ull;
  for (const std::string& t : tokens_) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= 0x0a;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> Segment(std::string_view text, TargetUnit unit, const MergeTable* merges) {
  std::vector<std::string> out;
  std::vector<std::string> words = SplitWords(text);
  switch (unit) {
    case TargetUnit::kWords:
      return words;
    case TargetUnit::kChars:
      for (std::size_t w = 0; w < words.size(); ++w) {
        if (w > 0) out.emplace_back(kWordBoundaryToken);
        for (std::string& c : Utf8Chars(words[w])) out.push_back(std::move(c));
      }
      return out;
    case TargetUnit::kBpe: {
      if (merges == nullptr) throw ValidationError("bpe segmentation requires a merge table");
      for (const std::string& w : words) {
        for (std::string& piece : BpeApply(w, *merges)) out.push_back(std::move(piece));
      }
      return out;
    }
  }
  return out;
}

VocabSpec BuildVocabSpec(std::span<const std::string> corpus, TargetUnit unit,
                         std::optional<MergeTable> merges) {
  if (unit == TargetUnit::kBpe && !merges) throw ValidationError("bpe vocab requires a merge table");
  VocabSpec spec;
  spec.unit = unit;
  spec.merges = std::move(merges);
  std::set<std::string> tokens;
  for (const std::string& line : corpus) {
    for (std::string& t : Segment(line, unit, spec.merges ? &*spec.merges : nullptr)) {
      tokens.insert(std::move(t));
    }
  }
  if (unit == TargetUnit::kChars) tokens.insert(std::string(kWordBoundaryToken));
  for (const std::string& t : tokens) spec.vocab.Add(t);
  return spec;
}

std::vector<int> Tokenize(std::string_view text, const VocabSpec& spec) {
  std::vector<int> ids{Vocab::kBos};
  for (const std::string& t : Segment(text, spec.unit, spec.merges ? &*spec.merges : nullptr)) {
    ids.push_back(spec.vocab.Id(t));
  }
  ids.push_back(Vocab::kEos);
  return ids;
}

std::string Detokenize(std::span<const int> ids, const VocabSpec& spec) {
  std::string out;
  for (int id : ids) {
    if (id == Vocab::kPad || id == Vocab::kBos || id == Vocab::kEos) continue;
    if (id < 0 || id >= spec.vocab.size()) throw ValidationError("detokenize: id out of range");
    const std::string& tok = spec.vocab.Token(id);
    switch (spec.unit) {
      case TargetUnit::kWords:
        if (!out.empty()) out += ' ';
        out += tok;
        break;
      case TargetUnit::kChars:
        out += tok == kWordBoundaryToken ? std::string(" ") : tok;
        break;
      case TargetUnit::kBpe:
        if (tok.size() >= kEndOfWord.size() &&
            tok.compare(tok.size() - kEndOfWord.size(), kEndOfWord.size(), kEndOfWord) == 0) {
          out += tok.substr(0, tok.size() - kEndOfWord.size());
          out += ' ';
        } else {
          out += tok;
        }
        break;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

}  // namespace phonepool
