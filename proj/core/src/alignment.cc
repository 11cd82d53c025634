// core/src/alignment.cc

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

#include "phonepool/alignment.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include "phonepool/error.h"

namespace phonepool {

namespace {

std::vector<std::string_view> SplitWhitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool AllDigits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(),
                                   [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

PhonemeInventory::PhonemeInventory(std::vector<std::string> symbols)
    : symbols_(std::move(symbols)) {
  for (int i = 0; i < size(); ++i) {
    const std::string& s = symbols_[i];
    if (s.empty()) throw ValidationError("inventory: empty symbol at index " + std::to_string(i));
    if (std::any_of(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); })) {
      throw ValidationError("inventory: symbol '" + s + "' contains whitespace");
    }
    if (!index_.emplace(s, i).second) throw ValidationError("inventory: duplicate symbol '" + s + "'");
    if (s == kBlankSymbol) blank_ = i;
  }
}

std::optional<int> PhonemeInventory::IndexOf(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

FrameAlignment ParseFrameAlignment(std::string_view record, const PhonemeInventory& inventory) {
  auto tokens = SplitWhitespace(record);
  if (tokens.empty()) throw ValidationError("alignment: empty record");
  FrameAlignment ali;
  ali.utterance_id = std::string(tokens[0]);
  if (tokens.size() == 1) {
    throw ValidationError("alignment: empty label list for utterance '" + ali.utterance_id + "'");
  }
  ali.labels.reserve(tokens.size() - 1);
  for (std::size_t k = 1; k < tokens.size(); ++k) {
    std::string_view tok = tokens[k];
    if (AllDigits(tok)) {
      long long id = -1;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), id);
      if (ec != std::errc() || id >= inventory.size()) {
        throw ValidationError("label id " + std::string(tok) + " out of range at position " +
                              std::to_string(k));
      }
      ali.labels.push_back(static_cast<int>(id));
    } else {
      auto idx = inventory.IndexOf(tok);
      if (!idx) {
        throw ValidationError("unknown symbol '" + std::string(tok) + "' at position " +
                              std::to_string(k));
      }
      ali.labels.push_back(*idx);
    }
  }
  return ali;
}

std::string FormatFrameAlignment(const FrameAlignment& ali, const PhonemeInventory& inventory) {
  std::string out = ali.utterance_id;
  for (int label : ali.labels) {
    out += ' ';
    out += inventory.Symbol(label);
  }
  return out;
}

FrameAlignment ExpandCtcLabels(const SplicedLabelSequence& spliced, int num_frames) {
  const int len = static_cast<int>(spliced.labels.size());
  if (len == 0) throw ValidationError("ctc expansion: empty spliced label sequence");
  if (num_frames <= kSpliceWidth * (len - 1) || num_frames > kSpliceWidth * len + kSpliceWidth - 1) {
    std::ostringstream os;
    os << "ctc expansion: " << num_frames << " frames inconsistent with " << len
       << " spliced labels for '" << spliced.utterance_id << "'";
    throw ValidationError(os.str());
  }
  FrameAlignment ali;
  ali.utterance_id = spliced.utterance_id;
  ali.labels.resize(num_frames);
  for (int f = 0; f < num_frames; ++f) {
    ali.labels[f] = spliced.labels[std::min(f / kSpliceWidth, len - 1)];
  }
  return ali;
}

void ValidatePair(const FeatureMatrix& feats, const FrameAlignment& ali) {
  if (feats.utterance_id != ali.utterance_id) {
    throw ValidationError("utterance id mismatch: '" + feats.utterance_id + "' vs '" +
                          ali.utterance_id + "'");
  }
  if (static_cast<std::size_t>(feats.NumFrames()) != ali.labels.size()) {
    throw ValidationError("length mismatch " + std::to_string(feats.NumFrames()) + " vs " +
                          std::to_string(ali.labels.size()) + " for '" + feats.utterance_id + "'");
  }
}

}  // namespace phonepool
