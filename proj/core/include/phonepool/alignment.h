// core/include/phonepool/alignment.h

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

#ifndef PHONEPOOL_ALIGNMENT_H_
#define PHONEPOOL_ALIGNMENT_H_

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "phonepool/features.h"

namespace phonepool {

inline constexpr std::string_view kBlankSymbol = "<blk>";

// Each CTC output label covers this many stacked input frames.
inline constexpr int kSpliceWidth = 3;

/// Ordered label set; index = position. "<blk>" marks the CTC blank.
class PhonemeInventory {
 public:
  PhonemeInventory() = default;
  explicit PhonemeInventory(std::vector<std::string> symbols);

  int size() const { return static_cast<int>(symbols_.size()); }
  const std::string& Symbol(int index) const { return symbols_.at(index); }
  const std::vector<std::string>& symbols() const { return symbols_; }
  std::optional<int> IndexOf(std::string_view symbol) const;
  std::optional<int> blank_index() const { return blank_; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> index_;
  std::optional<int> blank_;
};

struct FrameAlignment {
  std::string utterance_id;
  std::vector<int> labels;  // one per frame

  bool operator==(const FrameAlignment&) const = default;
};

struct SplicedLabelSequence {
  std::string utterance_id;
  std::vector<int> labels;  // one per kSpliceWidth-frame span
};

/// Parses "utt-id lab1 ... labN". All-digit tokens are integer ids, anything
/// else is looked up as a symbol.
FrameAlignment ParseFrameAlignment(std::string_view record, const PhonemeInventory& inventory);

/// Inverse of ParseFrameAlignment (symbolic form).
std::string FormatFrameAlignment(const FrameAlignment& ali, const PhonemeInventory& inventory);

/// Assigns spliced label i to frames [3i, 3i+2]; frames past the last span
/// inherit the final label. Requires 3(L-1) < num_frames <= 3L + 2.
FrameAlignment ExpandCtcLabels(const SplicedLabelSequence& spliced, int num_frames);

/// Throws ValidationError unless ids match and lengths agree.
void ValidatePair(const FeatureMatrix& feats, const FrameAlignment& ali);

}  // namespace phonepool

#endif  // PHONEPOOL_ALIGNMENT_H_
