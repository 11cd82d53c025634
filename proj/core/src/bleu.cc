// core/src/bleu.cc

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

#include <cmath>
#include <map>

#include "phonepool/error.h"
#include "phonepool/textproc.h"

namespace phonepool {

double CorpusBleu(std::span<const std::vector<std::string>> hypotheses,
                  std::span<const std::vector<std::string>> references) {
  if (hypotheses.size() != references.size()) {
    throw ValidationError("bleu: hypothesis and reference counts differ");
  }
  constexpr int kMaxOrder = 4;
  double matches[kMaxOrder] = {};
  double totals[kMaxOrder] = {};
  double hyp_len = 0.0;
  double ref_len = 0.0;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const auto& hyp = hypotheses[s];
    const auto& ref = references[s];
    hyp_len += static_cast<double>(hyp.size());
    ref_len += static_cast<double>(ref.size());
    for (int n = 1; n <= kMaxOrder; ++n) {
      std::map<std::vector<std::string>, int> ref_counts;
      for (std::size_t i = 0; i + n <= ref.size(); ++i) {
        ++ref_counts[std::vector<std::string>(ref.begin() + i, ref.begin() + i + n)];
      }
      for (std::size_t i = 0; i + n <= hyp.size(); ++i) {
        auto it = ref_counts.find(std::vector<std::string>(hyp.begin() + i, hyp.begin() + i + n));
        if (it != ref_counts.end() && it->second > 0) {
          --it->second;
          matches[n - 1] += 1.0;
        }
        totals[n - 1] += 1.0;
      }
    }
  }
  if (hyp_len == 0.0) return 0.0;
  double log_precision = 0.0;
  for (int n = 0; n < kMaxOrder; ++n) {
    if (matches[n] == 0.0 || totals[n] == 0.0) return 0.0;
    log_precision += std::log(matches[n] / totals[n]) / kMaxOrder;
  }
  double brevity = hyp_len < ref_len ? 1.0 - ref_len / hyp_len : 0.0;
  return 100.0 * std::exp(log_precision + brevity);
}

}  // namespace phonepool
