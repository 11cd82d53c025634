// tests/oracles/segment_mean.h

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

#ifndef PHONEPOOL_TESTS_ORACLES_SEGMENT_MEAN_H_
#define PHONEPOOL_TESTS_ORACLES_SEGMENT_MEAN_H_

// Brute-force run pooling: for every frame, scan outwards to find the run it
// belongs to; emit the run mean the first time its start frame is seen.

#include <vector>

namespace phonepool::oracle {

struct OracleSegment {
  int label;
  int start;
  int end;
  std::vector<double> mean;
};

inline std::vector<OracleSegment> BruteForceSegmentMeans(
    const std::vector<std::vector<double>>& frames, const std::vector<int>& labels) {
  std::vector<OracleSegment> out;
  const int n = static_cast<int>(labels.size());
  for (int f = 0; f < n; ++f) {
    int s = f;
    while (s > 0 && labels[s - 1] == labels[f]) --s;
    if (s != f) continue;
    int e = f;
    while (e + 1 < n && labels[e + 1] == labels[f]) ++e;
    OracleSegment seg{labels[f], s, e, std::vector<double>(frames[f].size(), 0.0)};
    for (std::size_t d = 0; d < frames[f].size(); ++d) {
      long double acc = 0.0L;
      for (int t = s; t <= e; ++t) acc += frames[t][d];
      seg.mean[d] = static_cast<double>(acc / (e - s + 1));
    }
    out.push_back(seg);
  }
  return out;
}

}  // namespace phonepool::oracle

#endif  // PHONEPOOL_TESTS_ORACLES_SEGMENT_MEAN_H_
