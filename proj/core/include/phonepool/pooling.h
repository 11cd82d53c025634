// core/include/phonepool/pooling.h

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

#ifndef PHONEPOOL_POOLING_H_
#define PHONEPOOL_POOLING_H_

#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "phonepool/alignment.h"
#include "phonepool/features.h"

namespace phonepool {

/// Maximal run of one label: frames [start, end] inclusive.
struct LabelRun {
  int label;
  int start;
  int end;

  int length() const { return end - start + 1; }
  bool operator==(const LabelRun&) const = default;
};

std::vector<LabelRun> LabelRuns(std::span<const int> labels);

struct PooledSegment {
  int label;
  RowVector vector;
  int start_frame;
  int end_frame;  // inclusive

  int length() const { return end_frame - start_frame + 1; }
};

struct PooledSequence {
  std::string utterance_id;
  std::vector<PooledSegment> segments;

  /// One row per segment; utterance/speaker ids carried over.
  FeatureMatrix ToFeatureMatrix(std::string speaker_id = {}) const;
};

/// How CTC blank frames are treated when pooling.
enum class BlankMode {
  kKeep,   // blank runs are ordinary segments
  kDrop,   // blank segments are removed from the output
  kMerge,  // blank frames join the preceding non-blank run (leading: following)
};

std::optional<BlankMode> ParseBlankMode(std::string_view name);

/// Averages each maximal run of identical consecutive labels. `blank` is the
/// inventory's blank index; it only matters for kDrop and kMerge.
PooledSequence PoolRuns(const FeatureMatrix& feats, const FrameAlignment& ali,
                        BlankMode mode = BlankMode::kKeep,
                        std::optional<int> blank = std::nullopt);

/// Keeps frames 0, stride, 2*stride, ...
FeatureMatrix StrideDownsample(const FeatureMatrix& feats, int stride);

struct PoolingStats {
  std::int64_t num_utterances = 0;
  std::int64_t num_frames = 0;
  std::int64_t num_segments = 0;
  double reduction_ratio = 0.0;  // 1 - segments / frames
  // Run-level: each run counts once.
  double frames_per_run_mean = 0.0;
  double frames_per_run_median = 0.0;
  double silence_run_fraction = 0.0;
  // Frame-level: each frame reports the length of the run it belongs to.
  double frame_weighted_run_mean = 0.0;
  double silence_frame_fraction = 0.0;
};

PoolingStats CorpusStats(std::span<const FrameAlignment> alignments,
                         const std::set<int>& silence_labels);
PoolingStats CorpusStats(std::span<const std::pair<FeatureMatrix, FrameAlignment>> pairs,
                         const std::set<int>& silence_labels);

/// "key=value" lines, fixed key order.
std::string FormatStats(const PoolingStats& stats);
nlohmann::json StatsToJson(const PoolingStats& stats);

}  // namespace phonepool

#endif  // PHONEPOOL_POOLING_H_
