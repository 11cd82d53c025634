// core/src/pooling.cc

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

#include "phonepool/pooling.h"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "phonepool/error.h"

namespace phonepool {

std::vector<LabelRun> LabelRuns(std::span<const int> labels) {
  std::vector<LabelRun> runs;
  const int n = static_cast<int>(labels.size());
  int start = 0;
  for (int i = 1; i <= n; ++i) {
    if (i == n || labels[i] != labels[start]) {
      runs.push_back({labels[start], start, i - 1});
      start = i;
    }
  }
  return runs;
}

FeatureMatrix PooledSequence::ToFeatureMatrix(std::string speaker_id) const {
  FeatureMatrix fm;
  fm.utterance_id = utterance_id;
  fm.speaker_id = std::move(speaker_id);
  int dims = segments.empty() ? 0 : static_cast<int>(segments.front().vector.size());
  fm.data.resize(static_cast<Eigen::Index>(segments.size()), dims);
  for (std::size_t i = 0; i < segments.size(); ++i) fm.data.row(i) = segments[i].vector;
  return fm;
}

std::optional<BlankMode> ParseBlankMode(std::string_view name) {
  if (name == "keep") return BlankMode::kKeep;
  if (name == "drop") return BlankMode::kDrop;
  if (name == "merge") return BlankMode::kMerge;
  return std::nullopt;
}

namespace {

std::vector<int> MergeBlanks(const std::vector<int>& labels, int blank) {
  std::vector<int> out(labels);
  int first_real = -1;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] != blank) {
      first_real = out[i];
      break;
    }
  }
  if (first_real < 0) return out;  // all blank
  int prev = first_real;
  for (int& l : out) {
    if (l == blank) {
      l = prev;
    } else {
      prev = l;
    }
  }
  return out;
}

}  // namespace

PooledSequence PoolRuns(const FeatureMatrix& feats, const FrameAlignment& ali, BlankMode mode,
                        std::optional<int> blank) {
  ValidatePair(feats, ali);
  if (ali.labels.empty()) throw ValidationError("pool: empty input for '" + ali.utterance_id + "'");
  if (mode != BlankMode::kKeep && !blank) {
    throw ValidationError("pool: blank mode requires an inventory with a blank symbol");
  }

  std::vector<int> merged;
  std::span<const int> effective(ali.labels);
  if (mode == BlankMode::kMerge) {
    merged = MergeBlanks(ali.labels, *blank);
    effective = merged;
  }

  PooledSequence out;
  out.utterance_id = ali.utterance_id;
  const int dims = feats.Dims();
  for (const LabelRun& run : LabelRuns(effective)) {
    if (mode == BlankMode::kDrop && run.label == *blank) continue;
    PooledSegment seg{run.label, RowVector::Zero(dims), run.start, run.end};
    // Plain left-to-right accumulation, then one division.
    for (int f = run.start; f <= run.end; ++f) seg.vector += feats.data.row(f);
    seg.vector /= static_cast<double>(run.length());
    out.segments.push_back(std::move(seg));
  }
  if (out.segments.empty()) {
    throw ValidationError("pool: no non-blank frames in '" + ali.utterance_id + "'");
  }
  return out;
}

FeatureMatrix StrideDownsample(const FeatureMatrix& feats, int stride) {
  if (stride < 1) throw ValidationError("stride must be at least 1, got " + std::to_string(stride));
  FeatureMatrix out;
  out.utterance_id = feats.utterance_id;
  out.speaker_id = feats.speaker_id;
  const int n = feats.NumFrames();
  const int kept = (n + stride - 1) / stride;
  out.data.resize(kept, feats.Dims());
  for (int i = 0; i < kept; ++i) out.data.row(i) = feats.data.row(i * stride);
  return out;
}

PoolingStats CorpusStats(std::span<const FrameAlignment> alignments,
                         const std::set<int>& silence_labels) {
  if (alignments.empty()) throw ValidationError("stats: empty corpus");
  PoolingStats stats;
  std::vector<int> run_lengths;
  std::int64_t silence_runs = 0;
  std::int64_t silence_frames = 0;
  double frame_weighted = 0.0;
  for (const FrameAlignment& ali : alignments) {
    if (ali.labels.empty()) throw ValidationError("stats: empty alignment '" + ali.utterance_id + "'");
    ++stats.num_utterances;
    stats.num_frames += static_cast<std::int64_t>(ali.labels.size());
    for (const LabelRun& run : LabelRuns(ali.labels)) {
      run_lengths.push_back(run.length());
      frame_weighted += static_cast<double>(run.length()) * run.length();
      if (silence_labels.contains(run.label)) {
        ++silence_runs;
        silence_frames += run.length();
      }
    }
  }
  stats.num_segments = static_cast<std::int64_t>(run_lengths.size());
  const double frames = static_cast<double>(stats.num_frames);
  const double runs = static_cast<double>(stats.num_segments);
  stats.reduction_ratio = 1.0 - runs / frames;
  stats.frames_per_run_mean = frames / runs;
  std::sort(run_lengths.begin(), run_lengths.end());
  std::size_t mid = run_lengths.size() / 2;
  stats.frames_per_run_median = run_lengths.size() % 2 == 1
                                    ? run_lengths[mid]
                                    : 0.5 * (run_lengths[mid - 1] + run_lengths[mid]);
  stats.silence_run_fraction = static_cast<double>(silence_runs) / runs;
  stats.frame_weighted_run_mean = frame_weighted / frames;
  stats.silence_frame_fraction = static_cast<double>(silence_frames) / frames;
  return stats;
}

PoolingStats CorpusStats(std::span<const std::pair<FeatureMatrix, FrameAlignment>> pairs,
                         const std::set<int>& silence_labels) {
  std::vector<FrameAlignment> alignments;
  alignments.reserve(pairs.size());
  for (const auto& [feats, ali] : pairs) {
    ValidatePair(feats, ali);
    alignments.push_back(ali);
  }
  return CorpusStats(alignments, silence_labels);
}

std::string FormatStats(const PoolingStats& s) {
  std::ostringstream os;
  os << std::setprecision(6);
  os << "num_utterances=" << s.num_utterances << '\n'
     << "num_frames=" << s.num_frames << '\n'
     << "num_segments=" << s.num_segments << '\n'
     << "reduction_ratio=" << s.reduction_ratio << '\n'
     << "frames_per_run_mean=" << s.frames_per_run_mean << '\n'
     << "frames_per_run_median=" << s.frames_per_run_median << '\n'
     << "silence_run_fraction=" << s.silence_run_fraction << '\n'
     << "frame_weighted_run_mean=" << s.frame_weighted_run_mean << '\n'
     << "silence_frame_fraction=" << s.silence_frame_fraction << '\n';
  return os.str();
}

nlohmann::json StatsToJson(const PoolingStats& s) {
  return nlohmann::json{{"num_utterances", s.num_utterances},
                        {"num_frames", s.num_frames},
                        {"num_segments", s.num_segments},
                        {"reduction_ratio", s.reduction_ratio},
                        {"frames_per_run_mean", s.frames_per_run_mean},
                        {"frames_per_run_median", s.frames_per_run_median},
                        {"silence_run_fraction", s.silence_run_fraction},
                        {"frame_weighted_run_mean", s.frame_weighted_run_mean},
                        {"silence_frame_fraction", s.silence_frame_fraction}};
}

}  // namespace phonepool
