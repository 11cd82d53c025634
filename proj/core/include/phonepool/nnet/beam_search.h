// core/include/phonepool/nnet/beam_search.h

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

#ifndef PHONEPOOL_NNET_BEAM_SEARCH_H_
#define PHONEPOOL_NNET_BEAM_SEARCH_H_

#include <vector>

#include "phonepool/matrix.h"
#include "phonepool/nnet/model.h"

namespace phonepool::nnet {

/// log_prob / length^alpha.
double LengthNormalizedScore(double log_prob, int length, double alpha);

struct Hypothesis {
  std::vector<int> tokens;  // output tokens, without <s> and </s>
  double log_prob = 0.0;
  int length = 0;           // scored length, counts </s> when present
  double score = 0.0;       // length-normalized
  bool finished = false;
};

/// Better-first ordering: higher score, then the lexicographically lower
/// token sequence.
bool HypothesisBefore(const Hypothesis& a, const Hypothesis& b);

struct DecodeOptions {
  int beam = 15;
  double len_norm_exp = 1.5;
  int max_length = 0;  // 0: 3 * encoder output length + 10
};

/// Beam search over one source utterance. Returns the n-best list sorted
/// with HypothesisBefore (at most `beam` entries); the first is the decision.
std::vector<Hypothesis> BeamSearch(Seq2SeqModel& model, const Matrix& source,
                                   const DecodeOptions& opts);

/// Argmax decoding (ties to the lower token id).
Hypothesis GreedyDecode(Seq2SeqModel& model, const Matrix& source, const DecodeOptions& opts);

}  // namespace phonepool::nnet

#endif  // PHONEPOOL_NNET_BEAM_SEARCH_H_
