// core/include/phonepool/nnet/grad_check.h

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

#ifndef PHONEPOOL_NNET_GRAD_CHECK_H_
#define PHONEPOOL_NNET_GRAD_CHECK_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "phonepool/nnet/tape.h"

namespace phonepool::nnet {

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  std::string worst_tensor;
  double tolerance = 0.0;
  int num_checked = 0;
  std::vector<std::string> nonfinite;  // tensors with non-finite gradients
  bool passed = false;
};

/// Builds a scalar (1x1) loss on the given tape.
using LossBuilder = std::function<Var(Tape&)>;

/// Compares analytic gradients of `build` with central differences for every
/// entry of `params` (up to `max_entries_per_tensor`, evenly strided).
/// Relative error is |a - n| / max(|a|, |n|, 1e-4).
GradCheckResult GradCheck(const std::string& name, const std::vector<Parameter*>& params,
                          const LossBuilder& build, double tolerance, double eps = 1e-5,
                          int max_entries_per_tensor = 400);

/// Checks attention, LSTM cell, NiN block, a tiny encoder, a decoder step and
/// the smoothed loss at their respective tolerances.
std::vector<GradCheckResult> RunStandardGradChecks(std::uint64_t seed = 7);

}  // namespace phonepool::nnet

#endif  // PHONEPOOL_NNET_GRAD_CHECK_H_
