// core/include/phonepool/nnet/optim.h

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

#ifndef PHONEPOOL_NNET_OPTIM_H_
#define PHONEPOOL_NNET_OPTIM_H_

#include <vector>

#include "phonepool/nnet/tape.h"

namespace phonepool::nnet {

class Adam {
 public:
  Adam(std::vector<Parameter*> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  /// Applies one bias-corrected update from the accumulated gradients.
  void Step();
  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }
  long steps() const { return t_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  long t_ = 0;
};

/// Halves (by `decay`) the learning rate when the validation metric has not
/// improved for `patience` consecutive epochs. Patience is `patience_initial`
/// until the first decay and `patience_after` from then on.
class PlateauSchedule {
 public:
  PlateauSchedule(double lr, double decay, int patience_initial, int patience_after);

  /// Records one epoch's metric (higher is better); returns true if the
  /// learning rate was decayed.
  bool Observe(double metric);
  double lr() const { return lr_; }
  int num_decays() const { return decays_; }
  int epochs_without_improvement() const { return bad_epochs_; }

 private:
  double lr_;
  double decay_;
  int patience_initial_;
  int patience_after_;
  bool has_best_ = false;
  double best_ = 0.0;
  int bad_epochs_ = 0;
  int decays_ = 0;
};

}  // namespace phonepool::nnet

#endif  // PHONEPOOL_NNET_OPTIM_H_
