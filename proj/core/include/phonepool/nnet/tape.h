// core/include/phonepool/nnet/tape.h

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

#ifndef PHONEPOOL_NNET_TAPE_H_
#define PHONEPOOL_NNET_TAPE_H_

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "phonepool/matrix.h"

namespace phonepool::nnet {

/// A named trainable (or running-statistic) tensor.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Matrix v, bool train = true)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())),
        trainable(train) {}

  void ZeroGrad() { grad.setZero(value.rows(), value.cols()); }
};

/// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode autodiff over dense matrices. Values are computed eagerly;
/// Backward() walks the nodes in reverse creation order and accumulates
/// gradients into the Parameters referenced through Param().
class Tape {
 public:
  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var Constant(Matrix value);
  Var Param(Parameter& p);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  /// Gradient of the last Backward() target w.r.t. `v` (zero if unreached).
  Matrix grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  /// Seeds d(loss)/d(loss) = 1 for a 1x1 `loss` and back-propagates.
  void Backward(Var loss);

  // Linear algebra.
  Var MatMul(Var a, Var b);
  Var Affine(Var x, Var w, Var bias);  // x*w + bias (row broadcast)
  Var Add(Var a, Var b);
  Var Sub(Var a, Var b);
  Var Mul(Var a, Var b);                      // elementwise
  Var MulConst(Var a, const Matrix& m);       // elementwise by a constant
  Var ScaleRows(Var a, const Vector& scale);  // row i times scale[i]
  Var Scale(Var a, double s);

  // Pointwise nonlinearities.
  Var Sigmoid(Var a);
  Var Tanh(Var a);
  Var Relu(Var a);

  // Shape.
  Var ConcatCols(std::span<const Var> parts);
  Var ConcatRows(std::span<const Var> parts);
  Var SliceRows(Var a, int start, int count);
  Var SliceCols(Var a, int start, int count);
  /// Row-wise select: out.row(i) = mask[i] ? a.row(i) : b.row(i).
  Var SelectRows(const std::vector<bool>& mask, Var a, Var b);

  /// Time-major stacked input (T*B rows, row t*B+b) -> pairs of adjacent
  /// steps concatenated: (ceil(T/2)*B rows, 2*cols); the missing partner of
  /// an odd final step is zero.
  Var PairConcatTime(Var x, int steps, int batch);

  // Fused recurrent pieces. `gates` is B x 4h in [i f g o] order.
  Var LstmCell(Var gates, Var c_prev);  // new cell state
  Var LstmHidden(Var gates, Var c);     // o * tanh(c)

  /// Rows of `table` selected by ids.
  Var Embedding(Var table, std::span<const int> ids);

  /// Batch normalization over rows with row_mask[i] != 0 (per column).
  /// In training mode uses batch statistics and updates the running ones;
  /// otherwise uses the running statistics. Masked-out rows map to zero.
  Var BatchNorm(Var x, Var gamma, Var beta, const Vector& row_mask, bool training,
                Parameter* running_mean, Parameter* running_var, double momentum, double eps);
  /// Per-row layer normalization; masked-out rows map to zero.
  Var LayerNorm(Var x, Var gamma, Var beta, const Vector& row_mask, double eps);

  /// MLP attention core for a batch of B queries over time-major stacked
  /// keys/values (T*B rows). score = v . tanh(query_b + key_tb); softmax over
  /// t < lengths[b]; returns B x value_dims contexts. When `weights_out` is
  /// non-null it receives the B x T attention weights.
  Var AttentionCore(Var query, Var keys, Var values, Var v, std::span<const int> lengths,
                    Matrix* weights_out = nullptr);

  /// Sum over rows with row_mask != 0 of the cross-entropy between
  /// softmax(logits) and the smoothed target (1 - eps on gold, eps/(V-1)
  /// elsewhere). Returns 1x1.
  Var SmoothedCrossEntropy(Var logits, std::span<const int> gold, const Vector& row_mask,
                           double smoothing);

  /// sum(a .* weights), 1x1.
  Var Dot(Var a, const Matrix& weights);
  Var Sum(Var a);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void()> backward;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };

  Var Push(Matrix value, bool needs_grad);
  bool NeedsGrad(Var v) const { return nodes_[v.id].needs_grad; }
  bool AnyNeedsGrad(std::span<const Var> vs) const;
  Matrix& GradRef(Var v);
  void SetBackward(Var out, std::function<void()> fn);

  bool record_;
  std::vector<Node> nodes_;
  std::unordered_map<Parameter*, int> param_nodes_;
};

}  // namespace phonepool::nnet

#endif  // PHONEPOOL_NNET_TAPE_H_
