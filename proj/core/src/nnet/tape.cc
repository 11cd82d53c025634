// core/src/nnet/tape.cc

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

#include "phonepool/nnet/tape.h"

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "phonepool/error.h"

namespace phonepool::nnet {

namespace {

void RequireSameShape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ValidationError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()));
  }
}

Matrix SigmoidOf(const Matrix& x) { return (1.0 + (-x.array()).exp()).inverse().matrix(); }

}  // namespace

Var Tape::Push(Matrix value, bool needs_grad) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = record_ && needs_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

bool Tape::AnyNeedsGrad(std::span<const Var> vs) const {
  for (Var v : vs) {
    if (NeedsGrad(v)) return true;
  }
  return false;
}

Matrix& Tape::GradRef(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::SetBackward(Var out, std::function<void()> fn) {
  if (nodes_[out.id].needs_grad) nodes_[out.id].backward = std::move(fn);
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::Constant(Matrix value) { return Push(std::move(value), false); }

Var Tape::Param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var{it->second};
  Var v = Push(p.value, p.trainable);
  nodes_[v.id].param = &p;
  param_nodes_.emplace(&p, v.id);
  return v;
}

void Tape::Backward(Var loss) {
  if (!record_) throw ValidationError("backward on a tape that does not record gradients");
  if (value(loss).size() != 1) throw ValidationError("backward target must be 1x1");
  for (Node& n : nodes_) n.grad.resize(0, 0);
  GradRef(loss)(0, 0) = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0) continue;
    if (n.backward) n.backward();
  }
  for (Node& n : nodes_) {
    if (n.param != nullptr && n.param->trainable && n.grad.size() != 0) {
      if (n.param->grad.size() == 0) n.param->ZeroGrad();
      n.param->grad += n.grad;
    }
  }
}

Var Tape::MatMul(Var a, Var b) {
  if (value(a).cols() != value(b).rows()) throw ValidationError("matmul: inner dimension mismatch");
  Var out = Push(value(a) * value(b), AnyNeedsGrad(std::array{a, b}));
  SetBackward(out, [this, a, b, out] {
    const Matrix& dy = nodes_[out.id].grad;
    if (NeedsGrad(a)) GradRef(a).noalias() += dy * value(b).transpose();
    if (NeedsGrad(b)) GradRef(b).noalias() += value(a).transpose() * dy;
  });
  return out;
}

Var Tape::Affine(Var x, Var w, Var bias) {
  if (value(x).cols() != value(w).rows()) throw ValidationError("affine: inner dimension mismatch");
  if (value(bias).rows() != 1 || value(bias).cols() != value(w).cols()) {
    throw ValidationError("affine: bias must be 1 x out");
  }
  Matrix y = value(x) * value(w);
  y.rowwise() += value(bias).row(0);
  Var out = Push(std::move(y), AnyNeedsGrad(std::array{x, w, bias}));
  SetBackward(out, [this, x, w, bias, out] {
    const Matrix& dy = nodes_[out.id].grad;
    if (NeedsGrad(x)) GradRef(x).noalias() += dy * value(w).transpose();
    if (NeedsGrad(w)) GradRef(w).noalias() += value(x).transpose() * dy;
    if (NeedsGrad(bias)) GradRef(bias) += dy.colwise().sum();
  });
  return out;
}

Var Tape::Add(Var a, Var b) {
  RequireSameShape(value(a), value(b), "add");
  Var out = Push(value(a) + value(b), AnyNeedsGrad(std::array{a, b}));
  SetBackward(out, [this, a, b, out] {
    const Matrix& dy = nodes_[out.id].grad;
    if (NeedsGrad(a)) GradRef(a) += dy;
    if (NeedsGrad(b)) GradRef(b) += dy;
  });
  return out;
}

Var Tape::Sub(Var a, Var b) {
  RequireSameShape(value(a), value(b), "sub");
  Var out = Push(value(a) - value(b), AnyNeedsGrad(std::array{a, b}));
  SetBackward(out, [this, a, b, out] {
    const Matrix& dy = nodes_[out.id].grad;
    if (NeedsGrad(a)) GradRef(a) += dy;
    if (NeedsGrad(b)) GradRef(b) -= dy;
  });
  return out;
}

Var Tape::Mul(Var a, Var b) {
  RequireSameShape(value(a), value(b), "mul");
  Var out = Push(value(a).cwiseProduct(value(b)), AnyNeedsGrad(std::array{a, b}));
  SetBackward(out, [this, a, b, out] {
    const Matrix& dy = nodes_[out.id].grad;
    if (NeedsGrad(a)) GradRef(a) += dy.cwiseProduct(value(b));
    if (NeedsGrad(b)) GradRef(b) += dy.cwiseProduct(value(a));
  });
  return out;
}

Var Tape::MulConst(Var a, const Matrix& m) {
  RequireSameShape(value(a), m, "mul_const");
  Var out = Push(value(a).cwiseProduct(m), NeedsGrad(a));
  SetBackward(out, [this, a, m, out] { GradRef(a) += nodes_[out.id].grad.cwiseProduct(m); });
  return out;
}

Var Tape::ScaleRows(Var a, const Vector& scale) {
  if (scale.size() != value(a).rows()) throw ValidationError("scale_rows: size mismatch");
  Var out = Push(scale.asDiagonal() * value(a), NeedsGrad(a));
  SetBackward(out, [this, a, scale, out] { GradRef(a) += scale.asDiagonal() * nodes_[out.id].grad; });
  return out;
}

Var Tape::Scale(Var a, double s) {
  Var out = Push(value(a) * s, NeedsGrad(a));
  SetBackward(out, [this, a, s, out] { GradRef(a) += s * nodes_[out.id].grad; });
  return out;
}

Var Tape::Sigmoid(Var a) {
  Var out = Push(SigmoidOf(value(a)), NeedsGrad(a));
  SetBackward(out, [this, a, out] {
    const Matrix& y = value(out);
    GradRef(a) += (nodes_[out.id].grad.array() * y.array() * (1.0 - y.array())).matrix();
  });
  return out;
}

Var Tape::Tanh(Var a) {
  Var out = Push(value(a).array().tanh().matrix(), NeedsGrad(a));
  SetBackward(out, [this, a, out] {
    const Matrix& y = value(out);
    GradRef(a) += (nodes_[out.id].grad.array() * (1.0 - y.array().square())).matrix();
  });
  return out;
}

Var Tape::Relu(Var a) {
  Var out = Push(value(a).cwiseMax(0.0), NeedsGrad(a));
  SetBackward(out, [this, a, out] {
    GradRef(a) += (value(a).array() > 0.0).select(nodes_[out.id].grad, 0.0).matrix();
  });
  return out;
}

Var Tape::ConcatCols(std::span<const Var> parts) {
  if (parts.empty()) throw ValidationError("concat_cols: no inputs");
  Eigen::Index rows = value(parts[0]).rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    if (value(p).rows() != rows) throw ValidationError("concat_cols: row mismatch");
    cols += value(p).cols();
  }
  Matrix y(rows, cols);
  Eigen::Index c = 0;
  for (Var p : parts) {
    y.middleCols(c, value(p).cols()) = value(p);
    c += value(p).cols();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  Var out = Push(std::move(y), AnyNeedsGrad(parts));
  SetBackward(out, [this, ps, out] {
    Eigen::Index c0 = 0;
    for (Var p : ps) {
      Eigen::Index w = value(p).cols();
      if (NeedsGrad(p)) GradRef(p) += nodes_[out.id].grad.middleCols(c0, w);
      c0 += w;
    }
  });
  return out;
}

Var Tape::ConcatRows(std::span<const Var> parts) {
  if (parts.empty()) throw ValidationError("concat_rows: no inputs");
  Eigen::Index cols = value(parts[0]).cols();
  Eigen::Index rows = 0;
  for (Var p : parts) {
    if (value(p).cols() != cols) throw ValidationError("concat_rows: column mismatch");
    rows += value(p).rows();
  }
  Matrix y(rows, cols);
  Eigen::Index r = 0;
  for (Var p : parts) {
    y.middleRows(r, value(p).rows()) = value(p);
    r += value(p).rows();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  Var out = Push(std::move(y), AnyNeedsGrad(parts));
  SetBackward(out, [this, ps, out] {
    Eigen::Index r0 = 0;
    for (Var p : ps) {
      Eigen::Index h = value(p).rows();
      if (NeedsGrad(p)) GradRef(p) += nodes_[out.id].grad.middleRows(r0, h);
      r0 += h;
    }
  });
  return out;
}

Var Tape::SliceRows(Var a, int start, int count) {
  if (start < 0 || count < 0 || start + count > value(a).rows()) {
    throw ValidationError("slice_rows: out of range");
  }
  Var out = Push(value(a).middleRows(start, count), NeedsGrad(a));
  SetBackward(out, [this, a, start, count, out] {
    GradRef(a).middleRows(start, count) += nodes_[out.id].grad;
  });
  return out;
}

Var Tape::SliceCols(Var a, int start, int count) {
  if (start < 0 || count < 0 || start + count > value(a).cols()) {
    throw ValidationError("slice_cols: out of range");
  }
  Var out = Push(value(a).middleCols(start, count), NeedsGrad(a));
  SetBackward(out, [this, a, start, count, out] {
    GradRef(a).middleCols(start, count) += nodes_[out.id].grad;
  });
  return out;
}

Var Tape::SelectRows(const std::vector<bool>& mask, Var a, Var b) {
  RequireSameShape(value(a), value(b), "select_rows");
  if (static_cast<Eigen::Index>(mask.size()) != value(a).rows()) {
    throw ValidationError("select_rows: mask size mismatch");
  }
  Matrix y = value(b);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) y.row(i) = value(a).row(i);
  }
  Var out = Push(std::move(y), AnyNeedsGrad(std::array{a, b}));
  SetBackward(out, [this, mask, a, b, out] {
    const Matrix& dy = nodes_[out.id].grad;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      Var target = mask[i] ? a : b;
      if (NeedsGrad(target)) GradRef(target).row(i) += dy.row(i);
    }
  });
  return out;
}

Var Tape::PairConcatTime(Var x, int steps, int batch) {
  const Matrix& xv = value(x);
  if (xv.rows() != static_cast<Eigen::Index>(steps) * batch) {
    throw ValidationError("pair_concat_time: row count mismatch");
  }
  const int half = (steps + 1) / 2;
  const Eigen::Index d = xv.cols();
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(half) * batch, 2 * d);
  for (int k = 0; k < half; ++k) {
    y.block(static_cast<Eigen::Index>(k) * batch, 0, batch, d) =
        xv.middleRows(static_cast<Eigen::Index>(2 * k) * batch, batch);
    if (2 * k + 1 < steps) {
      y.block(static_cast<Eigen::Index>(k) * batch, d, batch, d) =
          xv.middleRows(static_cast<Eigen::Index>(2 * k + 1) * batch, batch);
    }
  }
  Var out = Push(std::move(y), NeedsGrad(x));
  SetBackward(out, [this, x, steps, batch, half, d, out] {
    const Matrix& dy = nodes_[out.id].grad;
    Matrix& dx = GradRef(x);
    for (int k = 0; k < half; ++k) {
      dx.middleRows(static_cast<Eigen::Index>(2 * k) * batch, batch) +=
          dy.block(static_cast<Eigen::Index>(k) * batch, 0, batch, d);
      if (2 * k + 1 < steps) {
        dx.middleRows(static_cast<Eigen::Index>(2 * k + 1) * batch, batch) +=
            dy.block(static_cast<Eigen::Index>(k) * batch, d, batch, d);
      }
    }
  });
  return out;
}

Var Tape::LstmCell(Var gates, Var c_prev) {
  const Matrix& g = value(gates);
  const Eigen::Index h = value(c_prev).cols();
  if (g.cols() != 4 * h || g.rows() != value(c_prev).rows()) {
    throw ValidationError("lstm_cell: gates must be B x 4h");
  }
  Matrix i = SigmoidOf(g.middleCols(0, h));
  Matrix f = SigmoidOf(g.middleCols(h, h));
  Matrix cand = g.middleCols(2 * h, h).array().tanh().matrix();
  Matrix c = f.cwiseProduct(value(c_prev)) + i.cwiseProduct(cand);
  Var out = Push(std::move(c), AnyNeedsGrad(std::array{gates, c_prev}));
  SetBackward(out, [this, gates, c_prev, h, i, f, cand, out] {
    const Matrix& dc = nodes_[out.id].grad;
    if (NeedsGrad(gates)) {
      Matrix& dg = GradRef(gates);
      dg.middleCols(0, h).array() += dc.array() * cand.array() * i.array() * (1.0 - i.array());
      dg.middleCols(h, h).array() +=
          dc.array() * value(c_prev).array() * f.array() * (1.0 - f.array());
      dg.middleCols(2 * h, h).array() += dc.array() * i.array() * (1.0 - cand.array().square());
    }
    if (NeedsGrad(c_prev)) GradRef(c_prev) += dc.cwiseProduct(f);
  });
  return out;
}

Var Tape::LstmHidden(Var gates, Var c) {
  const Matrix& g = value(gates);
  const Eigen::Index h = value(c).cols();
  if (g.cols() != 4 * h || g.rows() != value(c).rows()) {
    throw ValidationError("lstm_hidden: gates must be B x 4h");
  }
  Matrix o = SigmoidOf(g.middleCols(3 * h, h));
  Matrix tc = value(c).array().tanh().matrix();
  Var out = Push(o.cwiseProduct(tc), AnyNeedsGrad(std::array{gates, c}));
  SetBackward(out, [this, gates, c, h, o, tc, out] {
    const Matrix& dh = nodes_[out.id].grad;
    if (NeedsGrad(gates)) {
      GradRef(gates).middleCols(3 * h, h).array() +=
          dh.array() * tc.array() * o.array() * (1.0 - o.array());
    }
    if (NeedsGrad(c)) {
      GradRef(c).array() += dh.array() * o.array() * (1.0 - tc.array().square());
    }
  });
  return out;
}

Var Tape::Embedding(Var table, std::span<const int> ids) {
  const Matrix& t = value(table);
  Matrix y(static_cast<Eigen::Index>(ids.size()), t.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || ids[r] >= t.rows()) {
      throw ValidationError("embedding: token id " + std::to_string(ids[r]) + " out of range");
    }
    y.row(r) = t.row(ids[r]);
  }
  std::vector<int> idv(ids.begin(), ids.end());
  Var out = Push(std::move(y), NeedsGrad(table));
  SetBackward(out, [this, table, idv, out] {
    const Matrix& dy = nodes_[out.id].grad;
    Matrix& dt = GradRef(table);
    for (std::size_t r = 0; r < idv.size(); ++r) dt.row(idv[r]) += dy.row(r);
  });
  return out;
}

Var Tape::BatchNorm(Var x, Var gamma, Var beta, const Vector& row_mask, bool training,
                    Parameter* running_mean, Parameter* running_var, double momentum,
                    double eps) {
  const Matrix& xv = value(x);
  const Eigen::Index d = xv.cols();
  if (row_mask.size() != xv.rows()) throw ValidationError("batch_norm: mask size mismatch");
  if (value(gamma).cols() != d || value(beta).cols() != d) {
    throw ValidationError("batch_norm: scale/shift width mismatch");
  }
  RowVector mean;
  RowVector var;
  if (training) {
    double n = row_mask.sum();
    if (n <= 0.0) throw ValidationError("batch_norm: no valid rows");
    mean = (row_mask.transpose() * xv) / n;
    Matrix centered = xv.rowwise() - mean;
    var = (row_mask.transpose() * centered.array().square().matrix()) / n;
    if (running_mean != nullptr && running_var != nullptr) {
      running_mean->value = (1.0 - momentum) * running_mean->value + momentum * mean;
      running_var->value = (1.0 - momentum) * running_var->value + momentum * var;
    }
  } else {
    mean = running_mean->value.row(0);
    var = running_var->value.row(0);
  }
  RowVector inv_std = (var.array() + eps).rsqrt().matrix();
  Matrix xhat = ((xv.rowwise() - mean).array().rowwise() * inv_std.array()).matrix();
  Matrix y = ((xhat.array().rowwise() * value(gamma).row(0).array()).rowwise() +
              value(beta).row(0).array())
                 .matrix();
  y = row_mask.asDiagonal() * y;
  Var out = Push(std::move(y), AnyNeedsGrad(std::array{x, gamma, beta}));
  SetBackward(out, [this, x, gamma, beta, row_mask, training, inv_std, xhat, out] {
    Matrix dy = row_mask.asDiagonal() * nodes_[out.id].grad;
    if (NeedsGrad(gamma)) GradRef(gamma) += (dy.cwiseProduct(xhat)).colwise().sum();
    if (NeedsGrad(beta)) GradRef(beta) += dy.colwise().sum();
    if (!NeedsGrad(x)) return;
    Matrix dxhat = (dy.array().rowwise() * value(gamma).row(0).array()).matrix();
    if (training) {
      double n = row_mask.sum();
      RowVector sum_dxhat = dxhat.colwise().sum();
      RowVector sum_dxhat_xhat = dxhat.cwiseProduct(xhat).colwise().sum();
      Matrix dx = ((n * dxhat.array()).rowwise() - sum_dxhat.array() -
                   (xhat.array().rowwise() * sum_dxhat_xhat.array()))
                      .matrix();
      dx = (dx.array().rowwise() * (inv_std.array() / n)).matrix();
      GradRef(x) += row_mask.asDiagonal() * dx;
    } else {
      GradRef(x) += (dxhat.array().rowwise() * inv_std.array()).matrix();
    }
  });
  return out;
}

Var Tape::LayerNorm(Var x, Var gamma, Var beta, const Vector& row_mask, double eps) {
  const Matrix& xv = value(x);
  const Eigen::Index d = xv.cols();
  if (row_mask.size() != xv.rows()) throw ValidationError("layer_norm: mask size mismatch");
  Vector mean = xv.rowwise().mean();
  Matrix centered = xv.colwise() - mean;
  Vector var = centered.array().square().rowwise().mean();
  Vector inv_std = (var.array() + eps).rsqrt().matrix();
  Matrix xhat = inv_std.asDiagonal() * centered;
  Matrix y = ((xhat.array().rowwise() * value(gamma).row(0).array()).rowwise() +
              value(beta).row(0).array())
                 .matrix();
  y = row_mask.asDiagonal() * y;
  Var out = Push(std::move(y), AnyNeedsGrad(std::array{x, gamma, beta}));
  SetBackward(out, [this, x, gamma, beta, row_mask, inv_std, xhat, d, out] {
    Matrix dy = row_mask.asDiagonal() * nodes_[out.id].grad;
    if (NeedsGrad(gamma)) GradRef(gamma) += dy.cwiseProduct(xhat).colwise().sum();
    if (NeedsGrad(beta)) GradRef(beta) += dy.colwise().sum();
    if (!NeedsGrad(x)) return;
    Matrix dxhat = (dy.array().rowwise() * value(gamma).row(0).array()).matrix();
    Vector sum_dxhat = dxhat.rowwise().sum();
    Vector sum_dxhat_xhat = dxhat.cwiseProduct(xhat).rowwise().sum();
    Matrix dx = ((static_cast<double>(d) * dxhat.array()).colwise() - sum_dxhat.array() -
                 (xhat.array().colwise() * sum_dxhat_xhat.array()))
                    .matrix();
    GradRef(x) += (inv_std / static_cast<double>(d)).asDiagonal() * dx;
  });
  return out;
}

Var Tape::AttentionCore(Var query, Var keys, Var values, Var v, std::span<const int> lengths,
                        Matrix* weights_out) {
  const Matrix& q = value(query);
  const Matrix& k = value(keys);
  const Matrix& vals = value(values);
  const Matrix& vv = value(v);
  const Eigen::Index batch = q.rows();
  const Eigen::Index a_dims = q.cols();
  if (batch == 0 || k.rows() % batch != 0 || k.cols() != a_dims || vals.rows() != k.rows() ||
      vv.rows() != a_dims || vv.cols() != 1 || static_cast<Eigen::Index>(lengths.size()) != batch) {
    throw ValidationError("attention: inconsistent shapes");
  }
  const Eigen::Index steps = k.rows() / batch;
  for (int len : lengths) {
    if (len < 1 || len > steps) throw ValidationError("attention: invalid source length");
  }

  Matrix u(k.rows(), a_dims);
  for (Eigen::Index t = 0; t < steps; ++t) {
    u.middleRows(t * batch, batch) = (k.middleRows(t * batch, batch) + q).array().tanh().matrix();
  }
  Vector scores = u * vv.col(0);
  Matrix alpha = Matrix::Zero(batch, steps);
  for (Eigen::Index b = 0; b < batch; ++b) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < lengths[b]; ++t) mx = std::max(mx, scores[t * batch + b]);
    double z = 0.0;
    for (int t = 0; t < lengths[b]; ++t) {
      alpha(b, t) = std::exp(scores[t * batch + b] - mx);
      z += alpha(b, t);
    }
    alpha.row(b) /= z;
  }
  Matrix ctx = Matrix::Zero(batch, vals.cols());
  for (Eigen::Index t = 0; t < steps; ++t) {
    ctx += alpha.col(t).asDiagonal() * vals.middleRows(t * batch, batch);
  }
  if (weights_out != nullptr) *weights_out = alpha;

  Var out = Push(std::move(ctx), AnyNeedsGrad(std::array{query, keys, values, v}));
  SetBackward(out, [this, query, keys, values, v, u, alpha, batch, steps, out] {
    const Matrix& dctx = nodes_[out.id].grad;
    const Matrix& vals = value(values);
    Matrix dalpha(batch, steps);
    for (Eigen::Index t = 0; t < steps; ++t) {
      dalpha.col(t) = dctx.cwiseProduct(vals.middleRows(t * batch, batch)).rowwise().sum();
    }
    if (NeedsGrad(values)) {
      Matrix& dv = GradRef(values);
      for (Eigen::Index t = 0; t < steps; ++t) {
        dv.middleRows(t * batch, batch) += alpha.col(t).asDiagonal() * dctx;
      }
    }
    Vector inner = alpha.cwiseProduct(dalpha).rowwise().sum();
    Matrix dscore = alpha.cwiseProduct(dalpha.colwise() - inner);  // B x T
    Vector dscore_stacked(steps * batch);
    for (Eigen::Index t = 0; t < steps; ++t) dscore_stacked.segment(t * batch, batch) = dscore.col(t);
    if (NeedsGrad(v)) GradRef(v).col(0) += u.transpose() * dscore_stacked;
    Matrix dpre = (dscore_stacked * value(v).col(0).transpose()).cwiseProduct(
        (1.0 - u.array().square()).matrix());
    if (NeedsGrad(keys)) GradRef(keys) += dpre;
    if (NeedsGrad(query)) {
      Matrix& dq = GradRef(query);
      for (Eigen::Index t = 0; t < steps; ++t) dq += dpre.middleRows(t * batch, batch);
    }
  });
  return out;
}

Var Tape::SmoothedCrossEntropy(Var logits, std::span<const int> gold, const Vector& row_mask,
                               double smoothing) {
  const Matrix& z = value(logits);
  const Eigen::Index n = z.rows();
  const Eigen::Index vocab = z.cols();
  if (static_cast<Eigen::Index>(gold.size()) != n || row_mask.size() != n) {
    throw ValidationError("cross_entropy: length mismatch between logits and gold labels");
  }
  if (vocab < 2) throw ValidationError("cross_entropy: vocabulary must have at least 2 entries");
  if (smoothing < 0.0 || smoothing >= 1.0) throw ValidationError("cross_entropy: smoothing must lie in [0, 1)");
  const double off = smoothing / static_cast<double>(vocab - 1);
  const double on = 1.0 - smoothing;
  Matrix probs(n, vocab);
  double total = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    if (row_mask[r] == 0.0) {
      probs.row(r).setZero();
      continue;
    }
    if (gold[r] < 0 || gold[r] >= vocab) throw ValidationError("cross_entropy: gold id out of range");
    double mx = z.row(r).maxCoeff();
    RowVector e = (z.row(r).array() - mx).exp().matrix();
    double s = e.sum();
    double lse = mx + std::log(s);
    probs.row(r) = e / s;
    double target_dot = off * z.row(r).sum() + (on - off) * z(r, gold[r]);
    total += row_mask[r] * (lse - target_dot);
  }
  Matrix loss(1, 1);
  loss(0, 0) = total;
  std::vector<int> g(gold.begin(), gold.end());
  Var out = Push(std::move(loss), NeedsGrad(logits));
  SetBackward(out, [this, logits, g, row_mask, probs, on, off, out] {
    double dy = nodes_[out.id].grad(0, 0);
    Matrix& dz = GradRef(logits);
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
      if (row_mask[r] == 0.0) continue;
      RowVector d = probs.row(r).array() - off;
      d[g[r]] -= on - off;
      dz.row(r) += dy * row_mask[r] * d;
    }
  });
  return out;
}

Var Tape::Dot(Var a, const Matrix& weights) {
  RequireSameShape(value(a), weights, "dot");
  Matrix y(1, 1);
  y(0, 0) = value(a).cwiseProduct(weights).sum();
  Var out = Push(std::move(y), NeedsGrad(a));
  SetBackward(out, [this, a, weights, out] { GradRef(a) += nodes_[out.id].grad(0, 0) * weights; });
  return out;
}

Var Tape::Sum(Var a) {
  Matrix y(1, 1);
  y(0, 0) = value(a).sum();
  Var out = Push(std::move(y), NeedsGrad(a));
  SetBackward(out, [this, a, out] { GradRef(a).array() += nodes_[out.id].grad(0, 0); });
  return out;
}

}  // namespace phonepool::nnet
