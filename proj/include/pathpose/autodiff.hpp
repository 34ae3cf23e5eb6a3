// Copyright 2026 The pathpose Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Reverse-mode differentiation over row-major matrices. A Tape records one
// forward evaluation; Tape::backward replays it in reverse. Ops are fused at
// the layer level (linear, layer norm, multi-head attention, ...) with
// hand-written adjoints, so a tape holds tens of nodes rather than millions.
//
// Tapes are single-threaded and never shared.

#include <deque>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace pathpose::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Tape;

/// Handle to a node on a tape.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Tape& tape() const { return *tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);

  /// Leaf whose gradient is added into `grad_sink` (same shape) by backward().
  /// A null sink makes it a constant.
  Var parameter(const Matrix& value, Matrix* grad_sink);

  /// Records an op. `back` runs during backward() once this node's gradient
  /// is populated; it reads grad(self) and accumulates into inputs.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward back);

  /// Seeds d(out)/d(out) = 1 for a 1x1 `out` and propagates to every leaf.
  void backward(Var out);

  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }

  /// Gradient buffer of a node, zero-initialized on first access.
  Matrix& grad(int id);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward back;
    Matrix* sink = nullptr;
    bool requires_grad = false;
  };

  std::deque<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }

// --- ops -------------------------------------------------------------------

Var matmul(Var a, Var b);
/// x W + b with b (1 x out) broadcast over rows.
Var linear(Var x, Var w, Var b);
Var add(Var a, Var b);
Var scale(Var a, double factor);
/// Adds a constant (s x d) block to each consecutive group of s rows of x.
Var add_tiled(Var x, const Matrix& block);

Var relu(Var x);
Var sigmoid(Var x);
Var tanh(Var x);

/// Row-wise normalization with learned (1 x d) gain and bias.
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);

/// Scaled dot-product self-attention. `qkv` is (batch*seq) x (3*d) holding
/// [Q | K | V]; returns (batch*seq) x d with heads concatenated.
Var self_attention(Var qkv, int batch, int seq, int heads);

/// Row-major reinterpretation; rows*cols must match.
Var reshape(Var x, Eigen::Index rows, Eigen::Index cols);
Var slice_cols(Var x, Eigen::Index start, Eigen::Index count);
/// Repeats each row `times` times consecutively.
Var repeat_rows(Var x, int times);

/// Sum of every entry, as 1x1.
Var sum(Var x);
/// Per-row sum of |x|, as rows x 1. d|x|/dx is taken as 0 at x = 0.
Var row_abs_sum(Var x);

}  // namespace pathpose::ad
