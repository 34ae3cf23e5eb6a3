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

#include "pathpose/autodiff.hpp"

#include <cassert>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace pathpose::ad {

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::parameter(const Matrix& value, Matrix* grad_sink) {
  nodes_.push_back(Node{value, {}, {}, grad_sink, grad_sink != nullptr});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward back) {
  bool needs = false;
  for (const Var& v : inputs) {
    assert(&v.tape() == this);
    needs = needs || requires_grad(v.id());
  }
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(back) : Backward{},
                        nullptr, needs});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Matrix& Tape::grad(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var out) {
  if (out.rows() != 1 || out.cols() != 1) {
    throw std::invalid_argument("backward() needs a 1x1 output");
  }
  if (!requires_grad(out.id())) return;
  grad(out.id())(0, 0) += 1.0;
  for (int id = out.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.back) n.back(*this);
    if (n.sink != nullptr) *n.sink += n.grad;
  }
}

namespace {

int self_id(const Tape& t) { return static_cast<int>(t.size()); }

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = a.tape();
  const int ia = a.id(), ib = b.id(), self = self_id(t);
  return t.record(a.value() * b.value(), {a, b}, [=](Tape& tp) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.grad(ia).noalias() += g * tp.value(ib).transpose();
    if (tp.requires_grad(ib)) tp.grad(ib).noalias() += tp.value(ia).transpose() * g;
  });
}

Var linear(Var x, Var w, Var b) {
  Tape& t = x.tape();
  const int ix = x.id(), iw = w.id(), ib = b.id(), self = self_id(t);
  Matrix y(x.rows(), w.cols());
  y.noalias() = x.value() * w.value();
  y.rowwise() += b.value().row(0);
  return t.record(std::move(y), {x, w, b}, [=](Tape& tp) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ix)) tp.grad(ix).noalias() += g * tp.value(iw).transpose();
    if (tp.requires_grad(iw)) tp.grad(iw).noalias() += tp.value(ix).transpose() * g;
    if (tp.requires_grad(ib)) tp.grad(ib) += g.colwise().sum();
  });
}

Var add(Var a, Var b) {
  Tape& t = a.tape();
  const int ia = a.id(), ib = b.id(), self = self_id(t);
  return t.record(a.value() + b.value(), {a, b}, [=](Tape& tp) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.grad(ia) += g;
    if (tp.requires_grad(ib)) tp.grad(ib) += g;
  });
}

Var scale(Var a, double factor) {
  Tape& t = a.tape();
  const int ia = a.id(), self = self_id(t);
  return t.record(a.value() * factor, {a}, [=](Tape& tp) {
    tp.grad(ia) += factor * tp.grad(self);
  });
}

Var add_tiled(Var x, const Matrix& block) {
  Tape& t = x.tape();
  const int ix = x.id(), self = self_id(t);
  const Eigen::Index s = block.rows();
  if (x.cols() != block.cols() || x.rows() % s != 0) {
    throw std::invalid_argument("add_tiled: shape mismatch");
  }
  Matrix y = x.value();
  for (Eigen::Index r0 = 0; r0 < y.rows(); r0 += s) y.middleRows(r0, s) += block;
  return t.record(std::move(y), {x}, [=](Tape& tp) {
    tp.grad(ix) += tp.grad(self);
  });
}

Var relu(Var x) {
  Tape& t = x.tape();
  const int ix = x.id(), self = self_id(t);
  return t.record(x.value().cwiseMax(0.0), {x}, [=](Tape& tp) {
    const Matrix& g = tp.grad(self);
    const Matrix& v = tp.value(ix);
    tp.grad(ix).array() += (v.array() > 0.0).select(g.array(), 0.0);
  });
}

Var sigmoid(Var x) {
  Tape& t = x.tape();
  const int ix = x.id(), self = self_id(t);
  Matrix y = (1.0 + (-x.value().array()).exp()).inverse().matrix();
  return t.record(std::move(y), {x}, [=](Tape& tp) {
    const Matrix& y = tp.value(self);
    tp.grad(ix).array() += tp.grad(self).array() * y.array() * (1.0 - y.array());
  });
}

Var tanh(Var x) {
  Tape& t = x.tape();
  const int ix = x.id(), self = self_id(t);
  Matrix y = x.value().array().tanh().matrix();
  return t.record(std::move(y), {x}, [=](Tape& tp) {
    const Matrix& y = tp.value(self);
    tp.grad(ix).array() += tp.grad(self).array() * (1.0 - y.array().square());
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  Tape& t = x.tape();
  const int ix = x.id(), ig = gain.id(), ib = bias.id(), self = self_id(t);
  const Matrix& xv = x.value();
  const Eigen::Index n = xv.rows(), d = xv.cols();

  auto normed = std::make_shared<Matrix>(n, d);
  auto inv_sd = std::make_shared<Eigen::VectorXd>(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mean = xv.row(r).mean();
    const double var = (xv.row(r).array() - mean).square().mean();
    (*inv_sd)(r) = 1.0 / std::sqrt(var + eps);
    normed->row(r) = (xv.row(r).array() - mean) * (*inv_sd)(r);
  }
  Matrix y = normed->array().rowwise() * gain.value().row(0).array();
  y.rowwise() += bias.value().row(0);

  return t.record(std::move(y), {x, gain, bias}, [=](Tape& tp) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ig)) {
      tp.grad(ig) += (g.array() * normed->array()).colwise().sum().matrix();
    }
    if (tp.requires_grad(ib)) tp.grad(ib) += g.colwise().sum();
    if (tp.requires_grad(ix)) {
      Matrix& gx = tp.grad(ix);
      const auto gamma = tp.value(ig).row(0).array();
      for (Eigen::Index r = 0; r < g.rows(); ++r) {
        const Eigen::ArrayXd dn = (g.row(r).array() * gamma).transpose();
        const Eigen::ArrayXd xh = normed->row(r).array().transpose();
        const double m1 = dn.mean();
        const double m2 = (dn * xh).mean();
        gx.row(r).array() += ((dn - m1 - xh * m2) * (*inv_sd)(r)).transpose();
      }
    }
  });
}

Var self_attention(Var qkv, int batch, int seq, int heads) {
  Tape& t = qkv.tape();
  const int iq = qkv.id(), self = self_id(t);
  const Matrix& in = qkv.value();
  const Eigen::Index d = in.cols() / 3;
  if (in.cols() != 3 * d || in.rows() != static_cast<Eigen::Index>(batch) * seq ||
      d % heads != 0) {
    throw std::invalid_argument("self_attention: shape mismatch");
  }
  const Eigen::Index dh = d / heads;
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(dh));

  // Softmax weights per (sample, head), kept for the adjoint.
  auto probs = std::make_shared<std::vector<Matrix>>(static_cast<std::size_t>(batch) * heads);
  Matrix out(in.rows(), d);
  for (int b = 0; b < batch; ++b) {
    const Eigen::Index r0 = static_cast<Eigen::Index>(b) * seq;
    for (int h = 0; h < heads; ++h) {
      const auto q = in.block(r0, h * dh, seq, dh);
      const auto k = in.block(r0, d + h * dh, seq, dh);
      const auto v = in.block(r0, 2 * d + h * dh, seq, dh);
      Matrix p(seq, seq);
      p.noalias() = q * k.transpose();
      p *= scale_factor;
      for (Eigen::Index r = 0; r < seq; ++r) {
        const double mx = p.row(r).maxCoeff();
        p.row(r) = (p.row(r).array() - mx).exp().matrix();
        p.row(r) /= p.row(r).sum();
      }
      out.block(r0, h * dh, seq, dh).noalias() = p * v;
      (*probs)[static_cast<std::size_t>(b) * heads + h] = std::move(p);
    }
  }

  return t.record(std::move(out), {qkv}, [=](Tape& tp) {
    const Matrix& g = tp.grad(self);
    const Matrix& in = tp.value(iq);
    Matrix& gin = tp.grad(iq);
    Matrix dp(seq, seq);
    Matrix ds(seq, seq);
    for (int b = 0; b < batch; ++b) {
      const Eigen::Index r0 = static_cast<Eigen::Index>(b) * seq;
      for (int h = 0; h < heads; ++h) {
        const Matrix& p = (*probs)[static_cast<std::size_t>(b) * heads + h];
        const auto q = in.block(r0, h * dh, seq, dh);
        const auto k = in.block(r0, d + h * dh, seq, dh);
        const auto v = in.block(r0, 2 * d + h * dh, seq, dh);
        const auto go = g.block(r0, h * dh, seq, dh);

        gin.block(r0, 2 * d + h * dh, seq, dh).noalias() += p.transpose() * go;
        dp.noalias() = go * v.transpose();
        for (Eigen::Index r = 0; r < seq; ++r) {
          const double dot = p.row(r).dot(dp.row(r));
          ds.row(r) = (p.row(r).array() * (dp.row(r).array() - dot)).matrix();
        }
        ds *= scale_factor;
        gin.block(r0, h * dh, seq, dh).noalias() += ds * k;
        gin.block(r0, d + h * dh, seq, dh).noalias() += ds.transpose() * q;
      }
    }
  });
}

Var reshape(Var x, Eigen::Index rows, Eigen::Index cols) {
  Tape& t = x.tape();
  const int ix = x.id(), self = self_id(t);
  if (rows * cols != x.value().size()) throw std::invalid_argument("reshape: size mismatch");
  Matrix y = Eigen::Map<const Matrix>(x.value().data(), rows, cols);
  return t.record(std::move(y), {x}, [=](Tape& tp) {
    Matrix& gx = tp.grad(ix);
    Eigen::Map<Matrix>(gx.data(), rows, cols) += tp.grad(self);
  });
}

Var slice_cols(Var x, Eigen::Index start, Eigen::Index count) {
  Tape& t = x.tape();
  const int ix = x.id(), self = self_id(t);
  Matrix y = x.value().middleCols(start, count);
  return t.record(std::move(y), {x}, [=](Tape& tp) {
    tp.grad(ix).middleCols(start, count) += tp.grad(self);
  });
}

Var repeat_rows(Var x, int times) {
  Tape& t = x.tape();
  const int ix = x.id(), self = self_id(t);
  const Matrix& xv = x.value();
  Matrix y(xv.rows() * times, xv.cols());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    y.middleRows(r * times, times).rowwise() = xv.row(r);
  }
  return t.record(std::move(y), {x}, [=](Tape& tp) {
    const Matrix& g = tp.grad(self);
    Matrix& gx = tp.grad(ix);
    for (Eigen::Index r = 0; r < gx.rows(); ++r) {
      gx.row(r) += g.middleRows(r * times, times).colwise().sum();
    }
  });
}

Var sum(Var x) {
  Tape& t = x.tape();
  const int ix = x.id(), self = self_id(t);
  Matrix y(1, 1);
  y(0, 0) = x.value().sum();
  return t.record(std::move(y), {x}, [=](Tape& tp) {
    tp.grad(ix).array() += tp.grad(self)(0, 0);
  });
}

Var row_abs_sum(Var x) {
  Tape& t = x.tape();
  const int ix = x.id(), self = self_id(t);
  Matrix y = x.value().cwiseAbs().rowwise().sum();
  return t.record(std::move(y), {x}, [=](Tape& tp) {
    const Matrix& g = tp.grad(self);
    const Matrix& xv = tp.value(ix);
    Matrix& gx = tp.grad(ix);
    for (Eigen::Index r = 0; r < xv.rows(); ++r) {
      for (Eigen::Index c = 0; c < xv.cols(); ++c) {
        const double v = xv(r, c);
        gx(r, c) += g(r, 0) * static_cast<double>((v > 0.0) - (v < 0.0));
      }
    }
  });
}

}  // namespace pathpose::ad
