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

#include "pathpose/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "pathpose/error.hpp"

namespace pathpose {

using ad::Matrix;
using ad::Var;

void TrainConfig::validate() const {
  if (!(lr_peak > 0.0)) throw ConfigError("lr_peak must be > 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (warmup_epochs < 0 || warmup_epochs > epochs) {
    throw ConfigError("warmup_epochs must lie in [0, epochs]");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("AdamW betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("eps must be > 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (grad_clip_norm && !(*grad_clip_norm > 0.0)) {
    throw ConfigError("grad_clip_norm must be > 0 when set");
  }
  if (window_stride < 1) throw ConfigError("window_stride must be >= 1");
}

double learning_rate(const TrainConfig& cfg, int epoch) {
  if (cfg.warmup_epochs == 0) return cfg.lr_peak;
  const double ramp = static_cast<double>(epoch) / cfg.warmup_epochs;
  return cfg.lr_peak * std::min(1.0, ramp);
}

Var bce_rows(Var y_hat, const Matrix& y) {
  ad::Tape& t = y_hat.tape();
  const int ip = y_hat.id(), self = static_cast<int>(t.size());
  const Matrix& p = y_hat.value();
  Matrix out(p.rows(), 1);
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      const double q = std::clamp(p(r, c), kProbClamp, 1.0 - kProbClamp);
      acc -= y(r, c) * std::log(q) + (1.0 - y(r, c)) * std::log(1.0 - q);
    }
    out(r, 0) = acc;
  }
  return t.record(std::move(out), {y_hat}, [=](ad::Tape& tp) {
    const Matrix& g = tp.grad(self);
    const Matrix& p = tp.value(ip);
    Matrix& gp = tp.grad(ip);
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.cols(); ++c) {
        const double q = p(r, c);
        if (q < kProbClamp || q > 1.0 - kProbClamp) continue;
        gp(r, c) += g(r, 0) * (-y(r, c) / q + (1.0 - y(r, c)) / (1.0 - q));
      }
    }
  });
}

Var masked_l1_rows(Var boxes, const Matrix& target, const Matrix& mask) {
  ad::Tape& t = boxes.tape();
  const int ib = boxes.id(), self = static_cast<int>(t.size());
  const Matrix& b = boxes.value();
  Matrix out = Matrix::Zero(b.rows(), 1);
  for (Eigen::Index r = 0; r < b.rows(); ++r) {
    for (Eigen::Index i = 0; i < mask.cols(); ++i) {
      if (mask(r, i) == 0.0) continue;
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += std::abs(target(r, 4 * i + k) - b(r, 4 * i + k));
      out(r, 0) += mask(r, i) * acc;
    }
  }
  return t.record(std::move(out), {boxes}, [=](ad::Tape& tp) {
    const Matrix& g = tp.grad(self);
    const Matrix& b = tp.value(ib);
    Matrix& gb = tp.grad(ib);
    for (Eigen::Index r = 0; r < b.rows(); ++r) {
      for (Eigen::Index i = 0; i < mask.cols(); ++i) {
        if (mask(r, i) == 0.0) continue;
        for (int k = 0; k < 4; ++k) {
          const double diff = b(r, 4 * i + k) - target(r, 4 * i + k);
          const double sign = static_cast<double>((diff > 0.0) - (diff < 0.0));
          gb(r, 4 * i + k) += g(r, 0) * mask(r, i) * sign;
        }
      }
    }
  });
}

namespace {

Matrix presence_row(std::span<const double> y) {
  Matrix m(1, static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = y[i];
  return m;
}

Matrix box_row(std::span<const BBox> boxes) {
  Matrix m(1, static_cast<Eigen::Index>(4 * boxes.size()));
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(4 * i);
    m(0, c) = boxes[i].cx;
    m(0, c + 1) = boxes[i].cy;
    m(0, c + 2) = boxes[i].w;
    m(0, c + 3) = boxes[i].h;
  }
  return m;
}

}  // namespace

std::pair<double, double> center_reencode(const ModelParams& params,
                                          std::span<const double> y_true,
                                          std::span<const BBox> b_centered) {
  const ModelConfig& cfg = params.config;
  if (y_true.size() != static_cast<std::size_t>(cfg.n_classes) ||
      b_centered.size() != y_true.size()) {
    throw InputError("center_reencode: class count mismatch");
  }
  if (!cfg.rotation_enabled) return {0.0, 0.0};
  ad::Tape tape;
  ModelGraph graph(tape, params, nullptr);
  const Var frame = assemble_frames(presence_row(y_true), tape.constant(box_row(b_centered)));
  const auto enc = graph.encode(ad::repeat_rows(frame, cfg.seq_len), 1);
  return {enc.z23.value()(0, 0), enc.z23.value()(0, 1)};
}

LossBreakdown loss(const ModelOutput& output, std::pair<double, double> z_reenc,
                   const DetectionFrame& target) {
  const std::size_t n = target.n_classes();
  if (output.y_hat.size() != n || output.b_rotated.size() != n) {
    throw InputError("loss: class count mismatch");
  }
  LossBreakdown l;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = target.slots[i].presence;
    if (y != 0.0 && y != 1.0) {
      throw InputError(fmt::format("loss: target presence of class {} is not binary", i));
    }
    const double q = std::clamp(output.y_hat[i], kProbClamp, 1.0 - kProbClamp);
    l.bce_term -= y * std::log(q) + (1.0 - y) * std::log(1.0 - q);
    if (y == 1.0) {
      const BBox& b = target.slots[i].box;
      const BBox& p = output.b_rotated[i];
      l.box_term += std::abs(b.cx - p.cx) + std::abs(b.cy - p.cy) + std::abs(b.w - p.w) +
                    std::abs(b.h - p.h);
    }
  }
  l.centering_term = std::abs(z_reenc.first) + std::abs(z_reenc.second);
  l.total = l.bce_term + l.box_term + l.centering_term;
  return l;
}

Batch make_batch(const ModelConfig& cfg, std::span<const FrameRecord> frames,
                 std::span<const Window> wins) {
  const Eigen::Index s = cfg.seq_len;
  const Eigen::Index n = cfg.n_classes;
  Batch batch;
  batch.size = static_cast<int>(wins.size());
  batch.input.resize(static_cast<Eigen::Index>(wins.size()) * s, n * kSlotFeatures);
  batch.y.resize(static_cast<Eigen::Index>(wins.size()), n);
  batch.boxes.resize(static_cast<Eigen::Index>(wins.size()), 4 * n);
  for (std::size_t b = 0; b < wins.size(); ++b) {
    const Window& w = wins[b];
    if (w.last + 1 - w.first != static_cast<std::size_t>(s)) {
      throw InputError("window length does not match seq_len");
    }
    for (Eigen::Index t = 0; t < s; ++t) {
      const DetectionFrame& f = frames[w.first + static_cast<std::size_t>(t)].detections;
      if (f.n_classes() != static_cast<std::size_t>(n)) {
        throw InputError("frame class count does not match the model");
      }
      f.write_features(std::span<double>(
          batch.input.row(static_cast<Eigen::Index>(b) * s + t).data(),
          static_cast<std::size_t>(batch.input.cols())));
    }
    const DetectionFrame& target = frames[w.last].detections;
    const auto r = static_cast<Eigen::Index>(b);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Detection& d = target.slots[static_cast<std::size_t>(i)];
      batch.y(r, i) = d.presence;
      batch.boxes(r, 4 * i) = d.box.cx;
      batch.boxes(r, 4 * i + 1) = d.box.cy;
      batch.boxes(r, 4 * i + 2) = d.box.w;
      batch.boxes(r, 4 * i + 3) = d.box.h;
    }
  }
  if (!batch.input.allFinite()) throw InputError("batch contains non-finite values");
  return batch;
}

std::vector<Matrix> zero_gradients(const ModelParams& params) {
  std::vector<Matrix> grads;
  grads.reserve(params.tensors.size());
  for (const auto& t : params.tensors) {
    grads.push_back(Matrix::Zero(t.value.rows(), t.value.cols()));
  }
  return grads;
}

LossBreakdown batch_loss(const ModelParams& params, const Batch& batch,
                         std::vector<Matrix>* grads) {
  const ModelConfig& cfg = params.config;
  ad::Tape tape;
  ModelGraph graph(tape, params, grads);
  const auto f = graph.forward(batch.input, batch.size);

  const Var bce = bce_rows(f.y_hat, batch.y);
  const Var box = masked_l1_rows(f.b_rotated, batch.boxes, batch.y);
  Var rows = ad::add(bce, box);
  std::optional<Var> center;
  if (cfg.rotation_enabled) {
    const Var frame = assemble_frames(batch.y, f.b_centered);
    const auto re = graph.encode(ad::repeat_rows(frame, cfg.seq_len), batch.size);
    center = ad::row_abs_sum(re.z23);
    rows = ad::add(rows, *center);
  }
  const double inv = 1.0 / batch.size;
  const Var total = ad::scale(ad::sum(rows), inv);
  if (grads != nullptr) tape.backward(total);

  LossBreakdown l;
  l.bce_term = bce.value().sum() * inv;
  l.box_term = box.value().sum() * inv;
  l.centering_term = center ? center->value().sum() * inv : 0.0;
  l.total = l.bce_term + l.box_term + l.centering_term;
  return l;
}

void AdamW::step(ModelParams& params, const std::vector<Matrix>& grads, double lr) {
  if (grads.size() != params.tensors.size()) {
    throw InputError("AdamW: gradient count does not match parameters");
  }
  if (m_.empty()) {
    m_ = zero_gradients(params);
    v_ = zero_gradients(params);
  }
  ++steps_;
  double clip = 1.0;
  if (cfg_.grad_clip_norm) {
    double sq = 0.0;
    for (const auto& g : grads) sq += g.squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > *cfg_.grad_clip_norm) clip = *cfg_.grad_clip_norm / norm;
  }
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < grads.size(); ++i) {
    auto p = params.tensors[i].value.array();
    const auto g = grads[i].array() * clip;
    auto m = m_[i].array();
    auto v = v_[i].array();
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.square();
    p -= lr * ((m / bc1) / ((v / bc2).sqrt() + cfg_.eps) + cfg_.weight_decay * p);
  }
}

TrainResult train(std::span<const FrameRecord> frames, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg, const EpochCallback& on_epoch) {
  model_cfg.validate();
  train_cfg.validate();
  if (frames.empty()) throw InputError("training set is empty");

  std::vector<Window> wins;
  {
    const auto all = windows(frames, model_cfg.seq_len);
    for (std::size_t i = 0; i < all.size(); i += static_cast<std::size_t>(train_cfg.window_stride)) {
      wins.push_back(all[i]);
    }
  }
  if (wins.empty()) {
    throw InputError(fmt::format("no window of length {} in the training set",
                                 model_cfg.seq_len));
  }

  TrainResult result;
  result.params = init_params(model_cfg);
  AdamW opt(train_cfg);
  std::mt19937_64 rng(train_cfg.seed);
  std::vector<std::size_t> order(wins.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Window> chunk;
  auto grads = zero_gradients(result.params);

  for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    const double lr = learning_rate(train_cfg, epoch);
    std::shuffle(order.begin(), order.end(), rng);
    LossBreakdown sums;
    std::size_t used = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(train_cfg.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(train_cfg.batch_size));
      chunk.clear();
      for (std::size_t k = start; k < stop; ++k) chunk.push_back(wins[order[k]]);
      const Batch batch = make_batch(model_cfg, frames, chunk);
      for (auto& g : grads) g.setZero();
      LossBreakdown l;
      try {
        l = batch_loss(result.params, batch, &grads);
      } catch (const DegenerateRotationError&) {
        // A predicted rotation pushed a decoded center behind the camera.
        ++result.skipped_batches;
        continue;
      }
      used += chunk.size();
      const double weight = static_cast<double>(chunk.size());
      sums.bce_term += l.bce_term * weight;
      sums.box_term += l.box_term * weight;
      sums.centering_term += l.centering_term * weight;
      opt.step(result.params, grads, lr);
    }
    if (used == 0) {
      throw NumericError(fmt::format("every batch of epoch {} hit a degenerate rotation", epoch));
    }
    const double inv = 1.0 / static_cast<double>(used);
    LossBreakdown mean{0.0, sums.bce_term * inv, sums.box_term * inv,
                       sums.centering_term * inv};
    mean.total = mean.bce_term + mean.box_term + mean.centering_term;
    if (!std::isfinite(mean.total) || !result.params.all_finite()) {
      throw NumericError(fmt::format("training diverged at epoch {}", epoch));
    }
    result.history.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean, result.params);
  }
  return result;
}

}  // namespace pathpose
