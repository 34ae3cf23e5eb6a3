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

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "pathpose/data_io.hpp"
#include "pathpose/model.hpp"

namespace pathpose {

struct TrainConfig {
  double lr_peak = 1e-4;
  int warmup_epochs = 60;
  int epochs = 2500;
  int batch_size = 64;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  std::optional<double> grad_clip_norm;
  // Train on every k-th window only; 1 uses all of them.
  int window_stride = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LossBreakdown {
  double total = 0.0;
  double bce_term = 0.0;
  double box_term = 0.0;
  double centering_term = 0.0;
};

// Predicted presence is clamped to [kProbClamp, 1 - kProbClamp] inside the
// cross-entropy.
inline constexpr double kProbClamp = 1e-7;

/// lr_peak * min(1, epoch / warmup_epochs); epoch is zero-based.
double learning_rate(const TrainConfig& cfg, int epoch);

/// Re-encodes the centered reconstruction: the frame (y_true, b_centered),
/// absent boxes zeroed, stacked seq_len times. Returns its (z2, z3).
std::pair<double, double> center_reencode(const ModelParams& params,
                                          std::span<const double> y_true,
                                          std::span<const BBox> b_centered);

/// Per-sample objective. Throws InputError when target presence is not binary.
LossBreakdown loss(const ModelOutput& output, std::pair<double, double> z_reenc,
                   const DetectionFrame& target);

/// -sum_i [y log p + (1-y) log(1-p)] per row, p clamped.
ad::Var bce_rows(ad::Var y_hat, const ad::Matrix& y);
/// sum_i y_i * |b_i - b_hat_i|_1 per row over the 4 box coordinates.
ad::Var masked_l1_rows(ad::Var boxes, const ad::Matrix& target, const ad::Matrix& mask);

/// Batch of windows with reconstruction targets, packed for the graph.
struct Batch {
  ad::Matrix input;   // (batch*s) x 5n
  ad::Matrix y;       // batch x n
  ad::Matrix boxes;   // batch x 4n
  int size = 0;
};

Batch make_batch(const ModelConfig& cfg, std::span<const FrameRecord> frames,
                 std::span<const Window> windows);

/// Mean loss over the batch. When `grads` is non-null it receives
/// d(mean total)/d(param), accumulated, one matrix per tensor.
LossBreakdown batch_loss(const ModelParams& params, const Batch& batch,
                         std::vector<ad::Matrix>* grads);

std::vector<ad::Matrix> zero_gradients(const ModelParams& params);

/// Decoupled-weight-decay Adam.
class AdamW {
 public:
  explicit AdamW(const TrainConfig& cfg) : cfg_(cfg) {}

  void step(ModelParams& params, const std::vector<ad::Matrix>& grads, double lr);
  long steps() const { return steps_; }

 private:
  TrainConfig cfg_;
  long steps_ = 0;
  std::vector<ad::Matrix> m_;
  std::vector<ad::Matrix> v_;
};

struct TrainResult {
  ModelParams params;
  std::vector<LossBreakdown> history;  // per-epoch means over the windows used
  // Batches left out because a predicted rotation was degenerate.
  long skipped_batches = 0;
};

/// Called after each epoch with (epoch, its mean loss, current params).
using EpochCallback =
    std::function<void(int, const LossBreakdown&, const ModelParams&)>;

/// Throws InputError when the frames yield no window of length seq_len, and
/// NumericError on divergence or when every batch of an epoch is skipped.
TrainResult train(std::span<const FrameRecord> frames, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg, const EpochCallback& on_epoch = {});

}  // namespace pathpose
