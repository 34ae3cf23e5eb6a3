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

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pathpose/autodiff.hpp"
#include "pathpose/detection.hpp"
#include "pathpose/geometry.hpp"

namespace pathpose {

struct ModelConfig {
  int n_classes = 15;
  int seq_len = 64;
  int encoder_layers = 6;
  int attention_heads = 5;
  std::array<int, 3> fc_dims{512, 256, 128};
  int class_dec_hidden = 8;
  int box_dec_hidden = 32;
  int ff_multiplier = 4;
  // 0 uses the raw n*5 features as tokens. Any other value inserts a learned
  // input embedding of that width.
  int token_dim = 0;
  bool rotation_enabled = true;
  std::uint64_t seed = 0;

  int input_dim() const { return n_classes * kSlotFeatures; }
  int model_dim() const { return token_dim == 0 ? input_dim() : token_dim; }
  bool has_input_embedding() const { return token_dim != 0; }

  /// Throws ConfigError: heads must divide the token width, dims >= 1.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// (z1, z2, z3): path position in [0,1], pitch and yaw latents in (-1,1).
struct LatentCode {
  double z1 = 0.0;
  double z2 = 0.0;
  double z3 = 0.0;

  Angle pitch() const { return latent_to_angle(z2); }
  Angle yaw() const { return latent_to_angle(z3); }

  friend bool operator==(const LatentCode&, const LatentCode&) = default;
};

struct TensorSpec {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
};

struct NamedTensor {
  std::string name;
  ad::Matrix value;
};

/// Every trainable tensor of the encoder and both decoders, in manifest order.
struct ModelParams {
  ModelConfig config;
  std::vector<NamedTensor> tensors;

  std::size_t parameter_count() const;
  const ad::Matrix& get(const std::string& name) const;
  ad::Matrix& get(const std::string& name);
  bool all_finite() const;
};

/// Ordered tensor names and shapes implied by a config.
std::vector<TensorSpec> shape_manifest(const ModelConfig& cfg);
std::size_t parameter_count(const ModelConfig& cfg);

/// Fan-in scaled uniform weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero
/// biases, unit layer-norm gains. Deterministic in cfg.seed.
ModelParams init_params(const ModelConfig& cfg);

/// Fixed sinusoidal position table, seq x dim.
ad::Matrix positional_encoding(int seq, int dim);

/// Packs sequences into (batch*s) x (n*5) encoder input. Throws InputError
/// on length/class-count mismatch or non-finite values.
ad::Matrix pack_sequences(const ModelConfig& cfg,
                          std::span<const DetectionSequence> seqs);

struct ModelOutput {
  LatentCode z;
  std::vector<double> y_hat;
  std::vector<BBox> b_centered;
  std::vector<BBox> b_rotated;
};

struct Decoded {
  std::vector<double> y_hat;
  std::vector<BBox> b_centered;
};

LatentCode encode(const ModelParams& params, const DetectionSequence& seq);
std::vector<LatentCode> encode_batch(const ModelParams& params,
                                     std::span<const DetectionSequence> seqs);
Decoded decode(const ModelParams& params, double z1);
ModelOutput forward(const ModelParams& params, const DetectionSequence& seq);

/// Differentiable view of a model on one tape. Parameters are bound once, so
/// repeated encoder passes share leaves and their gradients accumulate.
class ModelGraph {
 public:
  struct Encoded {
    ad::Var z1;   // batch x 1, sigmoid
    ad::Var z23;  // batch x 2, tanh; constant zeros when rotation is disabled
  };
  struct Forward {
    Encoded z;
    ad::Var y_hat;       // batch x n
    ad::Var b_centered;  // batch x 4n
    ad::Var b_rotated;   // batch x 4n
  };

  /// `grads`, when non-null, must hold one zero-or-accumulating matrix per
  /// tensor (same order and shapes); backward() adds into it.
  ModelGraph(ad::Tape& tape, const ModelParams& params,
             std::vector<ad::Matrix>* grads);

  Encoded encode(ad::Var input, int batch) const;
  std::pair<ad::Var, ad::Var> decode(ad::Var z1) const;
  Forward forward(const ad::Matrix& input, int batch) const;

  const ModelConfig& config() const { return cfg_; }
  ad::Tape& tape() const { return *tape_; }

 private:
  ad::Var param(const char* name) const;
  ad::Var param(const std::string& name) const;

  ad::Tape* tape_;
  ModelConfig cfg_;
  std::vector<std::string> names_;
  std::vector<ad::Var> vars_;
  ad::Matrix pos_;
};

/// Rotation head: rotates each (cx, cy) of `boxes` (batch x 4n) by the pitch
/// and yaw encoded in `z23` (batch x 2). Rows with both latents exactly zero
/// are copied unchanged.
ad::Var rotate_boxes(ad::Var z23, ad::Var boxes);

/// Builds batch x 5n frame features from presences `y` (batch x n, constant)
/// and boxes (batch x 4n), zeroing boxes where y = 0.
ad::Var assemble_frames(const ad::Matrix& y, ad::Var boxes);

}  // namespace pathpose
