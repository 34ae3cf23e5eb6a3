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

#include "pathpose/model.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include <fmt/format.h>

#include "pathpose/error.hpp"
#include "util.hpp"

namespace pathpose {

using ad::Matrix;
using ad::Var;

void ModelConfig::validate() const {
  if (n_classes < 1) throw ConfigError("n_classes must be >= 1");
  if (seq_len < 1) throw ConfigError("seq_len must be >= 1");
  if (encoder_layers < 0) throw ConfigError("encoder_layers must be >= 0");
  if (attention_heads < 1) throw ConfigError("attention_heads must be >= 1");
  for (int d : fc_dims) {
    if (d < 1) throw ConfigError("fc_dims must be >= 1");
  }
  if (class_dec_hidden < 1 || box_dec_hidden < 1 || ff_multiplier < 1) {
    throw ConfigError("decoder widths and ff_multiplier must be >= 1");
  }
  if (token_dim < 0) throw ConfigError("token_dim must be >= 0");
  if (model_dim() % attention_heads != 0) {
    throw ConfigError(fmt::format(
        "attention_heads ({}) must divide the token width ({}); set token_dim "
        "to a multiple of the head count to add an input embedding",
        attention_heads, model_dim()));
  }
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += static_cast<std::size_t>(t.value.size());
  return n;
}

const Matrix& ModelParams::get(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t.value;
  }
  throw InputError("no tensor named " + name);
}

Matrix& ModelParams::get(const std::string& name) {
  return const_cast<Matrix&>(std::as_const(*this).get(name));
}

bool ModelParams::all_finite() const {
  return std::all_of(tensors.begin(), tensors.end(),
                     [](const NamedTensor& t) { return t.value.allFinite(); });
}

std::vector<TensorSpec> shape_manifest(const ModelConfig& cfg) {
  cfg.validate();
  const Eigen::Index in = cfg.input_dim();
  const Eigen::Index d = cfg.model_dim();
  const Eigen::Index ff = d * cfg.ff_multiplier;
  const Eigen::Index n = cfg.n_classes;

  std::vector<TensorSpec> specs;
  auto dense = [&](const std::string& prefix, Eigen::Index fan_in, Eigen::Index fan_out) {
    specs.push_back({prefix + ".weight", fan_in, fan_out});
    specs.push_back({prefix + ".bias", 1, fan_out});
  };
  auto norm = [&](const std::string& prefix) {
    specs.push_back({prefix + ".gain", 1, d});
    specs.push_back({prefix + ".bias", 1, d});
  };

  if (cfg.has_input_embedding()) dense("embed", in, d);
  for (int l = 0; l < cfg.encoder_layers; ++l) {
    const std::string p = fmt::format("layer{}", l);
    norm(p + ".norm1");
    dense(p + ".attn.qkv", d, 3 * d);
    dense(p + ".attn.out", d, d);
    norm(p + ".norm2");
    dense(p + ".ff1", d, ff);
    dense(p + ".ff2", ff, d);
  }
  norm("encoder_norm");
  Eigen::Index width = static_cast<Eigen::Index>(cfg.seq_len) * d;
  for (int i = 0; i < 3; ++i) {
    dense(fmt::format("reduce{}", i), width, cfg.fc_dims[static_cast<std::size_t>(i)]);
    width = cfg.fc_dims[static_cast<std::size_t>(i)];
  }
  dense("reduce3", width, 3);
  dense("class_dec0", 1, cfg.class_dec_hidden);
  dense("class_dec1", cfg.class_dec_hidden, n);
  dense("box_dec0", 1, cfg.box_dec_hidden);
  dense("box_dec1", cfg.box_dec_hidden, 4 * n);
  return specs;
}

std::size_t parameter_count(const ModelConfig& cfg) {
  std::size_t total = 0;
  for (const auto& s : shape_manifest(cfg)) {
    total += static_cast<std::size_t>(s.rows * s.cols);
  }
  return total;
}

ModelParams init_params(const ModelConfig& cfg) {
  ModelParams params;
  params.config = cfg;
  std::mt19937_64 rng(cfg.seed);
  for (const auto& spec : shape_manifest(cfg)) {
    Matrix m;
    const bool is_gain = spec.name.ends_with(".gain");
    const bool is_bias = spec.name.ends_with(".bias");
    if (is_gain) {
      m = Matrix::Ones(spec.rows, spec.cols);
    } else if (is_bias) {
      m = Matrix::Zero(spec.rows, spec.cols);
    } else {
      const double bound = 1.0 / std::sqrt(static_cast<double>(spec.rows));
      m.resize(spec.rows, spec.cols);
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = detail::uniform(rng, -bound, bound);
      }
    }
    params.tensors.push_back({spec.name, std::move(m)});
  }
  return params;
}

Matrix positional_encoding(int seq, int dim) {
  Matrix pe(seq, dim);
  for (int pos = 0; pos < seq; ++pos) {
    for (int i = 0; i < dim; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(i - i % 2) / dim);
      pe(pos, i) = (i % 2 == 0) ? std::sin(pos * freq) : std::cos(pos * freq);
    }
  }
  return pe;
}

Matrix pack_sequences(const ModelConfig& cfg, std::span<const DetectionSequence> seqs) {
  const Eigen::Index s = cfg.seq_len;
  Matrix x(static_cast<Eigen::Index>(seqs.size()) * s, cfg.input_dim());
  for (std::size_t b = 0; b < seqs.size(); ++b) {
    const DetectionSequence& seq = seqs[b];
    if (seq.length() != static_cast<std::size_t>(s)) {
      throw InputError(fmt::format("sequence length {} != seq_len {}", seq.length(), s));
    }
    for (Eigen::Index t = 0; t < s; ++t) {
      const DetectionFrame& f = seq.frames[static_cast<std::size_t>(t)];
      if (f.n_classes() != static_cast<std::size_t>(cfg.n_classes)) {
        throw InputError(fmt::format("frame has {} class slots, model expects {}",
                                     f.n_classes(), cfg.n_classes));
      }
      const Eigen::Index row = static_cast<Eigen::Index>(b) * s + t;
      f.write_features(std::span<double>(x.row(row).data(), static_cast<std::size_t>(x.cols())));
    }
  }
  if (!x.allFinite()) throw InputError("sequence contains non-finite values");
  return x;
}

// --- fused model ops ---------------------------------------------------------

Var rotate_boxes(Var z23, Var boxes) {
  ad::Tape& t = z23.tape();
  const int iz = z23.id(), ibx = boxes.id(), self = static_cast<int>(t.size());
  const Matrix& z = z23.value();
  const Matrix& bx = boxes.value();
  const Eigen::Index batch = bx.rows();
  const Eigen::Index n = bx.cols() / 4;

  // Per (row, class): d(cx', cy') / d(pitch, yaw, cx, cy).
  auto jac = std::make_shared<std::vector<CenterJacobian>>(
      static_cast<std::size_t>(batch * n));
  auto identity_row = std::make_shared<std::vector<char>>(static_cast<std::size_t>(batch));
  Matrix out = bx;
  for (Eigen::Index b = 0; b < batch; ++b) {
    if (z(b, 0) == 0.0 && z(b, 1) == 0.0) {
      (*identity_row)[static_cast<std::size_t>(b)] = 1;
      continue;
    }
    const double pitch = z(b, 0) * kHalfPi;
    const double yaw = z(b, 1) * kHalfPi;
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& j = (*jac)[static_cast<std::size_t>(b * n + i)];
      j = rotate_center_jacobian(bx(b, 4 * i), bx(b, 4 * i + 1), pitch, yaw);
      out(b, 4 * i) = j.value[0];
      out(b, 4 * i + 1) = j.value[1];
    }
  }

  return t.record(std::move(out), {z23, boxes}, [=](ad::Tape& tp) {
    const Matrix& g = tp.grad(self);
    const bool want_z = tp.requires_grad(iz);
    const bool want_b = tp.requires_grad(ibx);
    Matrix* gz = want_z ? &tp.grad(iz) : nullptr;
    Matrix* gb = want_b ? &tp.grad(ibx) : nullptr;
    for (Eigen::Index b = 0; b < batch; ++b) {
      if ((*identity_row)[static_cast<std::size_t>(b)]) {
        // Identity branch: d out / d boxes = I. The angle derivative at zero
        // is still defined, so use the analytic Jacobian there.
        if (gb) gb->row(b) += g.row(b);
        if (gz) {
          for (Eigen::Index i = 0; i < n; ++i) {
            const auto j = rotate_center_jacobian(tp.value(ibx)(b, 4 * i),
                                                  tp.value(ibx)(b, 4 * i + 1), 0.0, 0.0);
            const double gx = g(b, 4 * i), gy = g(b, 4 * i + 1);
            (*gz)(b, 0) += (gx * j.d[0][0] + gy * j.d[1][0]) * kHalfPi;
            (*gz)(b, 1) += (gx * j.d[0][1] + gy * j.d[1][1]) * kHalfPi;
          }
        }
        continue;
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& j = (*jac)[static_cast<std::size_t>(b * n + i)];
        const double gx = g(b, 4 * i), gy = g(b, 4 * i + 1);
        if (gz) {
          (*gz)(b, 0) += (gx * j.d[0][0] + gy * j.d[1][0]) * kHalfPi;
          (*gz)(b, 1) += (gx * j.d[0][1] + gy * j.d[1][1]) * kHalfPi;
        }
        if (gb) {
          (*gb)(b, 4 * i) += gx * j.d[0][2] + gy * j.d[1][2];
          (*gb)(b, 4 * i + 1) += gx * j.d[0][3] + gy * j.d[1][3];
          (*gb)(b, 4 * i + 2) += g(b, 4 * i + 2);
          (*gb)(b, 4 * i + 3) += g(b, 4 * i + 3);
        }
      }
    }
  });
}

Var assemble_frames(const Matrix& y, Var boxes) {
  ad::Tape& t = boxes.tape();
  const int ibx = boxes.id(), self = static_cast<int>(t.size());
  const Matrix& bx = boxes.value();
  const Eigen::Index batch = y.rows(), n = y.cols();
  Matrix out(batch, n * kSlotFeatures);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (Eigen::Index i = 0; i < n; ++i) {
      out(b, 5 * i) = y(b, i);
      for (int k = 0; k < 4; ++k) out(b, 5 * i + 1 + k) = y(b, i) * bx(b, 4 * i + k);
    }
  }
  return t.record(std::move(out), {boxes}, [=](ad::Tape& tp) {
    const Matrix& g = tp.grad(self);
    Matrix& gb = tp.grad(ibx);
    for (Eigen::Index b = 0; b < batch; ++b) {
      for (Eigen::Index i = 0; i < n; ++i) {
        for (int k = 0; k < 4; ++k) gb(b, 4 * i + k) += y(b, i) * g(b, 5 * i + 1 + k);
      }
    }
  });
}

// --- graph -------------------------------------------------------------------

ModelGraph::ModelGraph(ad::Tape& tape, const ModelParams& params,
                       std::vector<Matrix>* grads)
    : tape_(&tape), cfg_(params.config) {
  cfg_.validate();
  if (grads != nullptr && grads->size() != params.tensors.size()) {
    throw InputError("gradient buffer count does not match parameters");
  }
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    names_.push_back(params.tensors[i].name);
    vars_.push_back(tape.parameter(params.tensors[i].value,
                                   grads != nullptr ? &(*grads)[i] : nullptr));
  }
  pos_ = positional_encoding(cfg_.seq_len, cfg_.model_dim());
}

Var ModelGraph::param(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return vars_[i];
  }
  throw InputError("no tensor named " + name);
}

Var ModelGraph::param(const char* name) const { return param(std::string(name)); }

ModelGraph::Encoded ModelGraph::encode(Var input, int batch) const {
  auto dense = [&](Var x, const std::string& prefix) {
    return ad::linear(x, param(prefix + ".weight"), param(prefix + ".bias"));
  };
  auto norm = [&](Var x, const std::string& prefix) {
    return ad::layer_norm(x, param(prefix + ".gain"), param(prefix + ".bias"));
  };

  Var h = cfg_.has_input_embedding() ? dense(input, "embed") : input;
  h = ad::add_tiled(h, pos_);
  for (int l = 0; l < cfg_.encoder_layers; ++l) {
    const std::string p = fmt::format("layer{}", l);
    Var qkv = dense(norm(h, p + ".norm1"), p + ".attn.qkv");
    Var att = ad::self_attention(qkv, batch, cfg_.seq_len, cfg_.attention_heads);
    h = ad::add(h, dense(att, p + ".attn.out"));
    Var ff = ad::relu(dense(norm(h, p + ".norm2"), p + ".ff1"));
    h = ad::add(h, dense(ff, p + ".ff2"));
  }
  h = norm(h, "encoder_norm");

  Var r = ad::reshape(h, batch, static_cast<Eigen::Index>(cfg_.seq_len) * cfg_.model_dim());
  for (int i = 0; i < 3; ++i) r = ad::relu(dense(r, fmt::format("reduce{}", i)));
  Var out = dense(r, "reduce3");

  Encoded enc;
  enc.z1 = ad::sigmoid(ad::slice_cols(out, 0, 1));
  enc.z23 = cfg_.rotation_enabled ? ad::tanh(ad::slice_cols(out, 1, 2))
                                  : tape_->constant(Matrix::Zero(batch, 2));
  return enc;
}

std::pair<Var, Var> ModelGraph::decode(Var z1) const {
  auto dense = [&](Var x, const char* prefix) {
    return ad::linear(x, param(std::string(prefix) + ".weight"),
                      param(std::string(prefix) + ".bias"));
  };
  Var y_hat = ad::sigmoid(dense(ad::relu(dense(z1, "class_dec0")), "class_dec1"));
  Var boxes = ad::sigmoid(dense(ad::relu(dense(z1, "box_dec0")), "box_dec1"));
  return {y_hat, boxes};
}

ModelGraph::Forward ModelGraph::forward(const Matrix& input, int batch) const {
  Forward f;
  f.z = encode(tape_->constant(input), batch);
  std::tie(f.y_hat, f.b_centered) = decode(f.z.z1);
  f.b_rotated = cfg_.rotation_enabled ? rotate_boxes(f.z.z23, f.b_centered) : f.b_centered;
  return f;
}

// --- value API ---------------------------------------------------------------

namespace {

std::vector<BBox> boxes_from_row(const Matrix& m, Eigen::Index row) {
  std::vector<BBox> out(static_cast<std::size_t>(m.cols() / 4));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(4 * i);
    out[i] = BBox{m(row, c), m(row, c + 1), m(row, c + 2), m(row, c + 3)};
  }
  return out;
}

}  // namespace

std::vector<LatentCode> encode_batch(const ModelParams& params,
                                     std::span<const DetectionSequence> seqs) {
  if (seqs.empty()) return {};
  ad::Tape tape;
  ModelGraph graph(tape, params, nullptr);
  const Matrix x = pack_sequences(params.config, seqs);
  const auto enc = graph.encode(tape.constant(x), static_cast<int>(seqs.size()));
  std::vector<LatentCode> out(seqs.size());
  for (std::size_t b = 0; b < seqs.size(); ++b) {
    const auto r = static_cast<Eigen::Index>(b);
    out[b] = LatentCode{enc.z1.value()(r, 0), enc.z23.value()(r, 0), enc.z23.value()(r, 1)};
  }
  return out;
}

LatentCode encode(const ModelParams& params, const DetectionSequence& seq) {
  return encode_batch(params, std::span<const DetectionSequence>(&seq, 1)).front();
}

Decoded decode(const ModelParams& params, double z1) {
  if (!(z1 >= 0.0 && z1 <= 1.0)) throw DomainError("decode: z1 outside [0, 1]");
  ad::Tape tape;
  ModelGraph graph(tape, params, nullptr);
  Matrix z(1, 1);
  z(0, 0) = z1;
  const auto [y, b] = graph.decode(tape.constant(z));
  Decoded out;
  out.y_hat.assign(y.value().data(), y.value().data() + y.value().size());
  out.b_centered = boxes_from_row(b.value(), 0);
  return out;
}

ModelOutput forward(const ModelParams& params, const DetectionSequence& seq) {
  ad::Tape tape;
  ModelGraph graph(tape, params, nullptr);
  const Matrix x = pack_sequences(params.config, std::span<const DetectionSequence>(&seq, 1));
  const auto f = graph.forward(x, 1);
  ModelOutput out;
  out.z = LatentCode{f.z.z1.value()(0, 0), f.z.z23.value()(0, 0), f.z.z23.value()(0, 1)};
  out.y_hat.assign(f.y_hat.value().data(), f.y_hat.value().data() + f.y_hat.value().size());
  out.b_centered = boxes_from_row(f.b_centered.value(), 0);
  out.b_rotated = boxes_from_row(f.b_rotated.value(), 0);
  return out;
}

}  // namespace pathpose
