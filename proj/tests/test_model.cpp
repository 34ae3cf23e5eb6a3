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

#include <gtest/gtest.h>

#include <random>

#include "fd_oracle.hpp"
#include "pathpose/error.hpp"
#include "pathpose/model.hpp"
#include "pathpose/training.hpp"
#include "tiny_setup.hpp"

namespace pathpose {
namespace {

using testing::tiny_frames;
using testing::tiny_model_config;

DetectionSequence random_sequence(std::mt19937_64& rng, int s, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DetectionSequence seq;
  for (int t = 0; t < s; ++t) {
    DetectionFrame f(static_cast<std::size_t>(n));
    for (auto& slot : f.slots) {
      if (u(rng) < 0.6) slot = Detection{1.0, BBox{u(rng), u(rng), 0.3 * u(rng), 0.3 * u(rng)}};
    }
    seq.frames.push_back(f);
  }
  return seq;
}

TEST(ModelConfig, HeadsMustDivideTokenWidth) {
  ModelConfig cfg;
  cfg.n_classes = 15;
  cfg.attention_heads = 7;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(init_params(cfg), ConfigError);
  cfg.token_dim = 77;  // learned embedding to a multiple of 7
  EXPECT_NO_THROW(cfg.validate());
  const auto params = init_params(cfg);
  EXPECT_EQ(params.get("embed.weight").rows(), 75);
  EXPECT_EQ(params.get("embed.weight").cols(), 77);
}

TEST(InitParams, DeterministicInSeed) {
  const auto a = init_params(tiny_model_config());
  const auto b = init_params(tiny_model_config());
  ASSERT_EQ(a.tensors.size(), b.tensors.size());
  for (std::size_t i = 0; i < a.tensors.size(); ++i) {
    EXPECT_EQ(a.tensors[i].value, b.tensors[i].value) << a.tensors[i].name;
  }
  auto other = tiny_model_config();
  other.seed = 6;
  EXPECT_NE(init_params(other).get("reduce0.weight"), a.get("reduce0.weight"));
}

TEST(InitParams, BiasesZeroAndWeightsFanInBounded) {
  const auto p = init_params(tiny_model_config());
  for (const auto& t : p.tensors) {
    if (t.name.ends_with(".bias")) {
      EXPECT_TRUE(t.value.isZero()) << t.name;
    } else if (t.name.ends_with(".weight")) {
      EXPECT_LE(t.value.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(double(t.value.rows()))) << t.name;
    }
  }
}

TEST(ParameterCount, MatchesHandComputedManifestSums) {
  // Hand sums: per layer 4d + (3d^2+3d) + (d^2+d) + (4d^2+4d) + (4d^2+d),
  // final norm 2d, reduction s*d*f0+f0 + f0*f1+f1 + f1*f2+f2 + 3*f2+3,
  // decoders (2h+h*n+n) and (2h'+4h'n+4n).
  EXPECT_EQ(parameter_count(tiny_model_config()), 4013u);
  ModelConfig paper;
  paper.n_classes = 15;
  EXPECT_EQ(parameter_count(paper), 3035918u);
  EXPECT_EQ(init_params(tiny_model_config()).parameter_count(), 4013u);
}

TEST(ParameterCount, PaperScaleWithinFactorTwoOfReported) {
  ModelConfig paper;
  paper.n_classes = 15;
  const double count = static_cast<double>(parameter_count(paper));
  EXPECT_GT(count, 4.6e6 / 2.0);
  EXPECT_LT(count, 4.6e6 * 2.0);
}

TEST(Encode, ActivationRangesHoldForRandomSequences) {
  std::mt19937_64 rng(17);
  const auto params = init_params(tiny_model_config());
  std::normal_distribution<double> jitter(0.0, 2.0);
  auto wild = params;
  for (auto& t : wild.tensors) {
    for (Eigen::Index k = 0; k < t.value.size(); ++k) t.value.data()[k] += jitter(rng);
  }
  for (int trial = 0; trial < 100; ++trial) {
    const auto seq = random_sequence(rng, 4, 3);
    for (const ModelParams* p : {&params, static_cast<const ModelParams*>(&wild)}) {
      const LatentCode z = encode(*p, seq);
      EXPECT_GE(z.z1, 0.0);
      EXPECT_LE(z.z1, 1.0);
      EXPECT_LE(std::abs(z.z2), 1.0);
      EXPECT_LE(std::abs(z.z3), 1.0);
    }
  }
}

TEST(Encode, DeterministicAndFiniteOnEmptyScene) {
  std::mt19937_64 rng(1);
  const auto params = init_params(tiny_model_config());
  const auto seq = random_sequence(rng, 4, 3);
  EXPECT_EQ(encode(params, seq), encode(params, seq));

  DetectionSequence empty;
  empty.frames.assign(4, DetectionFrame(3));
  const LatentCode z = encode(params, empty);
  EXPECT_TRUE(std::isfinite(z.z1) && std::isfinite(z.z2) && std::isfinite(z.z3));
}

TEST(Encode, RejectsBadInput) {
  const auto params = init_params(tiny_model_config());
  DetectionSequence short_seq;
  short_seq.frames.assign(3, DetectionFrame(3));
  EXPECT_THROW(encode(params, short_seq), InputError);

  DetectionSequence nan_seq;
  nan_seq.frames.assign(4, DetectionFrame(3));
  nan_seq.frames[2].slots[1].box.cx = std::nan("");
  EXPECT_THROW(encode(params, nan_seq), InputError);
}

TEST(Encode, SensitiveToFrameOrder) {
  std::mt19937_64 rng(23);
  const auto params = init_params(tiny_model_config());
  for (int trial = 0; trial < 10; ++trial) {
    auto seq = random_sequence(rng, 4, 3);
    auto reversed = seq;
    std::reverse(reversed.frames.begin(), reversed.frames.end());
    if (seq.frames == reversed.frames) continue;
    EXPECT_NE(encode(params, seq), encode(params, reversed));
  }
}

TEST(Decode, EndpointsAreValidProbabilitiesAndBoxes) {
  const auto params = init_params(tiny_model_config());
  for (double z1 : {0.0, 0.37, 1.0}) {
    const Decoded d = decode(params, z1);
    ASSERT_EQ(d.y_hat.size(), 3u);
    ASSERT_EQ(d.b_centered.size(), 3u);
    for (double y : d.y_hat) EXPECT_TRUE(y >= 0.0 && y <= 1.0);
    for (const BBox& b : d.b_centered) {
      for (double v : {b.cx, b.cy, b.w, b.h}) EXPECT_TRUE(v >= 0.0 && v <= 1.0);
    }
    const Decoded again = decode(params, z1);
    EXPECT_EQ(d.y_hat, again.y_hat);
    EXPECT_EQ(d.b_centered, again.b_centered);
  }
  EXPECT_THROW(decode(params, 1.5), DomainError);
}

TEST(Forward, ExtentsCopiedBitExactly) {
  std::mt19937_64 rng(29);
  const auto params = init_params(tiny_model_config());
  const auto out = forward(params, random_sequence(rng, 4, 3));
  ASSERT_NE(out.z.z2, 0.0);
  for (std::size_t i = 0; i < out.b_centered.size(); ++i) {
    EXPECT_EQ(out.b_rotated[i].w, out.b_centered[i].w);
    EXPECT_EQ(out.b_rotated[i].h, out.b_centered[i].h);
  }
}

TEST(Forward, MatchesGeometryModule) {
  std::mt19937_64 rng(31);
  const auto params = init_params(tiny_model_config());
  const auto out = forward(params, random_sequence(rng, 4, 3));
  const auto expect = rotate_centers(out.b_centered, rotation_matrix(out.z.pitch(), out.z.yaw()));
  for (std::size_t i = 0; i < expect.size(); ++i) {
    EXPECT_NEAR(out.b_rotated[i].cx, expect[i].cx, 1e-14);
    EXPECT_NEAR(out.b_rotated[i].cy, expect[i].cy, 1e-14);
  }
}

TEST(Forward, ZeroAnglesLeaveBoxesUnrotated) {
  std::mt19937_64 rng(37);
  auto params = init_params(tiny_model_config());
  // Silence the pitch/yaw output units so tanh yields exactly 0.
  params.get("reduce3.weight").rightCols(2).setZero();
  params.get("reduce3.bias").rightCols(2).setZero();
  const auto out = forward(params, random_sequence(rng, 4, 3));
  EXPECT_EQ(out.z.z2, 0.0);
  EXPECT_EQ(out.z.z3, 0.0);
  EXPECT_EQ(out.b_rotated, out.b_centered);
}

TEST(Forward, AblationIgnoresAngleUnits) {
  std::mt19937_64 rng(41);
  auto params = init_params(tiny_model_config(false));
  const auto seq = random_sequence(rng, 4, 3);
  const auto before = forward(params, seq);
  EXPECT_EQ(before.z.z2, 0.0);
  EXPECT_EQ(before.z.z3, 0.0);
  EXPECT_EQ(before.b_rotated, before.b_centered);

  params.get("reduce3.weight").rightCols(2).setConstant(3.0);
  params.get("reduce3.bias").rightCols(2).setConstant(-2.0);
  const auto after = forward(params, seq);
  EXPECT_EQ(after.z, before.z);
  EXPECT_EQ(after.b_rotated, before.b_rotated);
  EXPECT_EQ(after.y_hat, before.y_hat);
}

// Full objective gradient, including the rotation head and the centering
// re-encoding pass, against central differences.
class FullLossGradient : public ::testing::TestWithParam<bool> {};

TEST_P(FullLossGradient, MatchesFiniteDifferences) {
  const auto cfg = tiny_model_config(GetParam());
  const auto frames = tiny_frames();
  const Batch batch = testing::tiny_batch(cfg, frames, 4, 9);
  auto params = init_params(cfg);
  auto grads = zero_gradients(params);
  batch_loss(params, batch, &grads);

  std::vector<ad::Matrix*> ptrs;
  std::vector<std::string> names;
  for (auto& t : params.tensors) {
    ptrs.push_back(&t.value);
    names.push_back(t.name);
  }
  const auto res = testing::check_gradients(
      ptrs, names, grads, [&] { return batch_loss(params, batch, nullptr).total; }, 1e-5);
  EXPECT_EQ(res.checked, params.parameter_count());
  EXPECT_LT(res.max_rel_error, 1e-4)
      << res.worst << " analytic " << res.worst_analytic << " numeric " << res.worst_numeric;
}

INSTANTIATE_TEST_SUITE_P(RotationAndAblation, FullLossGradient, ::testing::Bool());

}  // namespace
}  // namespace pathpose
