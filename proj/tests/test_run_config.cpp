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

#include <filesystem>

#include <nlohmann/json.hpp>

#include "pathpose/error.hpp"
#include "pathpose/run_config.hpp"

namespace pathpose {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

TEST(RunConfig, DefaultsMirrorModuleDefaults) {
  const RunConfig c = run_config_from_json(json::object());
  EXPECT_EQ(c.scene.n_structures, 8);
  EXPECT_EQ(c.model.n_classes, 8);
  EXPECT_EQ(c.model.seq_len, 64);
  EXPECT_EQ(c.model.encoder_layers, 6);
  EXPECT_EQ(c.training.lr_peak, 1e-4);
  EXPECT_EQ(c.training.warmup_epochs, 60);
  EXPECT_EQ(c.training.epochs, 2500);
  EXPECT_FALSE(c.training.grad_clip_norm.has_value());
  EXPECT_EQ(c.eval.stride, 16);
}

TEST(RunConfig, JsonRoundTrip) {
  RunConfig c = reference_desk_config();
  c.training.grad_clip_norm = 2.5;
  c.trajectory.angle_step_sd = Angle::degrees(1.5);
  const RunConfig back = run_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(back.model, c.model);
  EXPECT_EQ(back.training.grad_clip_norm, 2.5);

  const fs::path path = fs::temp_directory_path() / "pathpose_run_config.json";
  write_run_config(c, path);
  EXPECT_EQ(to_json(read_run_config(path)), to_json(c));
  fs::remove(path);
}

TEST(RunConfig, UnknownKeysAreRejected) {
  EXPECT_THROW(run_config_from_json(json{{"sceen", json::object()}}), ConfigError);
  EXPECT_THROW(run_config_from_json(json{{"model", {{"layers", 2}}}}), ConfigError);
  EXPECT_THROW(run_config_from_json(json{{"training", {{"lr", 1e-3}}}}), ConfigError);
}

TEST(RunConfig, CrossFieldConstraintsCheckedUpFront) {
  json bad_heads = {{"model", {{"attention_heads", 7}}}};
  EXPECT_THROW(run_config_from_json(bad_heads), ConfigError);
  json mismatch = {{"scene", {{"n_structures", 5}}}};
  EXPECT_THROW(run_config_from_json(mismatch), ConfigError);
  json short_traj = {{"trajectory", {{"n_frames", 10}}}};
  EXPECT_THROW(run_config_from_json(short_traj), ConfigError);
  json warm = {{"training", {{"epochs", 5}, {"warmup_epochs", 6}}}};
  EXPECT_THROW(run_config_from_json(warm), ConfigError);
  json wrong_type = {{"model", {{"seq_len", "long"}}}};
  EXPECT_THROW(run_config_from_json(wrong_type), ConfigError);
}

TEST(RunConfig, TopLevelSeedFillsModelAndTraining) {
  const RunConfig c = run_config_from_json(json{{"seed", 99}});
  EXPECT_EQ(c.model.seed, 99u);
  EXPECT_EQ(c.training.seed, 99u);
  const RunConfig own =
      run_config_from_json(json{{"seed", 99}, {"model", {{"n_classes", 8}, {"seed", 3}}}});
  EXPECT_EQ(own.model.seed, 3u);
  EXPECT_EQ(own.training.seed, 99u);
}

TEST(RunConfig, ReferenceDeskConfigIsValid) {
  const RunConfig c = reference_desk_config();
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.model.seq_len, 16);
  EXPECT_EQ(c.model.encoder_layers, 2);
  EXPECT_EQ(c.model.attention_heads, 5);
  EXPECT_EQ(c.trajectory.n_frames, 4000);
  EXPECT_LE(c.training.epochs, 300);
}

TEST(RunConfig, MissingFileIsAnIoError) {
  EXPECT_THROW(read_run_config("/nonexistent/pathpose.json"), IoError);
}

}  // namespace
}  // namespace pathpose
