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
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "pathpose/eval.hpp"
#include "pathpose/model.hpp"
#include "pathpose/scene.hpp"
#include "pathpose/training.hpp"

namespace pathpose {

struct SceneSection {
  int n_structures = 8;
  std::uint64_t seed = 7;
  // Scene spec file; overrides the generated default scene when set.
  std::string file;

  Scene build() const;
};

/// Every knob of a pipeline run. Sections mirror the module configs.
struct RunConfig {
  SceneSection scene;
  TrajectoryConfig trajectory;
  ModelConfig model = [] {
    ModelConfig m;
    m.n_classes = 8;
    return m;
  }();
  TrainConfig training;
  EvalConfig eval;

  /// Throws ConfigError on any cross-field violation (head divisibility,
  /// warmup > epochs, trajectory shorter than a window, ...).
  void validate() const;
};

/// The desk-scale reference setup used by the acceptance suite.
RunConfig reference_desk_config();

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& cfg);
nlohmann::json to_json(const RunConfig& cfg);

/// Unknown keys are rejected with ConfigError. A top-level "seed" seeds the
/// model and training sections unless they set their own.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig read_run_config(const std::filesystem::path& path);
void write_run_config(const RunConfig& cfg, const std::filesystem::path& path);

}  // namespace pathpose
