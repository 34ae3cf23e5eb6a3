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

#include "pathpose/run_config.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

#include "pathpose/error.hpp"

namespace pathpose {

using nlohmann::json;

namespace {

// Reads typed fields from one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + ": expected an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(fmt::format("{}.{}: {}", name_, key, e.what()));
    }
  }

  void read_degrees(const char* key, Angle& out) {
    double deg = out.deg();
    read(key, deg);
    try {
      out = Angle::degrees(deg);
    } catch (const DomainError& e) {
      throw ConfigError(fmt::format("{}.{}: {}", name_, key, e.what()));
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json& child(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) {
        throw ConfigError(fmt::format("{}: unknown key '{}'", name_, key));
      }
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

json to_json(const SceneSection& s) {
  return {{"n_structures", s.n_structures}, {"seed", s.seed}, {"file", s.file}};
}

json to_json(const TrajectoryConfig& t) {
  return {{"n_frames", t.n_frames},
          {"n_passes", t.n_passes},
          {"angle_max_deg", t.angle_max.deg()},
          {"angle_persistence", t.angle_persistence},
          {"angle_step_sd_deg", t.angle_step_sd.deg()},
          {"initial_pitch_deg", t.initial_pitch.deg()},
          {"initial_yaw_deg", t.initial_yaw.deg()},
          {"seed", t.seed}};
}

json to_json(const EvalConfig& e) {
  return {{"stride", e.stride}, {"bins", e.bins}, {"min_visits", e.min_visits}};
}

}  // namespace

Scene SceneSection::build() const {
  if (!file.empty()) return read_scene(file);
  return default_scene(n_structures, seed);
}

void RunConfig::validate() const {
  if (scene.file.empty() && scene.n_structures < 2) {
    throw ConfigError("scene.n_structures must be >= 2");
  }
  trajectory.validate();
  model.validate();
  training.validate();
  eval.validate();
  if (scene.file.empty() && model.n_classes != scene.n_structures) {
    throw ConfigError(fmt::format("model.n_classes ({}) must equal scene.n_structures ({})",
                                  model.n_classes, scene.n_structures));
  }
  if (trajectory.n_frames < model.seq_len) {
    throw ConfigError("trajectory.n_frames must be >= model.seq_len");
  }
}

RunConfig reference_desk_config() {
  RunConfig cfg;
  cfg.scene.n_structures = 8;
  cfg.scene.seed = 7;
  cfg.trajectory.n_frames = 4000;
  cfg.trajectory.n_passes = 4;
  cfg.trajectory.seed = 11;
  cfg.model.n_classes = 8;
  cfg.model.seq_len = 16;
  cfg.model.encoder_layers = 2;
  cfg.model.attention_heads = 5;
  // The narrower head trains in about ten minutes on one core and matched
  // the wider one on held-out depth correlation.
  cfg.model.fc_dims = {128, 64, 32};
  cfg.model.seed = 1;
  cfg.training.epochs = 300;
  cfg.training.warmup_epochs = 20;
  cfg.training.lr_peak = 1e-3;
  cfg.training.batch_size = 64;
  cfg.training.seed = 1;
  cfg.eval.stride = 16;
  cfg.eval.bins = 10;
  return cfg;
}

json to_json(const ModelConfig& m) {
  return {{"n_classes", m.n_classes},
          {"seq_len", m.seq_len},
          {"encoder_layers", m.encoder_layers},
          {"attention_heads", m.attention_heads},
          {"fc_dims", m.fc_dims},
          {"class_dec_hidden", m.class_dec_hidden},
          {"box_dec_hidden", m.box_dec_hidden},
          {"ff_multiplier", m.ff_multiplier},
          {"token_dim", m.token_dim},
          {"rotation_enabled", m.rotation_enabled},
          {"seed", m.seed}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig m;
  Section s(j, "model");
  s.read("n_classes", m.n_classes);
  s.read("seq_len", m.seq_len);
  s.read("encoder_layers", m.encoder_layers);
  s.read("attention_heads", m.attention_heads);
  s.read("fc_dims", m.fc_dims);
  s.read("class_dec_hidden", m.class_dec_hidden);
  s.read("box_dec_hidden", m.box_dec_hidden);
  s.read("ff_multiplier", m.ff_multiplier);
  s.read("token_dim", m.token_dim);
  s.read("rotation_enabled", m.rotation_enabled);
  s.read("seed", m.seed);
  s.finish();
  m.validate();
  return m;
}

json to_json(const TrainConfig& t) {
  json j = {{"lr_peak", t.lr_peak},
            {"warmup_epochs", t.warmup_epochs},
            {"epochs", t.epochs},
            {"batch_size", t.batch_size},
            {"beta1", t.beta1},
            {"beta2", t.beta2},
            {"eps", t.eps},
            {"weight_decay", t.weight_decay},
            {"grad_clip_norm", nullptr},
            {"window_stride", t.window_stride},
            {"seed", t.seed}};
  if (t.grad_clip_norm) j["grad_clip_norm"] = *t.grad_clip_norm;
  return j;
}

json to_json(const RunConfig& c) {
  return {{"scene", to_json(c.scene)},
          {"trajectory", to_json(c.trajectory)},
          {"model", to_json(c.model)},
          {"training", to_json(c.training)},
          {"eval", to_json(c.eval)}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  Section top(j, "config");
  std::optional<std::uint64_t> seed;
  if (top.has("seed")) {
    std::uint64_t v = 0;
    top.read("seed", v);
    seed = v;
  } else {
    top.read("seed", c.model.seed);
  }

  if (top.has("scene")) {
    Section s(top.child("scene"), "scene");
    s.read("n_structures", c.scene.n_structures);
    s.read("seed", c.scene.seed);
    s.read("file", c.scene.file);
    s.finish();
  }
  if (top.has("trajectory")) {
    Section s(top.child("trajectory"), "trajectory");
    s.read("n_frames", c.trajectory.n_frames);
    s.read("n_passes", c.trajectory.n_passes);
    s.read_degrees("angle_max_deg", c.trajectory.angle_max);
    s.read("angle_persistence", c.trajectory.angle_persistence);
    s.read_degrees("angle_step_sd_deg", c.trajectory.angle_step_sd);
    s.read_degrees("initial_pitch_deg", c.trajectory.initial_pitch);
    s.read_degrees("initial_yaw_deg", c.trajectory.initial_yaw);
    s.read("seed", c.trajectory.seed);
    s.finish();
  }
  if (top.has("model")) {
    json m = top.child("model");
    if (seed && !m.contains("seed")) m["seed"] = *seed;
    c.model = model_config_from_json(m);
  } else if (seed) {
    c.model.seed = *seed;
  }
  if (top.has("training")) {
    Section s(top.child("training"), "training");
    s.read("lr_peak", c.training.lr_peak);
    s.read("warmup_epochs", c.training.warmup_epochs);
    s.read("epochs", c.training.epochs);
    s.read("batch_size", c.training.batch_size);
    s.read("beta1", c.training.beta1);
    s.read("beta2", c.training.beta2);
    s.read("eps", c.training.eps);
    s.read("weight_decay", c.training.weight_decay);
    json clip;
    s.read("grad_clip_norm", clip);
    if (clip.is_number()) {
      c.training.grad_clip_norm = clip.get<double>();
    } else if (!clip.is_null()) {
      throw ConfigError("training.grad_clip_norm: expected a number or null");
    }
    s.read("window_stride", c.training.window_stride);
    if (seed) c.training.seed = *seed;
    s.read("seed", c.training.seed);
    s.finish();
  } else if (seed) {
    c.training.seed = *seed;
  }
  if (top.has("eval")) {
    Section s(top.child("eval"), "eval");
    s.read("stride", c.eval.stride);
    s.read("bins", c.eval.bins);
    s.read("min_visits", c.eval.min_visits);
    s.finish();
  }
  top.finish();
  c.validate();
  return c;
}

RunConfig read_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

void write_run_config(const RunConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config: " + path.string());
  out << to_json(cfg).dump(2) << '\n';
  if (!out) throw IoError("failed writing config: " + path.string());
}

}  // namespace pathpose
