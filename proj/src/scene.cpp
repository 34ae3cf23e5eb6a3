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

#include "pathpose/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "pathpose/error.hpp"
#include "util.hpp"

namespace pathpose {

namespace {

constexpr int kSceneFormatVersion = 1;
constexpr std::string_view kSceneFormatName = "pathpose-scene";
constexpr double kPathClearance = 0.3;

}  // namespace

void Scene::validate() const {
  if (!(corridor_length > 0.0)) throw ConfigError("corridor_length must be > 0");
  if (!(near_clip > 0.0 && near_clip < far_clip)) {
    throw ConfigError("clips must satisfy 0 < near_clip < far_clip");
  }
  if (!(fov_half_angle.rad() > 0.0 && fov_half_angle.rad() < kHalfPi)) {
    throw ConfigError("fov_half_angle must lie in (0, 90) degrees");
  }
  if (!(min_area >= 0.0)) throw ConfigError("min_area must be >= 0");
  if (samples < 16) throw ConfigError("samples must be >= 16");
  if (structures.empty()) throw ConfigError("scene has no structures");
  std::set<int> ids;
  for (const Structure& s : structures) {
    if (!(s.radius > 0.0)) throw ConfigError("structure radius must be > 0");
    if (!s.center.allFinite()) throw ConfigError("structure center not finite");
    if (s.class_id < 0 || s.class_id >= static_cast<int>(structures.size())) {
      throw ConfigError("structure class ids must be dense in [0, n)");
    }
    if (!ids.insert(s.class_id).second) {
      throw ConfigError(fmt::format("duplicate structure class id {}", s.class_id));
    }
  }
}

void TrajectoryConfig::validate() const {
  if (n_frames < 1) throw ConfigError("n_frames must be >= 1");
  if (n_passes < 1) throw ConfigError("n_passes must be >= 1");
  if (!(angle_persistence >= 0.0 && angle_persistence < 1.0)) {
    throw ConfigError("angle_persistence must lie in [0, 1)");
  }
  if (angle_max.rad() < 0.0 || angle_step_sd.rad() < 0.0) {
    throw ConfigError("angle_max and angle_step_sd must be >= 0");
  }
  if (std::abs(initial_pitch.rad()) > angle_max.rad() ||
      std::abs(initial_yaw.rad()) > angle_max.rad()) {
    throw ConfigError("initial angles exceed angle_max");
  }
}

Scene default_scene(int n_structures, std::uint64_t seed) {
  if (n_structures < 2) {
    throw ConfigError("default_scene needs at least 2 structures");
  }
  Scene scene;
  const double length = scene.corridor_length;
  const double first = 0.1 * length;
  const double last = 0.95 * length;
  const double spacing = (last - first) / (n_structures - 1);

  std::mt19937_64 rng(seed);
  for (int i = 0; i < n_structures; ++i) {
    double depth = first + spacing * i;
    // Interior depths jitter by less than half a spacing, so order is kept.
    if (i > 0 && i < n_structures - 1) {
      depth += detail::uniform(rng, -0.2, 0.2) * spacing;
    }
    const double radius = detail::uniform(rng, 0.3, 0.55);
    // The camera path keeps kPathClearance from every surface, so no sphere
    // ever straddles the near plane inside the field of view.
    const double offset = radius + kPathClearance + detail::uniform(rng, 0.0, 0.7);
    const double phase = detail::uniform(rng, 0.0, 2.0 * std::numbers::pi);
    scene.structures.push_back(Structure{
        i, Vec3(offset * std::cos(phase), offset * std::sin(phase), depth),
        radius});
  }
  scene.validate();
  return scene;
}

Mat3 world_to_camera(const CameraPose& pose) {
  return rotation_matrix(pose.pitch, pose.yaw).matrix();
}

std::vector<Vec3> fibonacci_sphere(int k) {
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(k));
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < k; ++i) {
    const double y = 1.0 - 2.0 * (i + 0.5) / k;
    const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
    const double phi = golden * i;
    pts.emplace_back(r * std::cos(phi), y, r * std::sin(phi));
  }
  return pts;
}

std::optional<BBox> project_structure(const Structure& s, const CameraPose& pose,
                                      const Scene& scene, int samples) {
  const Mat3 r = world_to_camera(pose);
  const Vec3 eye(0.0, 0.0, pose.depth);
  const Vec3 centroid = r * (s.center - eye);
  if (!(centroid.z() > scene.near_clip && centroid.z() < scene.far_clip)) {
    return std::nullopt;
  }
  // A sphere cut by the near plane projects its cut edge magnified by
  // 1/near_clip; such views are treated as too close to detect.
  if (centroid.z() - s.radius <= scene.near_clip) return std::nullopt;

  const double inv_tan = 1.0 / std::tan(scene.fov_half_angle.rad());
  double umin = INFINITY, umax = -INFINITY, vmin = INFINITY, vmax = -INFINITY;
  bool any = false;
  for (const Vec3& unit : fibonacci_sphere(samples)) {
    const Vec3 p = r * (s.center + s.radius * unit - eye);
    if (p.z() <= scene.near_clip) continue;
    const double u = p.x() / p.z() * inv_tan;
    const double v = p.y() / p.z() * inv_tan;
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
    any = true;
  }
  if (!any) return std::nullopt;

  const double x0 = std::clamp((umin + 1.0) * 0.5, 0.0, 1.0);
  const double x1 = std::clamp((umax + 1.0) * 0.5, 0.0, 1.0);
  const double y0 = std::clamp((vmin + 1.0) * 0.5, 0.0, 1.0);
  const double y1 = std::clamp((vmax + 1.0) * 0.5, 0.0, 1.0);
  const double w = x1 - x0;
  const double h = y1 - y0;
  if (w <= 0.0 || h <= 0.0 || w * h < scene.min_area) return std::nullopt;
  return BBox{(x0 + x1) * 0.5, (y0 + y1) * 0.5, w, h};
}

LabeledFrame render_frame(const Scene& scene, const CameraPose& pose,
                          int frame_index) {
  LabeledFrame frame;
  frame.frame_index = frame_index;
  frame.pose = pose;
  frame.detections = DetectionFrame(scene.n_classes());
  for (const Structure& s : scene.structures) {
    if (auto box = project_structure(s, pose, scene, scene.samples)) {
      Detection& slot = frame.detections.slots[static_cast<std::size_t>(s.class_id)];
      slot.presence = 1.0;
      slot.box = *box;
    }
  }
  return frame;
}

std::vector<CameraPose> trajectory_poses(const Scene& scene,
                                         const TrajectoryConfig& cfg) {
  cfg.validate();
  std::vector<CameraPose> poses;
  poses.reserve(static_cast<std::size_t>(cfg.n_frames));

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double limit = cfg.angle_max.rad();
  const double rho = cfg.angle_persistence;
  const double sd = cfg.angle_step_sd.rad();
  double pitch = cfg.initial_pitch.rad();
  double yaw = cfg.initial_yaw.rad();

  for (int t = 0; t < cfg.n_frames; ++t) {
    const double phase =
        cfg.n_frames > 1 ? static_cast<double>(t) * cfg.n_passes / (cfg.n_frames - 1)
                         : 0.0;
    const double frac = phase - std::floor(phase);
    const double depth = scene.corridor_length * (1.0 - std::abs(1.0 - 2.0 * frac));
    poses.push_back(CameraPose{depth, Angle::radians(pitch), Angle::radians(yaw)});

    const double e_pitch = noise(rng);
    const double e_yaw = noise(rng);
    pitch = std::clamp(rho * pitch + sd * e_pitch, -limit, limit);
    yaw = std::clamp(rho * yaw + sd * e_yaw, -limit, limit);
  }
  return poses;
}

std::vector<LabeledFrame> generate_trajectory(const Scene& scene,
                                              const TrajectoryConfig& cfg) {
  scene.validate();
  const auto poses = trajectory_poses(scene, cfg);
  std::vector<LabeledFrame> frames;
  frames.reserve(poses.size());
  for (std::size_t t = 0; t < poses.size(); ++t) {
    frames.push_back(render_frame(scene, poses[t], static_cast<int>(t)));
  }
  return frames;
}

void write_scene(const Scene& scene, const std::filesystem::path& path) {
  scene.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot open scene file for writing: " + path.string());
  out << "format = " << kSceneFormatName << '\n';
  out << "version = " << kSceneFormatVersion << '\n';
  out << fmt::format("corridor_length = {}\n", scene.corridor_length);
  out << fmt::format("near_clip = {}\n", scene.near_clip);
  out << fmt::format("far_clip = {}\n", scene.far_clip);
  out << fmt::format("fov_half_angle_deg = {}\n", scene.fov_half_angle.deg());
  out << fmt::format("min_area = {}\n", scene.min_area);
  out << fmt::format("samples = {}\n", scene.samples);
  out << "# structure = class_id x y z radius\n";
  for (const Structure& s : scene.structures) {
    out << fmt::format("structure = {} {} {} {} {}\n", s.class_id, s.center.x(),
                       s.center.y(), s.center.z(), s.radius);
  }
  if (!out) throw IoError("failed writing scene file: " + path.string());
}

Scene read_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene file: " + path.string());

  Scene scene;
  bool saw_format = false;
  bool saw_version = false;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& why) {
    throw FormatError(fmt::format("{}:{}: {}", path.string(), line_no, why));
  };
  auto number = [&](std::string_view text, auto& out) {
    if (!detail::parse_number(text, out)) fail("bad number '" + std::string(text) + "'");
  };

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) fail("expected 'key = value'");
    const std::string_view key = detail::trim(body.substr(0, eq));
    const std::string_view value = detail::trim(body.substr(eq + 1));

    if (key == "format") {
      if (value != kSceneFormatName) fail("not a scene file");
      saw_format = true;
    } else if (key == "version") {
      int v = 0;
      number(value, v);
      if (v != kSceneFormatVersion) {
        throw VersionError(fmt::format("{}: unsupported scene version {}", path.string(), v));
      }
      saw_version = true;
    } else if (key == "corridor_length") {
      number(value, scene.corridor_length);
    } else if (key == "near_clip") {
      number(value, scene.near_clip);
    } else if (key == "far_clip") {
      number(value, scene.far_clip);
    } else if (key == "fov_half_angle_deg") {
      double deg = 0.0;
      number(value, deg);
      scene.fov_half_angle = Angle::degrees(deg);
    } else if (key == "min_area") {
      number(value, scene.min_area);
    } else if (key == "samples") {
      number(value, scene.samples);
    } else if (key == "structure") {
      const auto parts = detail::split_ws(value);
      if (parts.size() != 5) fail("structure needs: class_id x y z radius");
      Structure s;
      double x = 0, y = 0, z = 0;
      number(parts[0], s.class_id);
      number(parts[1], x);
      number(parts[2], y);
      number(parts[3], z);
      number(parts[4], s.radius);
      s.center = Vec3(x, y, z);
      scene.structures.push_back(s);
    } else {
      fail("unknown key '" + std::string(key) + "'");
    }
  }
  if (!saw_format || !saw_version) {
    throw FormatError(path.string() + ": missing format/version header");
  }
  std::sort(scene.structures.begin(), scene.structures.end(),
            [](const Structure& a, const Structure& b) { return a.class_id < b.class_id; });
  scene.validate();
  return scene;
}

}  // namespace pathpose
