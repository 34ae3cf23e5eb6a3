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
#include <vector>

#include "pathpose/detection.hpp"
#include "pathpose/geometry.hpp"

namespace pathpose {

/// A spherical landmark; one instance per class.
struct Structure {
  int class_id = 0;
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
};

/// Straight corridor along +z with the camera looking down the axis at zero
/// angles. Lengths are in scene units.
struct Scene {
  double corridor_length = 10.0;
  std::vector<Structure> structures;
  Angle fov_half_angle = Angle::degrees(45.0);
  double near_clip = 0.1;
  double far_clip = 4.0;
  // Smallest clipped box area that still counts as visible.
  double min_area = 1e-4;
  // Surface samples that define a projected box.
  int samples = 1024;

  std::size_t n_classes() const { return structures.size(); }

  /// Throws ConfigError on any broken invariant (clips, radii, duplicate ids).
  void validate() const;
};

struct CameraPose {
  double depth = 0.0;
  Angle pitch;
  Angle yaw;

  friend bool operator==(const CameraPose&, const CameraPose&) = default;
};

struct TrajectoryConfig {
  int n_frames = 4000;
  int n_passes = 4;
  Angle angle_max = Angle::degrees(45.0);
  double angle_persistence = 0.98;
  Angle angle_step_sd = Angle::degrees(1.0);
  Angle initial_pitch;
  Angle initial_yaw;
  std::uint64_t seed = 7;

  void validate() const;
};

struct LabeledFrame {
  int frame_index = 0;
  CameraPose pose;
  DetectionFrame detections;
};

/// Structures at strictly increasing depths in [0.1 L, 0.95 L] with seeded
/// lateral offsets and radii that keep every surface clear of the camera
/// path. Throws ConfigError when n_structures < 2.
Scene default_scene(int n_structures = 8, std::uint64_t seed = 7);

/// World-to-camera rotation for a pose. A centered-view direction q appears
/// at R q, which makes the image map between views rotation_matrix(pitch, yaw).
Mat3 world_to_camera(const CameraPose& pose);

/// Deterministic near-uniform points on the unit sphere.
std::vector<Vec3> fibonacci_sphere(int k);

/// Box of `samples` surface points projected into the view and clipped to the
/// unit square. Absent when the centroid depth is outside (near, far), the
/// sphere reaches the near plane, or the clipped area is below min_area.
std::optional<BBox> project_structure(const Structure& s, const CameraPose& pose,
                                      const Scene& scene, int samples);

LabeledFrame render_frame(const Scene& scene, const CameraPose& pose,
                          int frame_index = 0);

std::vector<CameraPose> trajectory_poses(const Scene& scene,
                                         const TrajectoryConfig& cfg);

std::vector<LabeledFrame> generate_trajectory(const Scene& scene,
                                              const TrajectoryConfig& cfg);

// Scene spec file: "key = value" lines with a format/version header.
void write_scene(const Scene& scene, const std::filesystem::path& path);
Scene read_scene(const std::filesystem::path& path);

}  // namespace pathpose
