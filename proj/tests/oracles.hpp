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

// Reference computations shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "pathpose/scene.hpp"

namespace pathpose::testing {

/// Largest per-edge difference between the box at scene.samples and at
/// `dense` samples over every structure and every seeded random pose.
/// A structure counts when either sampling sees it; its edges are then
/// compared without the area floor, which a sliver may straddle.
inline double sampling_edge_gap(const Scene& scene, int n_poses, int dense, std::uint64_t seed,
                                int* visible = nullptr) {
  Scene no_floor = scene;
  no_floor.min_area = 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> depth(0.0, scene.corridor_length);
  std::uniform_real_distribution<double> angle(-45.0, 45.0);
  double worst = 0.0;
  int seen = 0;
  for (int k = 0; k < n_poses; ++k) {
    const double d = depth(rng);
    const double p = angle(rng);
    const double y = angle(rng);
    const CameraPose pose{d, Angle::degrees(p), Angle::degrees(y)};
    for (const Structure& s : scene.structures) {
      auto coarse = project_structure(s, pose, scene, scene.samples);
      auto fine = project_structure(s, pose, scene, dense);
      if (!coarse && !fine) continue;
      if (!coarse || !fine) {
        coarse = project_structure(s, pose, no_floor, scene.samples);
        fine = project_structure(s, pose, no_floor, dense);
        if (!coarse || !fine) return INFINITY;
      }
      ++seen;
      const BBox& a = *coarse;
      const BBox& b = *fine;
      worst = std::max({worst, std::abs((a.cx - a.w / 2) - (b.cx - b.w / 2)),
                        std::abs((a.cx + a.w / 2) - (b.cx + b.w / 2)),
                        std::abs((a.cy - a.h / 2) - (b.cy - b.h / 2)),
                        std::abs((a.cy + a.h / 2) - (b.cy + b.h / 2))});
    }
  }
  if (visible != nullptr) *visible = seen;
  return worst;
}

/// Projected half-width of a sphere of radius r centred on the optical axis
/// at distance dist: tangent-cone half-angle asin(r / dist), normalised by
/// the field of view and mapped to [0, 1] image units.
inline double tangent_cone_half_width(double r, double dist, Angle fov) {
  return 0.5 * std::tan(std::asin(r / dist)) / std::tan(fov.rad());
}

}  // namespace pathpose::testing
