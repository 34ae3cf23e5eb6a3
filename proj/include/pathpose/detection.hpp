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

#include <cstddef>
#include <span>
#include <vector>

#include "pathpose/geometry.hpp"

namespace pathpose {

// Features per class slot: presence, cx, cy, w, h.
inline constexpr int kSlotFeatures = 5;

struct Detection {
  double presence = 0.0;
  BBox box;

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// One frame of detections, one slot per structure class. Absent input slots
/// carry presence 0 and an all-zero box.
struct DetectionFrame {
  std::vector<Detection> slots;

  DetectionFrame() = default;
  explicit DetectionFrame(std::size_t n_classes) : slots(n_classes) {}

  std::size_t n_classes() const { return slots.size(); }

  /// Writes presence, cx, cy, w, h per slot into `out` (size n * 5).
  void write_features(std::span<double> out) const;

  /// Throws ValidationError when presence is not 0/1, a field is non-finite
  /// or out of [0,1], or an absent slot has a non-zero box.
  void validate_input() const;

  friend bool operator==(const DetectionFrame&, const DetectionFrame&) = default;
};

/// Time-ordered window of frames, oldest first.
struct DetectionSequence {
  std::vector<DetectionFrame> frames;

  std::size_t length() const { return frames.size(); }
  std::size_t n_classes() const {
    return frames.empty() ? 0 : frames.front().n_classes();
  }
};

}  // namespace pathpose
